#include "potts/functional.hpp"

#include <algorithm>
#include <cmath>

#include "potts/cascade.hpp"
#include "potts/errors.hpp"
#include "potts/parallel.hpp"
#include "potts/quadrature.hpp"
#include "potts/stats.hpp"

namespace potts {

void QuadratureSpec::validate() const
{
    if (nodes_per_dim < 3 || nodes_per_dim % 2 == 0) throw MalformedInput("nodes_per_dim must be odd and at least 3");
    if (!(rank_tolerance >= 0.0)) throw MalformedInput("rank_tolerance must be nonnegative");
    if (!(budget >= nodes_per_dim)) throw MalformedInput("quadrature budget must be at least nodes_per_dim");
}

void CascadeMcSpec::validate() const
{
    if (atoms_per_level < 2) throw MalformedInput("atoms_per_level must be at least 2");
    if (reps < 2) throw MalformedInput("Monte Carlo needs at least 2 replicates");
    if (!(budget > 0.0)) throw MalformedInput("Monte Carlo budget must be positive");
}

std::string to_string(EvalMethod m)
{
    return m == EvalMethod::quadrature ? "quadrature" : "cascade-mc";
}

Matrix increment_covariance(const MonotonePath& path, int p)
{
    if (p < 1 || p > path.levels()) throw MalformedInput("increment index out of range");
    return 2.0 * (path.gamma(p) - path.gamma(p - 1));
}

namespace {

void check_inputs(const LagrangeMultipliers& lambda, const MonotonePath& path, double beta)
{
    if (lambda.kappa() != path.kappa()) throw MalformedInput("Lagrange multipliers do not match kappa");
    if (!std::isfinite(beta) || beta < 0.0) throw MalformedInput("beta must be finite and nonnegative");
}

// (1/x) log Σ w_j exp(x v_j), or Σ w_j v_j when x = 0.
double log_mean_exp(double x, const double* v, const double* w, std::size_t n)
{
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += w[j] * v[j];
    if (x == 0.0) return mean;
    double spread = 0.0;
    for (std::size_t j = 0; j < n; ++j) spread = std::max(spread, std::abs(v[j] - mean));
    if (x * spread < 0.5) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += w[j] * std::expm1(x * (v[j] - mean));
        return mean + std::log1p(s) / x;
    }
    const double m = *std::max_element(v, v + n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += w[j] * std::exp(x * (v[j] - m));
    return m + std::log(s) / x;
}

struct QuadLevel {
    double x = 0.0;
    int rank = 0;
    std::vector<double> offsets;  // count × κ, already scaled by β
    std::vector<double> weights;
    std::size_t count() const { return weights.size(); }
};

class Recursion {
public:
    Recursion(const LagrangeMultipliers& lambda, const MonotonePath& path, double beta, const QuadratureSpec& q)
        : kappa_(path.kappa())
    {
        const GaussHermiteRule rule = gauss_hermite(q.nodes_per_dim);
        const int n = q.nodes_per_dim;
        for (int k = 0; k < kappa_; ++k) shift_.push_back(lambda.shift(k));
        for (int p = 0; p < path.levels(); ++p) {
            QuadLevel level;
            level.x = path.x_at(p);
            Eigen::SelfAdjointEigenSolver<Matrix> es(increment_covariance(path, p + 1));
            std::vector<Vector> dirs;
            for (int j = 0; j < kappa_; ++j)
                if (es.eigenvalues()(j) > q.rank_tolerance)
                    dirs.push_back(beta * std::sqrt(es.eigenvalues()(j)) * es.eigenvectors().col(j));
            if (beta == 0.0) dirs.clear();
            level.rank = static_cast<int>(dirs.size());
            std::size_t count = 1;
            for (int j = 0; j < level.rank; ++j) count *= static_cast<std::size_t>(n);
            level.offsets.assign(count * static_cast<std::size_t>(kappa_), 0.0);
            level.weights.assign(count, 1.0);
            for (std::size_t idx = 0; idx < count; ++idx) {
                std::size_t rest = idx;
                for (int j = 0; j < level.rank; ++j) {
                    const auto i = rest % static_cast<std::size_t>(n);
                    rest /= static_cast<std::size_t>(n);
                    level.weights[idx] *= rule.weights[i];
                    for (int k = 0; k < kappa_; ++k)
                        level.offsets[idx * static_cast<std::size_t>(kappa_) + static_cast<std::size_t>(k)] +=
                            rule.nodes[i] * dirs[static_cast<std::size_t>(j)](k);
                }
            }
            levels_.push_back(std::move(level));
        }
        double visits = 1.0;
        for (const auto& l : levels_) {
            visits *= static_cast<double>(l.count());
            evaluations_ += visits;
        }
        if (evaluations_ > q.budget) throw BudgetExceeded("quadrature node evaluations", evaluations_, q.budget);
        leaves_ = visits;

        fields_.assign(levels_.size() + 1, std::vector<double>(static_cast<std::size_t>(kappa_), 0.0));
        for (const auto& l : levels_) values_.emplace_back(l.count());
    }

    double run() { return value(0); }
    double evaluations() const { return evaluations_; }
    double leaves() const { return leaves_; }
    const std::vector<QuadLevel>& levels() const { return levels_; }

private:
    double leaf(const std::vector<double>& s) const
    {
        double m = -INFINITY;
        for (int k = 0; k < kappa_; ++k) m = std::max(m, s[static_cast<std::size_t>(k)] + shift_[static_cast<std::size_t>(k)]);
        double sum = 0.0;
        for (int k = 0; k < kappa_; ++k) sum += std::exp(s[static_cast<std::size_t>(k)] + shift_[static_cast<std::size_t>(k)] - m);
        return m + std::log(sum);
    }

    double value(std::size_t p)
    {
        if (p == levels_.size()) return leaf(fields_[p]);
        const QuadLevel& l = levels_[p];
        const auto& s = fields_[p];
        auto& next = fields_[p + 1];
        auto& vals = values_[p];
        for (std::size_t j = 0; j < l.count(); ++j) {
            const double* off = l.offsets.data() + j * static_cast<std::size_t>(kappa_);
            for (int k = 0; k < kappa_; ++k) next[static_cast<std::size_t>(k)] = s[static_cast<std::size_t>(k)] + off[k];
            vals[j] = value(p + 1);
        }
        return log_mean_exp(l.x, vals.data(), l.weights.data(), l.count());
    }

    int kappa_;
    std::vector<double> shift_;
    std::vector<QuadLevel> levels_;
    std::vector<std::vector<double>> fields_;
    std::vector<std::vector<double>> values_;
    double evaluations_ = 0.0;
    double leaves_ = 1.0;
};

// Shared Monte Carlo core: (1/M) E log Σ_α v_α Σ_{σ∈S} exp Σ_i (β Z_i^α(σ_i) + λ_{σ_i}).
EvalResult cascade_mc(const ConfigurationSet& s, const LagrangeMultipliers& lambda, const MonotonePath& path,
                      double beta, const CascadeMcSpec& mc)
{
    mc.validate();
    check_inputs(lambda, path, beta);
    if (s.kappa() != path.kappa()) throw MalformedInput("configuration set does not match kappa");
    if (s.empty()) throw ValidationError("configuration set is empty");

    const MonotonePath p = path.collapsed();
    const std::vector<double> levels(p.x().begin(), p.x().end() - 1);
    double leaves = 1.0;
    for (double xp : levels) leaves *= xp == 0.0 ? 1.0 : mc.atoms_per_level;
    const int m = s.sites();
    const int kappa = p.kappa();
    const double work = leaves * mc.reps * m * kappa;
    if (work > mc.budget) throw BudgetExceeded("cascade Monte Carlo field draws", work, mc.budget);

    EvalResult r;
    r.method = EvalMethod::cascade_mc;
    r.diagnostics["atoms_per_level"] = mc.atoms_per_level;
    r.diagnostics["reps"] = mc.reps;
    r.diagnostics["leaves"] = leaves;
    if (beta == 0.0) {
        // No fields: Σ_α v_α = 1 and every replicate equals the same constant.
        std::vector<double> row(static_cast<std::size_t>(m * kappa));
        for (int i = 0; i < m; ++i)
            for (int k = 0; k < kappa; ++k) row[static_cast<std::size_t>(i * kappa + k)] = lambda.shift(k);
        r.value = s.log_partition(row.data()) / m;
        return r;
    }

    std::vector<Matrix> factors;
    for (int q = 1; q <= p.levels(); ++q) factors.push_back(beta * psd_factor(increment_covariance(p, q)));

    std::vector<double> values(static_cast<std::size_t>(mc.reps));
    parallel_for(values.size(), [&](std::size_t rep) {
        Rng rng = make_rng(mc.seed, {static_cast<std::uint64_t>(mc.atoms_per_level), rep});
        const CascadeSample c = sample_cascade_levels(levels, mc.atoms_per_level, rng);
        std::vector<double> e = sample_leaf_fields(c, factors, m, rng);
        const std::vector<double> lw = c.leaf_log_weights();
        const std::size_t width = static_cast<std::size_t>(m * kappa);
        LogSumExp acc;
        for (std::size_t leaf = 0; leaf < c.leaf_count(); ++leaf) {
            double* row = e.data() + leaf * width;
            for (int i = 0; i < m; ++i)
                for (int k = 0; k < kappa; ++k) row[i * kappa + k] += lambda.shift(k);
            acc.add(lw[leaf] + s.log_partition(row));
        }
        values[rep] = acc.value() / m;
    });

    const Estimate est = mean_se(values);
    r.value = est.value;
    r.std_error = est.std_error;
    return r;
}

}  // namespace

EvalResult eval_phi(const LagrangeMultipliers& lambda, const MonotonePath& path, double beta, const QuadratureSpec& q)
{
    q.validate();
    check_inputs(lambda, path, beta);
    Recursion rec(lambda, path, beta, q);
    EvalResult r;
    r.value = rec.run();
    r.method = EvalMethod::quadrature;
    r.diagnostics["nodes_per_dim"] = q.nodes_per_dim;
    r.diagnostics["node_evaluations"] = rec.evaluations();
    r.diagnostics["leaves"] = rec.leaves();
    for (std::size_t p = 0; p < rec.levels().size(); ++p)
        r.diagnostics["rank_" + std::to_string(p + 1)] = rec.levels()[p].rank;
    return r;
}

EvalResult eval_phi_cascade_mc(const LagrangeMultipliers& lambda, const MonotonePath& path, double beta,
                               const CascadeMcSpec& mc)
{
    return cascade_mc(ConfigurationSet::all(1, path.kappa()), lambda, path, beta, mc);
}

double parisi_correction(const MonotonePath& path, double beta)
{
    double s = 0.0;
    for (int p = 0; p < path.levels(); ++p) s += path.x_at(p) * (hs_norm_sq(path.gamma(p + 1)) - hs_norm_sq(path.gamma(p)));
    return 0.5 * beta * beta * s;
}

double eval_f2(const MonotonePath& path, double beta)
{
    double d2 = 0.0;
    for (double v : path.distribution().values()) d2 += v * v;
    return 0.5 * beta * beta * (path.integrated_hs_norm_sq() - d2);
}

EvalResult eval_parisi(const LagrangeMultipliers& lambda, const StateDistribution& d, const MonotonePath& path,
                       double beta, const QuadratureSpec& q)
{
    if (d.kappa() != path.kappa()) throw MalformedInput("distribution does not match the path");
    for (int k = 0; k < d.kappa(); ++k)
        if (std::abs(d[k] - path.distribution()[k]) > kConstraintTolerance)
            throw MalformedInput("distribution does not match the path endpoint");
    EvalResult phi = eval_phi(lambda, path, beta, q);
    double lagrange = 0.0;
    for (int k = 0; k + 1 < d.kappa(); ++k) lagrange += lambda.shift(k) * d[k];
    EvalResult r = phi;
    r.value = phi.value - lagrange - parisi_correction(path, beta);
    r.diagnostics["phi"] = phi.value;
    r.diagnostics["rearranged"] = phi.value - lagrange + eval_f2(path, beta);
    return r;
}

EvalResult eval_f1_restricted(const ConfigurationSet& s, const LagrangeMultipliers& lambda, const MonotonePath& path,
                              double beta, const CascadeMcSpec& mc)
{
    return cascade_mc(s, lambda, path, beta, mc);
}

EvalResult eval_lower_bound(int m, const StateDistribution& delta, const MonotonePath& path, double beta,
                            const CascadeMcSpec& mc)
{
    if (m < 1) throw MalformedInput("M must be at least 1");
    if (delta.kappa() != path.kappa()) throw MalformedInput("delta does not match kappa");
    if (!delta.representable(m)) throw ValidationError("delta is not representable with M sites");
    EvalResult f1 = eval_f1_restricted(ConfigurationSet::with_counts(delta.counts(m)), LagrangeMultipliers::zeros(delta.kappa()),
                                       path, beta, mc);
    const double y = parisi_correction(path, beta);
    EvalResult r = f1;
    r.value = f1.value - y;
    r.diagnostics["f1"] = f1.value;
    r.diagnostics["y_term"] = y;
    return r;
}

}  // namespace potts
