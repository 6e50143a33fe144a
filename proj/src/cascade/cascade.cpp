#include "potts/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>

#include "potts/errors.hpp"
#include "potts/parallel.hpp"
#include "potts/stats.hpp"

namespace potts {

void CascadeSpec::validate() const
{
    if (atoms_per_level < 2) throw MalformedInput("cascade needs at least 2 atoms per level");
    double prev = 0.0;
    for (std::size_t p = 0; p < x.size(); ++p) {
        if (!std::isfinite(x[p])) throw MalformedInput("cascade parameter is not finite");
        if (x[p] <= prev || x[p] >= 1.0)
            throw ValidationError("cascade parameters must satisfy 0 < x_0 < ... < x_{r-1} < 1");
        prev = x[p];
    }
}

int CascadeSample::meet(std::size_t a, std::size_t b) const
{
    int p = 0;
    while (p < levels() && ancestor(a, p + 1) == ancestor(b, p + 1)) ++p;
    return p;
}

double CascadeSample::leaf_log_weight(std::size_t leaf) const
{
    double s = 0.0;
    for (int d = 1; d <= levels(); ++d) s += log_child_weight(d, ancestor(leaf, d));
    return s;
}

std::vector<double> CascadeSample::leaf_log_weights() const
{
    std::vector<double> cur{0.0};
    for (int d = 1; d <= levels(); ++d) {
        const auto b = static_cast<std::size_t>(branching(d - 1));
        std::vector<double> next(nodes(d));
        for (std::size_t j = 0; j < next.size(); ++j) next[j] = cur[j / b] + log_child_weight(d, j);
        cur = std::move(next);
    }
    return cur;
}

std::vector<double> CascadeSample::leaf_weights() const
{
    std::vector<double> w = leaf_log_weights();
    for (double& v : w) v = std::exp(v);
    return w;
}

std::vector<double> CascadeSample::coincidence_sums() const
{
    std::vector<double> sums{1.0};
    std::vector<double> w2{1.0};
    for (int d = 1; d <= levels(); ++d) {
        std::vector<double> next(nodes(d));
        const auto b = static_cast<std::size_t>(branching(d - 1));
        double s = 0.0;
        for (std::size_t j = 0; j < next.size(); ++j) {
            next[j] = w2[j / b] * std::exp(2.0 * log_child_weight(d, j));
            s += next[j];
        }
        sums.push_back(s);
        w2 = std::move(next);
    }
    return sums;
}

std::size_t CascadeSample::sample_leaf(Rng& rng) const
{
    std::size_t node = 0;
    for (int d = 1; d <= levels(); ++d) {
        const auto b = static_cast<std::size_t>(branching(d - 1));
        const std::size_t first = node * b;
        double u = uniform01(rng);
        std::size_t pick = first + b - 1;
        for (std::size_t j = first; j < first + b; ++j) {
            u -= std::exp(log_child_weight(d, j));
            if (u < 0.0) {
                pick = j;
                break;
            }
        }
        node = pick;
    }
    return node;
}

std::vector<double> sample_poisson_dirichlet(double x, int atoms, Rng& rng, PdSampler sampler)
{
    if (!(x > 0.0 && x < 1.0)) throw ValidationError("Poisson-Dirichlet parameter must lie in (0,1)");
    if (atoms < 1) throw MalformedInput("need at least one atom");
    std::vector<double> lw(static_cast<std::size_t>(atoms));
    if (sampler == PdSampler::poisson_points) {
        boost::random::exponential_distribution<double> ex;
        double arrival = 0.0;
        for (auto& v : lw) {
            arrival += ex(rng);
            v = -std::log(arrival) / x;
        }
        const double z = log_sum_exp(lw);
        for (double& v : lw) v -= z;
        return lw;
    }
    double rest = 0.0;  // log of the unbroken stick
    boost::random::gamma_distribution<double> ga(1.0 - x);
    for (int i = 1; i <= atoms; ++i) {
        boost::random::gamma_distribution<double> gb(i * x);
        const double a = ga(rng);
        const double b = gb(rng);
        double log_v, log_1mv;
        if (a + b > 0.0) {
            const double l = std::log(a + b);
            log_v = std::log(a) - l;
            log_1mv = std::log(b) - l;
        } else {
            log_v = log_1mv = std::log(0.5);
        }
        lw[static_cast<std::size_t>(i - 1)] = rest + log_v;
        rest += log_1mv;
    }
    std::sort(lw.begin(), lw.end(), std::greater<>());
    const double z = log_sum_exp(lw);
    for (double& v : lw) v -= z;
    return lw;
}

namespace {

// Unnormalized log atoms −(1/x) log Γ_i of the Poisson process with intensity
// x s^{−1−x} ds, in decreasing order.
void poisson_log_atoms(double x, int atoms, Rng& rng, std::vector<double>& out)
{
    boost::random::exponential_distribution<double> ex;
    double arrival = 0.0;
    for (int i = 0; i < atoms; ++i) {
        arrival += ex(rng);
        out.push_back(-std::log(arrival) / x);
    }
}

}  // namespace

CascadeSample sample_cascade_levels(std::span<const double> x, int atoms, Rng& rng, PdSampler sampler)
{
    if (atoms < 1) throw MalformedInput("need at least one atom per level");
    int random_levels = 0;
    for (double xp : x) {
        if (!(xp >= 0.0 && xp <= 1.0)) throw ValidationError("cascade parameter outside [0,1]");
        if (xp > 0.0 && xp < 1.0) ++random_levels;
    }
    if (sampler == PdSampler::stick_breaking && random_levels > 1)
        throw ValidationError("stick-breaking weights only define single-level cascades");

    // Unnormalized log atoms per depth; the leaf weight is the product along
    // the path, normalized over all leaves.
    CascadeSample c;
    c.sizes_.push_back(1);
    std::vector<std::vector<double>> log_u;
    for (double xp : x) {
        const int b = xp == 0.0 ? 1 : atoms;
        const std::size_t parents = c.sizes_.back();
        std::vector<double> lu;
        lu.reserve(parents * static_cast<std::size_t>(b));
        for (std::size_t j = 0; j < parents; ++j) {
            if (xp == 0.0) {
                lu.push_back(0.0);
            } else if (xp == 1.0) {
                lu.insert(lu.end(), static_cast<std::size_t>(b), 0.0);
            } else if (sampler == PdSampler::stick_breaking) {
                const auto w = sample_poisson_dirichlet(xp, b, rng, sampler);
                lu.insert(lu.end(), w.begin(), w.end());
            } else {
                poisson_log_atoms(xp, b, rng, lu);
            }
        }
        c.branching_.push_back(b);
        c.sizes_.push_back(parents * static_cast<std::size_t>(b));
        log_u.push_back(std::move(lu));
    }

    // Subtree log masses bottom-up, then child weights relative to parents.
    const int r = static_cast<int>(x.size());
    std::vector<double> below(c.sizes_.back(), 0.0);
    c.log_w_.resize(static_cast<std::size_t>(r));
    for (int d = r; d >= 1; --d) {
        const auto b = static_cast<std::size_t>(c.branching_[static_cast<std::size_t>(d - 1)]);
        const auto& lu = log_u[static_cast<std::size_t>(d - 1)];
        std::vector<double> mass(lu.size());
        for (std::size_t j = 0; j < lu.size(); ++j) mass[j] = lu[j] + below[j];
        std::vector<double> parent(c.sizes_[static_cast<std::size_t>(d - 1)]);
        std::vector<double>& lw = c.log_w_[static_cast<std::size_t>(d - 1)];
        lw.resize(mass.size());
        for (std::size_t i = 0; i < parent.size(); ++i) {
            const std::span<const double> kids(mass.data() + i * b, b);
            parent[i] = log_sum_exp(kids);
            for (std::size_t j = 0; j < b; ++j) lw[i * b + j] = kids[j] - parent[i];
        }
        below = std::move(parent);
    }
    return c;
}

CascadeSample sample_cascade(const CascadeSpec& spec, Rng& rng)
{
    spec.validate();
    return sample_cascade_levels(spec.x, spec.atoms_per_level, rng, spec.sampler);
}

CascadeSample sample_cascade(const CascadeSpec& spec, std::uint64_t seed)
{
    Rng rng = make_rng(seed);
    return sample_cascade(spec, rng);
}

std::vector<double> sample_leaf_fields(const CascadeSample& c, const std::vector<Matrix>& factors, int copies,
                                       Rng& rng)
{
    if (static_cast<int>(factors.size()) != c.levels()) throw MalformedInput("need one field factor per cascade level");
    if (copies < 1) throw MalformedInput("need at least one field copy");
    const auto dim = static_cast<std::size_t>(factors.empty() ? 1 : factors.front().rows());
    const std::size_t width = dim * static_cast<std::size_t>(copies);
    Normal normal;
    std::vector<double> cur(width, 0.0);
    std::vector<double> xi(dim);
    for (int d = 1; d <= c.levels(); ++d) {
        const Matrix& f = factors[static_cast<std::size_t>(d - 1)];
        if (static_cast<std::size_t>(f.rows()) != dim || f.cols() != f.rows()) throw MalformedInput("field factors must be square and equal-sized");
        const auto b = static_cast<std::size_t>(c.branching(d - 1));
        std::vector<double> next(c.nodes(d) * width);
        for (std::size_t j = 0; j < c.nodes(d); ++j) {
            const double* parent = cur.data() + (j / b) * width;
            double* out = next.data() + j * width;
            for (std::size_t s = 0; s < static_cast<std::size_t>(copies); ++s) {
                for (std::size_t k = 0; k < dim; ++k) xi[k] = normal(rng);
                for (std::size_t k = 0; k < dim; ++k) {
                    double z = 0.0;
                    for (std::size_t l = 0; l < dim; ++l) z += f(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) * xi[l];
                    out[s * dim + k] = parent[s * dim + k] + z;
                }
            }
        }
        cur = std::move(next);
    }
    return cur;
}

OverlapArray sample_overlap_array(const CascadeSample& c, std::span<const double> q, const TraceMap& phi, int n,
                                  std::uint64_t seed)
{
    if (n < 2) throw MalformedInput("overlap array needs at least two replicas");
    if (static_cast<int>(q.size()) != c.levels() + 1) throw MalformedInput("need one q value per cascade depth");
    if (q.front() != 0.0) throw ValidationError("q_0 must be 0");
    for (std::size_t p = 1; p < q.size(); ++p)
        if (!(q[p] > q[p - 1])) throw ValidationError("q must be strictly increasing");

    Rng rng = make_rng(seed);
    std::vector<std::size_t> leaves(static_cast<std::size_t>(n));
    for (auto& l : leaves) l = c.sample_leaf(rng);

    std::vector<Matrix> by_level;
    for (double t : q) by_level.push_back(phi(t));

    OverlapArray a;
    a.n = n;
    a.kappa = static_cast<int>(by_level.front().rows());
    a.traces.resize(static_cast<std::size_t>(n * n));
    a.blocks.resize(static_cast<std::size_t>(n * n));
    for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) {
            const int p = l == m ? c.levels() : c.meet(leaves[static_cast<std::size_t>(l)], leaves[static_cast<std::size_t>(m)]);
            a.traces[static_cast<std::size_t>(l * n + m)] = q[static_cast<std::size_t>(p)];
            a.blocks[static_cast<std::size_t>(l * n + m)] = by_level[static_cast<std::size_t>(p)];
        }
    return a;
}

namespace {

// Table index per customer for a Chinese restaurant process with discount
// alpha and concentration 0.
std::vector<int> chinese_restaurant(int customers, double alpha, Rng& rng)
{
    std::vector<int> table(static_cast<std::size_t>(customers));
    std::vector<int> sizes;
    for (int c = 0; c < customers; ++c) {
        if (c == 0) {
            sizes.push_back(1);
            table[0] = 0;
            continue;
        }
        // New table with probability kα/c, table j with (n_j − α)/c.
        double u = uniform01(rng) * c;
        int pick = static_cast<int>(sizes.size());
        for (std::size_t j = 0; j < sizes.size(); ++j) {
            u -= sizes[j] - alpha;
            if (u < 0.0) {
                pick = static_cast<int>(j);
                break;
            }
        }
        if (pick == static_cast<int>(sizes.size())) sizes.push_back(0);
        ++sizes[static_cast<std::size_t>(pick)];
        table[static_cast<std::size_t>(c)] = pick;
    }
    return table;
}

}  // namespace

OverlapArray sample_overlap_array_exact(std::span<const double> x, std::span<const double> q, const TraceMap& phi,
                                        int n, Rng& rng)
{
    const int r = static_cast<int>(x.size());
    if (r < 1) throw MalformedInput("cascade needs at least one level");
    for (int p = 0; p < r; ++p) {
        if (!(x[static_cast<std::size_t>(p)] > 0.0 && x[static_cast<std::size_t>(p)] < 1.0))
            throw ValidationError("cascade x values must lie in (0,1)");
        if (p > 0 && !(x[static_cast<std::size_t>(p)] > x[static_cast<std::size_t>(p - 1)]))
            throw ValidationError("cascade x values must be strictly increasing");
    }
    if (n < 2) throw MalformedInput("overlap array needs at least two replicas");
    if (static_cast<int>(q.size()) != r + 1) throw MalformedInput("need one q value per cascade depth");
    if (q.front() != 0.0) throw ValidationError("q_0 must be 0");
    for (std::size_t p = 1; p < q.size(); ++p)
        if (!(q[p] > q[p - 1])) throw ValidationError("q must be strictly increasing");

    // node[p][ℓ]: replica ℓ's ancestor at depth p, p = 1..r.
    std::vector<std::vector<int>> node(static_cast<std::size_t>(r + 1));
    node[static_cast<std::size_t>(r)] = chinese_restaurant(n, x[static_cast<std::size_t>(r - 1)], rng);
    for (int p = r - 1; p >= 1; --p) {
        const std::vector<int>& fine = node[static_cast<std::size_t>(p + 1)];
        const int blocks = *std::max_element(fine.begin(), fine.end()) + 1;
        const std::vector<int> group =
            chinese_restaurant(blocks, x[static_cast<std::size_t>(p - 1)] / x[static_cast<std::size_t>(p)], rng);
        std::vector<int>& coarse = node[static_cast<std::size_t>(p)];
        coarse.resize(static_cast<std::size_t>(n));
        for (int l = 0; l < n; ++l) coarse[static_cast<std::size_t>(l)] = group[static_cast<std::size_t>(fine[static_cast<std::size_t>(l)])];
    }

    std::vector<Matrix> by_level;
    for (double t : q) by_level.push_back(phi(t));
    OverlapArray a;
    a.n = n;
    a.kappa = static_cast<int>(by_level.front().rows());
    a.traces.resize(static_cast<std::size_t>(n * n));
    a.blocks.resize(static_cast<std::size_t>(n * n));
    for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) {
            int depth = 0;
            if (l == m) {
                depth = r;
            } else {
                for (int p = r; p >= 1; --p) {
                    const auto& v = node[static_cast<std::size_t>(p)];
                    if (v[static_cast<std::size_t>(l)] == v[static_cast<std::size_t>(m)]) {
                        depth = p;
                        break;
                    }
                }
            }
            a.traces[static_cast<std::size_t>(l * n + m)] = q[static_cast<std::size_t>(depth)];
            a.blocks[static_cast<std::size_t>(l * n + m)] = by_level[static_cast<std::size_t>(depth)];
        }
    return a;
}

namespace {

Estimate y_side(const MonotonePath& path, double beta, int scale_n, int atoms, const CascadeMcSpec& mc)
{
    const std::vector<double> levels(path.x().begin(), path.x().end() - 1);
    std::vector<Matrix> factors;
    for (int p = 1; p <= path.levels(); ++p) {
        const double var = hs_norm_sq(path.gamma(p)) - hs_norm_sq(path.gamma(p - 1));
        factors.push_back(Matrix::Constant(1, 1, beta * std::sqrt(scale_n * std::max(var, 0.0))));
    }
    std::vector<double> values(static_cast<std::size_t>(mc.reps));
    parallel_for(values.size(), [&](std::size_t rep) {
        Rng rng = make_rng(mc.seed, {static_cast<std::uint64_t>(atoms), rep});
        const CascadeSample c = sample_cascade_levels(levels, atoms, rng);
        const std::vector<double> y = sample_leaf_fields(c, factors, 1, rng);
        const std::vector<double> lw = c.leaf_log_weights();
        LogSumExp acc;
        for (std::size_t leaf = 0; leaf < c.leaf_count(); ++leaf) acc.add(lw[leaf] + y[leaf]);
        values[rep] = acc.value() / scale_n;
    });
    return mean_se(values);
}

}  // namespace

YIdentityReport verify_y_identity(const MonotonePath& path, double beta, int scale_n, const CascadeMcSpec& mc)
{
    mc.validate();
    if (scale_n < 1) throw MalformedInput("scale_N must be at least 1");
    if (!(beta >= 0.0)) throw MalformedInput("beta must be nonnegative");
    const MonotonePath p = path.collapsed();
    const double leaves = std::pow(2.0 * mc.atoms_per_level, p.levels());
    if (leaves * mc.reps > mc.budget) throw BudgetExceeded("Y-identity Monte Carlo", leaves * mc.reps, mc.budget);

    YIdentityReport r;
    r.closed_form = parisi_correction(p, beta);
    const Estimate a = y_side(p, beta, scale_n, mc.atoms_per_level, mc);
    const Estimate b = y_side(p, beta, scale_n, 2 * mc.atoms_per_level, mc);
    r.estimate = a.value;
    r.std_error = a.std_error;
    r.estimate_doubled = b.value;
    r.std_error_doubled = b.std_error;
    r.truncation_allowance = std::abs(a.value - b.value);
    const double diff = r.estimate - r.closed_form;
    r.discrepancy_se = r.std_error > 0.0 ? diff / r.std_error : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
    r.pass = std::abs(diff) <= 3.0 * r.std_error + r.truncation_allowance + 1e-12;
    return r;
}

PhiAgreement compare_phi_methods(const LagrangeMultipliers& lambda, const MonotonePath& path, double beta,
                                 const CascadeMcSpec& mc, const QuadratureSpec& q)
{
    PhiAgreement r;
    r.quadrature = eval_phi(lambda, path, beta, q).value;
    const EvalResult a = eval_phi_cascade_mc(lambda, path, beta, mc);
    CascadeMcSpec doubled = mc;
    doubled.atoms_per_level *= 2;
    const EvalResult b = eval_phi_cascade_mc(lambda, path, beta, doubled);
    r.cascade = a.value;
    r.std_error = a.std_error;
    r.cascade_doubled = b.value;
    r.std_error_doubled = b.std_error;
    r.truncation_allowance = std::abs(a.value - b.value);
    r.pass = std::abs(r.cascade - r.quadrature) <= 3.0 * r.std_error + r.truncation_allowance + 1e-12;
    return r;
}

std::vector<CoincidenceLevel> coincidence_masses(const CascadeSpec& spec, int cascades, std::uint64_t seed)
{
    spec.validate();
    if (cascades < 2) throw MalformedInput("need at least two cascades");
    const int r = spec.levels();
    std::vector<std::vector<double>> mass(static_cast<std::size_t>(r + 1), std::vector<double>(static_cast<std::size_t>(cascades)));
    parallel_for(static_cast<std::size_t>(cascades), [&](std::size_t i) {
        Rng rng = make_rng(seed, {i});
        const auto s = sample_cascade(spec, rng).coincidence_sums();
        for (int p = 0; p <= r; ++p)
            mass[static_cast<std::size_t>(p)][i] = s[static_cast<std::size_t>(p)] - (p < r ? s[static_cast<std::size_t>(p + 1)] : 0.0);
    });
    std::vector<CoincidenceLevel> out;
    for (int p = 0; p <= r; ++p) {
        const double hi = p < r ? spec.x[static_cast<std::size_t>(p)] : 1.0;
        const double lo = p > 0 ? spec.x[static_cast<std::size_t>(p - 1)] : 0.0;
        const Estimate e = mean_se(mass[static_cast<std::size_t>(p)]);
        out.push_back({p, hi - lo, e.value, e.std_error});
    }
    return out;
}

}  // namespace potts
