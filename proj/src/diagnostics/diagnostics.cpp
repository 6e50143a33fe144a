#include "potts/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "potts/errors.hpp"
#include "potts/parallel.hpp"
#include "potts/random.hpp"
#include "potts/stats.hpp"

namespace potts {

namespace {

struct ArraySummary {
    double fq_last = 0.0;
    double f = 0.0;
    double q12 = 0.0;
    double fq_inner = 0.0;
};

double ordered_tuples(int replicas, int size)
{
    double c = 1.0;
    for (int i = 0; i < size; ++i) c *= replicas - i;
    return c;
}

ArraySummary summarize(const OverlapArray& a, const ReplicaFunction& f, int n, const BlockFunction& qf,
                       const GgOptions& options, std::size_t index, std::size_t& tuples)
{
    const int reps = a.n;
    std::vector<double> q(static_cast<std::size_t>(reps * reps), 0.0);
    for (int l = 0; l < reps; ++l) {
        for (int m = 0; m < reps; ++m) {
            if (l != m) q[static_cast<std::size_t>(l * reps + m)] = qf(a.block(l, m));
        }
    }
    auto at = [&](int l, int m) { return q[static_cast<std::size_t>(l * reps + m)]; };

    ArraySummary s;
    std::size_t count = 0;
    std::vector<int> idx(static_cast<std::size_t>(n + 1));
    auto visit = [&] {
        const double fv = f(a, std::span<const int>(idx.data(), static_cast<std::size_t>(n)));
        s.fq_last += fv * at(idx[0], idx[static_cast<std::size_t>(n)]);
        s.f += fv;
        s.q12 += at(idx[0], idx[1]);
        double inner = 0.0;
        for (int l = 1; l < n; ++l) inner += at(idx[0], idx[static_cast<std::size_t>(l)]);
        s.fq_inner += fv * inner;
        ++count;
    };

    if (ordered_tuples(reps, n + 1) <= static_cast<double>(options.max_tuples)) {
        std::vector<char> used(static_cast<std::size_t>(reps), 0);
        const auto fill = [&](auto&& self, int pos) -> void {
            if (pos == n + 1) {
                visit();
                return;
            }
            for (int r = 0; r < reps; ++r) {
                if (used[static_cast<std::size_t>(r)]) continue;
                used[static_cast<std::size_t>(r)] = 1;
                idx[static_cast<std::size_t>(pos)] = r;
                self(self, pos + 1);
                used[static_cast<std::size_t>(r)] = 0;
            }
        };
        fill(fill, 0);
    } else {
        Rng rng = make_rng(options.seed, {0x7475706cULL, index});
        std::vector<int> perm(static_cast<std::size_t>(reps));
        for (std::size_t t = 0; t < options.max_tuples; ++t) {
            std::iota(perm.begin(), perm.end(), 0);
            for (int i = 0; i <= n; ++i) {
                const int j = i + static_cast<int>(rng() % static_cast<std::uint64_t>(reps - i));
                std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
                idx[static_cast<std::size_t>(i)] = perm[static_cast<std::size_t>(i)];
            }
            visit();
        }
    }
    const double c = static_cast<double>(count);
    s.fq_last /= c;
    s.f /= c;
    s.q12 /= c;
    s.fq_inner /= c;
    tuples = count;
    return s;
}

double gg_statistic(const std::vector<ArraySummary>& s, const std::vector<std::size_t>& pick, int n)
{
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
    for (std::size_t i : pick) {
        a += s[i].fq_last;
        b += s[i].f;
        c += s[i].q12;
        d += s[i].fq_inner;
    }
    const double m = static_cast<double>(pick.size());
    a /= m;
    b /= m;
    c /= m;
    d /= m;
    return a - b * c / n - d / n;
}

Matrix psd_part(const Matrix& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
    const Vector ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

GgResidual gg_identity(const std::vector<OverlapArray>& arrays, const ReplicaFunction& f, int n, const BlockFunction& q,
                       const GgOptions& options)
{
    if (n < 1) throw ValidationError("GG identity needs n >= 1");
    if (arrays.empty()) throw ValidationError("GG identity needs at least one array");
    if (options.bootstrap < 2) throw ValidationError("bootstrap needs at least two resamples");
    for (const OverlapArray& a : arrays) {
        if (a.n < n + 1) throw ValidationError("insufficient replicas: arrays need at least n + 1 replicas");
    }

    std::vector<ArraySummary> s(arrays.size());
    std::vector<std::size_t> tuples(arrays.size());
    parallel_for(arrays.size(), [&](std::size_t i) { s[i] = summarize(arrays[i], f, n, q, options, i, tuples[i]); });

    std::vector<std::size_t> all(arrays.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    GgResidual r;
    r.n = n;
    r.arrays = static_cast<int>(arrays.size());
    r.tuples_per_array = *std::max_element(tuples.begin(), tuples.end());
    r.signed_residual = gg_statistic(s, all, n);
    r.residual = std::abs(r.signed_residual);

    std::vector<double> boot(static_cast<std::size_t>(options.bootstrap));
    parallel_for(boot.size(), [&](std::size_t b) {
        Rng rng = make_rng(options.seed, {0x626f6f74ULL, b});
        std::vector<std::size_t> pick(arrays.size());
        for (auto& p : pick) p = static_cast<std::size_t>(rng() % arrays.size());
        boot[b] = gg_statistic(s, pick, n);
    });
    const double mean = std::accumulate(boot.begin(), boot.end(), 0.0) / static_cast<double>(boot.size());
    double var = 0.0;
    for (double v : boot) var += (v - mean) * (v - mean);
    r.std_error = std::sqrt(var / static_cast<double>(boot.size() - 1));
    return r;
}

double replica_one(const OverlapArray&, std::span<const int>)
{
    return 1.0;
}

double replica_trace_polynomial(const OverlapArray& a, std::span<const int> idx)
{
    double v = 1.0;
    for (std::size_t l = 0; l + 1 < idx.size(); ++l) v *= a.trace(idx[l], idx[l + 1]);
    return v * v + a.trace(idx[0], idx[idx.size() - 1]);
}

std::vector<PerturbationSpec> standard_gg_specs(int kappa)
{
    if (kappa < 2) throw ValidationError("standard GG specs need kappa >= 2");
    const Vector e1 = Vector::Unit(kappa, 0);
    const Vector e2 = Vector::Unit(kappa, 1);
    const Vector ones = Vector::Ones(kappa);
    const Vector mixed = e1 - 0.5 * e2;
    return {PerturbationSpec{1, {1}, {e1}}, PerturbationSpec{1, {1}, {ones}}, PerturbationSpec{2, {1}, {mixed}},
            PerturbationSpec{1, {2}, {e2}}, PerturbationSpec{3, {1, 1}, {ones, mixed}}};
}

std::vector<OverlapArray> cascade_gg_arrays(std::span<const double> x, std::span<const double> q, const TraceMap& phi,
                                            int count, int replicas, std::uint64_t seed)
{
    if (count < 1) throw ValidationError("need at least one array");
    std::vector<OverlapArray> out(static_cast<std::size_t>(count));
    parallel_for(out.size(), [&](std::size_t i) {
        Rng rng = make_rng(seed, {static_cast<std::uint64_t>(i)});
        out[i] = sample_overlap_array_exact(x, q, phi, replicas, rng);
    });
    return out;
}

TraceMap named_generator(const std::string& name, const StateDistribution& d)
{
    if (name == "linear") return [d](double t) -> Matrix { return t * d.diag(); };
    if (name == "quadratic") {
        if (d.kappa() >= 2 && d[0] > 0.5) throw ValidationError("quadratic generator needs d_1 <= 1/2");
        return [d](double t) -> Matrix {
            Matrix m = Matrix::Zero(d.kappa(), d.kappa());
            if (d.kappa() == 1) {
                m(0, 0) = t;
                return m;
            }
            m(0, 0) = d[0] * t * t;
            for (int k = 1; k < d.kappa(); ++k) m(k, k) = d[k] * (t - d[0] * t * t) / (1.0 - d[0]);
            return m;
        };
    }
    throw ValidationError("unknown generator \"" + name + "\" (expected linear or quadratic)");
}

GgResidual gg_residual(const std::vector<OverlapArray>& arrays, const ReplicaFunction& f, int n,
                       const PerturbationSpec& spec, const GgOptions& options)
{
    if (!arrays.empty()) spec.validate(arrays.front().kappa);
    return gg_identity(arrays, f, n, [&spec](const Matrix& r) { return perturbation_covariance(spec, r); }, options);
}

GgResidual gg_polynomial_extension_check(const std::vector<OverlapArray>& arrays, const ReplicaFunction& f, int n,
                                         const QuadraticForms& forms,
                                         const std::function<double(std::span<const double>)>& phi,
                                         const GgOptions& options)
{
    if (forms.p < 1) throw ValidationError("quadratic forms need p >= 1");
    if (forms.lambdas.empty()) throw ValidationError("quadratic forms need at least one lambda");
    return gg_identity(
        arrays, f, n,
        [&](const Matrix& r) {
            const std::vector<double> v = quadratic_forms(r, forms.p, forms.lambdas);
            return phi(v);
        },
        options);
}

std::vector<OverlapArray> perturbed_gibbs_arrays(const PerturbedGibbsSpec& spec)
{
    const StateDistribution d = StateDistribution::from(spec.d);
    const int kappa = d.kappa();
    if (spec.replicas < 2 || spec.draws < 1) throw ValidationError("perturbed Gibbs arrays need >= 2 replicas and >= 1 draw");
    if (spec.u < 1.0 || spec.u > 2.0) throw ValidationError("perturbation weight u must lie in [1,2]");
    const std::vector<Configuration> configs = ConfigurationSet::with_counts(d.counts(spec.n)).enumerate();
    const LambdaCatalogue catalogue = LambdaCatalogue::standard(kappa);
    std::vector<WeightedTheta> thetas;
    for (const PerturbationSpec& t : enumerate_thetas(catalogue, spec.max_j)) {
        thetas.push_back({t, theta_index(t, catalogue), spec.u});
    }
    const double s_n = perturbation_scale(spec.n, spec.gamma);

    std::vector<OverlapArray> out(static_cast<std::size_t>(spec.draws));
    parallel_for(out.size(), [&](std::size_t i) {
        const DisorderInstance g = DisorderInstance::generate(spec.n, disorder_seed(spec.seed, i));
        const PerturbationField field(configs, kappa, thetas, derive_seed(spec.seed, {0x70657274ULL, i}));
        std::vector<double> logw(configs.size());
        for (std::size_t a = 0; a < configs.size(); ++a) logw[a] = spec.beta * hamiltonian(g, configs[a]) + s_n * field.value(a);
        const double z = log_sum_exp(logw);
        std::vector<double> cdf(configs.size());
        double acc = 0.0;
        for (std::size_t a = 0; a < configs.size(); ++a) cdf[a] = acc += std::exp(logw[a] - z);
        Rng rng = make_rng(spec.seed, {0x67696262ULL, i});
        std::vector<Configuration> replicas;
        for (int l = 0; l < spec.replicas; ++l) {
            const auto it = std::upper_bound(cdf.begin(), cdf.end(), uniform01(rng) * acc);
            replicas.push_back(configs[std::min(static_cast<std::size_t>(it - cdf.begin()), configs.size() - 1)]);
        }
        out[i] = overlap_array(replicas, kappa);
    });
    return out;
}

Matrix SyncFit::operator()(double t) const
{
    if (t <= grid.front()) return phi_hat.front();
    if (t >= grid.back()) return phi_hat.back();
    const auto it = std::upper_bound(grid.begin(), grid.end(), t);
    const auto hi = static_cast<std::size_t>(it - grid.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - grid[lo]) / (grid[hi] - grid[lo]);
    return (1.0 - w) * phi_hat[lo] + w * phi_hat[hi];
}

SyncFit sync_fit(const std::vector<OverlapArray>& arrays, double bin_width, std::size_t min_blocks)
{
    if (!(bin_width > 0.0)) throw ValidationError("bin width must be positive");
    std::vector<double> traces;
    std::vector<const Matrix*> blocks;
    for (const OverlapArray& a : arrays) {
        for (int l = 0; l < a.n; ++l) {
            for (int m = l + 1; m < a.n; ++m) {
                traces.push_back(a.trace(l, m));
                blocks.push_back(&a.block(l, m));
            }
        }
    }
    if (blocks.size() < min_blocks) throw ValidationError("sync fit needs at least " + std::to_string(min_blocks) + " off-diagonal blocks");

    const double lo = *std::min_element(traces.begin(), traces.end());
    const double hi = *std::max_element(traces.begin(), traces.end());
    const auto bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / bin_width)));
    // Running means, exact when a bin holds identical blocks.
    std::vector<double> tmean(bins, 0.0);
    std::vector<Matrix> mmean(bins);
    std::vector<int> count(bins, 0);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto b = std::min(bins - 1, static_cast<std::size_t>((traces[i] - lo) / bin_width));
        const int c = ++count[b];
        if (c == 1) {
            tmean[b] = traces[i];
            mmean[b] = *blocks[i];
        } else {
            tmean[b] += (traces[i] - tmean[b]) / c;
            mmean[b] += (*blocks[i] - mmean[b]) / c;
        }
    }

    SyncFit fit;
    fit.bin_width = bin_width;
    fit.blocks = blocks.size();
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        const Matrix sym = 0.5 * (mmean[b] + mmean[b].transpose());
        fit.grid.push_back(tmean[b]);
        fit.bin_counts.push_back(count[b]);
        fit.phi_hat.push_back(fit.phi_hat.empty() ? sym : Matrix(fit.phi_hat.back() + psd_part(sym - fit.phi_hat.back())));
    }
    for (std::size_t b = 1; b < fit.grid.size(); ++b) {
        const double dt = fit.grid[b] - fit.grid[b - 1];
        if (dt > 1e-12) fit.lipschitz_hat = std::max(fit.lipschitz_hat, entrywise_l1(fit.phi_hat[b] - fit.phi_hat[b - 1]) / dt);
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        fit.residual = std::max(fit.residual, entrywise_l1(*blocks[i] - fit(traces[i])));
    }
    return fit;
}

std::vector<OverlapArray> generator_arrays(const std::vector<TraceMap>& maps, std::size_t min_blocks, int replicas,
                                           std::uint64_t seed)
{
    if (maps.empty()) throw MalformedInput("generator arrays need at least one trace map");
    if (replicas < 2) throw MalformedInput("generator arrays need at least two replicas");
    const std::size_t per = static_cast<std::size_t>(replicas) * static_cast<std::size_t>(replicas - 1) / 2;
    const std::size_t count = (min_blocks + per - 1) / per;
    std::vector<OverlapArray> arrays(count);
    parallel_for(count, [&](std::size_t i) {
        Rng rng = make_rng(seed, {0x67656e72ULL, i});
        const CascadeSample c = sample_cascade(CascadeSpec{{0.5}, 50}, rng);
        const std::vector<double> q{0.0, 0.02 + 0.98 * uniform01(rng)};
        arrays[i] = sample_overlap_array(c, q, maps[i % maps.size()], replicas, rng());
    });
    return arrays;
}

double sync_distance(const SyncFit& fit, const TraceMap& phi)
{
    double d = 0.0;
    for (std::size_t b = 0; b < fit.grid.size(); ++b) d = std::max(d, entrywise_l1(fit.phi_hat[b] - phi(fit.grid[b])));
    return d;
}

void InterpolationParams::validate() const
{
    if (atoms_per_level < 2) throw ValidationError("cascade needs at least two atoms per level");
    if (reps < 2) throw ValidationError("interpolation needs at least two replicates");
}

InterpolationCurve interpolation_curve(int n, const MonotonePath& path, double beta, const std::vector<double>& t_grid,
                                       const InterpolationParams& params)
{
    params.validate();
    if (n < 1) throw ValidationError("N must be at least 1");
    if (!std::isfinite(beta)) throw MalformedInput("beta must be finite");
    if (t_grid.empty()) throw ValidationError("t grid is empty");
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        if (!(t_grid[j] >= 0.0 && t_grid[j] <= 1.0)) throw ValidationError("t grid must lie in [0,1]");
        if (j > 0 && t_grid[j] <= t_grid[j - 1]) throw ValidationError("t grid must be increasing");
    }
    const int kappa = path.kappa();
    const std::vector<Configuration> configs =
        ConfigurationSet::with_counts(path.distribution().counts(n)).enumerate();
    const MonotonePath p = path.collapsed();
    const std::vector<double> levels(p.x().begin(), p.x().end() - 1);
    double leaves = 1.0;
    for (double xp : levels) leaves *= xp == 0.0 ? 1.0 : params.atoms_per_level;
    const double work = leaves * static_cast<double>(configs.size()) * (n + t_grid.size() + 1.0) * params.reps;
    if (work > params.budget) throw BudgetExceeded("interpolation curve", work, params.budget);

    std::vector<Matrix> zf, yf;
    for (int q = 1; q <= p.levels(); ++q) {
        zf.push_back(psd_factor(increment_covariance(p, q)));
        const double dy = std::max(0.0, hs_norm_sq(p.gamma(q)) - hs_norm_sq(p.gamma(q - 1)));
        yf.push_back(Matrix::Constant(1, 1, std::sqrt(dy)));
    }

    const std::size_t nt = t_grid.size();
    const auto reps = static_cast<std::size_t>(params.reps);
    std::vector<std::vector<double>> values(nt, std::vector<double>(reps));
    std::vector<double> y(reps), endpoint(reps);
    const double sqrt_n = std::sqrt(static_cast<double>(n));

    parallel_for(reps, [&](std::size_t rep) {
        Rng rng = make_rng(params.seed, {0x696e7470ULL, rep});
        const DisorderInstance g = DisorderInstance::generate(n, derive_seed(params.seed, {0x67696e74ULL, rep}));
        const CascadeSample c = sample_cascade_levels(levels, params.atoms_per_level, rng);
        const std::vector<double> z = sample_leaf_fields(c, zf, n, rng);
        const std::vector<double> yv = sample_leaf_fields(c, yf, 1, rng);
        const std::vector<double> lw = c.leaf_log_weights();
        const std::size_t nl = c.leaf_count();
        const std::size_t nc = configs.size();
        std::vector<double> h(nc);
        for (std::size_t a = 0; a < nc; ++a) h[a] = hamiltonian(g, configs[a]);
        std::vector<double> zsum(nl * nc);
        const auto width = static_cast<std::size_t>(n * kappa);
        for (std::size_t leaf = 0; leaf < nl; ++leaf) {
            const double* row = z.data() + leaf * width;
            for (std::size_t a = 0; a < nc; ++a) {
                double s = 0.0;
                for (int i = 0; i < n; ++i) s += row[static_cast<std::size_t>(i * kappa + configs[a][static_cast<std::size_t>(i)])];
                zsum[leaf * nc + a] = s;
            }
        }
        auto phi_at = [&](double t) {
            const double st = std::sqrt(t), sc = std::sqrt(1.0 - t);
            LogSumExp outer;
            for (std::size_t leaf = 0; leaf < nl; ++leaf) {
                LogSumExp inner;
                for (std::size_t a = 0; a < nc; ++a) inner.add(beta * (st * h[a] + sc * zsum[leaf * nc + a]));
                outer.add(lw[leaf] + beta * st * sqrt_n * yv[leaf] + inner.value());
            }
            return outer.value() / n;
        };
        for (std::size_t j = 0; j < nt; ++j) values[j][rep] = phi_at(t_grid[j]);
        LogSumExp ys;
        for (std::size_t leaf = 0; leaf < nl; ++leaf) ys.add(lw[leaf] + beta * sqrt_n * yv[leaf]);
        y[rep] = ys.value() / n;
        endpoint[rep] = (t_grid.back() == 1.0 ? values[nt - 1][rep] : phi_at(1.0)) - y[rep];
    });

    InterpolationCurve out;
    out.t = t_grid;
    for (std::size_t j = 0; j < nt; ++j) {
        const Estimate e = mean_se(values[j]);
        out.values.push_back(e.value);
        out.std_errors.push_back(e.std_error);
    }
    out.max_positive_increment = -INFINITY;
    for (std::size_t j = 0; j + 1 < nt; ++j) {
        const Estimate e = mean_se_diff(values[j + 1], values[j]);
        out.increments.push_back(e.value);
        out.increment_se.push_back(e.std_error);
        if (e.value > out.max_positive_increment) {
            out.max_positive_increment = e.value;
            out.max_increment_se = e.std_error;
        }
        if (e.value > 3.0 * e.std_error + 1e-12) out.monotone = false;
    }
    if (out.increments.empty()) out.max_positive_increment = 0.0;
    out.max_positive_increment = std::max(0.0, out.max_positive_increment);
    const Estimate ey = mean_se(y);
    out.y_term = ey.value;
    out.y_term_se = ey.std_error;
    out.y_closed_form = parisi_correction(p, beta);
    const Estimate ee = mean_se(endpoint);
    out.endpoint = ee.value;
    out.endpoint_se = ee.std_error;
    return out;
}

std::vector<LagrangeMultipliers> lambda_grid(int kappa, double lo, double hi, int points)
{
    if (kappa < 1) throw ValidationError("kappa must be at least 1");
    if (points < 1 || !(hi >= lo)) throw ValidationError("lambda grid needs points >= 1 and hi >= lo");
    const int dims = kappa - 1;
    std::vector<double> axis(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) axis[static_cast<std::size_t>(i)] = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
    std::vector<LagrangeMultipliers> out;
    std::vector<int> digit(static_cast<std::size_t>(dims), 0);
    for (;;) {
        std::vector<double> v(static_cast<std::size_t>(dims));
        for (int k = 0; k < dims; ++k) v[static_cast<std::size_t>(k)] = axis[static_cast<std::size_t>(digit[static_cast<std::size_t>(k)])];
        out.push_back(LagrangeMultipliers::from(kappa, v));
        int k = 0;
        for (; k < dims; ++k) {
            if (++digit[static_cast<std::size_t>(k)] < points) break;
            digit[static_cast<std::size_t>(k)] = 0;
        }
        if (k == dims) break;
    }
    return out;
}

LegendreReport legendre_gap(const MonotonePath& path, double beta, const std::vector<LagrangeMultipliers>& grid,
                            const std::vector<int>& m_list, const CascadeMcSpec& mc, const QuadratureSpec& q)
{
    if (grid.empty()) throw ValidationError("lambda grid is empty");
    if (m_list.empty()) throw ValidationError("no M values given");
    const StateDistribution& d = path.distribution();

    double dual = INFINITY;
    std::size_t argmin = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double lagrange = 0.0;
        for (int k = 0; k + 1 < d.kappa(); ++k) lagrange += grid[i].shift(k) * d[k];
        const double v = eval_phi(grid[i], path, beta, q).value - lagrange;
        if (v < dual) {
            dual = v;
            argmin = i;
        }
    }

    std::vector<int> ms = m_list;
    std::sort(ms.begin(), ms.end());
    LegendreReport rep;
    for (int m : ms) {
        const ConfigurationSet set = ConfigurationSet::with_counts(d.counts(m));
        const EvalResult f = eval_f1_restricted(set, LagrangeMultipliers::zeros(d.kappa()), path, beta, mc);
        LegendreRow row;
        row.m = m;
        row.primal = f.value;
        row.primal_se = f.std_error;
        row.dual = dual;
        row.dual_argmin = argmin;
        row.gap = dual - f.value;
        row.gap_se = f.std_error;
        if (row.gap < -3.0 * row.gap_se - 1e-12) rep.nonnegative = false;
        if (!rep.rows.empty()) {
            const LegendreRow& prev = rep.rows.back();
            if (row.gap > prev.gap + 3.0 * std::hypot(row.gap_se, prev.gap_se) + 1e-12) rep.nonincreasing = false;
        }
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace potts
