#include "potts/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "potts/errors.hpp"
#include "potts/parallel.hpp"
#include "potts/random.hpp"

namespace potts {

namespace {

constexpr double kLogitClamp = 36.0;

double logistic(double u)
{
    return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

double logit(double p)
{
    if (p <= 0.0) return -kLogitClamp;
    if (p >= 1.0) return kLogitClamp;
    return std::clamp(std::log(p / (1.0 - p)), -kLogitClamp, kLogitClamp);
}

int tri(int kappa)
{
    return kappa * (kappa + 1) / 2;
}

// Lower-triangular L with L Lᵀ = m for PSD m, including singular m.
Matrix lower_factor(const Matrix& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
    const Matrix b = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    Eigen::HouseholderQR<Matrix> qr(b.transpose());
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    return r.transpose();
}

double min_eig(const Matrix& m)
{
    return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly).eigenvalues()(0);
}

void quiet_gsl()
{
    static std::once_flag once;
    std::call_once(once, [] { gsl_set_error_handler_off(); });
}

bool better(double v, const std::vector<double>& p, double best, const std::vector<double>& best_p)
{
    if (v != best) return v < best;
    return std::lexicographical_compare(p.begin(), p.end(), best_p.begin(), best_p.end());
}

struct Objective {
    const StateDistribution* d = nullptr;
    const PathParametrization* param = nullptr;
    double beta = 0.0;
    const OptimizerConfig* config = nullptr;

    int evaluations = 0;
    int rejections = 0;
    bool any_feasible = false;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_theta;
    std::exception_ptr error;

    double operator()(std::span<const double> theta)
    {
        ++evaluations;
        const int kappa = d->kappa();
        const auto lam = LagrangeMultipliers::from(
            kappa, std::vector<double>(theta.begin(), theta.begin() + (kappa - 1)));
        const std::span<const double> rest = theta.subspan(static_cast<std::size_t>(kappa - 1));
        PathParametrization::Decoded dec = param->decode(rest);
        if (dec.feasible(config->nonneg_gamma)) {
            const double v = eval_parisi(lam, *d, *dec.path, beta, config->quadrature).value;
            std::vector<double> t(theta.begin(), theta.end());
            if (!any_feasible || better(v, t, best, best_theta)) {
                best = v;
                best_theta = std::move(t);
            }
            any_feasible = true;
            return v;
        }
        ++rejections;
        // Penalized value at the largest feasible shrink of the free increments.
        const int r = param->levels();
        const Matrix dd = d->diag();
        const Matrix top = dec.gammas[static_cast<std::size_t>(r - 1)];
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 50; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (min_eig(dd - mid * top) >= 0.0) lo = mid;
            else hi = mid;
        }
        std::vector<Matrix> g = dec.gammas;
        for (int p = 1; p < r; ++p) g[static_cast<std::size_t>(p)] *= lo;
        const MonotonePath shrunk = MonotonePath::make(*d, dec.x, g);
        const double v = std::max(0.0, -dec.final_min_eigenvalue) + (config->nonneg_gamma ? dec.negative_entry : 0.0);
        return eval_parisi(lam, *d, shrunk, beta, config->quadrature).value + v + v * v;
    }
};

double gsl_objective(const gsl_vector* v, void* params)
{
    auto* obj = static_cast<Objective*>(params);
    if (obj->error) return GSL_POSINF;
    std::vector<double> theta(v->size);
    for (std::size_t i = 0; i < v->size; ++i) theta[i] = gsl_vector_get(v, i);
    try {
        return (*obj)(theta);
    } catch (...) {
        obj->error = std::current_exception();
        return GSL_POSINF;
    }
}

struct Run {
    std::vector<double> trace;
    int iterations = 0;
};

// Nelder–Mead from theta0 with one restart at the best vertex.
template <class F>
Run nelder_mead(F& f, double (*fn)(const gsl_vector*, void*), std::vector<double> theta0, double step, int max_iterations,
                double tolerance, int stall_iterations, double stall_tolerance, const std::function<double()>& best,
                const std::function<bool()>& failed)
{
    quiet_gsl();
    Run run;
    const std::size_t n = theta0.size();
    if (n == 0) return run;
    gsl_multimin_function func{fn, n, &f};
    gsl_vector* x = gsl_vector_alloc(n);
    gsl_vector* ss = gsl_vector_alloc(n);
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    for (int round = 0; round < 2 && run.iterations < max_iterations; ++round) {
        for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x, i, theta0[i]);
        gsl_vector_set_all(ss, round == 0 ? step : step / 10.0);
        gsl_multimin_fminimizer_set(s, &func, x, ss);
        const std::size_t first = run.trace.size();
        while (run.iterations < max_iterations && !failed()) {
            ++run.iterations;
            if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
            run.trace.push_back(best());
            if (gsl_multimin_fminimizer_size(s) < tolerance) break;
            const std::size_t k = run.trace.size() - first;
            if (k > static_cast<std::size_t>(stall_iterations) &&
                run.trace[run.trace.size() - 1 - static_cast<std::size_t>(stall_iterations)] - run.trace.back() <
                    stall_tolerance)
                break;
        }
        if (failed()) break;
        const gsl_vector* bx = gsl_multimin_fminimizer_x(s);
        for (std::size_t i = 0; i < n; ++i) theta0[i] = gsl_vector_get(bx, i);
    }
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(ss);
    gsl_vector_free(x);
    return run;
}

MonotonePath random_start_path(const StateDistribution& d, int r, bool nonneg, Rng& rng)
{
    const int kappa = d.kappa();
    std::vector<double> x(static_cast<std::size_t>(r));
    for (double& v : x) v = 0.05 + 0.9 * uniform01(rng);
    std::sort(x.begin(), x.end());
    x.push_back(1.0);

    std::vector<double> w(static_cast<std::size_t>(r));
    double total = 0.0;
    for (double& v : w) {
        v = -std::log(1.0 - uniform01(rng));
        total += v;
    }
    const Matrix half = d.diag().cwiseSqrt();
    Normal normal;
    std::vector<Matrix> g{Matrix::Zero(kappa, kappa)};
    for (int p = 1; p < r; ++p) {
        Matrix inc;
        if (nonneg) {
            inc = (w[static_cast<std::size_t>(p - 1)] / total) * d.diag();
        } else {
            Matrix z(kappa, kappa);
            for (int i = 0; i < kappa; ++i)
                for (int j = 0; j < kappa; ++j) z(i, j) = normal(rng);
            const Matrix q = Eigen::HouseholderQR<Matrix>(z).householderQ();
            Vector ev(kappa);
            for (int i = 0; i < kappa; ++i) ev(i) = uniform01(rng);
            inc = (w[static_cast<std::size_t>(p - 1)] / total) * half * q * ev.asDiagonal() * q.transpose() * half;
        }
        g.push_back(g.back() + inc);
    }
    g.push_back(d.diag());
    return MonotonePath::make(d, x, g);
}

MonotonePath default_start_path(const StateDistribution& d, int r)
{
    std::vector<double> x;
    std::vector<Matrix> g;
    for (int p = 0; p <= r; ++p) {
        x.push_back(p == r ? 1.0 : (p + 1.0) / (r + 1.0));
        g.push_back((static_cast<double>(p) / r) * d.diag());
    }
    return MonotonePath::make(d, x, g);
}

StateDistribution softmax(std::span<const double> v)
{
    std::vector<double> d(v.size() + 1);
    const double m = std::max(0.0, *std::max_element(v.begin(), v.end()));
    double total = std::exp(-m);
    for (std::size_t k = 0; k < v.size(); ++k) total += std::exp(v[k] - m);
    double head = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        d[k] = std::exp(v[k] - m) / total;
        head += d[k];
    }
    d.back() = 1.0 - head;
    return StateDistribution::from(std::move(d));
}

}  // namespace

void OptimizerConfig::validate() const
{
    if (starts < 1) throw ValidationError("optimizer needs at least one start");
    if (max_iterations < 1) throw ValidationError("optimizer needs at least one iteration");
    if (!(tolerance > 0.0)) throw ValidationError("optimizer tolerance must be positive");
    if (!(initial_step > 0.0)) throw ValidationError("optimizer initial step must be positive");
    if (!(grid_mesh > 0.0 && grid_mesh <= 1.0)) throw ValidationError("grid mesh must lie in (0,1]");
    if (refine_iterations < 0) throw ValidationError("refine iterations must be nonnegative");
    if (stall_iterations < 1) throw ValidationError("stall window must be positive");
    if (!(stall_tolerance >= 0.0)) throw ValidationError("stall tolerance must be nonnegative");
    quadrature.validate();
}

PathParametrization::PathParametrization(StateDistribution d, int r) : d_(std::move(d)), r_(r)
{
    if (r < 1) throw ValidationError("path needs at least one level");
}

int PathParametrization::dimension() const
{
    return r_ + (r_ - 1) * tri(kappa());
}

PathParametrization::Decoded PathParametrization::decode(std::span<const double> theta) const
{
    if (static_cast<int>(theta.size()) != dimension()) throw MalformedInput("path coordinates have the wrong length");
    const int kappa = d_.kappa();
    Decoded out;
    double prev = 0.0;
    for (int p = 0; p < r_; ++p) {
        const double s = logistic(theta[static_cast<std::size_t>(p)]);
        const double xp = p == 0 ? s : prev + (1.0 - prev) * s;
        out.x.push_back(std::min(xp, 1.0));
        prev = out.x.back();
    }
    out.x.push_back(1.0);

    out.gammas.push_back(Matrix::Zero(kappa, kappa));
    std::size_t at = static_cast<std::size_t>(r_);
    for (int p = 1; p < r_; ++p) {
        Matrix a = Matrix::Zero(kappa, kappa);
        for (int i = 0; i < kappa; ++i)
            for (int j = 0; j <= i; ++j) a(i, j) = theta[at++];
        out.gammas.push_back(out.gammas.back() + a * a.transpose());
    }
    out.gammas.push_back(d_.diag());

    out.final_min_eigenvalue = min_eig(d_.diag() - out.gammas[static_cast<std::size_t>(r_ - 1)]);
    for (const Matrix& g : out.gammas) out.negative_entry = std::max(out.negative_entry, -g.minCoeff());
    if (out.final_min_eigenvalue >= -kPsdTolerance) {
        try {
            out.path = MonotonePath::make(d_, out.x, out.gammas);
        } catch (const ValidationError&) {
        }
    }
    return out;
}

std::vector<double> PathParametrization::encode(const MonotonePath& path) const
{
    if (path.kappa() != kappa()) throw MalformedInput("path has the wrong number of states");
    const MonotonePath c = path.collapsed();
    const int rc = c.levels();
    if (rc > r_) throw ValidationError("path has more levels than the parametrization");
    const int extra = r_ - rc;
    std::vector<double> x;
    std::vector<Matrix> g;
    for (int j = 0; j < extra; ++j) {
        x.push_back(c.x_at(0) * (j + 1.0) / (extra + 1.0));
        g.push_back(Matrix::Zero(kappa(), kappa()));
    }
    for (int p = 0; p < rc; ++p) {
        x.push_back(c.x_at(p));
        g.push_back(c.gamma(p));
    }

    std::vector<double> theta;
    double prev = 0.0;
    for (int p = 0; p < r_; ++p) {
        const double xp = x[static_cast<std::size_t>(p)];
        theta.push_back(p == 0 ? logit(xp) : logit(prev < 1.0 ? (xp - prev) / (1.0 - prev) : 0.0));
        prev = xp;
    }
    for (int p = 1; p < r_; ++p) {
        const Matrix a = lower_factor(g[static_cast<std::size_t>(p)] - g[static_cast<std::size_t>(p - 1)]);
        for (int i = 0; i < kappa(); ++i)
            for (int j = 0; j <= i; ++j) theta.push_back(a(i, j));
    }
    return theta;
}

MonotonePath OptimizerReport::path() const
{
    return MonotonePath::make(StateDistribution::from(d), x, gammas);
}

LagrangeMultipliers OptimizerReport::multipliers() const
{
    return LagrangeMultipliers::from(kappa, lambda);
}

OptimizerReport inner_minimize(const StateDistribution& d, int r, double beta, const OptimizerConfig& config,
                               std::uint64_t seed,
                               const std::optional<std::pair<LagrangeMultipliers, MonotonePath>>& warm)
{
    config.validate();
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be finite and nonnegative");
    for (double v : d.values())
        if (v <= 0.0) throw ValidationError("optimizer needs d in the open simplex");
    const int kappa = d.kappa();
    const PathParametrization param(d, r);

    std::vector<std::vector<double>> theta0;
    if (warm) {
        if (warm->first.kappa() != kappa) throw MalformedInput("warm start has the wrong number of states");
        std::vector<double> t = warm->first.values();
        const std::vector<double> p = param.encode(warm->second);
        t.insert(t.end(), p.begin(), p.end());
        theta0.push_back(std::move(t));
    }
    for (int s = 0; s < config.starts; ++s) {
        std::vector<double> t(static_cast<std::size_t>(kappa - 1), 0.0);
        MonotonePath start = default_start_path(d, r);
        if (s > 0) {
            Rng rng = make_rng(seed, {0x73746172ULL, static_cast<std::uint64_t>(s)});
            Normal normal;
            for (double& v : t) v = 0.5 * normal(rng);
            start = random_start_path(d, r, config.nonneg_gamma, rng);
        }
        const std::vector<double> p = param.encode(start);
        t.insert(t.end(), p.begin(), p.end());
        theta0.push_back(std::move(t));
    }

    struct Result {
        Objective obj;
        Run run;
    };
    std::vector<Result> results(theta0.size());
    parallel_for(theta0.size(), [&](std::size_t i) {
        Result& res = results[i];
        res.obj.d = &d;
        res.obj.param = &param;
        res.obj.beta = beta;
        res.obj.config = &config;
        res.obj(theta0[i]);
        if (res.obj.error) std::rethrow_exception(res.obj.error);
        res.run = nelder_mead(
            res.obj, gsl_objective, theta0[i], config.initial_step, config.max_iterations, config.tolerance,
            config.stall_iterations, config.stall_tolerance,
            [&res] { return res.obj.best; }, [&res] { return static_cast<bool>(res.obj.error); });
        if (res.obj.error) std::rethrow_exception(res.obj.error);
    });

    OptimizerReport rep;
    rep.kappa = kappa;
    rep.r = r;
    rep.beta = beta;
    rep.d = d.values();
    int win = -1;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const Objective& o = results[i].obj;
        rep.starts.push_back({o.best, results[i].run.iterations, o.evaluations, o.any_feasible});
        rep.evaluations += o.evaluations;
        rep.rejections += o.rejections;
        if (!o.any_feasible) continue;
        if (win < 0 || better(o.best, o.best_theta, results[static_cast<std::size_t>(win)].obj.best,
                              results[static_cast<std::size_t>(win)].obj.best_theta))
            win = static_cast<int>(i);
    }
    if (win < 0) throw ValidationError("no feasible start found");

    const Objective& o = results[static_cast<std::size_t>(win)].obj;
    const std::span<const double> theta(o.best_theta);
    rep.lambda.assign(theta.begin(), theta.begin() + (kappa - 1));
    const MonotonePath path = *param.decode(theta.subspan(static_cast<std::size_t>(kappa - 1))).path;
    rep.x = path.x();
    rep.gammas = path.gammas();
    rep.value = o.best;
    rep.trace = results[static_cast<std::size_t>(win)].run.trace;
    rep.winning_start = win;
    return rep;
}

std::vector<std::vector<double>> simplex_grid(int kappa, double mesh)
{
    if (kappa < 1) throw MalformedInput("kappa must be positive");
    if (!(mesh > 0.0 && mesh <= 1.0)) throw ValidationError("grid mesh must lie in (0,1]");
    const int m = static_cast<int>(std::lround(1.0 / mesh));
    if (m < kappa) throw ValidationError("grid mesh too coarse for an interior point");
    std::vector<std::vector<double>> out;
    std::vector<int> c(static_cast<std::size_t>(kappa), 1);
    const auto fill = [&](auto&& self, int k, int left) -> void {
        if (k == kappa - 1) {
            c[static_cast<std::size_t>(k)] = left;
            std::vector<double> d;
            for (int v : c) d.push_back(static_cast<double>(v) / m);
            out.push_back(std::move(d));
            return;
        }
        for (int v = 1; v <= left - (kappa - 1 - k); ++v) {
            c[static_cast<std::size_t>(k)] = v;
            self(self, k + 1, left - v);
        }
    };
    fill(fill, 0, m);
    return out;
}

OptimizerReport outer_maximize(int kappa, double beta, int r, const OptimizerConfig& config, std::uint64_t seed)
{
    config.validate();
    const std::uint64_t inner_seed = derive_seed(seed, {0x696e6e72ULL});
    const auto grid = simplex_grid(kappa, config.grid_mesh);
    std::vector<OptimizerReport> reps(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        reps[i] = inner_minimize(StateDistribution::from(grid[i]), r, beta, config, inner_seed);
    });

    std::size_t best = 0;
    int evaluations = 0, rejections = 0;
    std::vector<GridPoint> table;
    for (std::size_t i = 0; i < reps.size(); ++i) {
        table.push_back({grid[i], reps[i].value});
        evaluations += reps[i].evaluations;
        rejections += reps[i].rejections;
        if (reps[i].value > reps[best].value) best = i;
    }
    OptimizerReport top = reps[best];

    if (kappa >= 2 && config.refine_iterations > 0) {
        struct Refine {
            const OptimizerConfig* config;
            int r;
            double beta;
            std::uint64_t seed;
            OptimizerReport* top;
            int evaluations;
            int rejections;
            std::exception_ptr error;
        } ctx{&config, r, beta, inner_seed, &top, 0, 0, nullptr};
        const auto fn = [](const gsl_vector* v, void* params) -> double {
            auto* c = static_cast<Refine*>(params);
            if (c->error) return GSL_POSINF;
            try {
                std::vector<double> u(v->size);
                for (std::size_t i = 0; i < v->size; ++i) u[i] = gsl_vector_get(v, i);
                const StateDistribution d = softmax(u);
                OptimizerReport rep = inner_minimize(d, c->r, c->beta, *c->config, c->seed);
                c->evaluations += rep.evaluations;
                c->rejections += rep.rejections;
                const double value = rep.value;
                if (value > c->top->value ||
                    (rep.value == c->top->value &&
                     std::lexicographical_compare(rep.d.begin(), rep.d.end(), c->top->d.begin(), c->top->d.end())))
                    *c->top = std::move(rep);
                return -value;
            } catch (...) {
                c->error = std::current_exception();
                return GSL_POSINF;
            }
        };
        std::vector<double> u0;
        for (int k = 0; k + 1 < kappa; ++k)
            u0.push_back(std::log(top.d[static_cast<std::size_t>(k)] / top.d.back()));
        nelder_mead(
            ctx, fn, u0, config.grid_mesh * kappa, config.refine_iterations, 1e-6, config.refine_iterations, 0.0,
            [] { return 0.0; },
            [&ctx] { return static_cast<bool>(ctx.error); });
        if (ctx.error) std::rethrow_exception(ctx.error);
        evaluations += ctx.evaluations;
        rejections += ctx.rejections;
    }

    top.grid = std::move(table);
    top.evaluations = evaluations;
    top.rejections = rejections;
    return top;
}

}  // namespace potts
