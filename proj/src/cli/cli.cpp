#include "potts/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "potts/cascade.hpp"
#include "potts/diagnostics.hpp"
#include "potts/errors.hpp"
#include "potts/parallel.hpp"
#include "potts/random.hpp"

namespace potts::cli {

namespace {

using io::Json;

// Top-level keys are global flags; an object value keyed by a subcommand name
// holds that subcommand's flags. Sections never select a subcommand.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override
    {
        std::stringstream text;
        text << input.rdbuf();
        const Json j = io::parse(text.str());
        if (!j.is_object()) throw MalformedInput("config: expected a JSON object");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                for (const auto& [sub_key, sub_value] : value.items()) {
                    if (sub_value.is_object()) throw MalformedInput("config: nested section " + key + "." + sub_key);
                    items.push_back(item({dashed(key)}, sub_key, sub_value));
                }
            } else {
                items.push_back(item({}, key, value));
            }
        }
        return items;
    }

private:
    static std::string dashed(std::string s)
    {
        for (char& c : s)
            if (c == '_') c = '-';
        return s;
    }

    static std::string scalar(const std::string& key, const Json& v)
    {
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number_float()) return io::format_double(v.get<double>());
        if (v.is_number()) return v.dump();
        if (v.is_string()) return v.get<std::string>();
        throw MalformedInput("config: unsupported value for " + key);
    }

    static CLI::ConfigItem item(std::vector<std::string> parents, const std::string& key, const Json& v)
    {
        CLI::ConfigItem it;
        it.parents = std::move(parents);
        it.name = dashed(key);
        if (v.is_array()) {
            for (const Json& e : v) it.inputs.push_back(scalar(key, e));
        } else {
            it.inputs.push_back(scalar(key, v));
        }
        return it;
    }
};

struct Output {
    Json json;
    std::vector<std::string> header;
    std::vector<std::vector<Json>> rows;
};

struct Globals {
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out;
    std::string format = "json";
};

struct DistributionArgs {
    int kappa = 2;
    std::vector<double> d;
    CLI::Option* kappa_opt = nullptr;

    void add(CLI::App* sub)
    {
        kappa_opt = sub->add_option("--kappa", kappa, "Number of states")->check(CLI::PositiveNumber);
        sub->add_option("--d", d, "State proportions (default uniform)");
    }

    StateDistribution get() const
    {
        if (d.empty()) return StateDistribution::uniform(kappa);
        if (kappa_opt->count() > 0 && static_cast<int>(d.size()) != kappa)
            throw MalformedInput("--d has " + std::to_string(d.size()) + " entries but --kappa is " +
                                 std::to_string(kappa));
        return StateDistribution::from(d);
    }
};

struct McArgs {
    CascadeMcSpec mc;

    void add(CLI::App* sub)
    {
        sub->add_option("--atoms", mc.atoms_per_level, "Atoms per cascade level");
        sub->add_option("--reps", mc.reps, "Monte Carlo replicates");
        sub->add_option("--mc-budget", mc.budget, "Monte Carlo work budget");
    }

    CascadeMcSpec with_seed(std::uint64_t seed) const
    {
        CascadeMcSpec s = mc;
        s.seed = seed;
        s.validate();
        return s;
    }
};

struct OptimizerArgs {
    OptimizerConfig config;

    void add(CLI::App* sub)
    {
        sub->add_option("--starts", config.starts, "Multistarts");
        sub->add_option("--max-iterations", config.max_iterations, "Simplex iterations per start");
        sub->add_option("--tolerance", config.tolerance, "Simplex size tolerance");
        sub->add_option("--grid-mesh", config.grid_mesh, "Mesh of the outer d grid");
        sub->add_option("--refine-iterations", config.refine_iterations, "Outer refinement iterations");
        sub->add_flag("--nonneg-gamma", config.nonneg_gamma, "Restrict to entrywise nonnegative Gram matrices");
        sub->add_option("--nodes", config.quadrature.nodes_per_dim, "Quadrature nodes per dimension");
    }
};

std::vector<double> broadcast_lambda(const std::vector<double>& lambda, int kappa)
{
    const auto free = static_cast<std::size_t>(kappa - 1);
    if (lambda.empty()) return std::vector<double>(free, 0.0);
    if (lambda.size() == 1 && free != 1) return std::vector<double>(free, lambda[0]);
    if (lambda.size() != free)
        throw MalformedInput("--lambda needs " + std::to_string(free) + " values or a single value");
    return lambda;
}

std::string read_file(const std::string& name)
{
    std::ifstream in(name);
    if (!in) throw MalformedInput("cannot read " + name);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

MonotonePath path_arg(const std::string& spec, const DistributionArgs& dist)
{
    const bool named = spec.rfind("uniform-r", 0) == 0 || spec.rfind("one-step:", 0) == 0;
    MonotonePath p = resolve_path(spec, named ? dist.get() : StateDistribution::uniform(1));
    if (!named && dist.kappa_opt->count() > 0 && p.kappa() != dist.kappa)
        throw MalformedInput("path file has kappa " + std::to_string(p.kappa()));
    return p;
}

bool within(double diff, double se)
{
    return std::abs(diff) <= 3.0 * se + 1e-12;
}

Json to_json(const PhiAgreement& a)
{
    return Json{{"quadrature", a.quadrature},
                {"cascade", a.cascade},
                {"std_error", a.std_error},
                {"cascade_doubled", a.cascade_doubled},
                {"std_error_doubled", a.std_error_doubled},
                {"truncation_allowance", a.truncation_allowance},
                {"pass", a.pass}};
}

Json check_row(const std::string& name, double estimate, double target, double se, bool pass)
{
    return Json::array({name, estimate, target, se, pass});
}

const std::vector<std::string> kCheckHeader{"check", "estimate", "target", "std_error", "pass"};

std::vector<Json> to_row(const Json& arr)
{
    return std::vector<Json>(arr.begin(), arr.end());
}

// Off-diagonal entries (0,1) set to the geometric mean of the diagonal, with
// the trace unchanged.
TraceMap twisted(TraceMap phi)
{
    return [phi = std::move(phi)](double t) {
        Matrix m = phi(t);
        if (m.rows() >= 2) m(0, 1) = m(1, 0) = std::sqrt(std::max(0.0, m(0, 0) * m(1, 1)));
        return m;
    };
}

double lipschitz_l1(const TraceMap& phi)
{
    constexpr int steps = 1000;
    double best = 0.0;
    Matrix prev = phi(0.0);
    for (int i = 1; i <= steps; ++i) {
        const Matrix cur = phi(static_cast<double>(i) / steps);
        best = std::max(best, entrywise_l1(cur - prev) * steps);
        prev = cur;
    }
    return best;
}

using Action = std::function<Output()>;

void add_eval_parisi(CLI::App& app, std::map<std::string, Action>& actions, const Globals& g)
{
    auto* sub = app.add_subcommand("eval-parisi", "Evaluate the Parisi functional or its recursion value");
    struct Args {
        DistributionArgs dist;
        McArgs mc;
        double beta = 0.0;
        std::vector<double> lambda;
        std::string path = "uniform-r1";
        std::string quantity = "parisi";
        std::string method = "quadrature";
        QuadratureSpec q;
    };
    auto a = std::make_shared<Args>();
    a->dist.add(sub);
    a->mc.add(sub);
    sub->add_option("--beta", a->beta, "Inverse temperature")->required();
    sub->add_option("--lambda", a->lambda, "Multipliers: kappa-1 values or one broadcast value");
    sub->add_option("--path", a->path, "uniform-r<r>, one-step:<x0> or a JSON path file");
    sub->add_option("--quantity", a->quantity, "parisi or phi")->check(CLI::IsMember({"parisi", "phi"}));
    sub->add_option("--method", a->method, "quadrature or cascade-mc")
        ->check(CLI::IsMember({"quadrature", "cascade-mc"}));
    sub->add_option("--nodes", a->q.nodes_per_dim, "Quadrature nodes per dimension");
    sub->add_option("--quad-budget", a->q.budget, "Quadrature node budget");
    actions["eval-parisi"] = [a, &g] {
        const MonotonePath path = path_arg(a->path, a->dist);
        const StateDistribution& d = path.distribution();
        const auto lambda = LagrangeMultipliers::from(path.kappa(), broadcast_lambda(a->lambda, path.kappa()));
        a->q.validate();
        EvalResult r;
        if (a->method == "quadrature") {
            r = a->quantity == "phi" ? eval_phi(lambda, path, a->beta, a->q)
                                     : eval_parisi(lambda, d, path, a->beta, a->q);
        } else {
            r = eval_phi_cascade_mc(lambda, path, a->beta, a->mc.with_seed(g.seed));
            if (a->quantity == "parisi") {
                double shift = 0.0;
                for (int k = 0; k < d.kappa(); ++k) shift += lambda.shift(k) * d[k];
                r.value -= shift + parisi_correction(path, a->beta);
            }
        }
        Output o;
        o.json = io::to_json(r);
        o.header = {"value", "std_error", "method"};
        o.rows = {{r.value, r.std_error, to_string(r.method)}};
        return o;
    };
}

void add_optimize(CLI::App& app, std::map<std::string, Action>& actions, const Globals& g)
{
    auto* sub = app.add_subcommand("optimize", "Minimize over multipliers and paths; maximize over d unless --d");
    struct Args {
        DistributionArgs dist;
        OptimizerArgs opt;
        double beta = 1.0;
        int r = 1;
    };
    auto a = std::make_shared<Args>();
    a->dist.add(sub);
    a->opt.add(sub);
    sub->add_option("--beta", a->beta, "Inverse temperature")->required();
    sub->add_option("--r", a->r, "Path levels")->check(CLI::PositiveNumber);
    actions["optimize"] = [a, &g] {
        const OptimizerReport rep = a->dist.d.empty()
                                        ? outer_maximize(a->dist.kappa, a->beta, a->r, a->opt.config, g.seed)
                                        : inner_minimize(a->dist.get(), a->r, a->beta, a->opt.config, g.seed);
        Output o;
        o.json = io::to_json(rep);
        o.header = {"iteration", "value"};
        for (std::size_t i = 0; i < rep.trace.size(); ++i) o.rows.push_back({i, rep.trace[i]});
        return o;
    };
}

void add_free_energy(CLI::App& app, std::map<std::string, Action>& actions, const Globals& g)
{
    auto* sub = app.add_subcommand("free-energy", "Disorder-averaged finite-N free energy");
    struct Args {
        DistributionArgs dist;
        int n = 4;
        double beta = 1.0;
        int samples = 20;
        double eps = -1.0;
        std::string method = "auto";
        double budget = 2e7;
        SamplerParams sampler;
    };
    auto a = std::make_shared<Args>();
    a->dist.add(sub);
    sub->add_option("--N", a->n, "Sites")->required()->check(CLI::PositiveNumber);
    sub->add_option("--beta", a->beta, "Inverse temperature")->required();
    sub->add_option("--samples", a->samples, "Disorder draws")->check(CLI::PositiveNumber);
    sub->add_option("--eps", a->eps, "Relaxed constraint |count/N - d| <= eps (needs --d)");
    sub->add_option("--method", a->method, "auto, exact or mcmc")->check(CLI::IsMember({"auto", "exact", "mcmc"}));
    sub->add_option("--budget", a->budget, "Enumeration budget in configurations");
    sub->add_option("--temperatures", a->sampler.temperatures, "Tempering ladder size");
    sub->add_option("--sweeps", a->sampler.sweeps, "Sweeps per chain");
    sub->add_option("--burn-in", a->sampler.burn_in, "Burn-in sweeps");
    actions["free-energy"] = [a, &g] {
        std::optional<StateDistribution> d;
        if (!a->dist.d.empty()) d = a->dist.get();
        const int kappa = d ? d->kappa() : a->dist.kappa;
        if (a->eps >= 0.0 && !d) throw ValidationError("--eps needs --d");
        const StateConstraint constraint = !d ? StateConstraint::none()
                                           : a->eps >= 0.0 ? StateConstraint::relaxed(*d, a->eps)
                                                           : StateConstraint::exact(*d);
        auto mcmc = [&] {
            if (!d) throw ValidationError("mcmc needs --d");
            if (a->eps >= 0.0) throw ValidationError("mcmc samples the exact constraint only");
            SamplerParams p = a->sampler;
            p.n_disorder = a->samples;
            p.seed = g.seed;
            return mcmc_free_energy(a->n, kappa, a->beta, *d, p);
        };
        FreeEnergyReport r;
        if (a->method == "mcmc") {
            r = mcmc();
        } else {
            try {
                r = enumerate_free_energy(a->n, kappa, a->beta, a->samples, g.seed, constraint, a->budget);
            } catch (const BudgetExceeded&) {
                if (a->method == "exact" || !d || a->eps >= 0.0) throw;
                r = mcmc();
            }
        }
        Output o;
        o.json = io::to_json(r);
        o.header = {"draw", "value"};
        for (std::size_t i = 0; i < r.samples.size(); ++i) o.rows.push_back({i, r.samples[i]});
        return o;
    };
}

void add_bound_check(CLI::App& app, std::map<std::string, Action>& actions, const Globals& g)
{
    auto* sub = app.add_subcommand("bound-check", "Lower bound, enumeration and optimizer upper bound side by side");
    struct Args {
        BoundCheckParams p;
        OptimizerArgs opt;
        McArgs mc;
    };
    auto a = std::make_shared<Args>();
    a->opt.add(sub);
    a->mc.add(sub);
    sub->add_option("--N", a->p.n, "Sites")->required()->check(CLI::PositiveNumber);
    sub->add_option("--kappa", a->p.kappa, "Number of states")->check(CLI::PositiveNumber);
    sub->add_option("--beta", a->p.beta, "Inverse temperature")->required();
    sub->add_option("--samples", a->p.samples, "Disorder draws")->check(CLI::PositiveNumber);
    sub->add_option("--r", a->p.r, "Path levels")->check(CLI::PositiveNumber);
    sub->add_option("--M", a->p.m, "Sites of the lower-bound functional")->check(CLI::PositiveNumber);
    sub->add_option("--budget", a->p.budget, "Enumeration budget in configurations");
    actions["bound-check"] = [a, &g] {
        BoundCheckParams p = a->p;
        p.optimizer = a->opt.config;
        p.mc = a->mc.mc;
        p.seed = g.seed;
        const BoundCheckReport r = bound_check(p);
        Output o;
        o.json = to_json(r);
        o.header = {"quantity", "value", "std_error"};
        o.rows = {{"lower", r.lower.value, r.lower.std_error},
                  {"middle", r.middle.estimate, r.middle.std_error},
                  {"upper", r.upper.value, 0.0},
                  {"correction", r.correction, 0.0}};
        return o;
    };
}

void add_cascade_verify(CLI::App& app, std::map<std::string, Action>& actions, const Globals& g)
{
    auto* sub = app.add_subcommand("cascade-verify", "Cascade identities: Y field, dual-method phi, coincidences");
    struct Args {
        DistributionArgs dist;
        McArgs mc;
        std::vector<std::string> checks{"y-identity", "phi", "coincidence"};
        std::string path = "uniform-r2";
        double beta = 1.0;
        std::vector<double> lambda;
        int scale_n = 10;
        std::vector<double> x{0.25, 0.4};
        int cascades = 10000;
        QuadratureSpec q;
    };
    auto a = std::make_shared<Args>();
    a->dist.add(sub);
    a->mc.add(sub);
    sub->add_option("--check", a->checks, "Checks to run")
        ->check(CLI::IsMember({"y-identity", "phi", "coincidence"}));
    sub->add_option("--path", a->path, "uniform-r<r>, one-step:<x0> or a JSON path file");
    sub->add_option("--beta", a->beta, "Inverse temperature");
    sub->add_option("--lambda", a->lambda, "Multipliers for the phi check");
    sub->add_option("--scale-n", a->scale_n, "N in the Y identity")->check(CLI::PositiveNumber);
    sub->add_option("--x", a->x, "Cascade parameters for the coincidence check");
    sub->add_option("--cascades", a->cascades, "Cascades for the coincidence check")->check(CLI::PositiveNumber);
    sub->add_option("--nodes", a->q.nodes_per_dim, "Quadrature nodes per dimension");
    actions["cascade-verify"] = [a, &g] {
        auto wants = [&](const char* c) { return std::find(a->checks.begin(), a->checks.end(), c) != a->checks.end(); };
        Output o;
        o.header = kCheckHeader;
        Json checks = Json::object();
        bool pass = true;
        if (wants("y-identity") || wants("phi")) {
            const MonotonePath path = path_arg(a->path, a->dist);
            o.json["path"] = io::to_json(path);
            if (wants("y-identity")) {
                const YIdentityReport y =
                    verify_y_identity(path, a->beta, a->scale_n, a->mc.with_seed(derive_seed(g.seed, {1})));
                checks["y_identity"] = io::to_json(y);
                o.rows.push_back(to_row(check_row("y_identity", y.estimate, y.closed_form, y.std_error, y.pass)));
                pass = pass && y.pass;
            }
            if (wants("phi")) {
                const auto lambda =
                    LagrangeMultipliers::from(path.kappa(), broadcast_lambda(a->lambda, path.kappa()));
                const PhiAgreement ph =
                    compare_phi_methods(lambda, path, a->beta, a->mc.with_seed(derive_seed(g.seed, {2})), a->q);
                checks["phi"] = to_json(ph);
                o.rows.push_back(to_row(check_row("phi", ph.cascade, ph.quadrature, ph.std_error, ph.pass)));
                pass = pass && ph.pass;
            }
        }
        if (wants("coincidence")) {
            CascadeSpec spec{a->x, a->mc.mc.atoms_per_level};
            spec.validate();
            const auto levels = coincidence_masses(spec, a->cascades, derive_seed(g.seed, {3}));
            Json rows = Json::array();
            bool ok = true;
            for (const CoincidenceLevel& c : levels) {
                const bool lp = within(c.estimate - c.expected, c.std_error);
                Json row = io::to_json(c);
                row["pass"] = lp;
                rows.push_back(row);
                o.rows.push_back(to_row(check_row("coincidence_" + std::to_string(c.level), c.estimate, c.expected,
                                                  c.std_error, lp)));
                ok = ok && lp;
            }
            checks["coincidence"] = Json{{"x", a->x}, {"atoms", spec.atoms_per_level}, {"cascades", a->cascades},
                                         {"levels", rows}, {"pass", ok}};
            pass = pass && ok;
        }
        o.json["checks"] = checks;
        o.json["pass"] = pass;
        return o;
    };
}

void add_diag_gg(CLI::App& app, std::map<std::string, Action>& actions, const Globals& g)
{
    auto* sub = app.add_subcommand("diag-gg", "Ghirlanda-Guerra residuals on cascade or perturbed Gibbs arrays");
    struct Args {
        DistributionArgs dist;
        std::string source = "cascade";
        std::vector<double> x{0.3, 0.7};
        std::vector<double> q{0.0, 0.45, 1.0};
        std::string generator = "quadratic";
        int arrays = 3000;
        int replicas = 6;
        std::vector<int> n{2, 3};
        std::vector<std::string> f{"one", "poly"};
        int bootstrap = 200;
        PerturbedGibbsSpec gibbs;
    };
    auto a = std::make_shared<Args>();
    a->dist.add(sub);
    sub->add_option("--source", a->source, "cascade or gibbs")->check(CLI::IsMember({"cascade", "gibbs"}));
    sub->add_option("--x", a->x, "Cascade parameters");
    sub->add_option("--q", a->q, "Trace at each meet depth, q_0..q_r");
    sub->add_option("--generator", a->generator, "linear or quadratic trace map")
        ->check(CLI::IsMember({"linear", "quadratic"}));
    sub->add_option("--arrays", a->arrays, "Cascade arrays")->check(CLI::PositiveNumber);
    sub->add_option("--replicas", a->replicas, "Replicas per array")->check(CLI::PositiveNumber);
    sub->add_option("--n", a->n, "Replica counts n");
    sub->add_option("--f", a->f, "Replica functions")->check(CLI::IsMember({"one", "poly"}));
    sub->add_option("--bootstrap", a->bootstrap, "Bootstrap resamples")->check(CLI::PositiveNumber);
    sub->add_option("--N", a->gibbs.n, "Sites (gibbs source)")->check(CLI::PositiveNumber);
    sub->add_option("--beta", a->gibbs.beta, "Inverse temperature (gibbs source)");
    sub->add_option("--max-j", a->gibbs.max_j, "Largest perturbation index (gibbs source)");
    sub->add_option("--draws", a->gibbs.draws, "Disorder draws (gibbs source)")->check(CLI::PositiveNumber);
    actions["diag-gg"] = [a, &g] {
        const StateDistribution d = a->dist.get();
        std::vector<OverlapArray> arrays;
        if (a->source == "cascade") {
            arrays = cascade_gg_arrays(a->x, a->q, named_generator(a->generator, d), a->arrays, a->replicas,
                                       derive_seed(g.seed, {1}));
        } else {
            PerturbedGibbsSpec s = a->gibbs;
            s.d = d.values();
            s.replicas = a->replicas;
            s.seed = derive_seed(g.seed, {1});
            arrays = perturbed_gibbs_arrays(s);
        }
        GgOptions opt;
        opt.bootstrap = a->bootstrap;
        opt.seed = derive_seed(g.seed, {2});
        const auto specs = standard_gg_specs(d.kappa());
        Output o;
        o.header = {"spec", "f", "n", "signed_residual", "std_error", "pass"};
        Json rows = Json::array();
        bool pass = true;
        for (std::size_t s = 0; s < specs.size(); ++s) {
            for (const std::string& fname : a->f) {
                const ReplicaFunction f = fname == "one" ? ReplicaFunction(replica_one)
                                                         : ReplicaFunction(replica_trace_polynomial);
                for (int n : a->n) {
                    const GgResidual r = gg_residual(arrays, f, n, specs[s], opt);
                    const bool ok = within(r.residual, r.std_error);
                    Json row = io::to_json(r);
                    row["spec"] = s;
                    row["p"] = specs[s].p;
                    row["powers"] = specs[s].n;
                    row["f"] = fname;
                    row["pass"] = ok;
                    rows.push_back(row);
                    o.rows.push_back({s, fname, n, r.signed_residual, r.std_error, ok});
                    pass = pass && ok;
                }
            }
        }
        o.json = Json{{"source", a->source}, {"arrays", arrays.size()}, {"replicas", a->replicas},
                      {"rows", rows}, {"pass", pass}};
        return o;
    };
}

void add_diag_sync(CLI::App& app, std::map<std::string, Action>& actions, const Globals& g)
{
    auto* sub = app.add_subcommand("diag-sync", "Fit the overlap block as a monotone function of its trace");
    struct Args {
        DistributionArgs dist;
        std::string generator = "quadratic";
        int blocks = 10000;
        int replicas = 10;
        double bin_width = 0.02;
        bool violation = false;
    };
    auto a = std::make_shared<Args>();
    a->dist.add(sub);
    sub->add_option("--generator", a->generator, "linear or quadratic trace map")
        ->check(CLI::IsMember({"linear", "quadratic"}));
    sub->add_option("--blocks", a->blocks, "Minimum off-diagonal blocks")->check(CLI::PositiveNumber);
    sub->add_option("--replicas", a->replicas, "Replicas per array")->check(CLI::PositiveNumber);
    sub->add_option("--bin-width", a->bin_width, "Trace bin width")->check(CLI::PositiveNumber);
    sub->add_flag("--violation", a->violation, "Also fit arrays mixing the generator with a twisted copy");
    actions["diag-sync"] = [a, &g] {
        const TraceMap phi = named_generator(a->generator, a->dist.get());
        const auto blocks = static_cast<std::size_t>(a->blocks);
        const SyncFit fit = sync_fit(generator_arrays({phi}, blocks, a->replicas, derive_seed(g.seed, {1})),
                                     a->bin_width);
        const double lipschitz = lipschitz_l1(phi);
        const double distance = sync_distance(fit, phi);
        const double tolerance = 2.0 * a->bin_width * lipschitz;
        Output o;
        o.json = Json{{"generator", a->generator}, {"fit", io::to_json(fit)}, {"distance", distance},
                      {"lipschitz", lipschitz}, {"tolerance", tolerance}, {"recovered", distance <= tolerance}};
        bool pass = distance <= tolerance;
        if (a->violation) {
            const SyncFit bad = sync_fit(
                generator_arrays({phi, twisted(phi)}, blocks, a->replicas, derive_seed(g.seed, {2})), a->bin_width);
            const bool flagged = bad.residual > 10.0 * fit.residual;
            o.json["violation"] = Json{{"residual", bad.residual}, {"flagged", flagged}};
            pass = pass && flagged;
        }
        o.json["pass"] = pass;
        const int kappa = fit.phi_hat.empty() ? 0 : static_cast<int>(fit.phi_hat[0].rows());
        o.header = {"t"};
        for (int i = 0; i < kappa; ++i)
            for (int j = i; j < kappa; ++j) o.header.push_back("phi_" + std::to_string(i) + std::to_string(j));
        o.header.push_back("count");
        for (std::size_t b = 0; b < fit.grid.size(); ++b) {
            std::vector<Json> row{fit.grid[b]};
            for (int i = 0; i < kappa; ++i)
                for (int j = i; j < kappa; ++j) row.push_back(fit.phi_hat[b](i, j));
            row.push_back(fit.bin_counts[b]);
            o.rows.push_back(std::move(row));
        }
        return o;
    };
}

void add_diag_interp(CLI::App& app, std::map<std::string, Action>& actions, const Globals& g)
{
    auto* sub = app.add_subcommand("diag-interp", "Interpolation curve between the model and the cascade fields");
    struct Args {
        DistributionArgs dist;
        int n = 4;
        double beta = 1.0;
        std::string path = "uniform-r2";
        std::vector<double> t{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
        InterpolationParams params;
        int samples = 0;
    };
    auto a = std::make_shared<Args>();
    a->params.atoms_per_level = 40;
    a->dist.add(sub);
    sub->add_option("--N", a->n, "Sites")->check(CLI::PositiveNumber);
    sub->add_option("--beta", a->beta, "Inverse temperature");
    sub->add_option("--path", a->path, "uniform-r<r>, one-step:<x0> or a JSON path file");
    sub->add_option("--t", a->t, "Interpolation grid");
    sub->add_option("--atoms", a->params.atoms_per_level, "Atoms per cascade level");
    sub->add_option("--reps", a->params.reps, "Monte Carlo replicates");
    sub->add_option("--mc-budget", a->params.budget, "Monte Carlo work budget");
    sub->add_option("--samples", a->samples, "Disorder draws for the enumeration comparison (0 skips it)");
    actions["diag-interp"] = [a, &g] {
        const MonotonePath path = path_arg(a->path, a->dist);
        InterpolationParams p = a->params;
        p.seed = derive_seed(g.seed, {1});
        const InterpolationCurve c = interpolation_curve(a->n, path, a->beta, a->t, p);
        bool pass = true;
        for (std::size_t j = 0; j < c.increments.size(); ++j) pass = pass && c.increments[j] <= 3.0 * c.increment_se[j];
        Output o;
        o.json = Json{{"N", a->n}, {"beta", a->beta}, {"path", io::to_json(path)}, {"curve", io::to_json(c)},
                      {"monotone_pass", pass}};
        if (a->samples > 0) {
            const FreeEnergyReport f = enumerate_free_energy(a->n, path.kappa(), a->beta, a->samples,
                                                             derive_seed(g.seed, {2}),
                                                             StateConstraint::exact(path.distribution()));
            const double se = std::hypot(c.endpoint_se, f.std_error);
            const bool ok = within(c.endpoint - f.estimate, se);
            o.json["enumeration"] = io::to_json(f);
            o.json["decomposition"] = Json{{"difference", c.endpoint - f.estimate}, {"se", se}, {"pass", ok}};
            pass = pass && ok;
        }
        o.json["pass"] = pass;
        o.header = {"t", "value", "std_error"};
        for (std::size_t j = 0; j < c.t.size(); ++j) o.rows.push_back({c.t[j], c.values[j], c.std_errors[j]});
        return o;
    };
}

void add_diag_legendre(CLI::App& app, std::map<std::string, Action>& actions, const Globals& g)
{
    auto* sub = app.add_subcommand("diag-legendre", "Gap between the constrained functional and its Legendre dual");
    struct Args {
        DistributionArgs dist;
        McArgs mc;
        double beta = 1.0;
        std::string path = "uniform-r1";
        std::vector<int> m{2, 4, 8};
        double lo = -2.0;
        double hi = 2.0;
        int points = 81;
        QuadratureSpec q;
    };
    auto a = std::make_shared<Args>();
    a->dist.add(sub);
    a->mc.add(sub);
    sub->add_option("--beta", a->beta, "Inverse temperature");
    sub->add_option("--path", a->path, "uniform-r<r>, one-step:<x0> or a JSON path file");
    sub->add_option("--M", a->m, "Site counts");
    sub->add_option("--lambda-lo", a->lo, "Lower end of the multiplier grid");
    sub->add_option("--lambda-hi", a->hi, "Upper end of the multiplier grid");
    sub->add_option("--lambda-points", a->points, "Grid points per free multiplier")->check(CLI::PositiveNumber);
    sub->add_option("--nodes", a->q.nodes_per_dim, "Quadrature nodes per dimension");
    actions["diag-legendre"] = [a, &g] {
        const MonotonePath path = path_arg(a->path, a->dist);
        const auto grid = lambda_grid(path.kappa(), a->lo, a->hi, a->points);
        const LegendreReport r = legendre_gap(path, a->beta, grid, a->m, a->mc.with_seed(g.seed), a->q);
        Output o;
        o.json = io::to_json(r);
        o.json["path"] = io::to_json(path);
        o.json["beta"] = a->beta;
        o.header = {"M", "primal", "primal_se", "dual", "gap", "gap_se"};
        for (const LegendreRow& row : r.rows)
            o.rows.push_back({row.m, row.primal, row.primal_se, row.dual, row.gap, row.gap_se});
        return o;
    };
}

void add_ass_check(CLI::App& app, std::map<std::string, Action>& actions, const Globals& g)
{
    auto* sub = app.add_subcommand("ass-check", "Cavity field covariances against their closed forms");
    struct Args {
        int n = 4;
        int m = 2;
        int kappa = 2;
        int pairs = 2;
        int draws = 10000;
    };
    auto a = std::make_shared<Args>();
    sub->add_option("--N", a->n, "Sites")->check(CLI::PositiveNumber);
    sub->add_option("--M", a->m, "Cavity sites")->check(CLI::PositiveNumber);
    sub->add_option("--kappa", a->kappa, "Number of states")->check(CLI::PositiveNumber);
    sub->add_option("--pairs", a->pairs, "Configuration pairs")->check(CLI::PositiveNumber);
    sub->add_option("--draws", a->draws, "Disorder draws")->check(CLI::PositiveNumber);
    actions["ass-check"] = [a, &g] {
        const AssReport r = ass_covariance_check(a->n, a->m, a->kappa, a->pairs, a->draws, g.seed);
        Output o;
        o.json = io::to_json(r);
        o.header = kCheckHeader;
        for (const AssCheck& c : r.checks)
            o.rows.push_back(to_row(check_row(c.name, c.estimate, c.target, c.std_error, c.pass)));
        return o;
    };
}

}  // namespace

MonotonePath resolve_path(const std::string& spec, const StateDistribution& d)
{
    if (spec.rfind("uniform-r", 0) == 0) {
        std::size_t used = 0;
        const std::string tail = spec.substr(9);
        const int r = std::stoi(tail, &used);
        if (used != tail.size() || r < 1) throw MalformedInput("bad path name " + spec);
        std::vector<double> x;
        std::vector<Matrix> gammas;
        for (int p = 0; p <= r; ++p) {
            x.push_back(static_cast<double>(p + 1) / (r + 1));
            gammas.push_back(d.diag() * (static_cast<double>(p) / r));
        }
        x.back() = 1.0;
        gammas.back() = d.diag();
        return MonotonePath::make(d, std::move(x), std::move(gammas));
    }
    if (spec.rfind("one-step:", 0) == 0) {
        std::size_t used = 0;
        const std::string tail = spec.substr(9);
        const double x0 = std::stod(tail, &used);
        if (used != tail.size()) throw MalformedInput("bad path name " + spec);
        return MonotonePath::one_step(d, x0);
    }
    return io::path_from_json(io::parse(read_file(spec)));
}

BoundCheckReport bound_check(const BoundCheckParams& p)
{
    BoundCheckReport r;
    r.params = p;
    r.correction = p.kappa * std::log(p.n + 1.0) / p.n;
    r.middle = enumerate_free_energy(p.n, p.kappa, p.beta, p.samples, derive_seed(p.seed, {1}),
                                     StateConstraint::none(), p.budget);
    r.upper = outer_maximize(p.kappa, p.beta, p.r, p.optimizer, derive_seed(p.seed, {2}));
    const StateDistribution delta = round_distribution(StateDistribution::from(r.upper.d), p.m);
    r.delta = delta.values();
    if (r.delta != r.upper.d) r.delta_optimum = inner_minimize(delta, p.r, p.beta, p.optimizer, derive_seed(p.seed, {4}));
    CascadeMcSpec mc = p.mc;
    mc.seed = derive_seed(p.seed, {3});
    r.lower = eval_lower_bound(p.m, delta, r.delta_optimum ? r.delta_optimum->path() : r.upper.path(), p.beta, mc);
    const double se = std::hypot(r.lower.std_error, r.middle.std_error);
    r.lower_pass = r.lower.value - 3.0 * se <= r.middle.estimate;
    r.upper_pass = r.middle.estimate <= r.upper.value + r.correction + 3.0 * r.middle.std_error;
    r.pass = r.lower_pass && r.upper_pass;
    return r;
}

io::Json to_json(const BoundCheckReport& r)
{
    return Json{{"N", r.params.n},
                {"kappa", r.params.kappa},
                {"beta", r.params.beta},
                {"M", r.params.m},
                {"r", r.params.r},
                {"samples", r.params.samples},
                {"lower", r.lower.value},
                {"lower_se", r.lower.std_error},
                {"middle", r.middle.estimate},
                {"middle_se", r.middle.std_error},
                {"upper", r.upper.value},
                {"correction", r.correction},
                {"delta", r.delta},
                {"lower_pass", r.lower_pass},
                {"upper_pass", r.upper_pass},
                {"pass", r.pass},
                {"details",
                 {{"lower", io::to_json(r.lower)},
                  {"middle", io::to_json(r.middle)},
                  {"upper", io::to_json(r.upper)},
                  {"delta_optimum", r.delta_optimum ? io::to_json(*r.delta_optimum) : Json(nullptr)}}}};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Potts spin glass free energies and diagnostics", "potts"};
    app.fallthrough();
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON configuration; command-line flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);

    Globals g;
    app.add_option("--seed", g.seed, "Master seed");
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Write the report to this file instead of stdout");
    app.add_option("--format", g.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    std::map<std::string, Action> actions;
    add_eval_parisi(app, actions, g);
    add_optimize(app, actions, g);
    add_free_energy(app, actions, g);
    add_bound_check(app, actions, g);
    add_cascade_verify(app, actions, g);
    add_diag_gg(app, actions, g);
    add_diag_sync(app, actions, g);
    add_diag_interp(app, actions, g);
    add_diag_legendre(app, actions, g);
    add_ass_check(app, actions, g);

    CLI::App* selected = nullptr;
    try {
        app.parse(argc, argv);
        selected = app.get_subcommands().front();
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ConfigError& e) {
        std::string what = e.what();
        const std::string ini = "INI was not able to parse ";
        if (what.rfind(ini, 0) == 0) what = "unknown configuration key " + what.substr(ini.size());
        err << "error: " << what << "\n\n" << app.help();
        return 2;
    } catch (const CLI::ParseError& e) {
        const CLI::App* active = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << "error: " << e.what() << "\n\n" << active->help();
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        const int previous = thread_count();
        set_thread_count(g.threads);
        Output o;
        try {
            o = actions.at(selected->get_name())();
        } catch (...) {
            set_thread_count(previous);
            throw;
        }
        set_thread_count(previous);
        const std::string text = g.format == "json" ? io::dump(o.json) + "\n" : io::csv(o.header, o.rows);
        if (g.out.empty()) {
            out << text;
        } else {
            std::ofstream file(g.out);
            if (!file || !(file << text)) {
                err << "error: cannot write " << g.out << "\n";
                return 1;
            }
        }
        return 0;
    } catch (const BudgetExceeded& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace potts::cli
