#include "potts/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "potts/errors.hpp"
#include "potts/parallel.hpp"
#include "potts/random.hpp"
#include "potts/stats.hpp"

namespace potts {

namespace {

void check_labels(const Configuration& sigma, int kappa)
{
    for (int s : sigma) {
        if (s < 0 || s >= kappa) throw MalformedInput("configuration label out of range");
    }
}

void check_model(int n, int kappa, double beta)
{
    if (n < 1) throw ValidationError("N must be at least 1");
    if (kappa < 1) throw ValidationError("kappa must be at least 1");
    if (!std::isfinite(beta)) throw MalformedInput("beta must be finite");
}

// Symmetrized couplings G = g + gᵀ with zero diagonal, and Σ_i g_ii.
struct Couplings {
    Matrix sym;
    double self = 0.0;
    double scale = 1.0;

    explicit Couplings(const DisorderInstance& g)
    {
        const Matrix& m = g.couplings();
        sym = m + m.transpose();
        sym.diagonal().setZero();
        self = m.diagonal().sum();
        scale = 1.0 / std::sqrt(static_cast<double>(m.rows()));
    }
};

// Local fields h_i(k) = Σ_{j≠i} G_ij 1{σ_j = k} for a configuration that
// changes one site at a time.
class LocalFields {
public:
    LocalFields(const Couplings& c, int kappa, const Configuration& sigma)
        : c_(&c), kappa_(kappa), sigma_(sigma), h_(sigma.size() * static_cast<std::size_t>(kappa), 0.0)
    {
        const int n = static_cast<int>(sigma.size());
        double pairs = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                h_[idx(i, sigma_[static_cast<std::size_t>(j)])] += c.sym(i, j);
                if (j > i && sigma_[static_cast<std::size_t>(i)] == sigma_[static_cast<std::size_t>(j)]) pairs += c.sym(i, j);
            }
        }
        energy_ = (c.self + pairs) * c.scale;
    }

    const Configuration& sigma() const { return sigma_; }
    double energy() const { return energy_; }
    double field(int i, int k) const { return h_[idx(i, k)]; }

    // Energy change of moving site i to state b.
    double delta(int i, int b) const
    {
        const int a = sigma_[static_cast<std::size_t>(i)];
        return (field(i, b) - field(i, a)) * c_->scale;
    }

    // Energy change of exchanging the states of sites i and j.
    double swap_delta(int i, int j) const
    {
        const int a = sigma_[static_cast<std::size_t>(i)];
        const int b = sigma_[static_cast<std::size_t>(j)];
        if (a == b) return 0.0;
        return (field(i, b) - field(i, a) + field(j, a) - field(j, b) - 2.0 * c_->sym(i, j)) * c_->scale;
    }

    void move(int i, int b, double de)
    {
        const int a = sigma_[static_cast<std::size_t>(i)];
        if (a == b) return;
        const int n = static_cast<int>(sigma_.size());
        for (int l = 0; l < n; ++l) {
            if (l == i) continue;
            const double gli = c_->sym(l, i);
            h_[idx(l, a)] -= gli;
            h_[idx(l, b)] += gli;
        }
        sigma_[static_cast<std::size_t>(i)] = b;
        energy_ += de;
    }

    void swap(int i, int j, double de)
    {
        const int a = sigma_[static_cast<std::size_t>(i)];
        const int b = sigma_[static_cast<std::size_t>(j)];
        move(i, b, 0.0);
        move(j, a, 0.0);
        energy_ += de;
    }

private:
    std::size_t idx(int i, int k) const { return static_cast<std::size_t>(i) * static_cast<std::size_t>(kappa_) + static_cast<std::size_t>(k); }

    const Couplings* c_;
    int kappa_;
    Configuration sigma_;
    std::vector<double> h_;
    double energy_ = 0.0;
};

double enumeration_size(int n, int kappa)
{
    return std::pow(static_cast<double>(kappa), n);
}

Configuration arrange(const std::vector<int>& counts)
{
    Configuration sigma;
    for (std::size_t k = 0; k < counts.size(); ++k) sigma.insert(sigma.end(), static_cast<std::size_t>(counts[k]), static_cast<int>(k));
    return sigma;
}

Configuration random_arrangement(const std::vector<int>& counts, Rng& rng)
{
    Configuration sigma = arrange(counts);
    for (std::size_t i = sigma.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng() % i);
        std::swap(sigma[i - 1], sigma[j]);
    }
    return sigma;
}

std::vector<double> ladder(double beta, int temperatures)
{
    std::vector<double> b(static_cast<std::size_t>(temperatures));
    for (int t = 0; t < temperatures; ++t) b[static_cast<std::size_t>(t)] = beta * t / (temperatures - 1);
    return b;
}

// Pair-swap Metropolis sweep: N proposals of exchanging two uniformly chosen
// sites.
void sweep(LocalFields& chain, double beta, Rng& rng, long& accepted)
{
    const int n = static_cast<int>(chain.sigma().size());
    if (n < 2) return;
    for (int s = 0; s < n; ++s) {
        const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
        const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
        if (chain.sigma()[static_cast<std::size_t>(i)] == chain.sigma()[static_cast<std::size_t>(j)]) continue;
        const double de = chain.swap_delta(i, j);
        if (beta * de >= 0.0 || uniform01(rng) < std::exp(beta * de)) {
            chain.swap(i, j, de);
            ++accepted;
        }
    }
}

// Replica-exchange between adjacent ladder points, alternating even and odd
// pairs.
void exchange(std::vector<LocalFields>& chains, const std::vector<double>& betas, int round, Rng& rng,
              std::vector<long>& tried, std::vector<long>& accepted)
{
    for (std::size_t t = static_cast<std::size_t>(round % 2); t + 1 < chains.size(); t += 2) {
        const double a = (betas[t + 1] - betas[t]) * (chains[t].energy() - chains[t + 1].energy());
        ++tried[t];
        if (a >= 0.0 || uniform01(rng) < std::exp(a)) {
            std::swap(chains[t], chains[t + 1]);
            ++accepted[t];
        }
    }
}

}  // namespace

DisorderInstance DisorderInstance::generate(int n, std::uint64_t seed)
{
    if (n < 1) throw ValidationError("N must be at least 1");
    DisorderInstance d;
    d.seed_ = seed;
    d.g_.resize(n, n);
    Rng rng = make_rng(seed);
    Normal normal;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) d.g_(i, j) = normal(rng);
    }
    return d;
}

DisorderInstance DisorderInstance::from_couplings(Matrix g, std::uint64_t seed)
{
    if (g.rows() != g.cols() || g.rows() < 1) throw MalformedInput("couplings must be a nonempty square matrix");
    if (!g.allFinite()) throw MalformedInput("couplings must be finite");
    DisorderInstance d;
    d.g_ = std::move(g);
    d.seed_ = seed;
    return d;
}

std::uint64_t disorder_seed(std::uint64_t seed, std::size_t draw)
{
    return derive_seed(seed, {0x6469736fULL, draw});
}

StateConstraint StateConstraint::none()
{
    return {};
}

StateConstraint StateConstraint::exact(const StateDistribution& d)
{
    StateConstraint c;
    c.kind_ = Kind::exact;
    c.d_ = d;
    return c;
}

StateConstraint StateConstraint::relaxed(const StateDistribution& d, double eps)
{
    if (!(eps >= 0.0)) throw ValidationError("relaxation eps must be nonnegative");
    StateConstraint c;
    c.kind_ = Kind::relaxed;
    c.d_ = d;
    c.eps_ = eps;
    return c;
}

bool StateConstraint::admits(const std::vector<int>& counts, int n) const
{
    if (kind_ == Kind::none) return true;
    const double tol = kind_ == Kind::exact ? 1e-9 : eps_ + 1e-12;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (std::abs(static_cast<double>(counts[k]) / n - (*d_)[static_cast<int>(k)]) > tol) return false;
    }
    return true;
}

double hamiltonian(const DisorderInstance& g, const Configuration& sigma)
{
    const int n = g.size();
    if (static_cast<int>(sigma.size()) != n) throw MalformedInput("configuration length does not match N");
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (sigma[static_cast<std::size_t>(i)] == sigma[static_cast<std::size_t>(j)]) s += g(i, j);
        }
    }
    return s / std::sqrt(static_cast<double>(n));
}

Matrix overlap(const Configuration& a, const Configuration& b, int kappa)
{
    if (a.size() != b.size()) throw MalformedInput("overlap: configuration lengths differ");
    if (a.empty()) throw MalformedInput("overlap: empty configurations");
    check_labels(a, kappa);
    check_labels(b, kappa);
    Matrix r = Matrix::Zero(kappa, kappa);
    for (std::size_t i = 0; i < a.size(); ++i) r(a[i], b[i]) += 1.0;
    return r / static_cast<double>(a.size());
}

OverlapArray overlap_array(const std::vector<Configuration>& replicas, int kappa)
{
    OverlapArray out;
    out.n = static_cast<int>(replicas.size());
    out.kappa = kappa;
    out.traces.resize(replicas.size() * replicas.size());
    out.blocks.resize(replicas.size() * replicas.size());
    for (int l = 0; l < out.n; ++l) {
        for (int m = 0; m < out.n; ++m) {
            const auto at = static_cast<std::size_t>(l * out.n + m);
            out.blocks[at] = overlap(replicas[static_cast<std::size_t>(l)], replicas[static_cast<std::size_t>(m)], kappa);
            out.traces[at] = out.blocks[at].trace();
        }
    }
    return out;
}

std::vector<double> exact_log_partition(const DisorderInstance& g, int kappa, std::span<const double> betas,
                                        const StateConstraint& constraint, double budget)
{
    const int n = g.size();
    if (kappa < 1) throw ValidationError("kappa must be at least 1");
    const double size = enumeration_size(n, kappa);
    if (size > budget) throw BudgetExceeded("enumeration of kappa^N configurations", size, budget);
    if (constraint.distribution() && constraint.distribution()->kappa() != kappa) {
        throw MalformedInput("constraint distribution has the wrong number of states");
    }
    if (constraint.kind() == StateConstraint::Kind::exact) (void)constraint.distribution()->counts(n);

    const Couplings c(g);
    Configuration sigma(static_cast<std::size_t>(n), 0);
    LocalFields chain(c, kappa, sigma);
    std::vector<int> counts(static_cast<std::size_t>(kappa), 0);
    counts[0] = n;
    std::vector<int> direction(static_cast<std::size_t>(n), 1);
    std::vector<LogSumExp> lse(betas.size());

    auto visit = [&] {
        if (!constraint.admits(counts, n)) return;
        for (std::size_t b = 0; b < betas.size(); ++b) lse[b].add(betas[b] * chain.energy());
    };
    visit();
    // Reflected κ-ary Gray code: the lowest digit that can still move in its
    // direction moves; lower digits sitting at a boundary reverse.
    for (;;) {
        int i = 0;
        for (; i < n; ++i) {
            const int next = chain.sigma()[static_cast<std::size_t>(i)] + direction[static_cast<std::size_t>(i)];
            if (next >= 0 && next < kappa) break;
            direction[static_cast<std::size_t>(i)] = -direction[static_cast<std::size_t>(i)];
        }
        if (i == n) break;
        const int a = chain.sigma()[static_cast<std::size_t>(i)];
        const int b = a + direction[static_cast<std::size_t>(i)];
        chain.move(i, b, chain.delta(i, b));
        --counts[static_cast<std::size_t>(a)];
        ++counts[static_cast<std::size_t>(b)];
        visit();
    }

    std::vector<double> out(betas.size());
    for (std::size_t b = 0; b < betas.size(); ++b) {
        if (lse[b].empty()) throw ValidationError("constraint admits no configuration");
        out[b] = lse[b].value();
    }
    return out;
}

std::vector<FreeEnergyReport> enumerate_free_energy_curve(int n, int kappa, const std::vector<double>& betas,
                                                          int n_disorder, std::uint64_t seed,
                                                          const StateConstraint& constraint, double budget)
{
    for (double b : betas) check_model(n, kappa, b);
    if (n_disorder < 1) throw ValidationError("at least one disorder draw is required");
    const double size = enumeration_size(n, kappa);
    if (size > budget) throw BudgetExceeded("enumeration of kappa^N configurations", size, budget);

    std::vector<std::vector<double>> per_draw(static_cast<std::size_t>(n_disorder));
    parallel_for(per_draw.size(), [&](std::size_t i) {
        const DisorderInstance g = DisorderInstance::generate(n, disorder_seed(seed, i));
        per_draw[i] = exact_log_partition(g, kappa, betas, constraint, budget);
    });

    std::vector<FreeEnergyReport> out;
    for (std::size_t b = 0; b < betas.size(); ++b) {
        FreeEnergyReport r;
        r.n = n;
        r.kappa = kappa;
        r.beta = betas[b];
        if (constraint.distribution()) r.d = constraint.distribution()->values();
        r.method = "enumeration";
        r.samples.resize(per_draw.size());
        for (std::size_t i = 0; i < per_draw.size(); ++i) r.samples[i] = per_draw[i][b] / n;
        if (betas[b] == 0.0) {
            r.estimate = r.samples[0];
            r.std_error = 0.0;
        } else {
            const Estimate e = mean_se(r.samples);
            r.estimate = e.value;
            r.std_error = e.std_error;
        }
        r.diagnostics["disorder_draws"] = n_disorder;
        r.diagnostics["configurations"] = size;
        if (constraint.kind() == StateConstraint::Kind::relaxed) r.diagnostics["eps"] = constraint.eps();
        out.push_back(std::move(r));
    }
    return out;
}

FreeEnergyReport enumerate_free_energy(int n, int kappa, double beta, int n_disorder, std::uint64_t seed,
                                       const StateConstraint& constraint, double budget)
{
    return enumerate_free_energy_curve(n, kappa, {beta}, n_disorder, seed, constraint, budget).front();
}

void SamplerParams::validate() const
{
    if (temperatures < 3 || temperatures % 2 == 0) throw ValidationError("temperature ladder needs an odd count >= 3");
    if (sweeps < 1) throw ValidationError("sweeps must be positive");
    if (burn_in < 0) throw ValidationError("burn-in must be nonnegative");
    if (n_disorder < 1) throw ValidationError("at least one disorder draw is required");
}

FreeEnergyReport mcmc_free_energy(int n, int kappa, double beta, const StateDistribution& d,
                                  const SamplerParams& params)
{
    check_model(n, kappa, beta);
    params.validate();
    if (d.kappa() != kappa) throw MalformedInput("distribution has the wrong number of states");
    const std::vector<int> counts = d.counts(n);
    const double entropy = log_multinomial(counts) / n;

    FreeEnergyReport r;
    r.n = n;
    r.kappa = kappa;
    r.beta = beta;
    r.d = d.values();
    r.method = "mcmc";
    if (beta == 0.0) {
        r.method = "exact-entropy";
        r.estimate = entropy;
        r.samples.assign(static_cast<std::size_t>(params.n_disorder), entropy);
        r.diagnostics["entropy"] = entropy;
        r.diagnostics["grid_error"] = 0.0;
        r.diagnostics["mc_error"] = 0.0;
        return r;
    }

    const std::vector<double> betas = ladder(beta, params.temperatures);
    const auto temps = betas.size();
    const auto draws = static_cast<std::size_t>(params.n_disorder);

    // Per draw: mean energy along the ladder, swap statistics, Metropolis
    // acceptance.
    std::vector<std::vector<double>> mean_energy(draws, std::vector<double>(temps, 0.0));
    std::vector<std::vector<long>> swap_tried(draws, std::vector<long>(temps - 1, 0));
    std::vector<std::vector<long>> swap_accepted(draws, std::vector<long>(temps - 1, 0));
    std::vector<double> move_rate(draws, 0.0);

    parallel_for(draws, [&](std::size_t i) {
        const DisorderInstance g = DisorderInstance::generate(n, disorder_seed(params.seed, i));
        const Couplings c(g);
        Rng rng = make_rng(params.seed, {0x6d636d63ULL, i});
        std::vector<LocalFields> chains;
        chains.reserve(temps);
        for (std::size_t t = 0; t < temps; ++t) chains.emplace_back(c, kappa, random_arrangement(counts, rng));
        long accepted = 0;
        for (int s = 0; s < params.burn_in + params.sweeps; ++s) {
            for (std::size_t t = 0; t < temps; ++t) sweep(chains[t], betas[t], rng, accepted);
            exchange(chains, betas, s, rng, swap_tried[i], swap_accepted[i]);
            if (s < params.burn_in) continue;
            for (std::size_t t = 0; t < temps; ++t) mean_energy[i][t] += chains[t].energy();
        }
        for (double& e : mean_energy[i]) e /= params.sweeps;
        move_rate[i] = static_cast<double>(accepted) /
                       (static_cast<double>(params.burn_in + params.sweeps) * static_cast<double>(temps) * n);
    });

    // Simpson on the full ladder, trapezoid on every other point; their
    // difference is the grid error.
    const double h = betas[1] - betas[0];
    std::vector<double> simpson(draws), coarse(draws);
    std::vector<double> cumulative(temps, 0.0);
    for (std::size_t i = 0; i < draws; ++i) {
        const std::vector<double>& e = mean_energy[i];
        double s = 0.0, tc = 0.0;
        for (std::size_t t = 0; t + 2 < temps; t += 2) {
            s += h / 3.0 * (e[t] + 4.0 * e[t + 1] + e[t + 2]);
            tc += h * (e[t] + e[t + 2]);
        }
        simpson[i] = entropy + s / n;
        coarse[i] = entropy + tc / n;
        double run = 0.0;
        for (std::size_t t = 1; t < temps; ++t) {
            run += 0.5 * h * (e[t - 1] + e[t]);
            cumulative[t] += (entropy + run / n) / static_cast<double>(draws);
        }
    }
    cumulative[0] = entropy;

    const Estimate fine = mean_se(simpson);
    const Estimate rough = mean_se(coarse);
    const double grid_error = std::abs(fine.value - rough.value);
    r.estimate = fine.value;
    r.std_error = std::sqrt(fine.std_error * fine.std_error + grid_error * grid_error);
    r.samples = simpson;
    r.ladder = betas;
    r.ladder_values = cumulative;

    double min_swap = 1.0;
    std::size_t worst = 0;
    for (std::size_t t = 0; t + 1 < temps; ++t) {
        long tried = 0, acc = 0;
        for (std::size_t i = 0; i < draws; ++i) {
            tried += swap_tried[i][t];
            acc += swap_accepted[i][t];
        }
        const double rate = tried > 0 ? static_cast<double>(acc) / static_cast<double>(tried) : 1.0;
        if (rate < min_swap) {
            min_swap = rate;
            worst = t;
        }
    }
    r.diagnostics["entropy"] = entropy;
    r.diagnostics["grid_error"] = grid_error;
    r.diagnostics["mc_error"] = fine.std_error;
    r.diagnostics["min_swap_acceptance"] = min_swap;
    r.diagnostics["move_acceptance"] = std::accumulate(move_rate.begin(), move_rate.end(), 0.0) / static_cast<double>(draws);
    r.diagnostics["temperatures"] = params.temperatures;
    r.diagnostics["sweeps"] = params.sweeps;
    r.diagnostics["disorder_draws"] = params.n_disorder;
    if (min_swap < 0.01) {
        std::ostringstream w;
        w << "swap acceptance " << min_swap << " below 1% between ladder points " << worst << " and " << worst + 1
          << "; chains may be nonergodic";
        r.warnings.push_back(w.str());
    }
    return r;
}

ReplicaSample gibbs_replicas(const DisorderInstance& g, double beta, const StateDistribution& d, int n_replicas,
                             ReplicaMethod method, std::uint64_t seed, const SamplerParams& chain)
{
    const int n = g.size();
    const int kappa = d.kappa();
    check_model(n, kappa, beta);
    if (n_replicas < 1) throw ValidationError("at least one replica is required");
    const std::vector<int> counts = d.counts(n);
    const Couplings c(g);
    ReplicaSample out;
    out.replicas.resize(static_cast<std::size_t>(n_replicas));

    if (method == ReplicaMethod::exact) {
        const ConfigurationSet set = ConfigurationSet::with_counts(counts);
        constexpr double budget = 2e7;
        if (set.size() > budget) throw BudgetExceeded("exact replica sampling over Sigma(d)", set.size(), budget);
        const std::vector<Configuration> configs = set.enumerate();
        std::vector<double> logw(configs.size());
        for (std::size_t a = 0; a < configs.size(); ++a) logw[a] = beta * hamiltonian(g, configs[a]);
        const double z = log_sum_exp(logw);
        std::vector<double> cdf(configs.size());
        double acc = 0.0;
        for (std::size_t a = 0; a < configs.size(); ++a) {
            acc += std::exp(logw[a] - z);
            cdf[a] = acc;
        }
        Rng rng = make_rng(seed, {0x65786163ULL});
        for (auto& rep : out.replicas) {
            const double u = uniform01(rng) * acc;
            const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            rep = configs[std::min(static_cast<std::size_t>(it - cdf.begin()), configs.size() - 1)];
        }
    } else {
        chain.validate();
        const std::vector<double> betas = ladder(beta, chain.temperatures);
        parallel_for(out.replicas.size(), [&](std::size_t l) {
            Rng rng = make_rng(seed, {0x72706c63ULL, l});
            std::vector<LocalFields> chains;
            chains.reserve(betas.size());
            for (std::size_t t = 0; t < betas.size(); ++t) chains.emplace_back(c, kappa, random_arrangement(counts, rng));
            std::vector<long> tried(betas.size() - 1), accepted(betas.size() - 1);
            long moves = 0;
            for (int s = 0; s < chain.burn_in + chain.sweeps; ++s) {
                for (std::size_t t = 0; t < betas.size(); ++t) sweep(chains[t], betas[t], rng, moves);
                exchange(chains, betas, s, rng, tried, accepted);
            }
            out.replicas[l] = chains.back().sigma();
        });
    }
    out.overlaps = overlap_array(out.replicas, kappa);
    return out;
}

void PerturbationSpec::validate(int kappa) const
{
    if (p < 1) throw ValidationError("perturbation p must be at least 1");
    if (n.empty()) throw ValidationError("perturbation needs m >= 1");
    if (lambdas.size() != n.size()) throw MalformedInput("perturbation: n and lambda lists differ in length");
    for (int nj : n) {
        if (nj < 1) throw ValidationError("perturbation n_j must be at least 1");
    }
    for (const Vector& l : lambdas) {
        if (l.size() != kappa) throw MalformedInput("perturbation lambda has the wrong length");
        if (!l.allFinite() || l.cwiseAbs().maxCoeff() > 1.0) throw ValidationError("perturbation lambda outside [-1,1]");
    }
}

std::vector<double> quadratic_forms(const Matrix& r, int p, const std::vector<Vector>& lambdas)
{
    if (r.rows() != r.cols()) throw MalformedInput("overlap block must be square");
    const Matrix rp = r.array().pow(p).matrix();
    std::vector<double> q;
    q.reserve(lambdas.size());
    for (const Vector& l : lambdas) {
        if (l.size() != r.rows()) throw MalformedInput("lambda has the wrong length");
        q.push_back(l.dot(rp * l));
    }
    return q;
}

double perturbation_covariance(const PerturbationSpec& theta, const Matrix& r)
{
    theta.validate(static_cast<int>(r.rows()));
    const std::vector<double> q = quadratic_forms(r, theta.p, theta.lambdas);
    double c = 1.0;
    for (std::size_t j = 0; j < q.size(); ++j) c *= std::pow(q[j], theta.n[j]);
    return c;
}

LambdaCatalogue LambdaCatalogue::standard(int kappa)
{
    LambdaCatalogue c;
    for (int k = 0; k < kappa; ++k) c.entries.push_back(Vector::Unit(kappa, k));
    c.entries.push_back(Vector::Ones(kappa));
    return c;
}

int LambdaCatalogue::index_of(const Vector& lambda) const
{
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].size() == lambda.size() && entries[i] == lambda) return static_cast<int>(i) + 1;
    }
    throw MalformedInput("lambda is not in the catalogue");
}

int theta_index(const PerturbationSpec& theta, const LambdaCatalogue& catalogue)
{
    int j = theta.p + 4 * theta.m();
    for (int nj : theta.n) j += nj;
    for (const Vector& l : theta.lambdas) j += catalogue.index_of(l);
    return j;
}

std::vector<PerturbationSpec> enumerate_thetas(const LambdaCatalogue& catalogue, int max_j)
{
    struct Item {
        int j;
        PerturbationSpec spec;
        std::vector<int> lambda_idx;
    };
    std::vector<Item> items;
    const int options = static_cast<int>(catalogue.entries.size());
    // Remaining budget after p and 4m is shared by Σ n_j + Σ j0 ≥ 2m.
    for (int m = 1; 1 + 4 * m + 2 * m <= max_j; ++m) {
        for (int p = 1; p + 6 * m <= max_j; ++p) {
            std::vector<int> n(static_cast<std::size_t>(m), 1), idx(static_cast<std::size_t>(m), 1);
            const auto fill = [&](auto&& self, int pos, int used) -> void {
                if (pos == m) {
                    Item it{p + 4 * m + used, PerturbationSpec{p, n, {}}, idx};
                    for (int x : idx) it.spec.lambdas.push_back(catalogue.entries[static_cast<std::size_t>(x - 1)]);
                    items.push_back(std::move(it));
                    return;
                }
                const int left = m - pos - 1;
                for (int a = 1; p + 4 * m + used + a + 1 + 2 * left <= max_j; ++a) {
                    for (int b = 1; b <= options && p + 4 * m + used + a + b + 2 * left <= max_j; ++b) {
                        n[static_cast<std::size_t>(pos)] = a;
                        idx[static_cast<std::size_t>(pos)] = b;
                        self(self, pos + 1, used + a + b);
                    }
                }
            };
            fill(fill, 0, 0);
        }
    }
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        if (a.j != b.j) return a.j < b.j;
        if (a.spec.p != b.spec.p) return a.spec.p < b.spec.p;
        if (a.spec.m() != b.spec.m()) return a.spec.m() < b.spec.m();
        if (a.spec.n != b.spec.n) return a.spec.n < b.spec.n;
        return a.lambda_idx < b.lambda_idx;
    });
    std::vector<PerturbationSpec> out;
    for (Item& it : items) out.push_back(std::move(it.spec));
    return out;
}

PerturbationField::PerturbationField(std::vector<Configuration> configs, int kappa, std::vector<WeightedTheta> thetas,
                                     std::uint64_t seed, std::size_t max_configs)
    : configs_(std::move(configs))
{
    if (configs_.size() > max_configs) {
        throw BudgetExceeded("perturbation covariance factorization", static_cast<double>(configs_.size()),
                             static_cast<double>(max_configs));
    }
    for (const Configuration& c : configs_) check_labels(c, kappa);
    const auto size = configs_.size();
    std::vector<Matrix> overlaps(size * size);
    for (std::size_t a = 0; a < size; ++a) {
        for (std::size_t b = 0; b < size; ++b) overlaps[a * size + b] = overlap(configs_[a], configs_[b], kappa);
    }
    components_.assign(thetas.size(), std::vector<double>(size, 0.0));
    total_.assign(size, 0.0);
    for (std::size_t t = 0; t < thetas.size(); ++t) {
        const WeightedTheta& w = thetas[t];
        if (w.u < 1.0 || w.u > 2.0) throw ValidationError("perturbation weight u must lie in [1,2]");
        Matrix k(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
        for (std::size_t a = 0; a < size; ++a) {
            for (std::size_t b = 0; b < size; ++b) {
                k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = perturbation_covariance(w.spec, overlaps[a * size + b]);
            }
        }
        const Matrix f = psd_factor(0.5 * (k + k.transpose()));
        Rng rng = make_rng(seed, {0x70657274ULL, t});
        Normal normal;
        Vector xi(f.cols());
        for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = normal(rng);
        const Vector h = f * xi;
        const double weight = std::ldexp(w.u, -w.j);
        for (std::size_t a = 0; a < size; ++a) {
            components_[t][a] = h(static_cast<Eigen::Index>(a));
            total_[a] += weight * components_[t][a];
        }
    }
}

std::size_t PerturbationField::index_of(const Configuration& sigma) const
{
    const auto it = std::find(configs_.begin(), configs_.end(), sigma);
    if (it == configs_.end()) throw MalformedInput("configuration is not in the perturbation field's set");
    return static_cast<std::size_t>(it - configs_.begin());
}

double perturbation_hamiltonian(const PerturbationField& field, const Configuration& sigma)
{
    return field.value(field.index_of(sigma));
}

double perturbation_scale(int n, double gamma)
{
    return std::pow(static_cast<double>(n), gamma);
}

AssReport ass_covariance_check(int n, int m, int kappa, int n_pairs, int draws, std::uint64_t seed)
{
    if (n < 1 || m < 0 || kappa < 1) throw ValidationError("ass check needs N >= 1, M >= 0, kappa >= 1");
    if (n_pairs < 1 || draws < 2) throw ValidationError("ass check needs at least one pair and two draws");

    std::vector<std::pair<Configuration, Configuration>> pairs;
    Configuration cyclic(static_cast<std::size_t>(n)), blocked(static_cast<std::size_t>(n));
    const int width = (n + kappa - 1) / kappa;
    for (int i = 0; i < n; ++i) {
        cyclic[static_cast<std::size_t>(i)] = i % kappa;
        blocked[static_cast<std::size_t>(i)] = std::min(i / width, kappa - 1);
    }
    pairs.emplace_back(cyclic, cyclic);
    if (n_pairs > 1) pairs.emplace_back(cyclic, blocked);
    for (int p = 2; p < n_pairs; ++p) {
        Rng rng = make_rng(seed, {0x70616972ULL, static_cast<std::uint64_t>(p)});
        Configuration a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            a[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<std::uint64_t>(kappa));
            b[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<std::uint64_t>(kappa));
        }
        pairs.emplace_back(a, b);
    }

    const double nm = n + m;
    const auto k2 = static_cast<std::size_t>(kappa * kappa);
    // Per pair: κ² Z products (when M > 0), then Y·Y′, then the H products.
    const std::size_t per_pair = (m > 0 ? k2 : 0) + 2;
    const auto nd = static_cast<std::size_t>(draws);
    std::vector<std::vector<double>> products(nd, std::vector<double>(pairs.size() * per_pair, 0.0));
    std::vector<double> decomposition(nd, 0.0);

    auto cavity_z = [&](const Matrix& g, const Configuration& s, int i, int k) {
        double z = 0.0;
        for (int j = 0; j < n; ++j) {
            if (s[static_cast<std::size_t>(j)] == k) z += g(n + i, j) + g(j, n + i);
        }
        return z / std::sqrt(nm);
    };
    auto diagonal_sum = [&](const Matrix& g, const Configuration& s, int offset, int len) {
        double h = 0.0;
        for (int i = 0; i < len; ++i) {
            for (int j = 0; j < len; ++j) {
                if (s[static_cast<std::size_t>(i)] == s[static_cast<std::size_t>(j)]) h += g(offset + i, offset + j);
            }
        }
        return h;
    };

    parallel_for(nd, [&](std::size_t dr) {
        const DisorderInstance big = DisorderInstance::generate(n + m, disorder_seed(seed, dr));
        const DisorderInstance extra = DisorderInstance::generate(n, derive_seed(disorder_seed(seed, dr), {1}));
        const Matrix& g = big.couplings();
        const Matrix& gy = extra.couplings();
        std::vector<double>& out = products[dr];
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const Configuration& a = pairs[p].first;
            const Configuration& b = pairs[p].second;
            double* row = out.data() + p * per_pair;
            if (m > 0) {
                for (int k = 0; k < kappa; ++k) {
                    for (int kk = 0; kk < kappa; ++kk) {
                        double s = 0.0;
                        for (int i = 0; i < m; ++i) s += cavity_z(g, a, i, k) * cavity_z(g, b, i, kk);
                        row[static_cast<std::size_t>(k * kappa + kk)] = s / m;
                    }
                }
                row += k2;
            }
            const double ya = diagonal_sum(gy, a, 0, n) / std::sqrt(n * nm);
            const double yb = diagonal_sum(gy, b, 0, n) / std::sqrt(n * nm);
            const double ha = diagonal_sum(g, a, 0, n) / std::sqrt(nm) + std::sqrt(static_cast<double>(m)) * ya;
            const double hb = diagonal_sum(g, b, 0, n) / std::sqrt(nm) + std::sqrt(static_cast<double>(m)) * yb;
            row[0] = ya * yb;
            row[1] = ha * hb;
        }

        Rng rng = make_rng(seed, {0x64636d70ULL, dr});
        Configuration rho(static_cast<std::size_t>(n + m));
        for (int& s : rho) s = static_cast<int>(rng() % static_cast<std::uint64_t>(kappa));
        const Configuration sigma(rho.begin(), rho.begin() + n);
        const Configuration eps(rho.begin() + n, rho.end());
        double pieces = diagonal_sum(g, sigma, 0, n) / std::sqrt(nm);
        for (int i = 0; i < m; ++i) pieces += cavity_z(g, sigma, i, eps[static_cast<std::size_t>(i)]);
        pieces += diagonal_sum(g, eps, n, m) / std::sqrt(nm);
        decomposition[dr] = std::abs(hamiltonian(big, rho) - pieces);
    });

    AssReport rep;
    rep.n = n;
    rep.m = m;
    rep.kappa = kappa;
    rep.draws = draws;
    rep.decomposition_error = *std::max_element(decomposition.begin(), decomposition.end());
    double max_sq = 0.0;
    std::vector<double> column(nd);
    auto add = [&](std::string name, std::size_t at, double target) {
        for (std::size_t dr = 0; dr < nd; ++dr) column[dr] = products[dr][at];
        const Estimate e = mean_se(column);
        rep.checks.push_back({std::move(name), e.value, target, e.std_error,
                              std::abs(e.value - target) <= 3.0 * e.std_error + 1e-12});
    };
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const Matrix r = overlap(pairs[p].first, pairs[p].second, kappa);
        const double sq = r.squaredNorm();
        max_sq = std::max(max_sq, sq);
        const std::string tag = "pair" + std::to_string(p) + ".";
        std::size_t at = p * per_pair;
        if (m > 0) {
            for (int k = 0; k < kappa; ++k) {
                for (int kk = 0; kk < kappa; ++kk) {
                    add(tag + "Z(" + std::to_string(k) + "," + std::to_string(kk) + ")", at++, 2.0 * n / nm * r(k, kk));
                }
            }
        }
        add(tag + "Y", at++, n / nm * sq);
        add(tag + "H", at, n * sq);
    }
    rep.covariance_identity_error = std::abs(n * n / nm + m * n / nm - n) * max_sq;
    rep.pass = rep.decomposition_error < 1e-10 && rep.covariance_identity_error < 1e-12 &&
               std::all_of(rep.checks.begin(), rep.checks.end(), [](const AssCheck& c) { return c.pass; });
    return rep;
}

}  // namespace potts
