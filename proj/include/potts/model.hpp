#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "potts/configuration.hpp"
#include "potts/core.hpp"
#include "potts/overlap.hpp"

namespace potts {

// N×N i.i.d. standard Gaussian couplings, reproducible from (N, seed).
class DisorderInstance {
public:
    static DisorderInstance generate(int n, std::uint64_t seed);
    static DisorderInstance from_couplings(Matrix g, std::uint64_t seed = 0);

    int size() const { return static_cast<int>(g_.rows()); }
    std::uint64_t seed() const { return seed_; }
    const Matrix& couplings() const { return g_; }
    double operator()(int i, int j) const { return g_(i, j); }

private:
    Matrix g_;
    std::uint64_t seed_ = 0;
};

// Seed of disorder draw i in a run keyed by `seed`.
std::uint64_t disorder_seed(std::uint64_t seed, std::size_t draw);

class StateConstraint {
public:
    enum class Kind { none, exact, relaxed };

    static StateConstraint none();
    static StateConstraint exact(const StateDistribution& d);
    // |count_k / N − d_k| ≤ ε for every k (closed intervals).
    static StateConstraint relaxed(const StateDistribution& d, double eps);

    Kind kind() const { return kind_; }
    const std::optional<StateDistribution>& distribution() const { return d_; }
    double eps() const { return eps_; }
    bool admits(const std::vector<int>& counts, int n) const;

private:
    Kind kind_ = Kind::none;
    std::optional<StateDistribution> d_;
    double eps_ = 0.0;
};

// (1/√N) Σ_{i,j} g_ij 1{σ_i = σ_j}, all ordered pairs including i = j.
double hamiltonian(const DisorderInstance& g, const Configuration& sigma);

// R^{kk′} = (1/N) Σ_i 1{a_i = k} 1{b_i = k′}.
Matrix overlap(const Configuration& a, const Configuration& b, int kappa);

// All pairwise overlaps of a replica list.
OverlapArray overlap_array(const std::vector<Configuration>& replicas, int kappa);

// log Σ_σ exp βH(σ) over the admitted configurations, one value per β, by a
// single Gray-code pass with incremental local fields.
std::vector<double> exact_log_partition(const DisorderInstance& g, int kappa, std::span<const double> betas,
                                        const StateConstraint& constraint, double budget = 2e7);

struct FreeEnergyReport {
    int n = 0;
    int kappa = 0;
    double beta = 0.0;
    std::optional<std::vector<double>> d;
    double estimate = 0.0;
    double std_error = 0.0;
    std::string method;
    std::map<std::string, double> diagnostics;
    std::vector<std::string> warnings;
    // Per-disorder values, in draw order.
    std::vector<double> samples;
    // Disorder-averaged values along the tempering ladder (MCMC only).
    std::vector<double> ladder;
    std::vector<double> ladder_values;
};

// Exact (1/N) log Σ_σ exp βH(σ) per disorder draw, over all configurations
// admitted by the constraint; mean and SE over draws.
FreeEnergyReport enumerate_free_energy(int n, int kappa, double beta, int n_disorder, std::uint64_t seed,
                                       const StateConstraint& constraint = StateConstraint::none(),
                                       double budget = 2e7);

// Same disorder draws evaluated at several β.
std::vector<FreeEnergyReport> enumerate_free_energy_curve(int n, int kappa, const std::vector<double>& betas,
                                                          int n_disorder, std::uint64_t seed,
                                                          const StateConstraint& constraint = StateConstraint::none(),
                                                          double budget = 2e7);

struct SamplerParams {
    int temperatures = 17;
    int sweeps = 4000;
    int burn_in = 1000;
    int n_disorder = 20;
    std::uint64_t seed = 1;

    void validate() const;
};

// Thermodynamic integration of ⟨H⟩/N over an even β ladder from the exact
// β = 0 entropy, with pair-swap Metropolis and parallel tempering on Σ(d).
FreeEnergyReport mcmc_free_energy(int n, int kappa, double beta, const StateDistribution& d,
                                  const SamplerParams& params);

enum class ReplicaMethod { exact, mcmc };

struct ReplicaSample {
    std::vector<Configuration> replicas;
    OverlapArray overlaps;
};

// i.i.d. replicas from the Gibbs measure on Σ(d): exact sampling from
// enumerated probabilities, or the final states of independent tempered
// chains.
ReplicaSample gibbs_replicas(const DisorderInstance& g, double beta, const StateDistribution& d, int n_replicas,
                             ReplicaMethod method, std::uint64_t seed, const SamplerParams& chain = {});

// θ = (p, n_1..n_m, λ^1..λ^m).
struct PerturbationSpec {
    int p = 1;
    std::vector<int> n;
    std::vector<Vector> lambdas;

    int m() const { return static_cast<int>(n.size()); }
    void validate(int kappa) const;
};

// ((R^{∘p} λ^j, λ^j))_j.
std::vector<double> quadratic_forms(const Matrix& r, int p, const std::vector<Vector>& lambdas);

// Π_j ((R^{∘p} λ^j, λ^j))^{n_j}.
double perturbation_covariance(const PerturbationSpec& theta, const Matrix& r);

// Finite list of λ ∈ [−1,1]^κ with 1-based positions j0(λ).
struct LambdaCatalogue {
    std::vector<Vector> entries;

    // Unit vectors e_k, then the all-ones vector.
    static LambdaCatalogue standard(int kappa);
    int index_of(const Vector& lambda) const;
};

// j(θ) = p + Σ n_j + Σ j0(λ^j) + 4m.
int theta_index(const PerturbationSpec& theta, const LambdaCatalogue& catalogue);

// Every θ over the catalogue with j(θ) ≤ max_j, in increasing j, then p, m,
// n, λ order.
std::vector<PerturbationSpec> enumerate_thetas(const LambdaCatalogue& catalogue, int max_j);

struct WeightedTheta {
    PerturbationSpec spec;
    int j = 7;
    double u = 1.5;
};

// Joint realization of the processes h_θ on a finite configuration set,
// drawn from their covariance kernels.
class PerturbationField {
public:
    PerturbationField(std::vector<Configuration> configs, int kappa, std::vector<WeightedTheta> thetas,
                      std::uint64_t seed, std::size_t max_configs = 1500);

    std::size_t size() const { return configs_.size(); }
    const std::vector<Configuration>& configurations() const { return configs_; }
    std::size_t index_of(const Configuration& sigma) const;
    // h_θ(σ) for θ = thetas[t].
    double component(std::size_t t, std::size_t config) const { return components_[t][config]; }
    // Σ 2^{−j(θ)} u_θ h_θ(σ).
    double value(std::size_t config) const { return total_[config]; }

private:
    std::vector<Configuration> configs_;
    std::vector<std::vector<double>> components_;
    std::vector<double> total_;
};

double perturbation_hamiltonian(const PerturbationField& field, const Configuration& sigma);

// s_N = N^γ.
double perturbation_scale(int n, double gamma = 0.375);

struct AssCheck {
    std::string name;
    double estimate = 0.0;
    double target = 0.0;
    double std_error = 0.0;
    bool pass = false;
};

struct AssReport {
    int n = 0;
    int m = 0;
    int kappa = 0;
    int draws = 0;
    std::vector<AssCheck> checks;
    // max |H_{N+M}(σ,ε) − H′(σ) − Σ_i Z_i^σ(ε_i) − r(ε)| over the draws.
    double decomposition_error = 0.0;
    // |N²/(N+M) + M·N/(N+M) − N| · max ΣR², the analytic covariance identity.
    double covariance_identity_error = 0.0;
    bool pass = false;
};

// Sampled covariances of the cavity fields Z, Y and of H′ + √M Y against
// their closed forms, over fresh disorder.
AssReport ass_covariance_check(int n, int m, int kappa, int n_pairs, int draws, std::uint64_t seed);

}  // namespace potts
