#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "potts/cascade.hpp"
#include "potts/core.hpp"
#include "potts/functional.hpp"
#include "potts/model.hpp"
#include "potts/overlap.hpp"

namespace potts {

// f(R^n) of the replicas idx[0..n−1] of an array.
using ReplicaFunction = std::function<double(const OverlapArray&, std::span<const int>)>;
// Q_{ℓℓ′} as a function of the block R_{ℓℓ′}.
using BlockFunction = std::function<double(const Matrix&)>;

struct GgOptions {
    int bootstrap = 200;
    std::uint64_t seed = 1;
    // Above this many ordered replica tuples per array, a fixed random subset
    // of this size is used.
    std::size_t max_tuples = 20000;
};

struct GgResidual {
    // E⟨f Q_{1,n+1}⟩ − (1/n) E⟨f⟩ E⟨Q_{1,2}⟩ − (1/n) Σ_{ℓ=2}^n E⟨f Q_{1,ℓ}⟩.
    double signed_residual = 0.0;
    double residual = 0.0;
    // Bootstrap over arrays.
    double std_error = 0.0;
    int arrays = 0;
    int n = 0;
    std::size_t tuples_per_array = 0;
};

// ⟨·⟩ averages over ordered tuples of distinct replicas within an array, E
// over arrays.
GgResidual gg_identity(const std::vector<OverlapArray>& arrays, const ReplicaFunction& f, int n, const BlockFunction& q,
                       const GgOptions& options = {});

GgResidual gg_residual(const std::vector<OverlapArray>& arrays, const ReplicaFunction& f, int n,
                       const PerturbationSpec& spec, const GgOptions& options = {});

// f ≡ 1.
double replica_one(const OverlapArray& a, std::span<const int> idx);
// (Π_l tr R_{idx_l idx_{l+1}})² + tr R_{idx_0 idx_{n−1}}, bounded by 2.
double replica_trace_polynomial(const OverlapArray& a, std::span<const int> idx);

// Five specs over e_1, the all-ones vector, e_1 − e_2/2 and e_2 (κ ≥ 2),
// covering p ∈ {1, 2, 3}, n_j ∈ {1, 2} and m ∈ {1, 2}.
std::vector<PerturbationSpec> standard_gg_specs(int kappa);

// Exact annealed RPC arrays, one per stream (seed, i).
std::vector<OverlapArray> cascade_gg_arrays(std::span<const double> x, std::span<const double> q, const TraceMap& phi,
                                            int count, int replicas, std::uint64_t seed);

// "linear": t·diag(d). "quadratic": diagonal with entries d_1 t² and
// d_k (t − d_1 t²)/(1 − d_1), so tr φ(t) = t and ‖φ′‖₁ = 1; needs d_1 ≤ 1/2.
TraceMap named_generator(const std::string& name, const StateDistribution& d);

struct QuadraticForms {
    int p = 1;
    std::vector<Vector> lambdas;
};

// Q = φ((R^{∘p}λ^1, λ^1), …, (R^{∘p}λ^m, λ^m)).
GgResidual gg_polynomial_extension_check(const std::vector<OverlapArray>& arrays, const ReplicaFunction& f, int n,
                                         const QuadraticForms& forms,
                                         const std::function<double(std::span<const double>)>& phi,
                                         const GgOptions& options = {});

struct PerturbedGibbsSpec {
    int n = 8;
    std::vector<double> d{0.5, 0.5};
    double beta = 1.0;
    int max_j = 12;
    double u = 1.5;
    double gamma = 0.375;
    int replicas = 6;
    int draws = 50;
    std::uint64_t seed = 1;
};

// Exact replicas from exp(βH_N + s_N h_N) on Σ(d), h_N built from all θ with
// j(θ) ≤ max_j over the standard λ catalogue, one array per disorder draw.
std::vector<OverlapArray> perturbed_gibbs_arrays(const PerturbedGibbsSpec& spec);

struct SyncFit {
    std::vector<double> grid;
    std::vector<Matrix> phi_hat;
    std::vector<int> bin_counts;
    // sup over blocks of ‖R − Φ̂(tr R)‖₁.
    double residual = 0.0;
    // max ‖Φ̂(t′) − Φ̂(t)‖₁ / |t′ − t| over consecutive grid points.
    double lipschitz_hat = 0.0;
    double bin_width = 0.0;
    std::size_t blocks = 0;

    // Piecewise-linear in t, constant outside the grid.
    Matrix operator()(double t) const;
};

// Off-diagonal blocks (ℓ < ℓ′) binned by trace; bin means made monotone by
// clipping each successive difference to the PSD cone.
SyncFit sync_fit(const std::vector<OverlapArray>& arrays, double bin_width = 0.02, std::size_t min_blocks = 100);

// One-level cascade arrays (x = 0.5, 50 atoms) with q_1 uniform on [0.02, 1]
// per array, so traces cover [0, 1]. Array i uses maps[i mod maps.size()];
// arrays are added until at least min_blocks off-diagonal blocks exist.
std::vector<OverlapArray> generator_arrays(const std::vector<TraceMap>& maps, std::size_t min_blocks, int replicas,
                                           std::uint64_t seed);

// max over the fit grid of ‖Φ̂(t) − phi(t)‖₁.
double sync_distance(const SyncFit& fit, const TraceMap& phi);

struct InterpolationParams {
    int atoms_per_level = 200;
    int reps = 400;
    std::uint64_t seed = 1;
    double budget = 2e9;

    void validate() const;
};

struct InterpolationCurve {
    std::vector<double> t;
    std::vector<double> values;
    std::vector<double> std_errors;
    // φ̂(t_{j+1}) − φ̂(t_j) from common random numbers, with SEs.
    std::vector<double> increments;
    std::vector<double> increment_se;
    double max_positive_increment = 0.0;
    double max_increment_se = 0.0;
    bool monotone = true;
    // (1/N) E log Σ v_α exp β√N Y^α on the same draws, and its closed form.
    double y_term = 0.0;
    double y_term_se = 0.0;
    double y_closed_form = 0.0;
    // φ̂(1) − Y-term per draw, an estimate of F_N(d).
    double endpoint = 0.0;
    double endpoint_se = 0.0;
};

// φ(t) = (1/N) E log Σ_α v_α Σ_{σ∈Σ(d)} exp β(√t H_N(σ) + √(1−t) Σ_i Z_i^α(σ_i) + √t √N Y^α)
// with disorder, cascade and fields drawn jointly per replicate.
InterpolationCurve interpolation_curve(int n, const MonotonePath& path, double beta, const std::vector<double>& t_grid,
                                       const InterpolationParams& params);

// Tensor grid of multipliers with `points` values per free coordinate.
std::vector<LagrangeMultipliers> lambda_grid(int kappa, double lo, double hi, int points);

struct LegendreRow {
    int m = 0;
    // f_M(d^M) = eval_f1_restricted(Σ_M(d), λ = 0).
    double primal = 0.0;
    double primal_se = 0.0;
    // min over the grid of −Σ λ_k d_k + Φ(λ).
    double dual = 0.0;
    std::size_t dual_argmin = 0;
    double gap = 0.0;
    double gap_se = 0.0;
};

struct LegendreReport {
    std::vector<LegendreRow> rows;
    bool nonnegative = true;
    bool nonincreasing = true;
};

LegendreReport legendre_gap(const MonotonePath& path, double beta, const std::vector<LagrangeMultipliers>& grid,
                            const std::vector<int>& m_list, const CascadeMcSpec& mc, const QuadratureSpec& q = {});

}  // namespace potts
