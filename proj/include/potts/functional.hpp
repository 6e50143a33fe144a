#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "potts/configuration.hpp"
#include "potts/core.hpp"

namespace potts {

struct QuadratureSpec {
    int nodes_per_dim = 15;
    double rank_tolerance = 1e-12;
    double budget = 5e7;

    void validate() const;
};

// Truncated-cascade Monte Carlo parameters.
struct CascadeMcSpec {
    int atoms_per_level = 200;
    int reps = 400;
    std::uint64_t seed = 1;
    double budget = 2e8;

    void validate() const;
};

enum class EvalMethod { quadrature, cascade_mc };

std::string to_string(EvalMethod m);

struct EvalResult {
    double value = 0.0;
    double std_error = 0.0;
    EvalMethod method = EvalMethod::quadrature;
    std::map<std::string, double> diagnostics;
};

// 2(γ_p − γ_{p−1}), 1 ≤ p ≤ r.
Matrix increment_covariance(const MonotonePath& path, int p);

// Φ = X_0 by the backward recursion with tensor Gauss–Hermite quadrature in
// the eigenbasis of each increment covariance.
EvalResult eval_phi(const LagrangeMultipliers& lambda, const MonotonePath& path, double beta,
                    const QuadratureSpec& q = {});

// Φ = E log Σ_α v_α Σ_k exp(β Z^α(k) + λ_k) over truncated cascades.
EvalResult eval_phi_cascade_mc(const LagrangeMultipliers& lambda, const MonotonePath& path, double beta,
                               const CascadeMcSpec& mc);

// (β²/2) Σ_{p<r} x_p (‖γ_{p+1}‖²_HS − ‖γ_p‖²_HS).
double parisi_correction(const MonotonePath& path, double beta);

// 𝒫 = Φ − Σ λ_k d_k − parisi_correction. diagnostics["rearranged"] holds
// Φ − Σ λ_k d_k − (β²/2) Σ d_k² + (β²/2) ∫‖π‖²_HS.
EvalResult eval_parisi(const LagrangeMultipliers& lambda, const StateDistribution& d, const MonotonePath& path,
                       double beta, const QuadratureSpec& q = {});

// −(β²/2) Σ d_k² + (β²/2) ∫₀¹ ‖π‖²_HS, which is −parisi_correction, the
// negative of the Y-cascade term (1/N) E log Σ_α v_α exp β√N Y^α.
double eval_f2(const MonotonePath& path, double beta);

// (1/M) E log Σ_α v_α Σ_{σ∈S} exp Σ_i (β Z_i^α(σ_i) + λ_{σ_i}).
EvalResult eval_f1_restricted(const ConfigurationSet& s, const LagrangeMultipliers& lambda, const MonotonePath& path,
                              double beta, const CascadeMcSpec& mc);

// f¹(Σ_M(δ), λ = 0) minus the Y-cascade term parisi_correction(path, β).
// Since f¹(Σ_M(δ), 0) ≤ Φ(λ) − Σ λ_k δ_k for every λ, the value is at most
// inf_λ 𝒫(λ, δ, π) up to Monte Carlo error.
EvalResult eval_lower_bound(int m, const StateDistribution& delta, const MonotonePath& path, double beta,
                            const CascadeMcSpec& mc);

}  // namespace potts
