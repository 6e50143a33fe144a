#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "potts/core.hpp"
#include "potts/functional.hpp"

namespace potts {

struct OptimizerConfig {
    int starts = 8;
    int max_iterations = 1500;
    // A start stops when the simplex is smaller than tolerance or the best
    // value improved by less than stall_tolerance over stall_iterations.
    double tolerance = 1e-9;
    int stall_iterations = 100;
    double stall_tolerance = 1e-12;
    double initial_step = 0.5;
    bool nonneg_gamma = false;
    double grid_mesh = 0.125;
    int refine_iterations = 40;
    QuadratureSpec quadrature;

    void validate() const;
};

// Coordinates for r-level paths ending at diag(d):
//   x_0 = s(u_0), x_p = x_{p−1} + (1 − x_{p−1}) s(u_p), s the logistic map;
//   γ_p = Σ_{i≤p} A_i A_iᵀ for p < r with lower-triangular A_i, γ_r = diag(d).
class PathParametrization {
public:
    PathParametrization(StateDistribution d, int r);

    int levels() const { return r_; }
    int kappa() const { return d_.kappa(); }
    const StateDistribution& distribution() const { return d_; }
    int dimension() const;

    struct Decoded {
        std::vector<double> x;
        std::vector<Matrix> gammas;
        // Smallest eigenvalue of the derived final increment.
        double final_min_eigenvalue = 0.0;
        // Largest |γ_{kk'}| over negative entries.
        double negative_entry = 0.0;
        std::optional<MonotonePath> path;

        bool feasible(bool nonneg) const { return path.has_value() && (!nonneg || negative_entry == 0.0); }
    };

    Decoded decode(std::span<const double> theta) const;
    // Inverse of decode for paths with at most r distinct levels; missing
    // levels are inserted as zero increments below x_0.
    std::vector<double> encode(const MonotonePath& path) const;

private:
    StateDistribution d_;
    int r_;
};

struct StartSummary {
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool feasible = false;
};

struct GridPoint {
    std::vector<double> d;
    double value = 0.0;
};

struct OptimizerReport {
    double value = 0.0;
    int kappa = 0;
    int r = 0;
    double beta = 0.0;
    std::vector<double> d;
    std::vector<double> lambda;
    std::vector<double> x;
    std::vector<Matrix> gammas;
    // Best value after each iteration of the winning start.
    std::vector<double> trace;
    std::vector<StartSummary> starts;
    int winning_start = 0;
    int evaluations = 0;
    int rejections = 0;
    // outer_maximize only.
    std::vector<GridPoint> grid;

    MonotonePath path() const;
    LagrangeMultipliers multipliers() const;
};

// inf over (λ, x, γ) of the Parisi functional at fixed d and r. A warm start,
// if given, is embedded into r levels and evaluated first.
OptimizerReport inner_minimize(const StateDistribution& d, int r, double beta, const OptimizerConfig& config,
                               std::uint64_t seed,
                               const std::optional<std::pair<LagrangeMultipliers, MonotonePath>>& warm = std::nullopt);

// Interior simplex grid of the given mesh, then simplex refinement of d.
OptimizerReport outer_maximize(int kappa, double beta, int r, const OptimizerConfig& config, std::uint64_t seed);

// Points of the open simplex with coordinates in mesh·ℕ.
std::vector<std::vector<double>> simplex_grid(int kappa, double mesh);

}  // namespace potts
