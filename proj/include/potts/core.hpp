#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace potts {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSumTolerance = 1e-12;
inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kEntryTolerance = 1e-12;
inline constexpr double kConstraintTolerance = 1e-10;

// Point of the κ-simplex of state proportions. Optionally tagged with a
// resolution N such that every N·d_k is an integer.
class StateDistribution {
public:
    static StateDistribution from(std::vector<double> d);
    static StateDistribution uniform(int kappa);
    static StateDistribution from_counts(const std::vector<int>& counts);

    int kappa() const { return static_cast<int>(d_.size()); }
    const std::vector<double>& values() const { return d_; }
    double operator[](int k) const { return d_[static_cast<std::size_t>(k)]; }
    std::optional<int> resolution() const { return resolution_; }

    // Counts N·d_k; throws ValidationError if d is not N-representable.
    std::vector<int> counts(int n) const;
    bool representable(int n) const;
    Matrix diag() const;

private:
    std::vector<double> d_;
    std::optional<int> resolution_;
};

enum class GramViolation { none, asymmetric, negative_eigenvalue, negative_entry, constraint_mismatch };

std::string to_string(GramViolation v);

struct GramCheck;

struct GramFlags {
    bool nonnegative = false;
    const StateDistribution* constraint = nullptr;
};

class GramMatrix {
public:
    const Matrix& matrix() const { return m_; }
    int kappa() const { return static_cast<int>(m_.rows()); }
    bool nonnegative() const { return nonnegative_; }
    bool constrained() const { return constrained_; }

private:
    friend GramCheck validate_gram(const Matrix&, const GramFlags&);
    Matrix m_;
    bool nonnegative_ = false;
    bool constrained_ = false;
};

struct GramCheck {
    std::optional<GramMatrix> gram;
    GramViolation violation = GramViolation::none;
    // Offending quantity: asymmetry, eigenvalue, entry or row-sum error.
    double value = 0.0;
    std::string detail;

    explicit operator bool() const { return gram.has_value(); }
};

// Checks symmetry, PSD, then the optional entry-sign and row-sum constraints,
// reporting the first violation. Throws MalformedInput on non-square or
// non-finite input.
GramCheck validate_gram(const Matrix& m, const GramFlags& flags = {});

// Fills the last row and column of a (κ−1)×(κ−1) block so that row k sums to
// d_k, then validates the result as a d-constrained Gram matrix.
GramCheck lift_reduced(const StateDistribution& d, const Matrix& reduced);

// Step path π with π(0) = 0 and π(x) = γ_p on (x_{p−1}, x_p], x_{−1} = 0.
// x holds x_0 .. x_r with x_r = 1; gammas holds γ_0 = 0 .. γ_r = diag(d).
class MonotonePath {
public:
    static MonotonePath make(const StateDistribution& d, std::vector<double> x, std::vector<Matrix> gammas);
    // r = 1 path: γ_1 = diag(d) on (x_0, 1].
    static MonotonePath one_step(const StateDistribution& d, double x0);

    int levels() const { return static_cast<int>(x_.size()) - 1; }
    int kappa() const { return d_.kappa(); }
    const StateDistribution& distribution() const { return d_; }
    const std::vector<double>& x() const { return x_; }
    // x_{p}, with x(−1) = 0.
    double x_at(int p) const { return p < 0 ? 0.0 : x_[static_cast<std::size_t>(p)]; }
    const Matrix& gamma(int p) const { return gammas_[static_cast<std::size_t>(p)]; }
    const std::vector<Matrix>& gammas() const { return gammas_; }

    Matrix operator()(double t) const;
    // ∫₀¹ ‖π(t)‖²_HS dt.
    double integrated_hs_norm_sq() const;
    // Equal consecutive x values merged; the functional is unchanged.
    MonotonePath collapsed() const;

private:
    MonotonePath() = default;
    StateDistribution d_;
    std::vector<double> x_;
    std::vector<Matrix> gammas_;
};

class LagrangeMultipliers {
public:
    static LagrangeMultipliers zeros(int kappa);
    static LagrangeMultipliers from(int kappa, std::vector<double> lambda);

    int kappa() const { return static_cast<int>(lambda_.size()) + 1; }
    const std::vector<double>& values() const { return lambda_; }
    // λ_k for k < κ−1, and 0 for the last state.
    double shift(int k) const { return k + 1 < kappa() ? lambda_[static_cast<std::size_t>(k)] : 0.0; }

private:
    std::vector<double> lambda_;
};

// F with F Fᵀ = c for symmetric PSD c (negative eigenvalues clipped).
Matrix psd_factor(const Matrix& c);

double entrywise_l1(const Matrix& m);
double hs_norm_sq(const Matrix& m);

// ∫₀¹ ‖a(t) − b(t)‖₁ dt over the merged breakpoints.
double path_delta(const MonotonePath& a, const MonotonePath& b);

using PathProbe = std::function<Matrix(double)>;

struct Discretization {
    MonotonePath path;
    // κ·∫₀¹ |tr p(t) − tr output(t)| dt, an upper bound on Δ(p, output).
    double delta_bound;
};

// grid: interior breakpoints strictly inside (0,1); anchors: one point per
// cell (x_{p−1}, x_p] of the grid extended by 1. A zero first level or a
// final diag(d) level is appended when the probe does not already hit them.
Discretization discretize_path(const MonotonePath& p, std::span<const double> grid, std::span<const double> anchors);
Discretization discretize_path(const PathProbe& probe, const StateDistribution& d, std::span<const double> grid,
                               std::span<const double> anchors, int samples_per_cell = 2048);

// Largest-remainder rounding to 𝒟_N; ties go to the lowest state index.
StateDistribution round_distribution(const StateDistribution& d, int n);

}  // namespace potts
