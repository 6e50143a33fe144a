#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "potts/core.hpp"
#include "potts/functional.hpp"
#include "potts/overlap.hpp"
#include "potts/random.hpp"

namespace potts {

// poisson_points: atoms Γ_i^{−1/x} for the arrival times Γ_i of a unit-rate
// Poisson process, which are the K largest atoms in decreasing order.
// stick_breaking: K sticks V_i ~ Beta(1 − x, i x), sorted. Stick weights are
// already normalized, so they only define single-level cascades.
enum class PdSampler { poisson_points, stick_breaking };

struct CascadeSpec {
    // x_0 < ... < x_{r−1}, each in (0,1).
    std::vector<double> x;
    int atoms_per_level = 200;
    PdSampler sampler = PdSampler::poisson_points;

    int levels() const { return static_cast<int>(x.size()); }
    void validate() const;
};

// Truncated cascade on a tree with the same branching at every node of a
// given depth. Node j at depth p+1 is child j % branching(p) of node
// j / branching(p) at depth p. Each node carries K unnormalized Poisson atoms
// for its children; a leaf weight is the product along its path, normalized
// over all leaves. The stored child weights are the resulting conditional
// masses (subtree mass over parent subtree mass).
class CascadeSample {
public:
    int levels() const { return static_cast<int>(branching_.size()); }
    int branching(int p) const { return branching_[static_cast<std::size_t>(p)]; }
    std::size_t nodes(int depth) const { return sizes_[static_cast<std::size_t>(depth)]; }
    std::size_t leaf_count() const { return sizes_.back(); }

    // Log of a node's weight within its parent, depth ≥ 1; children of each
    // parent are normalized.
    double log_child_weight(int depth, std::size_t node) const
    {
        return log_w_[static_cast<std::size_t>(depth - 1)][node];
    }
    std::size_t ancestor(std::size_t leaf, int depth) const { return leaf / (leaf_count() / nodes(depth)); }
    // α∧α′: depth of the deepest common ancestor (r when α = α′).
    int meet(std::size_t a, std::size_t b) const;
    double leaf_log_weight(std::size_t leaf) const;
    std::vector<double> leaf_log_weights() const;
    std::vector<double> leaf_weights() const;
    // Σ over depth-p nodes of (total weight below the node)², p = 0..r.
    std::vector<double> coincidence_sums() const;
    // Leaf drawn from the leaf-weight distribution.
    std::size_t sample_leaf(Rng& rng) const;

private:
    friend CascadeSample sample_cascade_levels(std::span<const double> x, int atoms, Rng& rng, PdSampler sampler);
    std::vector<int> branching_;
    std::vector<std::size_t> sizes_;
    std::vector<std::vector<double>> log_w_;
};

// K atoms of PD(x, 0), decreasing and renormalized to sum 1, as log weights.
std::vector<double> sample_poisson_dirichlet(double x, int atoms, Rng& rng,
                                             PdSampler sampler = PdSampler::poisson_points);

CascadeSample sample_cascade(const CascadeSpec& spec, std::uint64_t seed);
CascadeSample sample_cascade(const CascadeSpec& spec, Rng& rng);
// Also accepts degenerate levels: x = 0 gives a single child, x = 1 gives
// `atoms` equal children (the x → 1 limit of the truncated weights).
CascadeSample sample_cascade_levels(std::span<const double> x, int atoms, Rng& rng,
                                    PdSampler sampler = PdSampler::poisson_points);

// Gaussian fields on the leaves: every depth-p node adds factors[p−1]·ξ to
// its parent's value, independently for each of `copies` sites. Returns
// leaf_count × (copies · dim) values, leaf-major.
std::vector<double> sample_leaf_fields(const CascadeSample& c, const std::vector<Matrix>& factors, int copies,
                                       Rng& rng);

using TraceMap = std::function<Matrix(double)>;

// n leaves i.i.d. from the leaf weights; T_{ℓℓ′} = q[α^ℓ∧α^{ℓ′}], Q = phi(T).
OverlapArray sample_overlap_array(const CascadeSample& c, std::span<const double> q, const TraceMap& phi, int n,
                                  std::uint64_t seed);

// n replicas from the untruncated cascade with parameters x_0 < ... < x_{r−1},
// drawn from the annealed law: the leaf partition is a Chinese restaurant
// process with discount x_{r−1}, and the blocks at depth p are grouped by an
// independent one with discount x_{p−1}/x_p.
OverlapArray sample_overlap_array_exact(std::span<const double> x, std::span<const double> q, const TraceMap& phi,
                                        int n, Rng& rng);

struct YIdentityReport {
    double closed_form = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
    double estimate_doubled = 0.0;
    double std_error_doubled = 0.0;
    double truncation_allowance = 0.0;
    double discrepancy_se = 0.0;
    bool pass = false;
};

// (1/N) E log Σ_α v_α exp(β √N Y^α) against (β²/2) Σ x_p (‖γ_{p+1}‖² − ‖γ_p‖²),
// at K and 2K atoms.
YIdentityReport verify_y_identity(const MonotonePath& path, double beta, int scale_n, const CascadeMcSpec& mc);

struct PhiAgreement {
    double quadrature = 0.0;
    double cascade = 0.0;
    double std_error = 0.0;
    // Same Monte Carlo with twice the atoms per level.
    double cascade_doubled = 0.0;
    double std_error_doubled = 0.0;
    double truncation_allowance = 0.0;
    bool pass = false;
};

// eval_phi against eval_phi_cascade_mc: |difference| ≤ 3 SE + |K − 2K| allowance.
PhiAgreement compare_phi_methods(const LagrangeMultipliers& lambda, const MonotonePath& path, double beta,
                                 const CascadeMcSpec& mc, const QuadratureSpec& q = {});

struct CoincidenceLevel {
    int level = 0;
    double expected = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
};

// E Σ_{α∧α′=p} v_α v_α′ over independent cascades, against x_p − x_{p−1}.
std::vector<CoincidenceLevel> coincidence_masses(const CascadeSpec& spec, int cascades, std::uint64_t seed);

}  // namespace potts
