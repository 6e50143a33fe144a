#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "potts/core.hpp"

namespace potts {

// State labels 0..κ−1, one per site.
using Configuration = std::vector<int>;

std::vector<int> state_counts(const Configuration& sigma, int kappa);

// A set S of configurations on M sites. Sets given by exact state counts or
// by "everything" are summed in closed form; explicit lists are summed term
// by term.
class ConfigurationSet {
public:
    static ConfigurationSet all(int sites, int kappa);
    static ConfigurationSet with_counts(std::vector<int> counts);
    static ConfigurationSet explicit_list(int kappa, std::vector<Configuration> configs);

    int sites() const { return sites_; }
    int kappa() const { return kappa_; }
    double size() const;
    bool empty() const { return size() == 0.0; }
    const std::optional<std::vector<int>>& counts() const { return counts_; }

    // log Σ_{σ∈S} exp Σ_i e[i·κ + σ_i].
    double log_partition(const double* e) const;
    // Explicit members, in lexicographic order.
    std::vector<Configuration> enumerate() const;

private:
    enum class Kind { all, counts, list };

    double log_partition_counts(const double* e) const;
    double log_partition_list(const double* e, const std::vector<Configuration>& list) const;

    Kind kind_ = Kind::all;
    int sites_ = 0;
    int kappa_ = 0;
    std::optional<std::vector<int>> counts_;
    std::vector<Configuration> list_;
    std::vector<int> stride_;
};

}  // namespace potts
