#pragma once

#include <vector>

#include "potts/core.hpp"

namespace potts {

// n×n array of κ×κ overlap blocks R_{ℓℓ′} and their traces, row-major.
struct OverlapArray {
    int n = 0;
    int kappa = 0;
    std::vector<double> traces;
    std::vector<Matrix> blocks;

    double trace(int l, int m) const { return traces[static_cast<std::size_t>(l * n + m)]; }
    const Matrix& block(int l, int m) const { return blocks[static_cast<std::size_t>(l * n + m)]; }
};

}  // namespace potts
