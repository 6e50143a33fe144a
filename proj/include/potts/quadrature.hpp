#pragma once

#include <vector>

namespace potts {

// Gauss–Hermite rule for E f(Z), Z ~ N(0,1): Σ w_i f(t_i), Σ w_i = 1.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Golub–Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
GaussHermiteRule gauss_hermite(int n);

}  // namespace potts
