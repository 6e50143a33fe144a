#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "potts/core.hpp"
#include "potts/random.hpp"

namespace potts::testing {

inline StateDistribution random_distribution(Rng& rng, int kappa, double floor = 0.05)
{
    std::vector<double> d(static_cast<std::size_t>(kappa));
    double s = 0.0;
    for (auto& v : d) {
        v = floor + uniform01(rng);
        s += v;
    }
    for (auto& v : d) v /= s;
    double rest = 1.0;
    for (std::size_t k = 0; k + 1 < d.size(); ++k) rest -= d[k];
    d.back() = rest;
    return StateDistribution::from(d);
}

inline Matrix random_psd(Rng& rng, int kappa)
{
    Normal normal;
    Matrix a(kappa, kappa);
    for (int i = 0; i < kappa; ++i)
        for (int j = 0; j < kappa; ++j) a(i, j) = normal(rng);
    return a * a.transpose();
}

// Sorted x values x_0 <= ... <= x_{r-1} drawn from [lo, hi], plus x_r = 1.
inline std::vector<double> random_x(Rng& rng, int r, double lo, double hi)
{
    std::vector<double> x(static_cast<std::size_t>(r));
    for (auto& v : x) v = lo + (hi - lo) * uniform01(rng);
    std::sort(x.begin(), x.end());
    x.push_back(1.0);
    return x;
}

// Random monotone path to diag(d): γ_p = c Σ_{q≤p} A_q with c chosen so that
// diag(d) − γ_{r−1} stays PSD.
inline MonotonePath random_path(Rng& rng, const StateDistribution& d, int r, double xlo = 0.1, double xhi = 0.9)
{
    const int kappa = d.kappa();
    std::vector<Matrix> inc;
    Matrix sum = Matrix::Zero(kappa, kappa);
    for (int p = 1; p < r; ++p) {
        inc.push_back(random_psd(rng, kappa));
        sum += inc.back();
    }
    std::vector<Matrix> g{Matrix::Zero(kappa, kappa)};
    if (r > 1) {
        Vector isd(kappa);
        for (int k = 0; k < kappa; ++k) isd(k) = 1.0 / std::sqrt(d[k]);
        const Matrix scaled = isd.asDiagonal() * sum * isd.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Matrix> es(scaled, Eigen::EigenvaluesOnly);
        const double c = (0.2 + 0.75 * uniform01(rng)) / es.eigenvalues().maxCoeff();
        Matrix acc = Matrix::Zero(kappa, kappa);
        for (const Matrix& a : inc) {
            acc += c * a;
            g.push_back(acc);
        }
    }
    g.push_back(d.diag());
    return MonotonePath::make(d, random_x(rng, r, xlo, xhi), g);
}

// Σ_j c_j b_j b_jᵀ with probability vectors b_j; returns it with d = Σ c_j b_j.
inline std::pair<Matrix, StateDistribution> random_constrained_gram(Rng& rng, int kappa, int parts)
{
    std::vector<Vector> b;
    std::vector<double> c;
    double cs = 0.0;
    for (int j = 0; j < parts; ++j) {
        Vector v(kappa);
        for (int k = 0; k < kappa; ++k) v(k) = 0.05 + uniform01(rng);
        v /= v.sum();
        b.push_back(v);
        c.push_back(0.1 + uniform01(rng));
        cs += c.back();
    }
    Matrix g = Matrix::Zero(kappa, kappa);
    Vector d = Vector::Zero(kappa);
    for (int j = 0; j < parts; ++j) {
        g += (c[static_cast<std::size_t>(j)] / cs) * b[static_cast<std::size_t>(j)] * b[static_cast<std::size_t>(j)].transpose();
        d += (c[static_cast<std::size_t>(j)] / cs) * b[static_cast<std::size_t>(j)];
    }
    std::vector<double> dv(d.data(), d.data() + kappa);
    double rest = 1.0;
    for (int k = 0; k + 1 < kappa; ++k) rest -= dv[static_cast<std::size_t>(k)];
    dv.back() = rest;
    return {g, StateDistribution::from(dv)};
}

}  // namespace potts::testing
