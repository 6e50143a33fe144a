#include "potts/quadrature.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "potts/errors.hpp"

namespace potts {

GaussHermiteRule gauss_hermite(int n)
{
    if (n < 1) throw MalformedInput("Gauss-Hermite rule needs at least one node");
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        j(k - 1, k) = std::sqrt(static_cast<double>(k));
        j(k, k - 1) = j(k - 1, k);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    GaussHermiteRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rule.nodes[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
        const double v = es.eigenvectors()(0, i);
        rule.weights[static_cast<std::size_t>(i)] = v * v;
    }
    // Enforce the symmetry of the exact rule.
    for (int i = 0; i < n / 2; ++i) {
        const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(n - 1 - i);
        const double t = 0.5 * (rule.nodes[b] - rule.nodes[a]);
        const double w = 0.5 * (rule.weights[a] + rule.weights[b]);
        rule.nodes[a] = -t;
        rule.nodes[b] = t;
        rule.weights[a] = w;
        rule.weights[b] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    double total = 0.0;
    for (double w : rule.weights) total += w;
    for (double& w : rule.weights) w /= total;
    return rule;
}

}  // namespace potts
