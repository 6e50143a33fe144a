#include "potts/stats.hpp"

#include <algorithm>
#include <numeric>

#include "potts/errors.hpp"

namespace potts {

double log_sum_exp(std::span<const double> v)
{
    if (v.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

Estimate mean_se(std::span<const double> v)
{
    if (v.empty()) throw MalformedInput("mean of empty sample");
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

Estimate mean_se_diff(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw MalformedInput("paired samples differ in length");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return mean_se(d);
}

double log_multinomial(std::span<const int> counts)
{
    int total = 0;
    double r = 0.0;
    for (int c : counts) {
        if (c < 0) throw MalformedInput("negative count");
        total += c;
        r -= std::lgamma(c + 1.0);
    }
    return r + std::lgamma(total + 1.0);
}

}  // namespace potts
