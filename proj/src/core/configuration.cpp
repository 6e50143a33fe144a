#include "potts/configuration.hpp"

#include <algorithm>
#include <cmath>

#include "potts/errors.hpp"
#include "potts/stats.hpp"

namespace potts {

std::vector<int> state_counts(const Configuration& sigma, int kappa)
{
    std::vector<int> c(static_cast<std::size_t>(kappa), 0);
    for (int s : sigma) {
        if (s < 0 || s >= kappa) throw MalformedInput("state label out of range");
        ++c[static_cast<std::size_t>(s)];
    }
    return c;
}

ConfigurationSet ConfigurationSet::all(int sites, int kappa)
{
    if (sites < 1 || kappa < 1) throw MalformedInput("configuration set needs positive sites and kappa");
    ConfigurationSet s;
    s.kind_ = Kind::all;
    s.sites_ = sites;
    s.kappa_ = kappa;
    return s;
}

ConfigurationSet ConfigurationSet::with_counts(std::vector<int> counts)
{
    if (counts.empty()) throw MalformedInput("configuration set needs at least one state");
    int sites = 0;
    for (int c : counts) {
        if (c < 0) throw MalformedInput("negative state count");
        sites += c;
    }
    if (sites < 1) throw ValidationError("state counts sum to zero");
    ConfigurationSet s;
    s.kind_ = Kind::counts;
    s.sites_ = sites;
    s.kappa_ = static_cast<int>(counts.size());
    // Mixed-radix strides for the DP over partial counts.
    int stride = 1;
    for (int c : counts) {
        s.stride_.push_back(stride);
        stride *= c + 1;
    }
    s.counts_ = std::move(counts);
    return s;
}

ConfigurationSet ConfigurationSet::explicit_list(int kappa, std::vector<Configuration> configs)
{
    if (configs.empty()) throw ValidationError("configuration set is empty");
    const std::size_t n = configs.front().size();
    if (n == 0) throw MalformedInput("configurations need at least one site");
    for (const auto& c : configs) {
        if (c.size() != n) throw MalformedInput("configurations have different lengths");
        for (int v : c)
            if (v < 0 || v >= kappa) throw MalformedInput("state label out of range");
    }
    ConfigurationSet s;
    s.kind_ = Kind::list;
    s.sites_ = static_cast<int>(n);
    s.kappa_ = kappa;
    s.list_ = std::move(configs);
    return s;
}

double ConfigurationSet::size() const
{
    switch (kind_) {
    case Kind::all: return std::pow(static_cast<double>(kappa_), sites_);
    case Kind::counts: return std::round(std::exp(log_multinomial(*counts_)));
    case Kind::list: return static_cast<double>(list_.size());
    }
    return 0.0;
}

double ConfigurationSet::log_partition(const double* e) const
{
    switch (kind_) {
    case Kind::all: {
        double total = 0.0;
        for (int i = 0; i < sites_; ++i) total += log_sum_exp({e + static_cast<std::ptrdiff_t>(i) * kappa_, static_cast<std::size_t>(kappa_)});
        return total;
    }
    case Kind::counts: return log_partition_counts(e);
    case Kind::list: return log_partition_list(e, list_);
    }
    return 0.0;
}

double ConfigurationSet::log_partition_counts(const double* e) const
{
    // Forward DP over sites; state = partial counts (mixed radix). Each site's
    // terms are shifted by their maximum so products stay ≤ 1.
    const auto& c = *counts_;
    const int states = stride_.back() * (c.back() + 1);
    std::vector<double> cur(static_cast<std::size_t>(states), 0.0), next(static_cast<std::size_t>(states));
    std::vector<double> w(static_cast<std::size_t>(kappa_));
    cur[0] = 1.0;
    double shift = 0.0;
    for (int i = 0; i < sites_; ++i) {
        const double* ei = e + static_cast<std::ptrdiff_t>(i) * kappa_;
        const double m = *std::max_element(ei, ei + kappa_);
        shift += m;
        for (int k = 0; k < kappa_; ++k) w[static_cast<std::size_t>(k)] = std::exp(ei[k] - m);
        std::fill(next.begin(), next.end(), 0.0);
        for (int s = 0; s < states; ++s) {
            const double v = cur[static_cast<std::size_t>(s)];
            if (v == 0.0) continue;
            for (int k = 0; k < kappa_; ++k) {
                const int dk = (s / stride_[static_cast<std::size_t>(k)]) % (c[static_cast<std::size_t>(k)] + 1);
                if (dk == c[static_cast<std::size_t>(k)]) continue;
                next[static_cast<std::size_t>(s + stride_[static_cast<std::size_t>(k)])] += v * w[static_cast<std::size_t>(k)];
            }
        }
        std::swap(cur, next);
    }
    const double z = cur[static_cast<std::size_t>(states - 1)];
    if (z > 0.0 && std::isfinite(z)) return shift + std::log(z);
    return log_partition_list(e, enumerate());
}

double ConfigurationSet::log_partition_list(const double* e, const std::vector<Configuration>& list) const
{
    LogSumExp acc;
    for (const auto& sigma : list) {
        double s = 0.0;
        for (int i = 0; i < sites_; ++i) s += e[static_cast<std::ptrdiff_t>(i) * kappa_ + sigma[static_cast<std::size_t>(i)]];
        acc.add(s);
    }
    return acc.value();
}

std::vector<Configuration> ConfigurationSet::enumerate() const
{
    if (kind_ == Kind::list) return list_;
    if (size() > 5e7) throw BudgetExceeded("enumerating configuration set", size(), 5e7);
    std::vector<Configuration> out;
    Configuration sigma(static_cast<std::size_t>(sites_), 0);
    for (;;) {
        if (kind_ == Kind::all || state_counts(sigma, kappa_) == *counts_) out.push_back(sigma);
        int i = sites_ - 1;
        while (i >= 0 && sigma[static_cast<std::size_t>(i)] == kappa_ - 1) sigma[static_cast<std::size_t>(i--)] = 0;
        if (i < 0) break;
        ++sigma[static_cast<std::size_t>(i)];
    }
    return out;
}

}  // namespace potts
