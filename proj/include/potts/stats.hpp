#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace potts {

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

// log Σ exp(v_i), max-shifted.
double log_sum_exp(std::span<const double> v);

// Running log-sum-exp over a stream of terms.
class LogSumExp {
public:
    void add(double v)
    {
        if (v <= max_) {
            sum_ += std::exp(v - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - v) + 1.0;
            max_ = v;
        }
    }
    double value() const { return max_ + std::log(sum_); }
    bool empty() const { return sum_ == 0.0; }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

// Sample mean and its standard error (the delete-one jackknife SE of a mean
// coincides with this).
Estimate mean_se(std::span<const double> v);

// Paired difference a_i - b_i.
Estimate mean_se_diff(std::span<const double> a, std::span<const double> b);

// log of N! / Π counts_k!.
double log_multinomial(std::span<const int> counts);

}  // namespace potts
