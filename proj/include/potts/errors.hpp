#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace potts {

// Malformed input: wrong shapes, non-finite numbers, unparsable documents.
class MalformedInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Well-formed input that violates a domain invariant (invalid path, empty set).
class ValidationError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(const std::string& what, double required, double budget)
        : std::runtime_error(what + ": requires " + format(required) + ", budget " + format(budget)),
          required_(required), budget_(budget) {}

    double required() const { return required_; }
    double budget() const { return budget_; }

private:
    static std::string format(double v);

    double required_;
    double budget_;
};

inline std::string BudgetExceeded::format(double v)
{
    if (v < 1e15) return std::to_string(static_cast<unsigned long long>(v));
    return std::to_string(v);
}

}  // namespace potts
