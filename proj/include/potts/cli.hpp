#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "potts/functional.hpp"
#include "potts/json_io.hpp"
#include "potts/model.hpp"
#include "potts/optimize.hpp"

namespace potts::cli {

struct BoundCheckParams {
    int n = 8;
    int kappa = 2;
    double beta = 1.0;
    int samples = 200;
    int r = 1;
    int m = 8;
    double budget = 2e7;
    OptimizerConfig optimizer;
    CascadeMcSpec mc;
    std::uint64_t seed = 1;
};

struct BoundCheckReport {
    BoundCheckParams params;
    // κ log(N+1)/N.
    double correction = 0.0;
    FreeEnergyReport middle;
    OptimizerReport upper;
    // δ = d rounded to M sites.
    std::vector<double> delta;
    // Inner optimum at δ when δ differs from the maximizer; its path ends at
    // diag(δ) and carries the lower bound.
    std::optional<OptimizerReport> delta_optimum;
    EvalResult lower;
    // lower − 3 SE ≤ middle.
    bool lower_pass = false;
    // middle ≤ upper + correction + 3 SE.
    bool upper_pass = false;
    bool pass = false;
};

// Enumeration (middle), outer_maximize (upper), eval_lower_bound with M sites
// at the optimizer's path for δ (lower).
BoundCheckReport bound_check(const BoundCheckParams& p);
io::Json to_json(const BoundCheckReport& r);

// "uniform-r<r>": x_p = (p+1)/(r+1), γ_p = (p/r)·diag(d). "one-step:<x0>".
// Anything else is read as a JSON path file.
MonotonePath resolve_path(const std::string& spec, const StateDistribution& d);

// Parses argv[1..] and runs one subcommand. Exit status 0 on success, 2 on
// usage or validation errors, 3 when a budget is exceeded.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace potts::cli
