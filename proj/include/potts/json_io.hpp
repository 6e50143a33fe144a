#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "potts/cascade.hpp"
#include "potts/core.hpp"
#include "potts/diagnostics.hpp"
#include "potts/functional.hpp"
#include "potts/model.hpp"
#include "potts/optimize.hpp"
#include "potts/overlap.hpp"

namespace potts::io {

using Json = nlohmann::json;

// Deterministic text: sorted keys, doubles with 17 significant digits,
// non-finite doubles as null.
std::string dump(const Json& j, int indent = 2);
Json parse(const std::string& text);

// %.17g, or nan/inf.
std::string format_double(double v);

// Header line plus rows; cells are numbers, strings or booleans.
std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<Json>>& rows);

Json to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

Json to_json(const StateDistribution& d);
StateDistribution distribution_from_json(const Json& j);

// {"kappa", "d", "x", "gammas"}.
Json to_json(const MonotonePath& p);
MonotonePath path_from_json(const Json& j);

Json to_json(const EvalResult& r);
EvalResult eval_result_from_json(const Json& j);

// {"n", "kappa", "traces": n×n, "blocks": n×n×κ×κ}.
Json to_json(const OverlapArray& a);
OverlapArray overlap_array_from_json(const Json& j);

// {"N", "kappa", "beta", "d", "estimate", "se", "method", ...}.
Json to_json(const FreeEnergyReport& r);
FreeEnergyReport free_energy_from_json(const Json& j);

Json to_json(const OptimizerReport& r);
OptimizerReport optimizer_report_from_json(const Json& j);

Json to_json(const YIdentityReport& r);
Json to_json(const CoincidenceLevel& c);
Json to_json(const GgResidual& r);
Json to_json(const SyncFit& f);
Json to_json(const InterpolationCurve& c);
Json to_json(const LegendreReport& r);
Json to_json(const AssReport& r);

}  // namespace potts::io
