#include "potts/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "potts/errors.hpp"

namespace potts::io {

namespace {

void write(std::ostringstream& out, const Json& j, int indent, int depth)
{
    const auto newline = [&](int d) {
        if (indent < 0) return;
        out << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
    };
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            out << "{}";
            return;
        }
        out << '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out << ',';
            first = false;
            newline(depth + 1);
            out << Json(it.key()).dump() << (indent < 0 ? ":" : ": ");
            write(out, it.value(), indent, depth + 1);
        }
        newline(depth);
        out << '}';
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            out << "[]";
            return;
        }
        // Arrays of scalars stay on one line.
        bool flat = true;
        for (const Json& v : j) flat = flat && !v.is_structured();
        out << '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) out << (flat && indent >= 0 ? ", " : ",");
            if (!flat) newline(depth + 1);
            write(out, j[i], indent, depth + 1);
        }
        if (!flat) newline(depth);
        out << ']';
        return;
    }
    case Json::value_t::number_float: {
        const double v = j.get<double>();
        out << (std::isfinite(v) ? format_double(v) : "null");
        return;
    }
    default:
        out << j.dump();
    }
}

const Json& field(const Json& j, const char* key)
{
    if (!j.is_object()) throw MalformedInput("expected a JSON object");
    const auto it = j.find(key);
    if (it == j.end()) throw MalformedInput(std::string("missing field \"") + key + "\"");
    return *it;
}

double number(const Json& j)
{
    if (j.is_null()) return std::nan("");
    if (!j.is_number()) throw MalformedInput("expected a number");
    return j.get<double>();
}

std::vector<double> numbers(const Json& j)
{
    if (!j.is_array()) throw MalformedInput("expected an array of numbers");
    std::vector<double> out;
    for (const Json& v : j) out.push_back(number(v));
    return out;
}

template <class T>
T get(const Json& j, const char* key)
{
    try {
        return field(j, key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw MalformedInput(std::string("field \"") + key + "\": " + e.what());
    }
}

Json map_json(const std::map<std::string, double>& m)
{
    Json j = Json::object();
    for (const auto& [k, v] : m) j[k] = v;
    return j;
}

std::map<std::string, double> map_from_json(const Json& j)
{
    if (!j.is_object()) throw MalformedInput("expected an object of numbers");
    std::map<std::string, double> m;
    for (auto it = j.begin(); it != j.end(); ++it) m[it.key()] = number(it.value());
    return m;
}

}  // namespace

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string dump(const Json& j, int indent)
{
    std::ostringstream out;
    write(out, j, indent, 0);
    return out.str();
}

Json parse(const std::string& text)
{
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedInput(std::string("invalid JSON: ") + e.what());
    }
}

std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<Json>>& rows)
{
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            const Json& c = row[i];
            if (c.is_number_float()) out << format_double(c.get<double>());
            else if (c.is_string()) out << c.get<std::string>();
            else out << c.dump();
        }
        out << '\n';
    }
    return out.str();
}

Json to_json(const Matrix& m)
{
    Json j = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        j.push_back(std::move(row));
    }
    return j;
}

Matrix matrix_from_json(const Json& j)
{
    if (!j.is_array() || j.empty()) throw MalformedInput("matrix must be a non-empty array of rows");
    const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::vector<double> row = numbers(j[i]);
        if (row.size() != cols) throw MalformedInput("matrix rows have different lengths");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!std::isfinite(row[c])) throw MalformedInput("matrix has a non-finite entry");
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
        }
    }
    return m;
}

Json to_json(const StateDistribution& d)
{
    return Json{{"kappa", d.kappa()}, {"d", d.values()}};
}

StateDistribution distribution_from_json(const Json& j)
{
    const StateDistribution d = StateDistribution::from(numbers(field(j, "d")));
    if (j.contains("kappa") && get<int>(j, "kappa") != d.kappa()) throw MalformedInput("kappa does not match d");
    return d;
}

Json to_json(const MonotonePath& p)
{
    Json g = Json::array();
    for (const Matrix& m : p.gammas()) g.push_back(to_json(m));
    return Json{{"kappa", p.kappa()}, {"d", p.distribution().values()}, {"x", p.x()}, {"gammas", g}};
}

MonotonePath path_from_json(const Json& j)
{
    const StateDistribution d = distribution_from_json(j);
    std::vector<Matrix> gammas;
    const Json& g = field(j, "gammas");
    if (!g.is_array()) throw MalformedInput("gammas must be an array of matrices");
    for (const Json& m : g) gammas.push_back(matrix_from_json(m));
    return MonotonePath::make(d, numbers(field(j, "x")), std::move(gammas));
}

Json to_json(const EvalResult& r)
{
    return Json{{"value", r.value},
                {"std_error", r.std_error},
                {"method", to_string(r.method)},
                {"diagnostics", map_json(r.diagnostics)}};
}

EvalResult eval_result_from_json(const Json& j)
{
    EvalResult r;
    r.value = number(field(j, "value"));
    r.std_error = number(field(j, "std_error"));
    const std::string method = get<std::string>(j, "method");
    if (method == to_string(EvalMethod::quadrature)) r.method = EvalMethod::quadrature;
    else if (method == to_string(EvalMethod::cascade_mc)) r.method = EvalMethod::cascade_mc;
    else throw MalformedInput("unknown evaluation method \"" + method + "\"");
    if (j.contains("diagnostics")) r.diagnostics = map_from_json(j["diagnostics"]);
    return r;
}

Json to_json(const OverlapArray& a)
{
    Json traces = Json::array(), blocks = Json::array();
    for (int l = 0; l < a.n; ++l) {
        Json trow = Json::array(), brow = Json::array();
        for (int m = 0; m < a.n; ++m) {
            trow.push_back(a.trace(l, m));
            brow.push_back(to_json(a.block(l, m)));
        }
        traces.push_back(std::move(trow));
        blocks.push_back(std::move(brow));
    }
    return Json{{"n", a.n}, {"kappa", a.kappa}, {"traces", traces}, {"blocks", blocks}};
}

OverlapArray overlap_array_from_json(const Json& j)
{
    OverlapArray a;
    a.n = get<int>(j, "n");
    a.kappa = get<int>(j, "kappa");
    if (a.n < 1 || a.kappa < 1) throw MalformedInput("overlap array needs n >= 1 and kappa >= 1");
    const Json& traces = field(j, "traces");
    const Json& blocks = field(j, "blocks");
    if (!traces.is_array() || !blocks.is_array() || traces.size() != static_cast<std::size_t>(a.n) ||
        blocks.size() != static_cast<std::size_t>(a.n))
        throw MalformedInput("overlap array needs n rows of traces and blocks");
    for (int l = 0; l < a.n; ++l) {
        const std::vector<double> trow = numbers(traces[static_cast<std::size_t>(l)]);
        const Json& brow = blocks[static_cast<std::size_t>(l)];
        if (trow.size() != static_cast<std::size_t>(a.n) || !brow.is_array() || brow.size() != static_cast<std::size_t>(a.n))
            throw MalformedInput("overlap array rows must have n entries");
        for (int m = 0; m < a.n; ++m) {
            a.traces.push_back(trow[static_cast<std::size_t>(m)]);
            Matrix b = matrix_from_json(brow[static_cast<std::size_t>(m)]);
            if (b.rows() != a.kappa || b.cols() != a.kappa) throw MalformedInput("overlap block has the wrong size");
            a.blocks.push_back(std::move(b));
        }
    }
    return a;
}

Json to_json(const FreeEnergyReport& r)
{
    Json j{{"N", r.n},
           {"kappa", r.kappa},
           {"beta", r.beta},
           {"d", r.d ? Json(*r.d) : Json(nullptr)},
           {"estimate", r.estimate},
           {"se", r.std_error},
           {"method", r.method},
           {"diagnostics", map_json(r.diagnostics)},
           {"warnings", r.warnings}};
    if (!r.ladder.empty()) {
        j["ladder"] = r.ladder;
        j["ladder_values"] = r.ladder_values;
    }
    return j;
}

FreeEnergyReport free_energy_from_json(const Json& j)
{
    FreeEnergyReport r;
    r.n = get<int>(j, "N");
    r.kappa = get<int>(j, "kappa");
    r.beta = number(field(j, "beta"));
    if (!field(j, "d").is_null()) r.d = numbers(j["d"]);
    r.estimate = number(field(j, "estimate"));
    r.std_error = number(field(j, "se"));
    r.method = get<std::string>(j, "method");
    if (j.contains("diagnostics")) r.diagnostics = map_from_json(j["diagnostics"]);
    if (j.contains("warnings")) r.warnings = get<std::vector<std::string>>(j, "warnings");
    if (j.contains("ladder")) {
        r.ladder = numbers(j["ladder"]);
        r.ladder_values = numbers(field(j, "ladder_values"));
    }
    return r;
}

Json to_json(const OptimizerReport& r)
{
    Json gammas = Json::array();
    for (const Matrix& m : r.gammas) gammas.push_back(to_json(m));
    Json starts = Json::array();
    for (const StartSummary& s : r.starts)
        starts.push_back(Json{{"value", s.value}, {"iterations", s.iterations}, {"evaluations", s.evaluations},
                              {"feasible", s.feasible}});
    Json grid = Json::array();
    for (const GridPoint& g : r.grid) grid.push_back(Json{{"d", g.d}, {"value", g.value}});
    return Json{{"value", r.value},
                {"kappa", r.kappa},
                {"r", r.r},
                {"beta", r.beta},
                {"d", r.d},
                {"lambda", r.lambda},
                {"x", r.x},
                {"gammas", gammas},
                {"trace", r.trace},
                {"starts", starts},
                {"winning_start", r.winning_start},
                {"evaluations", r.evaluations},
                {"rejections", r.rejections},
                {"grid", grid}};
}

OptimizerReport optimizer_report_from_json(const Json& j)
{
    OptimizerReport r;
    r.value = number(field(j, "value"));
    r.kappa = get<int>(j, "kappa");
    r.r = get<int>(j, "r");
    r.beta = number(field(j, "beta"));
    r.d = numbers(field(j, "d"));
    r.lambda = numbers(field(j, "lambda"));
    r.x = numbers(field(j, "x"));
    for (const Json& m : field(j, "gammas")) r.gammas.push_back(matrix_from_json(m));
    r.trace = numbers(field(j, "trace"));
    for (const Json& s : field(j, "starts"))
        r.starts.push_back({number(field(s, "value")), get<int>(s, "iterations"), get<int>(s, "evaluations"),
                            get<bool>(s, "feasible")});
    r.winning_start = get<int>(j, "winning_start");
    r.evaluations = get<int>(j, "evaluations");
    r.rejections = get<int>(j, "rejections");
    for (const Json& g : field(j, "grid")) r.grid.push_back({numbers(field(g, "d")), number(field(g, "value"))});
    return r;
}

Json to_json(const YIdentityReport& r)
{
    return Json{{"closed_form", r.closed_form},
                {"estimate", r.estimate},
                {"std_error", r.std_error},
                {"estimate_doubled", r.estimate_doubled},
                {"std_error_doubled", r.std_error_doubled},
                {"truncation_allowance", r.truncation_allowance},
                {"discrepancy_se", r.discrepancy_se},
                {"pass", r.pass}};
}

Json to_json(const CoincidenceLevel& c)
{
    return Json{{"level", c.level}, {"expected", c.expected}, {"estimate", c.estimate}, {"std_error", c.std_error}};
}

Json to_json(const GgResidual& r)
{
    return Json{{"signed_residual", r.signed_residual},
                {"residual", r.residual},
                {"std_error", r.std_error},
                {"arrays", r.arrays},
                {"n", r.n},
                {"tuples_per_array", r.tuples_per_array}};
}

Json to_json(const SyncFit& f)
{
    Json phi = Json::array();
    for (const Matrix& m : f.phi_hat) phi.push_back(to_json(m));
    return Json{{"grid", f.grid},
                {"phi_hat", phi},
                {"bin_counts", f.bin_counts},
                {"residual", f.residual},
                {"lipschitz_hat", f.lipschitz_hat},
                {"bin_width", f.bin_width},
                {"blocks", f.blocks}};
}

Json to_json(const InterpolationCurve& c)
{
    return Json{{"t", c.t},
                {"values", c.values},
                {"std_errors", c.std_errors},
                {"increments", c.increments},
                {"increment_se", c.increment_se},
                {"max_positive_increment", c.max_positive_increment},
                {"max_increment_se", c.max_increment_se},
                {"monotone", c.monotone},
                {"y_term", c.y_term},
                {"y_term_se", c.y_term_se},
                {"y_closed_form", c.y_closed_form},
                {"endpoint", c.endpoint},
                {"endpoint_se", c.endpoint_se}};
}

Json to_json(const LegendreReport& r)
{
    Json rows = Json::array();
    for (const LegendreRow& row : r.rows)
        rows.push_back(Json{{"M", row.m},
                            {"primal", row.primal},
                            {"primal_se", row.primal_se},
                            {"dual", row.dual},
                            {"dual_argmin", row.dual_argmin},
                            {"gap", row.gap},
                            {"gap_se", row.gap_se}});
    return Json{{"rows", rows}, {"nonnegative", r.nonnegative}, {"nonincreasing", r.nonincreasing}};
}

Json to_json(const AssReport& r)
{
    Json checks = Json::array();
    for (const AssCheck& c : r.checks)
        checks.push_back(Json{{"name", c.name},
                              {"estimate", c.estimate},
                              {"target", c.target},
                              {"std_error", c.std_error},
                              {"pass", c.pass}});
    return Json{{"N", r.n},
                {"M", r.m},
                {"kappa", r.kappa},
                {"draws", r.draws},
                {"checks", checks},
                {"decomposition_error", r.decomposition_error},
                {"covariance_identity_error", r.covariance_identity_error},
                {"pass", r.pass}};
}

}  // namespace potts::io
