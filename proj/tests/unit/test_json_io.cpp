#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "potts/errors.hpp"
#include "potts/json_io.hpp"

using namespace potts;
using potts::testing::random_distribution;
using potts::testing::random_path;

namespace {

io::Json reparse(const io::Json& j)
{
    return io::parse(io::dump(j));
}

}  // namespace

TEST_CASE("doubles keep 17 significant digits")
{
    CHECK(io::format_double(0.1) == "0.10000000000000001");
    CHECK(io::format_double(2.0) == "2.0");
    CHECK(io::format_double(-1e-300) == "-1e-300");
    CHECK(io::format_double(1.0 / 3.0) == "0.33333333333333331");
    CHECK(io::format_double(std::nan("")) == "nan");
    Rng rng = make_rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double v = std::ldexp(uniform01(rng) - 0.5, static_cast<int>(rng() % 200) - 100);
        CHECK(io::parse(io::dump(io::Json(v))).get<double>() == v);
    }
}

TEST_CASE("dump is deterministic and compact when asked")
{
    io::Json j{{"b", 1.5}, {"a", {1, 2, 3}}, {"c", {{"z", true}, {"y", nullptr}}}};
    CHECK(io::dump(j, -1) == R"({"a":[1,2,3],"b":1.5,"c":{"y":null,"z":true}})");
    CHECK(io::dump(j) == io::dump(reparse(j)));
    CHECK(io::dump(io::Json(std::numeric_limits<double>::infinity())) == "null");
}

TEST_CASE("path round trip")
{
    Rng rng = make_rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const int kappa = 1 + trial % 3;
        const auto d = random_distribution(rng, kappa);
        const MonotonePath p = random_path(rng, d, 1 + trial % 3);
        const io::Json j = io::to_json(p);
        CHECK(j["kappa"] == kappa);
        const MonotonePath q = io::path_from_json(reparse(j));
        CHECK(q.x() == p.x());
        for (int l = 0; l <= p.levels(); ++l) CHECK((q.gamma(l) - p.gamma(l)).cwiseAbs().maxCoeff() == 0.0);
        CHECK(io::to_json(q) == j);
    }
}

TEST_CASE("path documents are validated")
{
    const io::Json good = io::parse(R"({"kappa":2,"d":[0.5,0.5],"x":[0.5,1],"gammas":[[[0,0],[0,0]],[[0.5,0],[0,0.5]]]})");
    CHECK_NOTHROW(io::path_from_json(good));
    io::Json bad = good;
    bad["kappa"] = 3;
    CHECK_THROWS_AS(io::path_from_json(bad), MalformedInput);
    bad = good;
    bad.erase("x");
    CHECK_THROWS_AS(io::path_from_json(bad), MalformedInput);
    bad = good;
    bad["gammas"][1] = io::parse("[[0.5,0],[0]]");
    CHECK_THROWS_AS(io::path_from_json(bad), MalformedInput);
    bad = good;
    bad["x"] = io::parse("[0.5, 0.9]");
    CHECK_THROWS_AS(io::path_from_json(bad), ValidationError);
    CHECK_THROWS_AS(io::parse("{\"kappa\": "), MalformedInput);
}

TEST_CASE("report round trips")
{
    EvalResult e;
    e.value = std::log(2.0);
    e.std_error = 0.25;
    e.method = EvalMethod::cascade_mc;
    e.diagnostics["reps"] = 400;
    const EvalResult e2 = io::eval_result_from_json(reparse(io::to_json(e)));
    CHECK(e2.value == e.value);
    CHECK(e2.method == e.method);
    CHECK(e2.diagnostics == e.diagnostics);

    FreeEnergyReport f;
    f.n = 5;
    f.kappa = 2;
    f.beta = 0.7;
    f.d = std::vector<double>{0.4, 0.6};
    f.estimate = 0.81234567890123456;
    f.std_error = 1e-3;
    f.method = "mcmc";
    f.warnings = {"low swap acceptance"};
    f.ladder = {0.0, 0.35, 0.7};
    f.ladder_values = {0.0, 0.1, 0.2};
    const io::Json fj = io::to_json(f);
    CHECK(fj["se"] == f.std_error);
    CHECK(io::to_json(io::free_energy_from_json(reparse(fj))) == fj);

    OptimizerReport o;
    o.value = 0.9;
    o.kappa = 2;
    o.r = 1;
    o.beta = 1;
    o.d = {0.5, 0.5};
    o.lambda = {0.0};
    o.x = {0.3, 1.0};
    o.gammas = {Matrix::Zero(2, 2), StateDistribution::uniform(2).diag()};
    o.trace = {1.0, 0.9};
    o.starts = {{0.9, 10, 20, true}};
    o.grid = {{{0.5, 0.5}, 0.9}};
    const io::Json oj = io::to_json(o);
    CHECK(io::to_json(io::optimizer_report_from_json(reparse(oj))) == oj);
}

TEST_CASE("overlap array round trip")
{
    OverlapArray a;
    a.n = 3;
    a.kappa = 2;
    Rng rng = make_rng(5);
    for (int i = 0; i < 9; ++i) {
        a.traces.push_back(uniform01(rng));
        a.blocks.push_back(testing::random_psd(rng, 2));
    }
    const io::Json j = io::to_json(a);
    CHECK(j["blocks"][1][2][0][1] == a.block(1, 2)(0, 1));
    const OverlapArray b = io::overlap_array_from_json(reparse(j));
    CHECK(b.traces == a.traces);
    for (int l = 0; l < 3; ++l)
        for (int m = 0; m < 3; ++m) CHECK(b.block(l, m) == a.block(l, m));
    io::Json bad = j;
    bad["n"] = 4;
    CHECK_THROWS_AS(io::overlap_array_from_json(bad), MalformedInput);
}

TEST_CASE("csv output")
{
    const std::string s = io::csv({"t", "estimate", "se"}, {{0.5, 1.0 / 3.0, "x"}, {1, true, nullptr}});
    CHECK(s == "t,estimate,se\n0.5,0.33333333333333331,x\n1,true,null\n");
}
