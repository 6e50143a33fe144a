#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "potts/cli.hpp"
#include "potts/errors.hpp"
#include "potts/json_io.hpp"

using namespace potts;

namespace {

struct Result {
    int status = 0;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args)
{
    args.insert(args.begin(), "potts");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int status = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {status, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& text)
{
    const std::string path = "cli_test_" + name;
    std::ofstream(path) << text;
    return path;
}

}  // namespace

TEST_CASE("eval-parisi at beta = 0 gives log 2")
{
    const Result r = call({"eval-parisi", "--kappa", "2", "--beta", "0", "--lambda", "0", "--path", "uniform-r1"});
    REQUIRE(r.status == 0);
    const io::Json j = io::parse(r.out);
    CHECK(j["value"].get<double>() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    const EvalResult e = io::eval_result_from_json(j);
    CHECK(io::dump(io::to_json(e)) + "\n" == r.out);
}

TEST_CASE("free-energy of one site averages to log 3")
{
    const Result r = call({"free-energy", "--N", "1", "--kappa", "3", "--beta", "1", "--samples", "10000"});
    REQUIRE(r.status == 0);
    const FreeEnergyReport f = io::free_energy_from_json(io::parse(r.out));
    CHECK(f.n == 1);
    CHECK(f.method == "enumeration");
    CHECK(std::abs(f.estimate - std::log(3.0)) <= 3.0 * f.std_error);
    CHECK(io::dump(io::to_json(f)) + "\n" == r.out);
}

TEST_CASE("exit codes")
{
    const Result unknown = call({"eval-parisi", "--beta", "0", "--bogus"});
    CHECK(unknown.status == 2);
    CHECK(unknown.err.find("Usage") != std::string::npos);
    CHECK(unknown.out.empty());

    CHECK(call({}).status == 2);
    CHECK(call({"no-such-command"}).status == 2);
    CHECK(call({"eval-parisi"}).status == 2);
    CHECK(call({"eval-parisi", "--beta", "1", "--path", "one-step:1.5"}).status == 2);
    CHECK(call({"eval-parisi", "--beta", "1", "--path", "uniform-rx"}).status == 2);
    CHECK(call({"eval-parisi", "--beta", "1", "--path", "missing.json"}).status == 2);
    CHECK(call({"eval-parisi", "--beta", "1", "--kappa", "3", "--lambda", "1", "2", "3"}).status == 2);
    CHECK(call({"eval-parisi", "--beta", "1", "--kappa", "3", "--d", "0.5", "0.5"}).status == 2);
    CHECK(call({"free-energy", "--N", "30", "--kappa", "3", "--beta", "1", "--samples", "2"}).status == 3);
    CHECK(call({"free-energy", "--N", "3", "--beta", "1", "--format", "xml"}).status == 2);

    const Result help = call({"--help"});
    CHECK(help.status == 0);
    CHECK(help.out.find("bound-check") != std::string::npos);
}

TEST_CASE("lambda broadcasts one value")
{
    const Result a = call({"eval-parisi", "--kappa", "3", "--beta", "0.5", "--lambda", "0.3"});
    const Result b = call({"eval-parisi", "--kappa", "3", "--beta", "0.5", "--lambda", "0.3", "0.3"});
    REQUIRE(a.status == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("named and file paths")
{
    const auto d = StateDistribution::from({0.25, 0.75});
    const MonotonePath p = cli::resolve_path("uniform-r3", d);
    CHECK(p.levels() == 3);
    CHECK(p.x_at(0) == 0.25);
    CHECK(p.x_at(3) == 1.0);
    CHECK((p.gamma(2) - d.diag() * (2.0 / 3.0)).cwiseAbs().maxCoeff() < 1e-15);
    const MonotonePath q = cli::resolve_path("one-step:0.4", d);
    CHECK(q.levels() == 1);
    CHECK(q.x_at(0) == 0.4);

    const std::string file = temp_file("path.json", io::dump(io::to_json(p)));
    const MonotonePath back = cli::resolve_path(file, StateDistribution::uniform(2));
    CHECK(back.x() == p.x());
    const Result r = call({"eval-parisi", "--beta", "1", "--path", file});
    const Result s = call({"eval-parisi", "--beta", "1", "--d", "0.25", "0.75", "--path", "uniform-r3"});
    REQUIRE(r.status == 0);
    CHECK(r.out == s.out);
    CHECK(call({"eval-parisi", "--beta", "1", "--kappa", "3", "--path", file}).status == 2);
    std::remove(file.c_str());
}

TEST_CASE("config file merges under flags")
{
    const std::string cfg = temp_file(
        "config.json",
        R"({"format": "csv", "eval-parisi": {"beta": 1.0, "lambda": [0.2], "path": "one-step:0.3"}, "optimize": {"starts": 2}})");
    const Result a = call({"--config", cfg, "eval-parisi"});
    const Result b = call({"eval-parisi", "--beta", "1", "--lambda", "0.2", "--path", "one-step:0.3", "--format", "csv"});
    REQUIRE(a.status == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind("value,std_error,method\n", 0) == 0);

    const Result c = call({"--config", cfg, "eval-parisi", "--beta", "0", "--format", "json"});
    const Result d = call({"eval-parisi", "--beta", "0", "--lambda", "0.2", "--path", "one-step:0.3"});
    REQUIRE(c.status == 0);
    CHECK(c.out == d.out);

    const std::string bad = temp_file("bad.json", R"({"eval-parisi": {"no_such_flag": 1}})");
    const Result e = call({"--config", bad, "eval-parisi", "--beta", "0"});
    CHECK(e.status == 2);
    CHECK(e.err.find("no-such-flag") != std::string::npos);
    const std::string broken = temp_file("broken.json", "{\"seed\": ");
    CHECK(call({"--config", broken, "eval-parisi", "--beta", "0"}).status == 2);
    for (const auto& f : {cfg, bad, broken}) std::remove(f.c_str());
}

TEST_CASE("output file and csv tables")
{
    const std::string file = "cli_test_out.csv";
    const Result r = call({"free-energy", "--N", "2", "--beta", "0.5", "--samples", "3", "--format", "csv", "--out", file});
    REQUIRE(r.status == 0);
    CHECK(r.out.empty());
    std::ifstream in(file);
    std::string header, line;
    std::getline(in, header);
    CHECK(header == "draw,value");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 3);
    std::remove(file.c_str());
}

TEST_CASE("output does not depend on the thread count")
{
    const std::vector<std::vector<std::string>> runs{
        {"optimize", "--beta", "1", "--d", "0.4", "0.6", "--starts", "3", "--max-iterations", "300"},
        {"diag-gg", "--arrays", "200", "--bootstrap", "40"},
        {"free-energy", "--N", "5", "--beta", "1", "--samples", "20"},
        {"cascade-verify", "--check", "coincidence", "--cascades", "300", "--atoms", "40"},
    };
    for (auto args : runs) {
        args.push_back("--seed");
        args.push_back("17");
        auto one = args, many = args;
        one.insert(one.end(), {"--threads", "1"});
        many.insert(many.end(), {"--threads", "8"});
        const Result a = call(one);
        const Result b = call(many);
        INFO(args.front());
        REQUIRE(a.status == 0);
        CHECK(a.out == b.out);
        CHECK(call(one).out == a.out);
    }
}

TEST_CASE("optimizer output round trips")
{
    const Result r = call({"optimize", "--beta", "0.5", "--d", "0.3", "0.7", "--starts", "1", "--max-iterations", "200"});
    REQUIRE(r.status == 0);
    const OptimizerReport o = io::optimizer_report_from_json(io::parse(r.out));
    CHECK(io::dump(io::to_json(o)) + "\n" == r.out);
}

TEST_CASE("bound check at beta = 0")
{
    cli::BoundCheckParams p;
    p.n = 6;
    p.kappa = 2;
    p.beta = 0.0;
    p.samples = 5;
    p.optimizer.starts = 1;
    p.optimizer.max_iterations = 300;
    p.optimizer.refine_iterations = 5;
    p.mc.atoms_per_level = 20;
    p.mc.reps = 20;
    const cli::BoundCheckReport r = cli::bound_check(p);
    CHECK(r.middle.estimate == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(r.middle.std_error == 0.0);
    CHECK(r.upper.value == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    // (1/M) log C(8, 4).
    CHECK(r.lower.value == doctest::Approx(std::log(70.0) / 8.0).epsilon(1e-12));
    CHECK(r.lower.value >= std::log(2.0) - 2.0 * std::log(9.0) / 8.0);
    CHECK(r.pass);
    const io::Json j = cli::to_json(r);
    CHECK(j["upper"].get<double>() >= j["lower"].get<double>());
    CHECK(j["pass"].get<bool>());
}
