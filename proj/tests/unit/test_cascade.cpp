#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "potts/cascade.hpp"
#include "potts/errors.hpp"
#include "potts/stats.hpp"

using namespace potts;
using potts::testing::random_distribution;
using potts::testing::random_path;

namespace {

CascadeMcSpec mc(int reps, std::uint64_t seed, int atoms = 200)
{
    CascadeMcSpec s;
    s.reps = reps;
    s.seed = seed;
    s.atoms_per_level = atoms;
    return s;
}

}  // namespace

TEST_CASE("cascade spec validation")
{
    CHECK_NOTHROW(CascadeSpec{{0.2, 0.5}, 10}.validate());
    CHECK_THROWS_AS(CascadeSpec({{0.5, 0.5}, 10}).validate(), ValidationError);
    CHECK_THROWS_AS(CascadeSpec({{0.0, 0.5}, 10}).validate(), ValidationError);
    CHECK_THROWS_AS(CascadeSpec({{0.2, 1.0}, 10}).validate(), ValidationError);
    CHECK_THROWS_AS(CascadeSpec({{0.2}, 1}).validate(), MalformedInput);
}

TEST_CASE("leaf weights are normalized and the tree is consistent")
{
    {
        CascadeSpec spec{{0.2, 0.5, 0.7}, 12};
        auto c = sample_cascade(spec, 3);
        CHECK(c.leaf_count() == 12u * 12u * 12u);
        const auto w = c.leaf_weights();
        CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(*std::min_element(w.begin(), w.end()) >= 0.0);
        for (std::size_t leaf : {0u, 17u, 1000u}) {
            CHECK(c.meet(leaf, leaf) == 3);
            CHECK(c.leaf_log_weight(leaf) == doctest::Approx(c.leaf_log_weights()[leaf]).epsilon(1e-14));
        }
        CHECK(c.meet(0, 1) == 2);
        CHECK(c.meet(0, 12) == 1);
        CHECK(c.meet(0, 144) == 0);
        const auto s = c.coincidence_sums();
        double direct = 0.0;
        for (double v : w) direct += v * v;
        CHECK(s.back() == doctest::Approx(direct).epsilon(1e-12));
        CHECK(s.front() == doctest::Approx(1.0));
    }
}

TEST_CASE("stick-breaking cascades are single-level")
{
    auto c = sample_cascade(CascadeSpec{{0.4}, 20, PdSampler::stick_breaking}, 3);
    const auto w = c.leaf_weights();
    CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(sample_cascade(CascadeSpec{{0.2, 0.4}, 20, PdSampler::stick_breaking}, 3), ValidationError);
}

TEST_CASE("Poisson-Dirichlet atoms are decreasing")
{
    Rng rng = make_rng(31);
    for (auto sampler : {PdSampler::poisson_points, PdSampler::stick_breaking}) {
        const auto lw = sample_poisson_dirichlet(0.4, 50, rng, sampler);
        CHECK(std::is_sorted(lw.begin(), lw.end(), std::greater<>()));
        CHECK(log_sum_exp(lw) == doctest::Approx(0.0).epsilon(1e-14));
    }
    CHECK_THROWS_AS(sample_poisson_dirichlet(1.0, 5, rng), ValidationError);
}

TEST_CASE("coincidence mass identities")
{
    // r = 1: E Σ_{α≠α′} v_α v_α′ = x_0, for both samplers.
    for (auto sampler : {PdSampler::poisson_points, PdSampler::stick_breaking}) {
        std::vector<double> m0;
        Rng rng = make_rng(32);
        for (int i = 0; i < 4000; ++i) {
            auto c = sample_cascade(CascadeSpec{{0.3}, 200, sampler}, rng);
            m0.push_back(1.0 - c.coincidence_sums()[1]);
        }
        const Estimate e = mean_se(m0);
        CHECK(std::abs(e.value - 0.3) <= 3 * e.std_error);
    }
    const auto levels = coincidence_masses(CascadeSpec{{0.25, 0.4}, 200}, 3000, 5);
    REQUIRE(levels.size() == 3);
    CHECK(levels[0].expected == doctest::Approx(0.25));
    CHECK(levels[1].expected == doctest::Approx(0.15));
    CHECK(levels[2].expected == doctest::Approx(0.6));
    for (const auto& l : levels) CHECK(std::abs(l.estimate - l.expected) <= 3 * l.std_error);
}

TEST_CASE("overlap arrays from cascades")
{
    const std::vector<double> q{0.0, 0.4, 1.0};
    const auto d = StateDistribution::from({0.5, 0.5});
    TraceMap phi = [&](double t) -> Matrix { return t * d.diag(); };
    auto c = sample_cascade(CascadeSpec{{0.3, 0.6}, 50}, 7);
    auto a = sample_overlap_array(c, q, phi, 12, 8);
    for (int l = 0; l < 12; ++l) {
        CHECK(a.trace(l, l) == 1.0);
        CHECK((a.block(l, l) - d.diag()).cwiseAbs().maxCoeff() == 0.0);
    }
    // Ultrametricity: the two smallest of each triple coincide.
    for (int i = 0; i < 12; ++i)
        for (int j = i + 1; j < 12; ++j)
            for (int k = j + 1; k < 12; ++k) {
                std::array<double, 3> t{a.trace(i, j), a.trace(i, k), a.trace(j, k)};
                std::sort(t.begin(), t.end());
                CHECK(t[0] == t[1]);
            }

    auto c1 = sample_cascade(CascadeSpec{{0.5}, 50}, 9);
    auto a1 = sample_overlap_array(c1, std::vector<double>{0.0, 0.7}, phi, 10, 10);
    for (int l = 0; l < 10; ++l)
        for (int m = 0; m < 10; ++m)
            if (l != m) CHECK((a1.trace(l, m) == 0.0 || a1.trace(l, m) == 0.7));

    // Pair fractions follow the coincidence masses.
    std::vector<std::vector<double>> hits(3);
    for (int i = 0; i < 3000; ++i) {
        auto ci = sample_cascade(CascadeSpec{{0.3, 0.6}, 200}, 100 + static_cast<std::uint64_t>(i));
        auto ai = sample_overlap_array(ci, q, phi, 2, 5000 + static_cast<std::uint64_t>(i));
        for (int p = 0; p < 3; ++p) hits[static_cast<std::size_t>(p)].push_back(ai.trace(0, 1) == q[static_cast<std::size_t>(p)] ? 1.0 : 0.0);
    }
    const double expected[] = {0.3, 0.3, 0.4};
    for (int p = 0; p < 3; ++p) {
        const Estimate e = mean_se(hits[static_cast<std::size_t>(p)]);
        CHECK(std::abs(e.value - expected[p]) <= 3 * e.std_error);
    }

    CHECK_THROWS_AS(sample_overlap_array(c, std::vector<double>{0.0, 0.5, 0.5}, phi, 3, 1), ValidationError);
    CHECK_THROWS_AS(sample_overlap_array(c, q, phi, 1, 1), MalformedInput);
}

TEST_CASE("exact replica sampler")
{
    const std::vector<double> q{0.0, 0.4, 1.0};
    const std::vector<double> x{0.3, 0.6};
    const auto d = StateDistribution::from({0.5, 0.5});
    TraceMap phi = [&](double t) -> Matrix { return t * d.diag(); };

    Rng rng = make_rng(41);
    auto a = sample_overlap_array_exact(x, q, phi, 12, rng);
    for (int l = 0; l < 12; ++l) {
        CHECK(a.trace(l, l) == 1.0);
        for (int m = 0; m < 12; ++m) CHECK(a.trace(l, m) == a.trace(m, l));
    }
    for (int i = 0; i < 12; ++i)
        for (int j = i + 1; j < 12; ++j)
            for (int k = j + 1; k < 12; ++k) {
                std::array<double, 3> t{a.trace(i, j), a.trace(i, k), a.trace(j, k)};
                std::sort(t.begin(), t.end());
                CHECK(t[0] == t[1]);
            }

    // Pair depths: P(depth = p) = x_p - x_{p-1}; three replicas on one leaf: (1-x)(2-x)/2.
    std::vector<std::vector<double>> hits(3);
    std::vector<double> triple_exact, triple_truncated;
    const double x1 = 0.4;
    Rng single = make_rng(42);
    for (int i = 0; i < 20000; ++i) {
        auto ai = sample_overlap_array_exact(x, q, phi, 2, rng);
        for (int p = 0; p < 3; ++p) hits[static_cast<std::size_t>(p)].push_back(ai.trace(0, 1) == q[static_cast<std::size_t>(p)] ? 1.0 : 0.0);
        auto b = sample_overlap_array_exact(std::vector<double>{x1}, std::vector<double>{0.0, 1.0}, phi, 3, single);
        triple_exact.push_back(b.trace(0, 1) == 1.0 && b.trace(0, 2) == 1.0 ? 1.0 : 0.0);
    }
    for (int i = 0; i < 3000; ++i) {
        auto c = sample_cascade(CascadeSpec{{x1}, 400}, 300 + static_cast<std::uint64_t>(i));
        auto b = sample_overlap_array(c, std::vector<double>{0.0, 1.0}, phi, 3, 9000 + static_cast<std::uint64_t>(i));
        triple_truncated.push_back(b.trace(0, 1) == 1.0 && b.trace(0, 2) == 1.0 ? 1.0 : 0.0);
    }
    const double expected[] = {0.3, 0.3, 0.4};
    for (int p = 0; p < 3; ++p) {
        const Estimate e = mean_se(hits[static_cast<std::size_t>(p)]);
        CHECK(std::abs(e.value - expected[p]) <= 3 * e.std_error);
    }
    const double triple = (1.0 - x1) * (2.0 - x1) / 2.0;
    for (const auto* v : {&triple_exact, &triple_truncated}) {
        const Estimate e = mean_se(*v);
        CHECK(std::abs(e.value - triple) <= 3 * e.std_error);
    }

    CHECK_THROWS_AS(sample_overlap_array_exact(std::vector<double>{0.6, 0.3}, q, phi, 3, rng), ValidationError);
    CHECK_THROWS_AS(sample_overlap_array_exact(std::vector<double>{0.3, 1.0}, q, phi, 3, rng), ValidationError);
    CHECK_THROWS_AS(sample_overlap_array_exact(x, std::vector<double>{0.0, 1.0}, phi, 3, rng), MalformedInput);
    CHECK_THROWS_AS(sample_overlap_array_exact(x, q, phi, 1, rng), MalformedInput);
}

TEST_CASE("array statistics are invariant under replica relabeling")
{
    auto c = sample_cascade(CascadeSpec{{0.3, 0.6}, 50}, 11);
    const auto d = StateDistribution::from({0.5, 0.5});
    auto a = sample_overlap_array(c, std::vector<double>{0.0, 0.4, 1.0}, [&](double t) -> Matrix { return t * d.diag(); }, 8, 12);
    const std::vector<int> perm{3, 7, 0, 5, 1, 6, 2, 4};
    auto stats = [&](auto trace) {
        double s = 0, s2 = 0;
        for (int l = 0; l < 8; ++l)
            for (int m = 0; m < 8; ++m)
                if (l != m) {
                    s += trace(l, m);
                    s2 += trace(l, m) * trace(l, m);
                }
        return std::pair{s, s2};
    };
    auto plain = stats([&](int l, int m) { return a.trace(l, m); });
    auto permuted = stats([&](int l, int m) { return a.trace(perm[static_cast<std::size_t>(l)], perm[static_cast<std::size_t>(m)]); });
    CHECK(plain.first == doctest::Approx(permuted.first).epsilon(1e-15));
    CHECK(plain.second == doctest::Approx(permuted.second).epsilon(1e-15));
}

TEST_CASE("Y identity")
{
    const auto d1 = StateDistribution::from({1.0});
    auto zero = verify_y_identity(MonotonePath::one_step(d1, 0.4), 0.0, 5, mc(20, 1));
    CHECK(zero.closed_form == 0.0);
    CHECK(std::abs(zero.estimate) < 1e-15);
    CHECK(zero.pass);

    auto k1 = verify_y_identity(MonotonePath::one_step(d1, 0.4), 1.0, 1, mc(400, 2));
    CHECK(k1.closed_form == doctest::Approx(0.2));
    CHECK(k1.pass);

    Rng rng = make_rng(33);
    auto d = random_distribution(rng, 2);
    auto p = random_path(rng, d, 2, 0.1, 0.6);
    auto r = verify_y_identity(p, 1.0, 4, mc(300, 3, 100));
    CHECK(r.pass);
    CHECK(std::abs(r.estimate - r.closed_form) <= 3 * r.std_error + r.truncation_allowance);
}

TEST_CASE("phi agreement between quadrature and cascades")
{
    Rng rng = make_rng(51);
    for (int trial = 0; trial < 3; ++trial) {
        const auto d = random_distribution(rng, 2);
        const auto p = random_path(rng, d, 2);
        const auto l = LagrangeMultipliers::from(2, {0.3 * trial - 0.3});
        const auto a = compare_phi_methods(l, p, 1.0, mc(200, 60 + static_cast<std::uint64_t>(trial), 50));
        CHECK(a.quadrature == eval_phi(l, p, 1.0).value);
        CHECK(a.truncation_allowance == std::abs(a.cascade - a.cascade_doubled));
        CHECK(a.pass);
    }
}
