#include "fixtures.hpp"
#include "oracle.hpp"

#include "nncov/error.hpp"
#include "nncov/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace nncov;
using namespace nncov::testing;

TEST_CASE("population statistics") {
    const std::vector<std::uint64_t> counts{0, 2, 4};
    const auto s = summarize(counts);
    CHECK(s.min == 0.0);
    CHECK(s.max == 4.0);
    CHECK(s.avg == 2.0);
    CHECK(s.var == doctest::Approx(8.0 / 3.0));
    CHECK(s.std == doctest::Approx(1.633).epsilon(1e-3));

    const std::vector<std::uint64_t> flat{5, 5, 5, 5};
    const auto f = summarize(flat);
    CHECK(f.std == 0.0);
    CHECK(f.var == 0.0);
    CHECK_THROWS_AS(summarize(std::span<const std::uint64_t>{}), Error);
}

TEST_CASE("statistics of a run match a recomputation from the raw counts") {
    std::mt19937_64 rng(2);
    const auto m = random_mlp(rng, 4, {7, 6}, 3);
    const auto p = profile(m, random_inputs(rng, {4}, 30, -1, 1), Granularity::neuron);
    MeasureOptions opts;
    opts.mcdc = McdcOptions{};
    const auto r = measure(m, random_inputs(rng, {4}, 15, -1.5, 1.5), &p, opts);
    for (const auto& res : r.results) {
        const auto s = summarize(res);
        double sum = 0;
        double lo = 1e300;
        double hi = -1e300;
        for (auto c : res.hit_counts) {
            sum += static_cast<double>(c);
            lo = std::min(lo, static_cast<double>(c));
            hi = std::max(hi, static_cast<double>(c));
        }
        const double avg = sum / static_cast<double>(res.hit_counts.size());
        double ss = 0;
        for (auto c : res.hit_counts) {
            ss += (static_cast<double>(c) - avg) * (static_cast<double>(c) - avg);
        }
        const double var = ss / static_cast<double>(res.hit_counts.size());
        CHECK(s.min == lo);
        CHECK(s.max == hi);
        CHECK(s.avg == doctest::Approx(avg).epsilon(1e-12));
        CHECK(s.var == doctest::Approx(var).epsilon(1e-9));
        CHECK(s.std * s.std == doctest::Approx(s.var).epsilon(1e-9));
        CHECK(s.min <= s.avg);
        CHECK(s.avg <= s.max);
    }
}

TEST_CASE("NC(0) hit total equals active units summed over inputs") {
    std::mt19937_64 rng(3);
    const auto m = random_mlp(rng, 3, {8, 5}, 2);
    const auto tests = random_inputs(rng, {3}, 25, -1, 1);
    MeasureOptions opts;
    opts.coverage.kmnc_k = {};
    opts.coverage.boundary = false;
    const auto r = measure(m, tests, nullptr, opts);
    std::uint64_t hits = 0;
    for (auto c : r.results.front().hit_counts) {
        hits += c;
    }
    std::uint64_t active = 0;
    for (const auto& t : trace_all(m, tests, Granularity::neuron)) {
        for (const auto& l : t.raw) {
            active += static_cast<std::uint64_t>((l.array() > 0.0F).count());
        }
    }
    CHECK(r.results.front().id == CriterionId{Family::nc, 0});
    CHECK(hits == active);
}

TEST_CASE("checkpoints") {
    CHECK(checkpoints(10, 3) == std::vector<std::size_t>{3, 6, 9, 10});
    CHECK(checkpoints(10, 5) == std::vector<std::size_t>{5, 10});
    CHECK(checkpoints(10, 20) == std::vector<std::size_t>{10});
    CHECK_THROWS_AS(checkpoints(10, 0), Error);
}

TEST_CASE("growth curves: prefix property, monotonicity, final point") {
    std::mt19937_64 rng(4);
    const auto m = random_mlp(rng, 4, {6, 5}, 2);
    const auto p = profile(m, random_inputs(rng, {4}, 30, -1, 1), Granularity::neuron);
    const auto tests = random_inputs(rng, {4}, 23, -1.5, 1.5);
    MeasureOptions opts;
    opts.mcdc = McdcOptions{};
    const auto curves = growth(m, tests, &p, opts, 5);
    const auto full = measure(m, tests, &p, opts).results;
    REQUIRE(curves.size() == full.size());
    for (std::size_t c = 0; c < curves.size(); ++c) {
        CHECK(curves[c].id == full[c].id);
        const auto& pts = curves[c].points;
        REQUIRE(pts.size() == 5);
        CHECK(pts.back().tests_seen == tests.size());
        CHECK(pts.back().percent == full[c].percent);
        for (std::size_t i = 1; i < pts.size(); ++i) {
            CHECK(pts[i].percent >= pts[i - 1].percent);
        }
    }
    for (std::size_t n : {5UL, 10UL, 15UL, 20UL}) {
        const auto prefix = measure(m, std::span(tests).first(n), &p, opts).results;
        for (std::size_t c = 0; c < curves.size(); ++c) {
            CHECK(curves[c].points[n / 5 - 1].tests_seen == n);
            CHECK(curves[c].points[n / 5 - 1].percent == prefix[c].percent);
        }
    }
}

TEST_CASE("stride equal to the test count gives one point") {
    std::mt19937_64 rng(5);
    const auto m = random_mlp(rng, 3, {4}, 2);
    const auto tests = random_inputs(rng, {3}, 9, -1, 1);
    MeasureOptions opts;
    opts.coverage.kmnc_k = {};
    opts.coverage.boundary = false;
    const auto curves = growth(m, tests, nullptr, opts, tests.size());
    const auto full = measure(m, tests, nullptr, opts).results;
    for (std::size_t c = 0; c < curves.size(); ++c) {
        REQUIRE(curves[c].points.size() == 1);
        CHECK(curves[c].points[0].percent == full[c].percent);
    }
}
