#include "fixtures.hpp"
#include "oracle.hpp"

#include "nncov/error.hpp"
#include "nncov/profile.hpp"

#include <doctest.h>

#include <algorithm>

using namespace nncov;
using namespace nncov::testing;

TEST_CASE("bounds are the min and max over training") {
    std::vector<ActivationTrace> traces{make_trace({{0.2F}}), make_trace({{0.8F}}), make_trace({{0.5F}})};
    const auto p = profile(traces, Granularity::neuron);
    CHECK(p.layers[0].low[0] == 0.2F);
    CHECK(p.layers[0].high[0] == 0.8F);
    CHECK(p.training_count == 3);
}

TEST_CASE("a single training input gives degenerate bounds") {
    std::mt19937_64 rng(1);
    const auto m = random_mlp(rng, 3, {4, 4}, 2);
    const auto p = profile(m, random_inputs(rng, {3}, 1, -1, 1), Granularity::neuron);
    for (const auto& l : p.layers) {
        CHECK((l.low.array() == l.high.array()).all());
    }
}

TEST_CASE("profile of a fixture equals a two-pass recomputation") {
    std::mt19937_64 rng(2);
    const auto m = lenet1(2);
    const auto train = random_inputs(rng, m.input_shape(), 100, 0, 1);
    for (auto g : {Granularity::neuron, Granularity::channel}) {
        const auto traces = trace_all(m, train, g);
        const auto expected = oracle::naive_profile(traces, g);
        for (unsigned jobs : {1U, 3U}) {
            const auto p = profile(m, train, g, {0.0, jobs});
            REQUIRE(p.layers.size() == expected.layers.size());
            for (std::size_t l = 0; l < p.layers.size(); ++l) {
                CHECK((p.layers[l].low.array() == expected.layers[l].low.array()).all());
                CHECK((p.layers[l].high.array() == expected.layers[l].high.array()).all());
            }
            CHECK(p.training_count == 100);
        }
        // Every training activation lies inside its bounds.
        for (const auto& t : traces) {
            for (std::size_t l = 0; l < t.raw.size(); ++l) {
                CHECK((t.raw[l].array() >= expected.layers[l].low.array()).all());
                CHECK((t.raw[l].array() <= expected.layers[l].high.array()).all());
            }
        }
    }
}

TEST_CASE("profiling is order independent") {
    std::mt19937_64 rng(3);
    const auto m = random_mlp(rng, 4, {6, 5}, 2);
    auto train = random_inputs(rng, {4}, 40, -1, 1);
    const auto a = profile(m, train, Granularity::neuron);
    std::reverse(train.begin(), train.end());
    std::swap(train[3], train[17]);
    const auto b = profile(m, train, Granularity::neuron);
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        CHECK((a.layers[l].low.array() == b.layers[l].low.array()).all());
        CHECK((a.layers[l].high.array() == b.layers[l].high.array()).all());
    }
}

TEST_CASE("empty training set is a configuration error") {
    std::mt19937_64 rng(4);
    const auto m = random_mlp(rng, 2, {3}, 2);
    try {
        profile(m, {}, Granularity::neuron);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::configuration);
    }
}

TEST_CASE("granularity mismatch is enforced") {
    const auto m = lenet1(3);
    std::mt19937_64 rng(3);
    const auto p = profile(m, random_inputs(rng, m.input_shape(), 2, 0, 1), Granularity::channel);
    CHECK_NOTHROW(check_compatible(p, m, Granularity::channel));
    try {
        check_compatible(p, m, Granularity::neuron);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::configuration);
    }
}

TEST_CASE("section boundaries") {
    const auto p = make_profile({{{0.0F, 1.0F}}});
    const auto s = sections(p, 10);
    for (std::size_t k = 0; k <= 10; ++k) {
        CHECK(s.boundary(0, 0, k) == doctest::Approx(0.1 * static_cast<double>(k)));
    }
    CHECK(s.width(0, 0) == doctest::Approx(0.1));
    CHECK(s.section_of(0, 0, 0.05F) == std::optional<std::size_t>(0));
    CHECK(s.section_of(0, 0, 1.0F) == std::optional<std::size_t>(9));
    CHECK(s.section_of(0, 0, 0.0F) == std::optional<std::size_t>(0));
    CHECK_FALSE(s.section_of(0, 0, 1.5F).has_value());
    CHECK_FALSE(s.section_of(0, 0, -0.01F).has_value());

    const auto fine = sections(p, 1000);
    CHECK(fine.width(0, 0) == doctest::Approx(0.001));
    CHECK(fine.section_of(0, 0, 0.0005F) == std::optional<std::size_t>(0));
    CHECK(fine.section_of(0, 0, 1.0F) == std::optional<std::size_t>(999));
}

TEST_CASE("degenerate unit has a single point section") {
    const auto s = sections(make_profile({{{0.4F, 0.4F}}}), 7);
    CHECK(s.degenerate(0, 0));
    CHECK(s.section_of(0, 0, 0.4F) == std::optional<std::size_t>(0));
    CHECK_FALSE(s.section_of(0, 0, 0.41F).has_value());
    CHECK_FALSE(s.section_of(0, 0, 0.39F).has_value());
}

TEST_CASE("K = 0 is a configuration error") {
    try {
        sections(make_profile({{{0.0F, 1.0F}}}), 0);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::configuration);
    }
}

TEST_CASE("section membership is a partition") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto lo = static_cast<float>(uniform(rng, -3, 1));
        const auto hi = lo + static_cast<float>(uniform(rng, 0, 4));
        const std::size_t k = 1 + rng() % 50;
        const auto s = sections(make_profile({{{lo, hi}}}), k);
        for (int i = 0; i < 50; ++i) {
            const auto a = static_cast<float>(uniform(rng, lo - 1, hi + 1));
            const auto sec = s.section_of(0, 0, a);
            if (a < lo || a > hi) {
                CHECK_FALSE(sec.has_value());
                continue;
            }
            REQUIRE(sec.has_value());
            CHECK(*sec < k);
            CHECK(static_cast<double>(a) >= s.boundary(0, 0, *sec));
            if (*sec + 1 < k) {
                CHECK(static_cast<double>(a) < s.boundary(0, 0, *sec + 1));
            }
        }
    }
}

TEST_CASE("percentile clipping narrows the bounds") {
    std::vector<ActivationTrace> traces;
    for (int i = 0; i <= 100; ++i) {
        traces.push_back(make_trace({{static_cast<float>(i)}}));
    }
    const auto p = profile(traces, Granularity::neuron, {5.0, 1});
    CHECK(p.layers[0].low[0] == 5.0F);
    CHECK(p.layers[0].high[0] == 95.0F);
}

TEST_CASE("profile persistence round trip") {
    std::mt19937_64 rng(6);
    const auto m = lenet1(6);
    const auto p = profile(m, random_inputs(rng, m.input_shape(), 5, 0, 1), Granularity::neuron);
    const auto dir = scratch_dir("profile");
    save_profile(p, dir);
    const auto q = load_profile(dir);
    CHECK(q.granularity == p.granularity);
    CHECK(q.training_count == p.training_count);
    REQUIRE(q.layers.size() == p.layers.size());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        CHECK((q.layers[l].low.array() == p.layers[l].low.array()).all());
        CHECK((q.layers[l].high.array() == p.layers[l].high.array()).all());
    }
    std::filesystem::resize_file(dir / "profile.bin", 12);
    CHECK_THROWS_AS(load_profile(dir), Error);
}
