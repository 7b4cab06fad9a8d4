#include "fixtures.hpp"
#include "oracle.hpp"

#include "nncov/coverage.hpp"
#include "nncov/error.hpp"
#include "nncov/measure.hpp"

#include <doctest.h>

using namespace nncov;
using namespace nncov::testing;

namespace {

HitCounter counter(Family f, double param, std::size_t units) {
    const CriterionId id{f, param};
    return {id, units * slots_per_unit(id)};
}

const CoverageResult& find(const std::vector<CoverageResult>& results, CriterionId id) {
    for (const auto& r : results) {
        if (r.id == id) {
            return r;
        }
    }
    FAIL("criterion missing: " << id.label());
    return results.front();
}

} // namespace

TEST_CASE("criterion labels round trip") {
    for (const auto& id : {CriterionId{Family::nc, 0.75}, CriterionId{Family::nc, 0}, CriterionId{Family::kmnc, 1000},
                           CriterionId{Family::tknc, 10}, CriterionId{Family::nbc, 0}, CriterionId{Family::snac, 0},
                           CriterionId{Family::mcdc_vs, 0}}) {
        CHECK(parse_criterion(id.label()) == id);
    }
    CHECK(CriterionId{Family::nc, 0.75}.label() == "NC(0.75)");
    CHECK(CriterionId{Family::kmnc, 1000}.label() == "KMNC(1000)");
    CHECK(CriterionId{Family::mcdc_ss, 0}.label() == "MCDC(SS)");
    CHECK_THROWS_AS(parse_criterion("XYZ"), Error);
}

TEST_CASE("universe sizes") {
    // 12 units: 5 + 7.
    const std::vector<std::size_t> units{5, 7};
    CoverageConfig config;
    config.kmnc_k = {10};
    config.nc_thresholds = {0};
    config.tknc_k = {2};
    std::vector<std::vector<std::pair<float, float>>> b(2);
    b[0].assign(5, {0.0F, 1.0F});
    b[1].assign(7, {0.0F, 1.0F});
    const auto p = make_profile(b);
    NeuronCoverage full(units, &p, config);
    const auto results = full.results();
    CHECK(find(results, {Family::kmnc, 10}).total == 120);
    CHECK(find(results, {Family::nbc, 0}).total == 24);
    CHECK(find(results, {Family::snac, 0}).total == 12);
    CHECK(find(results, {Family::nc, 0}).total == 12);
    CHECK(find(results, {Family::tknc, 2}).total == 12);
}

TEST_CASE("universe of the lenet-1 fixture equals a recount") {
    const auto m = lenet1(1);
    std::mt19937_64 rng(1);
    const auto p = profile(m, random_inputs(rng, m.input_shape(), 3, 0, 1), Granularity::neuron);
    CoverageConfig config;
    const auto entries = enumerate_obligations(m, &p, config);
    std::size_t units = 0;
    for (const auto& cl : m.coverage_layers()) {
        std::size_t n = 1;
        for (auto d : cl.shape) {
            n *= d;
        }
        units += n;
    }
    for (const auto& e : entries) {
        switch (e.id.family) {
        case Family::kmnc: CHECK(e.total == units * static_cast<std::size_t>(e.id.parameter)); break;
        case Family::nbc: CHECK(e.total == 2 * units); break;
        default: CHECK(e.total == units);
        }
    }
    CHECK(entries.size() == config.criteria().size());
    const auto pc = profile(m, random_inputs(rng, m.input_shape(), 3, 0, 1), Granularity::channel);
    CHECK_THROWS_AS(enumerate_obligations(m, &pc, config), Error);
    CHECK_THROWS_AS(enumerate_obligations(m, nullptr, config), Error);
}

TEST_CASE("every obligation references a valid unit") {
    const auto m = lenet1(2);
    const auto units = unit_count(m, Granularity::channel);
    for (const auto& id : {CriterionId{Family::kmnc, 10}, CriterionId{Family::nbc, 0}, CriterionId{Family::nc, 0}}) {
        const auto total = 16 * slots_per_unit(id);
        for (std::size_t i = 0; i < total; ++i) {
            const auto o = obligation_at(id, units, i);
            CHECK(is_valid_unit(m, Granularity::channel, o.unit));
            CHECK(o.section.has_value() == (id.family == Family::kmnc));
        }
    }
}

TEST_CASE("NC uses raw values at threshold 0 and scaled values otherwise") {
    auto nc0 = counter(Family::nc, 0, 1);
    observe_nc(nc0, make_trace({{0.5F}}), 0.0);
    CHECK(nc0.hits[0] == 1);
    auto zero = counter(Family::nc, 0, 1);
    observe_nc(zero, make_trace({{0.0F}}), 0.0);
    CHECK(zero.hits[0] == 0);
    auto nc75 = counter(Family::nc, 0.75, 3);
    observe_nc(nc75, make_trace({{0.0F, 1.0F, 0.5F}}), 0.75);
    CHECK(nc75.hits == std::vector<std::uint64_t>{0, 1, 0});
}

TEST_CASE("KMNC hits one section per in-range activation") {
    const auto p = make_profile({{{0.0F, 1.0F}}});
    const auto s = sections(p, 10);
    auto st = counter(Family::kmnc, 10, 1);
    observe_kmnc(st, make_trace({{0.05F}}), s);
    CHECK(st.hits[0] == 1);
    observe_kmnc(st, make_trace({{1.0F}}), s);
    CHECK(st.hits[9] == 1);
    observe_kmnc(st, make_trace({{1.5F}}), s);
    std::uint64_t sum = 0;
    for (auto h : st.hits) {
        sum += h;
    }
    CHECK(sum == 2);
    CHECK(st.observations == 3);
}

TEST_CASE("degenerate unit: K obligations, one satisfiable") {
    const auto p = make_profile({{{0.4F, 0.4F}}});
    const auto s = sections(p, 5);
    auto st = counter(Family::kmnc, 5, 1);
    CHECK(st.hits.size() == 5);
    for (float a : {0.4F, 0.3F, 0.5F, 0.4F}) {
        observe_kmnc(st, make_trace({{a}}), s);
    }
    CHECK(st.hits == std::vector<std::uint64_t>{2, 0, 0, 0, 0});
}

TEST_CASE("TKNC picks the K largest with ties to the lower index") {
    auto a = counter(Family::tknc, 1, 3);
    observe_tknc(a, make_trace({{3, 1, 2}}), 1);
    CHECK(a.hits == std::vector<std::uint64_t>{1, 0, 0});
    auto b = counter(Family::tknc, 1, 2);
    observe_tknc(b, make_trace({{2, 2}}), 1);
    CHECK(b.hits == std::vector<std::uint64_t>{1, 0});
    auto c = counter(Family::tknc, 1000, 4);
    observe_tknc(c, make_trace({{1, 2, 3, 4}}), 1000);
    CHECK(c.hits == std::vector<std::uint64_t>{1, 1, 1, 1});
    auto d = counter(Family::tknc, 2, 5);
    observe_tknc(d, make_trace({{1, 5}, {0, 0, 7}}), 2);
    CHECK(d.hits == std::vector<std::uint64_t>{1, 1, 1, 0, 1});
}

TEST_CASE("boundary hits are strict") {
    const auto p = make_profile({{{0.0F, 1.0F}}});
    auto nbc = counter(Family::nbc, 0, 1);
    auto snac = counter(Family::snac, 0, 1);
    observe_boundary(nbc, snac, make_trace({{1.5F}}), p);
    CHECK(nbc.hits == std::vector<std::uint64_t>{0, 1});
    CHECK(snac.hits == std::vector<std::uint64_t>{1});
    observe_boundary(nbc, snac, make_trace({{-0.5F}}), p);
    CHECK(nbc.hits == std::vector<std::uint64_t>{1, 1});
    CHECK(snac.hits == std::vector<std::uint64_t>{1});
    observe_boundary(nbc, snac, make_trace({{1.0F}}), p);
    observe_boundary(nbc, snac, make_trace({{0.0F}}), p);
    CHECK(nbc.hits == std::vector<std::uint64_t>{1, 1});
    CHECK(snac.hits == std::vector<std::uint64_t>{1});
}

TEST_CASE("finalize") {
    HitCounter c({Family::kmnc, 10}, 120);
    for (std::size_t i = 0; i < 114; ++i) {
        c.hits[i] = i + 1;
    }
    const auto r = finalize(c);
    CHECK(r.covered == 114);
    CHECK(r.percent == 95.0);

    NeuronCoverage empty(std::vector<std::size_t>{3, 4}, nullptr, CoverageConfig{.kmnc_k = {}, .boundary = false});
    for (const auto& res : empty.results()) {
        CHECK(res.covered == 0);
        CHECK(res.percent == 0.0);
    }
}

TEST_CASE("collectors match the brute-force oracle on random networks") {
    std::mt19937_64 rng(21);
    for (int net = 0; net < 10; ++net) {
        const std::size_t depth = 1 + rng() % 3;
        std::vector<std::size_t> hidden;
        for (std::size_t i = 0; i < depth; ++i) {
            hidden.push_back(2 + rng() % 9);
        }
        const auto m = random_mlp(rng, 4, hidden, 3);
        const auto train = trace_all(m, random_inputs(rng, {4}, 30, -1, 1), Granularity::neuron);
        const auto tests = trace_all(m, random_inputs(rng, {4}, 20, -1.5, 1.5), Granularity::neuron);
        const auto p = profile(train, Granularity::neuron);
        CoverageConfig config;
        config.kmnc_k = {3, 10};
        config.tknc_k = {1, 2};
        NeuronCoverage c(m, &p, config);
        for (const auto& t : tests) {
            c.observe(t);
        }
        const auto results = c.results();
        for (double t : config.nc_thresholds) {
            CHECK(find(results, {Family::nc, t}).hit_counts == oracle::nc(tests, t));
        }
        for (auto k : config.kmnc_k) {
            CHECK(find(results, {Family::kmnc, static_cast<double>(k)}).hit_counts == oracle::kmnc(tests, p, k));
        }
        for (auto k : config.tknc_k) {
            CHECK(find(results, {Family::tknc, static_cast<double>(k)}).hit_counts == oracle::tknc(tests, k));
        }
        CHECK(find(results, {Family::nbc, 0}).hit_counts == oracle::nbc(tests, p));
        CHECK(find(results, {Family::snac, 0}).hit_counts == oracle::snac(tests, p));
    }
}

TEST_CASE("relationships between criteria") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 30; ++trial) {
        const auto m = random_mlp(rng, 3, {6, 5}, 2);
        const auto train = trace_all(m, random_inputs(rng, {3}, 15, -1, 1), Granularity::neuron);
        const auto tests = trace_all(m, random_inputs(rng, {3}, 25, -2, 2), Granularity::neuron);
        const auto p = profile(train, Granularity::neuron);
        CoverageConfig config;
        config.kmnc_k = {4};
        config.nc_thresholds = {0, 0.1, 0.3, 0.6, 0.9};
        NeuronCoverage c(m, &p, config);
        for (const auto& t : tests) {
            c.observe(t);
        }
        const auto r = c.results();
        const auto& snac = find(r, {Family::snac, 0}).hit_counts;
        const auto& nbc = find(r, {Family::nbc, 0}).hit_counts;
        const auto& kmnc = find(r, {Family::kmnc, 4}).hit_counts;
        for (std::size_t u = 0; u < snac.size(); ++u) {
            CHECK((snac[u] > 0) == (nbc[2 * u + 1] > 0));
            std::uint64_t sum = nbc[2 * u] + nbc[2 * u + 1];
            for (std::size_t k = 0; k < 4; ++k) {
                sum += kmnc[4 * u + k];
            }
            CHECK(sum == tests.size());
        }
        for (std::size_t i = 2; i < config.nc_thresholds.size(); ++i) {
            const auto& lower = find(r, {Family::nc, config.nc_thresholds[i - 1]}).hit_counts;
            const auto& higher = find(r, {Family::nc, config.nc_thresholds[i]}).hit_counts;
            for (std::size_t u = 0; u < lower.size(); ++u) {
                CHECK(higher[u] <= lower[u]);
            }
        }
    }
}

TEST_CASE("merging partitions equals sequential collection") {
    std::mt19937_64 rng(23);
    const auto m = random_mlp(rng, 5, {8, 8}, 3);
    const auto train = trace_all(m, random_inputs(rng, {5}, 40, -1, 1), Granularity::neuron);
    const auto tests = trace_all(m, random_inputs(rng, {5}, 60, -1.5, 1.5), Granularity::neuron);
    const auto p = profile(train, Granularity::neuron);
    CoverageConfig config;
    NeuronCoverage whole(m, &p, config);
    for (const auto& t : tests) {
        whole.observe(t);
    }
    std::vector<NeuronCoverage> parts(3, NeuronCoverage(m, &p, config));
    for (std::size_t i = 0; i < tests.size(); ++i) {
        parts[i % 3].observe(tests[i]);
    }
    parts[2].merge(parts[0]);
    parts[2].merge(parts[1]);
    CHECK(parts[2].results() == whole.results());
}

TEST_CASE("sequential mode equals simultaneous mode") {
    std::mt19937_64 rng(24);
    const auto m = lenet1(24);
    const auto train = random_inputs(rng, m.input_shape(), 20, 0, 1);
    const auto tests = random_inputs(rng, m.input_shape(), 8, 0, 1);
    const auto p = profile(m, train, Granularity::channel);
    MeasureOptions opts;
    opts.coverage.granularity = Granularity::channel;
    opts.mcdc = McdcOptions{};
    const auto a = measure(m, tests, &p, opts);
    const auto b = measure_sequential(m, tests, &p, opts);
    CHECK(a.results == b.results);
    opts.jobs = 3;
    CHECK(measure(m, tests, &p, opts).results == a.results);
    CHECK(a.results.size() == opts.criteria().size());
}

TEST_CASE("configuration errors") {
    CoverageConfig bad;
    bad.nc_thresholds = {1.0};
    CHECK_THROWS_AS(bad.validate(), Error);
    CoverageConfig zero;
    zero.kmnc_k = {0};
    CHECK_THROWS_AS(zero.validate(), Error);
    auto st = counter(Family::tknc, 0, 2);
    CHECK_THROWS_AS(observe_tknc(st, make_trace({{1, 2}}), 0), Error);
}
