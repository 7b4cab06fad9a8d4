#include "nncov/measure.hpp"

#include "nncov/error.hpp"
#include "nncov/parallel.hpp"

#include <chrono>

namespace nncov {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void check_inputs(const Model& model, std::span<const Tensor> tests, const Profile* profile,
                  const MeasureOptions& options) {
    options.coverage.validate();
    if (profile != nullptr) {
        check_compatible(*profile, model, options.coverage.granularity);
    }
    if (options.mcdc) {
        options.mcdc->validate();
        if (tests.size() < 2) {
            fail(ErrorKind::input, "MC/DC works on input pairs and needs at least 2 test inputs");
        }
    }
}

std::vector<CoverageResult> neuron_from_traces(std::span<const ActivationTrace> traces,
                                               const std::vector<std::size_t>& counts, const Profile* profile,
                                               const MeasureOptions& options) {
    std::vector<NeuronCoverage> shards(chunk_count(traces.size(), options.jobs),
                                       NeuronCoverage(counts, profile, options.coverage));
    parallel_chunks(traces.size(), options.jobs, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        for (auto i = begin; i < end; ++i) {
            shards[chunk].observe(traces[i]);
        }
    });
    for (std::size_t s = 1; s < shards.size(); ++s) {
        shards.front().merge(shards[s]);
    }
    return shards.front().results();
}

} // namespace

std::vector<CriterionId> MeasureOptions::criteria() const {
    std::vector<CriterionId> ids;
    if (neuron_criteria) {
        ids = coverage.criteria();
    }
    if (mcdc) {
        for (auto v : mcdc->variants) {
            ids.push_back({family_of(v), 0.0});
        }
    }
    return ids;
}

std::vector<CoverageResult> measure_traces(std::span<const ActivationTrace> traces, std::vector<std::size_t> unit_counts,
                                           const Profile* profile, const MeasureOptions& options) {
    std::vector<CoverageResult> results;
    if (options.neuron_criteria) {
        results = neuron_from_traces(traces, unit_counts, profile, options);
    }
    if (options.mcdc) {
        auto mcdc = options.mcdc;
        mcdc->jobs = options.jobs;
        for (auto& r : run_mcdc(traces, profile, *mcdc)) {
            results.push_back(std::move(r));
        }
    }
    return results;
}

Measurement measure(const Model& model, std::span<const Tensor> tests, const Profile* profile,
                    const MeasureOptions& options) {
    check_inputs(model, tests, profile, options);
    const auto granularity = options.coverage.granularity;
    const auto counts = unit_count(model, granularity);
    Measurement m;
    const auto start = Clock::now();
    if (options.mcdc) {
        // Pairs span the whole set, so keep every trace.
        const auto traces = trace_all(model, tests, granularity, options.jobs);
        m.results = measure_traces(traces, counts, profile, options);
        m.timings.push_back({"all", elapsed_ms(start)});
        return m;
    }
    if (options.neuron_criteria) {
        std::vector<NeuronCoverage> shards(chunk_count(tests.size(), options.jobs),
                                           NeuronCoverage(counts, profile, options.coverage));
        parallel_chunks(tests.size(), options.jobs, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
            for (auto i = begin; i < end; ++i) {
                shards[chunk].observe(forward(model, tests[i], granularity, i).trace);
            }
        });
        for (std::size_t s = 1; s < shards.size(); ++s) {
            shards.front().merge(shards[s]);
        }
        m.results = shards.front().results();
    }
    m.timings.push_back({"all", elapsed_ms(start)});
    return m;
}

Measurement measure_sequential(const Model& model, std::span<const Tensor> tests, const Profile* profile,
                               const MeasureOptions& options) {
    check_inputs(model, tests, profile, options);
    const auto granularity = options.coverage.granularity;
    const auto counts = unit_count(model, granularity);
    Measurement m;
    const auto start_all = Clock::now();
    if (options.neuron_criteria) {
        NeuronCoverage collector(counts, profile, options.coverage);
        for (std::size_t c = 0; c < collector.criteria().size(); ++c) {
            const auto start = Clock::now();
            for (std::size_t i = 0; i < tests.size(); ++i) {
                collector.observe_one(forward(model, tests[i], granularity, i).trace, c);
            }
            m.timings.push_back({collector.criteria()[c].label(), elapsed_ms(start)});
        }
        m.results = collector.results();
    }
    if (options.mcdc) {
        for (auto v : options.mcdc->variants) {
            const auto start = Clock::now();
            auto single = *options.mcdc;
            single.variants = {v};
            single.jobs = 1;
            const auto traces = trace_all(model, tests, granularity, 1);
            m.results.push_back(run_mcdc(traces, profile, single).front());
            m.timings.push_back({CriterionId{family_of(v), 0.0}.label(), elapsed_ms(start)});
        }
    }
    m.timings.push_back({"all", elapsed_ms(start_all)});
    return m;
}

} // namespace nncov
