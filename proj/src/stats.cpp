#include "nncov/stats.hpp"

#include "nncov/error.hpp"

#include <algorithm>
#include <cmath>

namespace nncov {

ObligationStats summarize(std::span<const std::uint64_t> hit_counts) {
    if (hit_counts.empty()) {
        fail(ErrorKind::configuration, "cannot summarize an empty obligation universe");
    }
    const auto [lo, hi] = std::minmax_element(hit_counts.begin(), hit_counts.end());
    const auto n = static_cast<double>(hit_counts.size());
    double sum = 0.0;
    for (auto h : hit_counts) {
        sum += static_cast<double>(h);
    }
    ObligationStats s;
    s.min = static_cast<double>(*lo);
    s.max = static_cast<double>(*hi);
    s.avg = sum / n;
    double squares = 0.0;
    for (auto h : hit_counts) {
        const double d = static_cast<double>(h) - s.avg;
        squares += d * d;
    }
    s.var = squares / n;
    s.std = std::sqrt(s.var);
    return s;
}

ObligationStats summarize(const CoverageResult& result) {
    return summarize(std::span<const std::uint64_t>(result.hit_counts));
}

std::vector<std::size_t> checkpoints(std::size_t n, std::size_t stride) {
    if (stride == 0) {
        fail(ErrorKind::configuration, "growth checkpoint stride must be at least 1");
    }
    std::vector<std::size_t> points;
    for (std::size_t k = stride; k < n; k += stride) {
        points.push_back(k);
    }
    if (n > 0) {
        points.push_back(n);
    }
    return points;
}

std::vector<GrowthCurve> growth(std::span<const ActivationTrace> traces, std::vector<std::size_t> unit_counts,
                                const Profile* profile, const MeasureOptions& options, std::size_t stride) {
    const auto marks = checkpoints(traces.size(), stride);
    std::vector<GrowthCurve> curves;
    for (const auto& id : options.criteria()) {
        curves.push_back({id, {}});
    }

    std::optional<NeuronCoverage> neuron;
    if (options.neuron_criteria) {
        neuron.emplace(unit_counts, profile, options.coverage);
    }
    std::optional<McdcCoverage> mcdc;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (options.mcdc) {
        mcdc.emplace(unit_counts, options.coverage.granularity, profile, *options.mcdc);
        pairs = select_pairs(traces.size(), options.mcdc->pair_budget, options.mcdc->seed);
    }

    std::size_t next_pair = 0;
    std::size_t seen = 0;
    for (auto mark : marks) {
        for (; seen < mark; ++seen) {
            if (neuron) {
                neuron->observe(traces[seen]);
            }
            // Pairs are ordered by their later member.
            while (mcdc && next_pair < pairs.size() && pairs[next_pair].second <= seen) {
                mcdc->observe_pair(traces[pairs[next_pair].first], traces[pairs[next_pair].second]);
                ++next_pair;
            }
        }
        std::size_t c = 0;
        if (neuron) {
            for (const auto& counter : neuron->counters()) {
                curves[c++].points.push_back({mark, finalize(counter).percent});
            }
        }
        if (mcdc) {
            for (const auto& counter : mcdc->counters()) {
                curves[c++].points.push_back({mark, finalize(counter).percent});
            }
        }
    }
    return curves;
}

std::vector<GrowthCurve> growth(const Model& model, std::span<const Tensor> tests, const Profile* profile,
                                const MeasureOptions& options, std::size_t stride) {
    if (profile != nullptr) {
        check_compatible(*profile, model, options.coverage.granularity);
    }
    const auto traces = trace_all(model, tests, options.coverage.granularity, options.jobs);
    return growth(traces, unit_count(model, options.coverage.granularity), profile, options, stride);
}

} // namespace nncov
