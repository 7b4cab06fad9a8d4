#pragma once

#include "nncov/measure.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace nncov {

/// Population statistics of hit counts over a criterion's whole obligation universe,
/// zero-hit obligations included.
struct ObligationStats {
    double min = 0.0;
    double max = 0.0;
    double avg = 0.0;
    double std = 0.0;
    double var = 0.0;

    friend bool operator==(const ObligationStats&, const ObligationStats&) = default;
};

/// Throws a configuration error for an empty universe.
ObligationStats summarize(std::span<const std::uint64_t> hit_counts);
ObligationStats summarize(const CoverageResult& result);

struct GrowthPoint {
    std::size_t tests_seen = 0;
    double percent = 0.0;

    friend bool operator==(const GrowthPoint&, const GrowthPoint&) = default;
};

struct GrowthCurve {
    CriterionId id;
    std::vector<GrowthPoint> points;

    friend bool operator==(const GrowthCurve&, const GrowthCurve&) = default;
};

/// stride, 2*stride, ... and always `n` itself. Throws a configuration error for stride 0.
std::vector<std::size_t> checkpoints(std::size_t n, std::size_t stride);

/// Coverage after each checkpoint, consuming the tests in order. The point at n equals
/// coverage of the first n tests alone; MC/DC points use the selected pairs whose
/// members both lie in that prefix.
std::vector<GrowthCurve> growth(std::span<const ActivationTrace> traces, std::vector<std::size_t> unit_counts,
                                const Profile* profile, const MeasureOptions& options, std::size_t stride);

std::vector<GrowthCurve> growth(const Model& model, std::span<const Tensor> tests, const Profile* profile,
                                const MeasureOptions& options, std::size_t stride);

} // namespace nncov
