#pragma once

#include "nncov/dataset.hpp"
#include "nncov/measure.hpp"

#include <cstdint>
#include <utility>
#include <span>
#include <string>
#include <vector>

namespace nncov {

/// Coverage percentages of one dataset, one entry per criterion.
struct DatasetCoverage {
    std::string name;
    std::vector<std::pair<CriterionId, double>> percents;
};

struct ComparisonRow {
    std::string dataset;
    CriterionId criterion;
    double coverage = 0.0; // percent
    double delta = 0.0;    // percentage points over the baseline
    double ncoverage = 0.0;

    friend bool operator==(const ComparisonRow&, const ComparisonRow&) = default;
};

struct ComparisonRun {
    std::string baseline;
    /// Baseline first, then the other datasets by name; criteria in input order.
    std::vector<ComparisonRow> rows;
    std::vector<std::string> warnings;

    friend bool operator==(const ComparisonRun&, const ComparisonRun&) = default;
};

/// delta(D) = coverage(D) - coverage(baseline); ncoverage(D) = delta(D) / (max delta - min
/// delta), with max/min over every dataset including the baseline (delta 0). When all
/// deltas are equal the ncoverage values are 0 and a warning is recorded. Throws a
/// configuration error for an empty `others`, duplicate names or mismatched criteria.
ComparisonRun normalized_difference(const DatasetCoverage& baseline, std::span<const DatasetCoverage> others);

/// Measures every dataset with the same model, profile and options, then compares.
ComparisonRun compare(const Model& model, const Profile* profile, const Dataset& baseline,
                      std::span<const Dataset> others, const MeasureOptions& options);

/// `clean` with floor(beta% * |clean|) inputs replaced by inputs drawn from
/// `replacement`. Which positions change and which replacements fill them is fixed
/// by `seed`. Throws an input error when the replacement pool is too small.
/// Labels follow the substituted inputs when both datasets carry the same label kind;
/// otherwise a mixture with replacements is unlabelled.
Dataset build_mixture(const Dataset& clean, const Dataset& replacement, int beta_percent, std::uint64_t seed);

} // namespace nncov
