#pragma once

#include "nncov/coverage.hpp"
#include "nncov/mcdc.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nncov {

/// Which criteria a coverage run computes.
struct MeasureOptions {
    CoverageConfig coverage;
    bool neuron_criteria = true;       // NC, KMNC, TKNC, NBC, SNAC
    std::optional<McdcOptions> mcdc;   // unset: no MC/DC
    unsigned jobs = 1;

    std::vector<CriterionId> criteria() const;
};

struct Timing {
    std::string label;
    double milliseconds = 0.0;
};

struct Measurement {
    /// Unit-level criteria first (collector order), then MC/DC variants.
    std::vector<CoverageResult> results;
    std::vector<Timing> timings;
};

/// One inference per input; every collector consumes the same trace.
Measurement measure(const Model& model, std::span<const Tensor> tests, const Profile* profile,
                    const MeasureOptions& options);

/// Reference mode: each criterion runs its own inference pass over the tests. Results
/// equal `measure`; only the timings differ.
Measurement measure_sequential(const Model& model, std::span<const Tensor> tests, const Profile* profile,
                               const MeasureOptions& options);

/// Coverage from precomputed traces.
std::vector<CoverageResult> measure_traces(std::span<const ActivationTrace> traces, std::vector<std::size_t> unit_counts,
                                           const Profile* profile, const MeasureOptions& options);

} // namespace nncov
