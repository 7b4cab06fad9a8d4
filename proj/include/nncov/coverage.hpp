#pragma once

#include "nncov/inference.hpp"
#include "nncov/profile.hpp"

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nncov {

enum class Family { nc, kmnc, tknc, nbc, snac, mcdc_ss, mcdc_sv, mcdc_vs, mcdc_vv };

const char* to_string(Family family) noexcept;
bool is_mcdc(Family family) noexcept;
/// KMNC, NBC, SNAC and the value-change MC/DC variants need training bounds.
bool needs_profile(Family family) noexcept;

/// A criterion family plus its parameter (NC threshold, KMNC/TKNC K; unused otherwise).
struct CriterionId {
    Family family = Family::nc;
    double parameter = 0.0;

    /// "NC(0.75)", "KMNC(1000)", "NBC", "MCDC(SS)", ...
    std::string label() const;

    friend auto operator<=>(const CriterionId&, const CriterionId&) = default;
};

/// Parses `label()` output back.
CriterionId parse_criterion(std::string_view label);

/// Formats a double with the shortest representation that round-trips.
std::string format_number(double value);

/// Per-obligation hit counts for one criterion. `observations` counts the inputs (or,
/// for MC/DC, the input pairs) fed in so far.
struct HitCounter {
    CriterionId id;
    std::vector<std::uint64_t> hits;
    std::uint64_t observations = 0;

    HitCounter() = default;
    HitCounter(CriterionId id, std::size_t obligations) : id(id), hits(obligations, 0) {}

    /// Obligation-wise sum. Throws an input error when the universes differ.
    void merge(const HitCounter& other);

    friend bool operator==(const HitCounter&, const HitCounter&) = default;
};

struct CoverageResult {
    CriterionId id;
    std::size_t total = 0;
    std::size_t covered = 0;
    double percent = 0.0;
    std::vector<std::uint64_t> hit_counts;
    std::uint64_t observations = 0;

    friend bool operator==(const CoverageResult&, const CoverageResult&) = default;
};

/// covered = obligations with a non-zero hit count; percent = 100 * covered / total.
CoverageResult finalize(const HitCounter& counter);

enum class ObligationKind { nc, kmnc, tknc, nbc_lower, nbc_upper, snac };

const char* to_string(ObligationKind kind) noexcept;

struct Obligation {
    ObligationKind kind = ObligationKind::nc;
    Unit unit;
    std::optional<std::size_t> section; // KMNC only

    friend bool operator==(const Obligation&, const Obligation&) = default;
};

/// Obligations per unit: K for KMNC, 2 for NBC (lower, upper), 1 otherwise.
std::size_t slots_per_unit(const CriterionId& id);

/// Decodes flat obligation `index` of a unit-level criterion. Obligations are laid out
/// unit-major: layer by layer, unit by unit, then slot.
Obligation obligation_at(const CriterionId& id, std::span<const std::size_t> unit_counts, std::size_t index);

struct CoverageConfig {
    Granularity granularity = Granularity::neuron;
    std::vector<double> nc_thresholds{0.0, 0.2, 0.5, 0.75};
    std::vector<std::size_t> kmnc_k{10, 1000};
    std::vector<std::size_t> tknc_k{10, 1000};
    bool boundary = true; // NBC and SNAC

    /// Throws a configuration error on thresholds outside [0, 1) or K == 0.
    void validate() const;
    /// Unit-level criteria in collector order: NC, KMNC, TKNC, NBC, SNAC.
    std::vector<CriterionId> criteria() const;
};

struct UniverseEntry {
    CriterionId id;
    std::size_t total = 0;
};

/// Obligation totals for every configured unit-level criterion. Throws a configuration
/// error on a granularity mismatch or when a profile-based criterion has no profile.
std::vector<UniverseEntry> enumerate_obligations(const Model& model, const Profile* profile,
                                                 const CoverageConfig& config);

// Single-criterion observers. Each bumps `observations` by one and increments every
// obligation the trace satisfies by one.

/// threshold 0: raw activation > 0. threshold t > 0: scaled activation > t.
void observe_nc(HitCounter& state, const ActivationTrace& trace, double threshold);
/// In-range activations hit exactly one section; out-of-range ones hit nothing.
void observe_kmnc(HitCounter& state, const ActivationTrace& trace, const SectionTable& sections);
/// The K most active units of each layer (ties to the lower index).
void observe_tknc(HitCounter& state, const ActivationTrace& trace, std::size_t k);
/// a > high hits NBC-upper and SNAC; a < low hits NBC-lower.
void observe_boundary(HitCounter& nbc, HitCounter& snac, const ActivationTrace& trace, const Profile& profile);

/// All configured unit-level criteria, fed from one trace per input.
class NeuronCoverage {
public:
    NeuronCoverage(const Model& model, const Profile* profile, CoverageConfig config);
    NeuronCoverage(std::vector<std::size_t> unit_counts, const Profile* profile, CoverageConfig config);

    void observe(const ActivationTrace& trace);
    /// Feeds a single criterion (index into `criteria()`); used by the sequential mode.
    void observe_one(const ActivationTrace& trace, std::size_t criterion);
    void merge(const NeuronCoverage& other);

    const std::vector<CriterionId>& criteria() const noexcept { return criteria_; }
    const std::vector<HitCounter>& counters() const noexcept { return counters_; }
    const std::vector<std::size_t>& unit_counts() const noexcept { return units_; }
    std::vector<CoverageResult> results() const;

private:
    std::vector<std::size_t> units_;
    CoverageConfig config_;
    std::optional<Profile> profile_;
    std::vector<SectionTable> tables_;
    std::vector<CriterionId> criteria_;
    std::vector<HitCounter> counters_;
};

} // namespace nncov
