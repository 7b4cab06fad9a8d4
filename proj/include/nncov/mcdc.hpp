#pragma once

#include "nncov/coverage.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace nncov {

/// First letter: how the condition unit at layer l changes; second: the decision unit
/// at layer l+1. S = sign change, V = value change.
enum class McdcVariant { ss, sv, vs, vv };

inline constexpr McdcVariant all_mcdc_variants[] = {McdcVariant::ss, McdcVariant::sv, McdcVariant::vs,
                                                     McdcVariant::vv};

Family family_of(McdcVariant variant) noexcept;
const char* to_string(McdcVariant variant) noexcept;
McdcVariant parse_mcdc_variant(std::string_view text);

/// Positive side of the sign split; zero counts as negative.
inline bool sign_of(float a) noexcept { return a > 0.0F; }

inline bool sign_change(float a1, float a2) noexcept { return sign_of(a1) != sign_of(a2); }

/// Same sign, and the magnitude moved by more than `vc_ratio` of the profiled range.
inline bool value_change(float a1, float a2, double range, double vc_ratio) noexcept {
    const double delta = static_cast<double>(a1) - static_cast<double>(a2);
    return !sign_change(a1, a2) && (delta < 0 ? -delta : delta) > vc_ratio * range;
}

struct PairObligation {
    Unit condition; // at coverage layer l
    Unit decision;  // at coverage layer l + 1

    friend bool operator==(const PairObligation&, const PairObligation&) = default;
};

/// Flat layout of (condition, decision) obligations over adjacent coverage layers:
/// pair by pair, condition-major.
class PairLayout {
public:
    explicit PairLayout(std::vector<std::size_t> unit_counts);

    std::size_t total() const noexcept { return offsets_.back(); }
    std::size_t adjacent_pairs() const noexcept { return offsets_.size() - 1; }
    std::size_t offset(std::size_t pair) const { return offsets_[pair]; }
    const std::vector<std::size_t>& unit_counts() const noexcept { return units_; }

    std::size_t index_of(const PairObligation& o) const;
    PairObligation at(std::size_t index) const;

private:
    std::vector<std::size_t> units_;
    std::vector<std::size_t> offsets_;
};

/// (i, j) obligation is hit by a test pair when the condition change of the variant's
/// first kind holds at i, the decision change of its second kind holds at j, and no
/// other unit of layer l changes sign. Bumps `observations` by one.
void observe_pair(HitCounter& state, const PairLayout& layout, const ActivationTrace& first,
                  const ActivationTrace& second, McdcVariant variant, const Profile* profile, double vc_ratio);

struct McdcOptions {
    std::vector<McdcVariant> variants{all_mcdc_variants, all_mcdc_variants + 4};
    double vc_ratio = 0.1;
    /// Evaluate a seeded sample of this many unordered pairs instead of all of them.
    std::optional<std::size_t> pair_budget;
    std::uint64_t seed = 0;
    unsigned jobs = 1;

    void validate() const;
};

/// All requested variants, evaluated together per test pair.
class McdcCoverage {
public:
    McdcCoverage(std::vector<std::size_t> unit_counts, Granularity granularity, const Profile* profile,
                 McdcOptions options);

    void observe_pair(const ActivationTrace& first, const ActivationTrace& second);
    void merge(const McdcCoverage& other);

    const PairLayout& layout() const noexcept { return layout_; }
    const std::vector<HitCounter>& counters() const noexcept { return counters_; }
    std::vector<CoverageResult> results() const;

private:
    struct LayerChange {
        std::vector<std::uint8_t> sign;
        std::vector<std::uint8_t> value;
        std::size_t sign_changes = 0;
    };
    void changes(const ActivationTrace& a, const ActivationTrace& b, std::size_t layer, LayerChange& out) const;

    PairLayout layout_;
    Granularity granularity_;
    std::optional<Profile> profile_;
    McdcOptions options_;
    std::vector<HitCounter> counters_;
    std::vector<LayerChange> scratch_;
};

/// Unordered test pairs (i < j) ordered by (j, i). With no budget, or a budget at least
/// C(n, 2), every pair; otherwise a sample of `budget` distinct pairs fixed by `seed`.
std::vector<std::pair<std::size_t, std::size_t>> select_pairs(std::size_t n, std::optional<std::size_t> budget,
                                                              std::uint64_t seed);

/// Throws an input error for fewer than two traces.
std::vector<CoverageResult> run_mcdc(std::span<const ActivationTrace> traces, const Profile* profile,
                                     const McdcOptions& options);

std::vector<CoverageResult> run_mcdc(const Model& model, std::span<const Tensor> tests, const Profile* profile,
                                     Granularity granularity, const McdcOptions& options);

} // namespace nncov
