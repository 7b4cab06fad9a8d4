#include "nncov/mcdc.hpp"

#include "random.hpp"

#include "nncov/error.hpp"
#include "nncov/parallel.hpp"

#include <cmath>
#include <random>
#include <set>

namespace nncov {

namespace {

using Eigen::Index;

bool first_is_sign(McdcVariant v) {
    return v == McdcVariant::ss || v == McdcVariant::sv;
}

bool second_is_sign(McdcVariant v) {
    return v == McdcVariant::ss || v == McdcVariant::vs;
}

bool uses_value(McdcVariant v) {
    return v != McdcVariant::ss;
}

std::pair<std::size_t, std::size_t> decode_pair(std::uint64_t index) {
    auto j = static_cast<std::uint64_t>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(index))) / 2.0);
    while (j * (j - 1) / 2 > index) {
        --j;
    }
    while ((j + 1) * j / 2 <= index) {
        ++j;
    }
    return {static_cast<std::size_t>(index - j * (j - 1) / 2), static_cast<std::size_t>(j)};
}

} // namespace

Family family_of(McdcVariant variant) noexcept {
    switch (variant) {
    case McdcVariant::ss: return Family::mcdc_ss;
    case McdcVariant::sv: return Family::mcdc_sv;
    case McdcVariant::vs: return Family::mcdc_vs;
    case McdcVariant::vv: return Family::mcdc_vv;
    }
    return Family::mcdc_ss;
}

const char* to_string(McdcVariant variant) noexcept {
    switch (variant) {
    case McdcVariant::ss: return "SS";
    case McdcVariant::sv: return "SV";
    case McdcVariant::vs: return "VS";
    case McdcVariant::vv: return "VV";
    }
    return "?";
}

McdcVariant parse_mcdc_variant(std::string_view text) {
    for (auto v : all_mcdc_variants) {
        if (text == to_string(v)) {
            return v;
        }
    }
    fail(ErrorKind::configuration, "unknown MC/DC variant '" + std::string(text) + "' (SS|SV|VS|VV)");
}

PairLayout::PairLayout(std::vector<std::size_t> unit_counts) : units_(std::move(unit_counts)) {
    offsets_.push_back(0);
    for (std::size_t l = 0; l + 1 < units_.size(); ++l) {
        offsets_.push_back(offsets_.back() + units_[l] * units_[l + 1]);
    }
}

std::size_t PairLayout::index_of(const PairObligation& o) const {
    const auto l = o.condition.layer_ordinal;
    if (l + 1 >= units_.size() || o.decision.layer_ordinal != l + 1 || o.condition.unit_index >= units_[l] ||
        o.decision.unit_index >= units_[l + 1]) {
        fail(ErrorKind::input, "not an adjacent-layer unit pair");
    }
    return offsets_[l] + o.condition.unit_index * units_[l + 1] + o.decision.unit_index;
}

PairObligation PairLayout::at(std::size_t index) const {
    if (index >= total()) {
        fail(ErrorKind::input, "pair obligation index " + std::to_string(index) + " out of range");
    }
    std::size_t l = 0;
    while (index >= offsets_[l + 1]) {
        ++l;
    }
    const auto local = index - offsets_[l];
    return {{l, local / units_[l + 1]}, {l + 1, local % units_[l + 1]}};
}

void observe_pair(HitCounter& state, const PairLayout& layout, const ActivationTrace& first,
                  const ActivationTrace& second, McdcVariant variant, const Profile* profile, double vc_ratio) {
    const auto& units = layout.unit_counts();
    if (first.raw.size() != units.size() || second.raw.size() != units.size() ||
        first.granularity != second.granularity) {
        fail(ErrorKind::input, "MC/DC traces do not share a layout");
    }
    for (std::size_t l = 0; l < units.size(); ++l) {
        if (static_cast<std::size_t>(first.raw[l].size()) != units[l] ||
            static_cast<std::size_t>(second.raw[l].size()) != units[l]) {
            fail(ErrorKind::input, "MC/DC trace layer " + std::to_string(l) + " has the wrong unit count");
        }
    }
    if (state.hits.size() != layout.total()) {
        fail(ErrorKind::input, "MC/DC state does not match the pair layout");
    }
    if (uses_value(variant) && profile == nullptr) {
        fail(ErrorKind::configuration, std::string("MC/DC ") + to_string(variant) + " requires a training profile");
    }
    auto range = [&](std::size_t l, std::size_t u) {
        const auto& b = profile->layers[l];
        return static_cast<double>(b.high[static_cast<Index>(u)]) - static_cast<double>(b.low[static_cast<Index>(u)]);
    };
    auto changed = [&](std::size_t l, std::size_t u, bool by_sign) {
        const float a = first.raw[l][static_cast<Index>(u)];
        const float b = second.raw[l][static_cast<Index>(u)];
        return by_sign ? sign_change(a, b) : value_change(a, b, range(l, u), vc_ratio);
    };

    for (std::size_t p = 0; p < layout.adjacent_pairs(); ++p) {
        for (std::size_t i = 0; i < units[p]; ++i) {
            if (!changed(p, i, first_is_sign(variant))) {
                continue;
            }
            bool others_stable = true;
            for (std::size_t h = 0; h < units[p] && others_stable; ++h) {
                others_stable = h == i || !changed(p, h, true);
            }
            if (!others_stable) {
                continue;
            }
            for (std::size_t j = 0; j < units[p + 1]; ++j) {
                if (changed(p + 1, j, second_is_sign(variant))) {
                    ++state.hits[layout.offset(p) + i * units[p + 1] + j];
                }
            }
        }
    }
    ++state.observations;
}

void McdcOptions::validate() const {
    if (variants.empty()) {
        fail(ErrorKind::configuration, "no MC/DC variant selected");
    }
    if (!(vc_ratio >= 0.0) || !std::isfinite(vc_ratio)) {
        fail(ErrorKind::configuration, "value-change ratio must be a non-negative number");
    }
    if (pair_budget && *pair_budget == 0) {
        fail(ErrorKind::configuration, "MC/DC pair budget must be at least 1");
    }
}

McdcCoverage::McdcCoverage(std::vector<std::size_t> unit_counts, Granularity granularity, const Profile* profile,
                           McdcOptions options)
    : layout_(std::move(unit_counts)), granularity_(granularity), options_(std::move(options)) {
    options_.validate();
    if (layout_.unit_counts().size() < 2) {
        fail(ErrorKind::configuration, "MC/DC needs at least two coverage layers; the model has " +
                                           std::to_string(layout_.unit_counts().size()));
    }
    if (profile != nullptr) {
        if (profile->granularity != granularity_ || profile->unit_counts() != layout_.unit_counts()) {
            fail(ErrorKind::configuration, "profile granularity or layout does not match MC/DC configuration");
        }
        profile_ = *profile;
    }
    for (auto v : options_.variants) {
        if (uses_value(v) && !profile_) {
            fail(ErrorKind::configuration, std::string("MC/DC ") + to_string(v) + " requires a training profile");
        }
        counters_.emplace_back(CriterionId{family_of(v), 0.0}, layout_.total());
    }
    scratch_.resize(layout_.unit_counts().size());
}

void McdcCoverage::changes(const ActivationTrace& a, const ActivationTrace& b, std::size_t layer,
                           LayerChange& out) const {
    const auto n = layout_.unit_counts()[layer];
    out.sign.assign(n, 0);
    out.value.assign(n, 0);
    out.sign_changes = 0;
    for (std::size_t u = 0; u < n; ++u) {
        const float x = a.raw[layer][static_cast<Index>(u)];
        const float y = b.raw[layer][static_cast<Index>(u)];
        if (sign_change(x, y)) {
            out.sign[u] = 1;
            ++out.sign_changes;
        } else if (profile_) {
            const auto& bounds = profile_->layers[layer];
            const double range = static_cast<double>(bounds.high[static_cast<Index>(u)]) -
                                 static_cast<double>(bounds.low[static_cast<Index>(u)]);
            out.value[u] = value_change(x, y, range, options_.vc_ratio) ? 1 : 0;
        }
    }
}

void McdcCoverage::observe_pair(const ActivationTrace& first, const ActivationTrace& second) {
    const auto& units = layout_.unit_counts();
    if (first.raw.size() != units.size() || second.raw.size() != units.size() || first.granularity != granularity_ ||
        second.granularity != granularity_) {
        fail(ErrorKind::input, "MC/DC traces do not match the configured layout");
    }
    for (std::size_t l = 0; l < units.size(); ++l) {
        if (static_cast<std::size_t>(first.raw[l].size()) != units[l] ||
            static_cast<std::size_t>(second.raw[l].size()) != units[l]) {
            fail(ErrorKind::input, "MC/DC trace layer " + std::to_string(l) + " has the wrong unit count");
        }
        changes(first, second, l, scratch_[l]);
    }

    std::vector<std::size_t> cond_sign;
    std::vector<std::size_t> cond_value;
    std::vector<std::size_t> dec_sign;
    std::vector<std::size_t> dec_value;
    for (std::size_t p = 0; p < layout_.adjacent_pairs(); ++p) {
        const auto& cond = scratch_[p];
        const auto& dec = scratch_[p + 1];
        cond_sign.clear();
        cond_value.clear();
        dec_sign.clear();
        dec_value.clear();
        // A sign-changed condition must be the only sign change in its layer; a
        // value-changed one keeps its sign, so the layer must have none.
        if (cond.sign_changes == 1) {
            for (std::size_t i = 0; i < units[p]; ++i) {
                if (cond.sign[i] != 0) {
                    cond_sign.push_back(i);
                }
            }
        } else if (cond.sign_changes == 0) {
            for (std::size_t i = 0; i < units[p]; ++i) {
                if (cond.value[i] != 0) {
                    cond_value.push_back(i);
                }
            }
        }
        for (std::size_t j = 0; j < units[p + 1]; ++j) {
            if (dec.sign[j] != 0) {
                dec_sign.push_back(j);
            } else if (dec.value[j] != 0) {
                dec_value.push_back(j);
            }
        }
        for (std::size_t v = 0; v < options_.variants.size(); ++v) {
            const auto variant = options_.variants[v];
            const auto& conds = first_is_sign(variant) ? cond_sign : cond_value;
            const auto& decs = second_is_sign(variant) ? dec_sign : dec_value;
            auto& hits = counters_[v].hits;
            for (auto i : conds) {
                const auto row = layout_.offset(p) + i * units[p + 1];
                for (auto j : decs) {
                    ++hits[row + j];
                }
            }
        }
    }
    for (auto& c : counters_) {
        ++c.observations;
    }
}

void McdcCoverage::merge(const McdcCoverage& other) {
    if (other.counters_.size() != counters_.size()) {
        fail(ErrorKind::input, "cannot merge MC/DC collectors with different variants");
    }
    for (std::size_t c = 0; c < counters_.size(); ++c) {
        counters_[c].merge(other.counters_[c]);
    }
}

std::vector<CoverageResult> McdcCoverage::results() const {
    std::vector<CoverageResult> out;
    for (const auto& c : counters_) {
        out.push_back(finalize(c));
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> select_pairs(std::size_t n, std::optional<std::size_t> budget,
                                                              std::uint64_t seed) {
    if (budget && *budget == 0) {
        fail(ErrorKind::configuration, "MC/DC pair budget must be at least 1");
    }
    const std::uint64_t total = n < 2 ? 0 : static_cast<std::uint64_t>(n) * (n - 1) / 2;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (!budget || *budget >= total) {
        pairs.reserve(total);
        for (std::size_t j = 1; j < n; ++j) {
            for (std::size_t i = 0; i < j; ++i) {
                pairs.emplace_back(i, j);
            }
        }
        return pairs;
    }
    // Floyd's sampling of `budget` distinct pair indices; std::set keeps them ordered.
    std::mt19937_64 rng(seed);
    std::set<std::uint64_t> chosen;
    for (std::uint64_t t = total - *budget; t < total; ++t) {
        const auto r = detail::uniform_below(rng, t + 1);
        if (!chosen.insert(r).second) {
            chosen.insert(t);
        }
    }
    pairs.reserve(chosen.size());
    for (auto index : chosen) {
        pairs.push_back(decode_pair(index));
    }
    return pairs;
}

std::vector<CoverageResult> run_mcdc(std::span<const ActivationTrace> traces, const Profile* profile,
                                     const McdcOptions& options) {
    if (traces.size() < 2) {
        fail(ErrorKind::input, "MC/DC works on input pairs and needs at least 2 test inputs");
    }
    options.validate();
    std::vector<std::size_t> counts;
    for (const auto& l : traces.front().raw) {
        counts.push_back(static_cast<std::size_t>(l.size()));
    }
    const auto granularity = traces.front().granularity;
    const auto pairs = select_pairs(traces.size(), options.pair_budget, options.seed);
    std::vector<McdcCoverage> shards(chunk_count(pairs.size(), options.jobs),
                                     McdcCoverage(counts, granularity, profile, options));
    parallel_chunks(pairs.size(), options.jobs, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        for (auto p = begin; p < end; ++p) {
            shards[chunk].observe_pair(traces[pairs[p].first], traces[pairs[p].second]);
        }
    });
    for (std::size_t s = 1; s < shards.size(); ++s) {
        shards.front().merge(shards[s]);
    }
    return shards.front().results();
}

std::vector<CoverageResult> run_mcdc(const Model& model, std::span<const Tensor> tests, const Profile* profile,
                                     Granularity granularity, const McdcOptions& options) {
    if (tests.size() < 2) {
        fail(ErrorKind::input, "MC/DC works on input pairs and needs at least 2 test inputs");
    }
    if (profile != nullptr) {
        check_compatible(*profile, model, granularity);
    }
    const auto traces = trace_all(model, tests, granularity, options.jobs);
    return run_mcdc(traces, profile, options);
}

} // namespace nncov
