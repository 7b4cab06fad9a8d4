#include "nncov/coverage.hpp"

#include "nncov/error.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

namespace nncov {

namespace {

using Eigen::Index;

std::size_t total_units(std::span<const std::size_t> counts) {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::size_t trace_units(const ActivationTrace& trace) {
    std::size_t n = 0;
    for (const auto& l : trace.raw) {
        n += static_cast<std::size_t>(l.size());
    }
    return n;
}

void expect_size(const HitCounter& state, const ActivationTrace& trace, std::size_t slots) {
    if (state.hits.size() != trace_units(trace) * slots) {
        fail(ErrorKind::input, state.id.label() + ": trace does not match the obligation universe");
    }
}

void check_bounds_layout(const ActivationTrace& trace, const Profile& profile) {
    if (profile.granularity != trace.granularity || profile.layers.size() != trace.raw.size()) {
        fail(ErrorKind::configuration, "profile does not match the trace layout or granularity");
    }
    for (std::size_t l = 0; l < trace.raw.size(); ++l) {
        if (profile.layers[l].low.size() != trace.raw[l].size()) {
            fail(ErrorKind::configuration, "profile layer " + std::to_string(l) + " has the wrong unit count");
        }
    }
}

void observe_nbc_only(HitCounter& nbc, const ActivationTrace& trace, const Profile& profile) {
    std::size_t flat = 0;
    for (std::size_t l = 0; l < trace.raw.size(); ++l) {
        const auto& a = trace.raw[l];
        const auto& b = profile.layers[l];
        for (Index u = 0; u < a.size(); ++u, ++flat) {
            if (a[u] < b.low[u]) {
                ++nbc.hits[2 * flat];
            } else if (a[u] > b.high[u]) {
                ++nbc.hits[2 * flat + 1];
            }
        }
    }
    ++nbc.observations;
}

void observe_snac_only(HitCounter& snac, const ActivationTrace& trace, const Profile& profile) {
    std::size_t flat = 0;
    for (std::size_t l = 0; l < trace.raw.size(); ++l) {
        const auto& a = trace.raw[l];
        const auto& high = profile.layers[l].high;
        for (Index u = 0; u < a.size(); ++u, ++flat) {
            if (a[u] > high[u]) {
                ++snac.hits[flat];
            }
        }
    }
    ++snac.observations;
}

} // namespace

const char* to_string(Family family) noexcept {
    switch (family) {
    case Family::nc: return "NC";
    case Family::kmnc: return "KMNC";
    case Family::tknc: return "TKNC";
    case Family::nbc: return "NBC";
    case Family::snac: return "SNAC";
    case Family::mcdc_ss: return "MCDC(SS)";
    case Family::mcdc_sv: return "MCDC(SV)";
    case Family::mcdc_vs: return "MCDC(VS)";
    case Family::mcdc_vv: return "MCDC(VV)";
    }
    return "?";
}

bool is_mcdc(Family family) noexcept {
    return family == Family::mcdc_ss || family == Family::mcdc_sv || family == Family::mcdc_vs ||
           family == Family::mcdc_vv;
}

bool needs_profile(Family family) noexcept {
    return family == Family::kmnc || family == Family::nbc || family == Family::snac ||
           family == Family::mcdc_sv || family == Family::mcdc_vs || family == Family::mcdc_vv;
}

std::string format_number(double value) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, value);
    return {buf, r.ptr};
}

std::string CriterionId::label() const {
    switch (family) {
    case Family::nc:
    case Family::kmnc:
    case Family::tknc: return std::string(to_string(family)) + "(" + format_number(parameter) + ")";
    default: return to_string(family);
    }
}

CriterionId parse_criterion(std::string_view label) {
    for (auto f : {Family::nbc, Family::snac, Family::mcdc_ss, Family::mcdc_sv, Family::mcdc_vs, Family::mcdc_vv}) {
        if (label == to_string(f)) {
            return {f, 0.0};
        }
    }
    for (auto f : {Family::nc, Family::kmnc, Family::tknc}) {
        const std::string_view name = to_string(f);
        if (label.size() > name.size() + 2 && label.substr(0, name.size()) == name && label[name.size()] == '(' &&
            label.back() == ')') {
            const auto body = label.substr(name.size() + 1, label.size() - name.size() - 2);
            double v = 0;
            const auto r = std::from_chars(body.data(), body.data() + body.size(), v);
            if (r.ec == std::errc() && r.ptr == body.data() + body.size()) {
                return {f, v};
            }
        }
    }
    fail(ErrorKind::format, "unknown criterion label '" + std::string(label) + "'");
}

void HitCounter::merge(const HitCounter& other) {
    if (other.id != id || other.hits.size() != hits.size()) {
        fail(ErrorKind::input, "cannot merge " + other.id.label() + " into " + id.label());
    }
    for (std::size_t i = 0; i < hits.size(); ++i) {
        hits[i] += other.hits[i];
    }
    observations += other.observations;
}

CoverageResult finalize(const HitCounter& counter) {
    CoverageResult r;
    r.id = counter.id;
    r.total = counter.hits.size();
    r.covered = static_cast<std::size_t>(
        std::count_if(counter.hits.begin(), counter.hits.end(), [](std::uint64_t h) { return h > 0; }));
    r.percent = r.total == 0 ? 0.0 : 100.0 * static_cast<double>(r.covered) / static_cast<double>(r.total);
    r.hit_counts = counter.hits;
    r.observations = counter.observations;
    return r;
}

const char* to_string(ObligationKind kind) noexcept {
    switch (kind) {
    case ObligationKind::nc: return "NC";
    case ObligationKind::kmnc: return "KMNC";
    case ObligationKind::tknc: return "TKNC";
    case ObligationKind::nbc_lower: return "NBC-lower";
    case ObligationKind::nbc_upper: return "NBC-upper";
    case ObligationKind::snac: return "SNAC";
    }
    return "?";
}

std::size_t slots_per_unit(const CriterionId& id) {
    switch (id.family) {
    case Family::kmnc: return static_cast<std::size_t>(id.parameter);
    case Family::nbc: return 2;
    default: return 1;
    }
}

Obligation obligation_at(const CriterionId& id, std::span<const std::size_t> unit_counts, std::size_t index) {
    if (is_mcdc(id.family)) {
        fail(ErrorKind::input, "MC/DC obligations are unit pairs; use PairLayout");
    }
    const auto slots = slots_per_unit(id);
    auto flat = index / slots;
    const auto slot = index % slots;
    Obligation o;
    for (std::size_t l = 0; l < unit_counts.size(); ++l) {
        if (flat < unit_counts[l]) {
            o.unit = {l, flat};
            break;
        }
        flat -= unit_counts[l];
        if (l + 1 == unit_counts.size()) {
            fail(ErrorKind::input, "obligation index " + std::to_string(index) + " out of range");
        }
    }
    switch (id.family) {
    case Family::nc: o.kind = ObligationKind::nc; break;
    case Family::kmnc:
        o.kind = ObligationKind::kmnc;
        o.section = slot;
        break;
    case Family::tknc: o.kind = ObligationKind::tknc; break;
    case Family::nbc: o.kind = slot == 0 ? ObligationKind::nbc_lower : ObligationKind::nbc_upper; break;
    default: o.kind = ObligationKind::snac; break;
    }
    return o;
}

void CoverageConfig::validate() const {
    for (double t : nc_thresholds) {
        if (!(t >= 0.0 && t < 1.0)) {
            fail(ErrorKind::configuration, "NC threshold " + format_number(t) + " outside [0, 1)");
        }
    }
    for (auto k : kmnc_k) {
        if (k == 0) {
            fail(ErrorKind::configuration, "KMNC section count K must be at least 1");
        }
    }
    for (auto k : tknc_k) {
        if (k == 0) {
            fail(ErrorKind::configuration, "TKNC K must be at least 1");
        }
    }
}

std::vector<CriterionId> CoverageConfig::criteria() const {
    std::vector<CriterionId> ids;
    for (double t : nc_thresholds) {
        ids.push_back({Family::nc, t});
    }
    for (auto k : kmnc_k) {
        ids.push_back({Family::kmnc, static_cast<double>(k)});
    }
    for (auto k : tknc_k) {
        ids.push_back({Family::tknc, static_cast<double>(k)});
    }
    if (boundary) {
        ids.push_back({Family::nbc, 0.0});
        ids.push_back({Family::snac, 0.0});
    }
    return ids;
}

std::vector<UniverseEntry> enumerate_obligations(const Model& model, const Profile* profile,
                                                 const CoverageConfig& config) {
    config.validate();
    const auto counts = unit_count(model, config.granularity);
    if (profile != nullptr) {
        check_compatible(*profile, model, config.granularity);
    }
    const auto units = total_units(counts);
    std::vector<UniverseEntry> out;
    for (const auto& id : config.criteria()) {
        if (profile == nullptr && needs_profile(id.family)) {
            fail(ErrorKind::configuration, id.label() + " requires a training profile");
        }
        out.push_back({id, units * slots_per_unit(id)});
    }
    return out;
}

void observe_nc(HitCounter& state, const ActivationTrace& trace, double threshold) {
    expect_size(state, trace, 1);
    std::size_t flat = 0;
    for (std::size_t l = 0; l < trace.raw.size(); ++l) {
        const auto& values = threshold == 0.0 ? trace.raw[l] : trace.scaled[l];
        for (Index u = 0; u < values.size(); ++u, ++flat) {
            if (static_cast<double>(values[u]) > threshold) {
                ++state.hits[flat];
            }
        }
    }
    ++state.observations;
}

void observe_kmnc(HitCounter& state, const ActivationTrace& trace, const SectionTable& sections) {
    expect_size(state, trace, sections.k());
    if (sections.layer_count() != trace.raw.size()) {
        fail(ErrorKind::configuration, "section table does not match the trace layout");
    }
    std::size_t flat = 0;
    for (std::size_t l = 0; l < trace.raw.size(); ++l) {
        const auto& a = trace.raw[l];
        for (Index u = 0; u < a.size(); ++u, ++flat) {
            if (const auto k = sections.section_of(l, static_cast<std::size_t>(u), a[u])) {
                ++state.hits[flat * sections.k() + *k];
            }
        }
    }
    ++state.observations;
}

void observe_tknc(HitCounter& state, const ActivationTrace& trace, std::size_t k) {
    if (k == 0) {
        fail(ErrorKind::configuration, "TKNC K must be at least 1");
    }
    expect_size(state, trace, 1);
    std::vector<std::size_t> order;
    std::size_t offset = 0;
    for (const auto& a : trace.raw) {
        const auto n = static_cast<std::size_t>(a.size());
        if (n <= k) {
            for (std::size_t u = 0; u < n; ++u) {
                ++state.hits[offset + u];
            }
        } else {
            order.resize(n);
            std::iota(order.begin(), order.end(), std::size_t{0});
            auto more_active = [&a](std::size_t x, std::size_t y) {
                const auto ax = a[static_cast<Index>(x)];
                const auto ay = a[static_cast<Index>(y)];
                return ax > ay || (ax == ay && x < y);
            };
            std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(),
                             more_active);
            for (std::size_t r = 0; r < k; ++r) {
                ++state.hits[offset + order[r]];
            }
        }
        offset += n;
    }
    ++state.observations;
}

void observe_boundary(HitCounter& nbc, HitCounter& snac, const ActivationTrace& trace, const Profile& profile) {
    expect_size(nbc, trace, 2);
    expect_size(snac, trace, 1);
    check_bounds_layout(trace, profile);
    observe_nbc_only(nbc, trace, profile);
    observe_snac_only(snac, trace, profile);
}

NeuronCoverage::NeuronCoverage(const Model& model, const Profile* profile, CoverageConfig config)
    : NeuronCoverage(unit_count(model, config.granularity), profile, config) {
    if (profile != nullptr) {
        check_compatible(*profile, model, config_.granularity);
    }
}

NeuronCoverage::NeuronCoverage(std::vector<std::size_t> unit_counts, const Profile* profile, CoverageConfig config)
    : units_(std::move(unit_counts)), config_(std::move(config)) {
    config_.validate();
    if (profile != nullptr) {
        if (profile->granularity != config_.granularity || profile->unit_counts() != units_) {
            fail(ErrorKind::configuration, "profile granularity or layout does not match the coverage configuration");
        }
        profile_ = *profile;
    }
    criteria_ = config_.criteria();
    const auto units = total_units(units_);
    for (const auto& id : criteria_) {
        if (!profile_ && needs_profile(id.family)) {
            fail(ErrorKind::configuration, id.label() + " requires a training profile");
        }
        counters_.emplace_back(id, units * slots_per_unit(id));
    }
    if (profile_) {
        for (auto k : config_.kmnc_k) {
            tables_.push_back(sections(*profile_, k));
        }
    }
}

void NeuronCoverage::observe_one(const ActivationTrace& trace, std::size_t criterion) {
    if (trace.granularity != config_.granularity) {
        fail(ErrorKind::configuration, "trace granularity does not match the coverage configuration");
    }
    auto& counter = counters_.at(criterion);
    switch (counter.id.family) {
    case Family::nc: observe_nc(counter, trace, counter.id.parameter); break;
    case Family::kmnc: {
        const auto pos = std::find(config_.kmnc_k.begin(), config_.kmnc_k.end(),
                                   static_cast<std::size_t>(counter.id.parameter));
        observe_kmnc(counter, trace, tables_[static_cast<std::size_t>(pos - config_.kmnc_k.begin())]);
        break;
    }
    case Family::tknc: observe_tknc(counter, trace, static_cast<std::size_t>(counter.id.parameter)); break;
    case Family::nbc:
        expect_size(counter, trace, 2);
        check_bounds_layout(trace, *profile_);
        observe_nbc_only(counter, trace, *profile_);
        break;
    case Family::snac:
        expect_size(counter, trace, 1);
        check_bounds_layout(trace, *profile_);
        observe_snac_only(counter, trace, *profile_);
        break;
    default: break;
    }
}

void NeuronCoverage::observe(const ActivationTrace& trace) {
    for (std::size_t c = 0; c < counters_.size(); ++c) {
        observe_one(trace, c);
    }
}

void NeuronCoverage::merge(const NeuronCoverage& other) {
    if (other.criteria_ != criteria_ || other.units_ != units_) {
        fail(ErrorKind::input, "cannot merge coverage collectors with different configurations");
    }
    for (std::size_t c = 0; c < counters_.size(); ++c) {
        counters_[c].merge(other.counters_[c]);
    }
}

std::vector<CoverageResult> NeuronCoverage::results() const {
    std::vector<CoverageResult> out;
    out.reserve(counters_.size());
    for (const auto& c : counters_) {
        out.push_back(finalize(c));
    }
    return out;
}

} // namespace nncov
