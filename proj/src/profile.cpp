#include "nncov/profile.hpp"

#include "binary_io.hpp"
#include "nncov/error.hpp"
#include "nncov/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace nncov {

namespace {

using Eigen::Index;

Profile clipped_profile(std::span<const ActivationTrace> traces, Granularity granularity, double clip_percent) {
    if (!(clip_percent >= 0.0 && clip_percent < 50.0)) {
        fail(ErrorKind::configuration, "clip percent must lie in [0, 50)");
    }
    Profile p;
    p.granularity = granularity;
    p.training_count = traces.size();
    const auto n = traces.size();
    const auto lo_rank = static_cast<std::size_t>(std::floor(clip_percent / 100.0 * static_cast<double>(n - 1)));
    const auto hi_rank =
        static_cast<std::size_t>(std::ceil((1.0 - clip_percent / 100.0) * static_cast<double>(n - 1)));
    std::vector<float> column(n);
    for (std::size_t l = 0; l < traces.front().raw.size(); ++l) {
        const Index units = traces.front().raw[l].size();
        LayerBounds b{Eigen::VectorXf(units), Eigen::VectorXf(units)};
        for (Index u = 0; u < units; ++u) {
            for (std::size_t i = 0; i < n; ++i) {
                column[i] = traces[i].raw[l][u];
            }
            std::sort(column.begin(), column.end());
            b.low[u] = column[lo_rank];
            b.high[u] = column[hi_rank];
        }
        p.layers.push_back(std::move(b));
    }
    return p;
}

} // namespace

std::size_t Profile::unit_total() const noexcept {
    std::size_t total = 0;
    for (const auto& l : layers) {
        total += static_cast<std::size_t>(l.low.size());
    }
    return total;
}

std::vector<std::size_t> Profile::unit_counts() const {
    std::vector<std::size_t> counts;
    for (const auto& l : layers) {
        counts.push_back(static_cast<std::size_t>(l.low.size()));
    }
    return counts;
}

void check_compatible(const Profile& profile, const Model& model, Granularity granularity) {
    if (profile.granularity != granularity) {
        fail(ErrorKind::configuration, std::string("profile was built with ") + to_string(profile.granularity) +
                                           " granularity but coverage uses " + to_string(granularity));
    }
    if (profile.unit_counts() != unit_count(model, granularity)) {
        fail(ErrorKind::configuration, "profile unit layout does not match the model's coverage layers");
    }
}

ProfileBuilder::ProfileBuilder(std::span<const std::size_t> unit_counts, Granularity granularity) {
    profile_.granularity = granularity;
    for (auto n : unit_counts) {
        const auto units = static_cast<Index>(n);
        profile_.layers.push_back({Eigen::VectorXf::Constant(units, std::numeric_limits<float>::infinity()),
                                   Eigen::VectorXf::Constant(units, -std::numeric_limits<float>::infinity())});
    }
}

void ProfileBuilder::observe(const ActivationTrace& trace) {
    if (trace.granularity != profile_.granularity || trace.raw.size() != profile_.layers.size()) {
        fail(ErrorKind::input, "trace does not match the profile layout");
    }
    for (std::size_t l = 0; l < trace.raw.size(); ++l) {
        auto& b = profile_.layers[l];
        if (trace.raw[l].size() != b.low.size()) {
            fail(ErrorKind::input, "trace layer " + std::to_string(l) + " has the wrong unit count");
        }
        b.low = b.low.cwiseMin(trace.raw[l]);
        b.high = b.high.cwiseMax(trace.raw[l]);
    }
    ++profile_.training_count;
}

void ProfileBuilder::merge(const ProfileBuilder& other) {
    if (other.profile_.granularity != profile_.granularity ||
        other.profile_.unit_counts() != profile_.unit_counts()) {
        fail(ErrorKind::input, "cannot merge profiles with different layouts");
    }
    for (std::size_t l = 0; l < profile_.layers.size(); ++l) {
        profile_.layers[l].low = profile_.layers[l].low.cwiseMin(other.profile_.layers[l].low);
        profile_.layers[l].high = profile_.layers[l].high.cwiseMax(other.profile_.layers[l].high);
    }
    profile_.training_count += other.profile_.training_count;
}

Profile ProfileBuilder::finish() const {
    if (profile_.training_count == 0) {
        fail(ErrorKind::configuration, "profiling requires a non-empty training set");
    }
    return profile_;
}

Profile profile(std::span<const ActivationTrace> traces, Granularity granularity, const ProfileOptions& options) {
    if (traces.empty()) {
        fail(ErrorKind::configuration, "profiling requires a non-empty training set");
    }
    if (options.clip_percent != 0.0) {
        return clipped_profile(traces, granularity, options.clip_percent);
    }
    std::vector<std::size_t> counts;
    for (const auto& l : traces.front().raw) {
        counts.push_back(static_cast<std::size_t>(l.size()));
    }
    ProfileBuilder builder(counts, granularity);
    for (const auto& t : traces) {
        builder.observe(t);
    }
    return builder.finish();
}

Profile profile(const Model& model, std::span<const Tensor> training, Granularity granularity,
                const ProfileOptions& options) {
    if (training.empty()) {
        fail(ErrorKind::configuration, "profiling requires a non-empty training set");
    }
    if (options.clip_percent != 0.0) {
        const auto traces = trace_all(model, training, granularity, options.jobs);
        return profile(traces, granularity, options);
    }
    const auto counts = unit_count(model, granularity);
    std::vector<ProfileBuilder> shards(chunk_count(training.size(), options.jobs),
                                       ProfileBuilder(counts, granularity));
    parallel_chunks(training.size(), options.jobs, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        for (auto i = begin; i < end; ++i) {
            shards[chunk].observe(forward(model, training[i], granularity, i).trace);
        }
    });
    for (std::size_t s = 1; s < shards.size(); ++s) {
        shards.front().merge(shards[s]);
    }
    return shards.front().finish();
}

SectionTable::SectionTable(const Profile& profile, std::size_t k) : k_(k), bounds_(profile.layers) {
    if (k == 0) {
        fail(ErrorKind::configuration, "KMNC section count K must be at least 1");
    }
}

double SectionTable::width(std::size_t layer, std::size_t unit) const {
    const auto u = static_cast<Index>(unit);
    return (static_cast<double>(bounds_[layer].high[u]) - static_cast<double>(bounds_[layer].low[u])) /
           static_cast<double>(k_);
}

double SectionTable::boundary(std::size_t layer, std::size_t unit, std::size_t section) const {
    const auto u = static_cast<Index>(unit);
    if (section >= k_) {
        return bounds_[layer].high[u];
    }
    return static_cast<double>(bounds_[layer].low[u]) + static_cast<double>(section) * width(layer, unit);
}

bool SectionTable::degenerate(std::size_t layer, std::size_t unit) const {
    const auto u = static_cast<Index>(unit);
    return bounds_[layer].low[u] == bounds_[layer].high[u];
}

std::optional<std::size_t> SectionTable::section_of(std::size_t layer, std::size_t unit, float a) const {
    const auto u = static_cast<Index>(unit);
    const double lo = bounds_[layer].low[u];
    const double hi = bounds_[layer].high[u];
    const double x = a;
    if (!(x >= lo && x <= hi)) {
        return std::nullopt;
    }
    if (hi == lo) {
        return 0;
    }
    const double w = (hi - lo) / static_cast<double>(k_);
    auto k = std::min(static_cast<std::size_t>((x - lo) / w), k_ - 1);
    // The quotient can land one off at an edge; settle against the exact edges.
    while (k > 0 && x < boundary(layer, unit, k)) {
        --k;
    }
    while (k + 1 < k_ && x >= boundary(layer, unit, k + 1)) {
        ++k;
    }
    return k;
}

SectionTable sections(const Profile& profile, std::size_t k) {
    return {profile, k};
}

void save_profile(const Profile& profile, const std::filesystem::path& dir) {
    detail::ensure_directory(dir);
    std::vector<std::uint8_t> blob;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : profile.layers) {
        layers.push_back({{"units", l.low.size()}});
        for (Index u = 0; u < l.low.size(); ++u) {
            detail::store_f32_le(l.low[u], blob);
            detail::store_f32_le(l.high[u], blob);
        }
    }
    const nlohmann::json manifest = {
        {"format", "nncov-profile"},
        {"version", 1},
        {"byte_order", "little"},
        {"granularity", to_string(profile.granularity)},
        {"training_count", profile.training_count},
        {"layers", std::move(layers)},
    };
    detail::write_text(dir / "profile.json", manifest.dump(2) + "\n");
    detail::write_bytes(dir / "profile.bin", blob);
}

Profile load_profile(const std::filesystem::path& dir) {
    const auto path = dir / "profile.json";
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(detail::read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::format, path.string() + ": malformed JSON at byte " + std::to_string(e.byte));
    }
    try {
        if (manifest.at("format").get<std::string>() != "nncov-profile" || manifest.at("version").get<int>() != 1) {
            fail(ErrorKind::format, path.string() + ": not a version 1 profile");
        }
        const auto blob = detail::read_bytes(dir / "profile.bin");
        Profile p;
        p.granularity = parse_granularity(manifest.at("granularity").get<std::string>());
        p.training_count = manifest.at("training_count").get<std::size_t>();
        std::size_t offset = 0;
        for (const auto& l : manifest.at("layers")) {
            const auto units = l.at("units").get<std::size_t>();
            if (blob.size() < offset + 8 * units) {
                fail(ErrorKind::format, "profile.bin holds " + std::to_string(blob.size()) + " bytes, expected at least " +
                                            std::to_string(offset + 8 * units));
            }
            LayerBounds b{Eigen::VectorXf(static_cast<Index>(units)), Eigen::VectorXf(static_cast<Index>(units))};
            for (std::size_t u = 0; u < units; ++u, offset += 8) {
                b.low[static_cast<Index>(u)] = detail::load_f32_le(blob.data() + offset);
                b.high[static_cast<Index>(u)] = detail::load_f32_le(blob.data() + offset + 4);
                if (!(b.low[static_cast<Index>(u)] <= b.high[static_cast<Index>(u)])) {
                    fail(ErrorKind::format, "profile unit has low > high");
                }
            }
            p.layers.push_back(std::move(b));
        }
        if (offset != blob.size()) {
            fail(ErrorKind::format, "profile.bin holds " + std::to_string(blob.size()) + " bytes, expected " +
                                        std::to_string(offset));
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, path.string() + ": " + e.what());
    }
}

} // namespace nncov
