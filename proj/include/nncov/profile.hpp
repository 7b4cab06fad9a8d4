#pragma once

#include "nncov/inference.hpp"
#include "nncov/model.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace nncov {

/// Per-unit activation bounds observed on a training set. `low` is the minimum and
/// `high` the maximum of each unit's activation.
struct LayerBounds {
    Eigen::VectorXf low;
    Eigen::VectorXf high;
};

struct Profile {
    Granularity granularity = Granularity::neuron;
    std::size_t training_count = 0;
    std::vector<LayerBounds> layers;

    std::size_t unit_total() const noexcept;
    std::vector<std::size_t> unit_counts() const;
};

/// Throws a configuration error unless `profile` was built for this model and granularity.
void check_compatible(const Profile& profile, const Model& model, Granularity granularity);

/// Min/max fold over traces. Merging builders in any order yields the same bounds.
class ProfileBuilder {
public:
    ProfileBuilder(std::span<const std::size_t> unit_counts, Granularity granularity);

    void observe(const ActivationTrace& trace);
    void merge(const ProfileBuilder& other);

    std::size_t count() const noexcept { return profile_.training_count; }
    /// Throws a configuration error when nothing was observed.
    Profile finish() const;

private:
    Profile profile_;
};

struct ProfileOptions {
    /// Percentage of the training distribution clipped from each tail (0 = exact min/max).
    double clip_percent = 0.0;
    unsigned jobs = 1;
};

/// Bounds of every unit over the training inputs. An empty training set is a
/// configuration error.
Profile profile(const Model& model, std::span<const Tensor> training, Granularity granularity,
                const ProfileOptions& options = {});

/// Same, from traces already computed.
Profile profile(std::span<const ActivationTrace> traces, Granularity granularity,
                const ProfileOptions& options = {});

/// Each unit's [low, high] split into K equal-width sections. Section k covers
/// [low + k*w, low + (k+1)*w) and the last one is closed at `high`.
class SectionTable {
public:
    SectionTable(const Profile& profile, std::size_t k);

    std::size_t k() const noexcept { return k_; }
    std::size_t layer_count() const noexcept { return bounds_.size(); }
    std::size_t unit_count(std::size_t layer) const { return static_cast<std::size_t>(bounds_[layer].low.size()); }

    /// Lower edge of section `section` for 0 <= section < K; section == K gives `high`.
    double boundary(std::size_t layer, std::size_t unit, std::size_t section) const;
    double width(std::size_t layer, std::size_t unit) const;
    /// True when low == high: only that single value falls in section 0.
    bool degenerate(std::size_t layer, std::size_t unit) const;
    /// Section containing activation `a`, or nothing when `a` lies outside [low, high].
    std::optional<std::size_t> section_of(std::size_t layer, std::size_t unit, float a) const;

private:
    std::size_t k_;
    std::vector<LayerBounds> bounds_;
};

/// Throws a configuration error when k == 0.
SectionTable sections(const Profile& profile, std::size_t k);

// Persisted as `profile.json` plus `profile.bin` (little-endian float32 (low, high)
// pairs in unit order).
void save_profile(const Profile& profile, const std::filesystem::path& dir);
Profile load_profile(const std::filesystem::path& dir);

} // namespace nncov
