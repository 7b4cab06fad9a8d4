#pragma once

#include "nncov/tensor.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace nncov {

using ClassLabels = std::vector<int>;
using RegressionTargets = std::vector<float>;
using Labels = std::variant<std::monostate, ClassLabels, RegressionTargets>;

/// Ordered inputs of one shape, optionally labelled.
struct Dataset {
    std::string name;
    std::vector<Tensor> inputs;
    Labels labels;

    std::size_t size() const noexcept { return inputs.size(); }
    bool empty() const noexcept { return inputs.empty(); }
    const ClassLabels* class_labels() const noexcept { return std::get_if<ClassLabels>(&labels); }

    /// Throws an input error on mixed shapes or a label count mismatch.
    void validate() const;
    /// Every input viewed under `shape` (same element count).
    Dataset reshaped(const Shape& shape) const;
    /// The first `n` inputs (and labels).
    Dataset truncated(std::size_t n) const;
};

inline constexpr std::uint32_t idx_image_magic = 0x00000803;
inline constexpr std::uint32_t idx_label_magic = 0x00000801;

/// IDX unsigned-byte files (big-endian header). Pixels scale to [0, 1] by /255; each
/// image has the shape given by the dims after the count. `limit` keeps the first
/// records in file order.
Dataset load_idx(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels,
                 std::optional<std::size_t> limit = std::nullopt);

/// Directory with `data.json` (shape, count, dtype, optional labels file) and
/// `data.bin` (little-endian float32).
Dataset load_raw(const std::filesystem::path& dir, std::optional<std::size_t> limit = std::nullopt);
void save_raw(const Dataset& dataset, const std::filesystem::path& dir);

} // namespace nncov
