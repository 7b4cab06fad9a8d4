#pragma once

#include "nncov/model.hpp"

#include <filesystem>

namespace nncov {

// NNCM bundle: a directory holding `manifest.json` (layer list, shapes, explicit byte
// ranges per parameter tensor) and `weights.bin` (little-endian float32, manifest order).

inline constexpr int nncm_version = 1;

/// Loads and validates a bundle. Malformed manifests raise format errors (with the byte
/// offset for JSON syntax errors), shape mismatches raise validation errors naming the
/// layer, and unknown layer kinds raise capability errors.
Model load_model(const std::filesystem::path& bundle_dir);

/// Writes `model` as a bundle; loading it back reproduces every parameter bit-for-bit.
void save_model(const Model& model, const std::filesystem::path& bundle_dir);

} // namespace nncov
