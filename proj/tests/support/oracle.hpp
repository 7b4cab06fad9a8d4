#pragma once

// Brute-force reference implementations used to check the engine. They are written
// for clarity only: plain loops, no shared code with the library beyond data types.

#include "nncov/inference.hpp"
#include "nncov/profile.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace nncov::oracle {

using Counts = std::vector<std::uint64_t>;

/// Output of every layer, computed in double precision with naive loops.
std::vector<std::vector<double>> naive_layer_outputs(const Model& model, const Tensor& input);

/// Unit values at the coverage layers (channel means under channel granularity).
std::vector<std::vector<double>> naive_units(const Model& model, const Tensor& input, Granularity granularity);

/// Two-pass min/max over the traces' raw values.
Profile naive_profile(const std::vector<ActivationTrace>& traces, Granularity granularity);

Counts nc(const std::vector<ActivationTrace>& traces, double threshold);
/// Section found by scanning every boundary from the top.
Counts kmnc(const std::vector<ActivationTrace>& traces, const Profile& profile, std::size_t k);
/// Full sort per layer, ties to the lower index.
Counts tknc(const std::vector<ActivationTrace>& traces, std::size_t k);
/// Two slots per unit: below low, above high.
Counts nbc(const std::vector<ActivationTrace>& traces, const Profile& profile);
Counts snac(const std::vector<ActivationTrace>& traces, const Profile& profile);

/// `cond` and `dec` are 'S' or 'V'. Evaluates the given unordered pairs, or every pair
/// when `pairs` is empty. Obligations are ordered layer pair, condition, decision.
Counts mcdc(const std::vector<ActivationTrace>& traces, const Profile* profile, char cond, char dec,
            double vc_ratio, const std::vector<std::pair<std::size_t, std::size_t>>& pairs = {});

/// Obligation hit counts of `counts` that are non-zero, as indices.
std::vector<std::size_t> covered(const Counts& counts);

} // namespace nncov::oracle
