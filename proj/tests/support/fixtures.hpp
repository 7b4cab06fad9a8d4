#pragma once

#include "nncov/dataset.hpp"
#include "nncov/inference.hpp"
#include "nncov/model.hpp"
#include "nncov/profile.hpp"

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <vector>

namespace nncov::testing {

RowMatrixXf matrix(std::initializer_list<std::initializer_list<float>> rows);
Eigen::VectorXf vec(std::initializer_list<float> values);
Tensor tensor(std::initializer_list<float> values);

/// Trace with the given raw values per layer (scaled values derived as in inference).
ActivationTrace make_trace(const std::vector<std::vector<float>>& raw, std::size_t input_id = 0,
                           Granularity granularity = Granularity::neuron);

/// Profile from per-layer (low, high) pairs.
Profile make_profile(const std::vector<std::vector<std::pair<float, float>>>& bounds,
                     Granularity granularity = Granularity::neuron);

/// One dense layer followed by relu.
Model dense_relu(const RowMatrixXf& weight, const Eigen::VectorXf& bias);

/// Uniform double in [lo, hi) from the top 53 bits; stable across standard libraries.
double uniform(std::mt19937_64& rng, double lo, double hi);

Tensor random_tensor(std::mt19937_64& rng, const Shape& shape, double lo, double hi);
std::vector<Tensor> random_inputs(std::mt19937_64& rng, const Shape& shape, std::size_t n, double lo, double hi);

/// Dense(in -> hidden[0]) + relu, ..., then a dense decision layer with `outputs` units.
Model random_mlp(std::mt19937_64& rng, std::size_t inputs, const std::vector<std::size_t>& hidden,
                 std::size_t outputs);

/// LeNet-1 layout on [1, 28, 28] with seeded weights: conv 4@5x5, relu, maxpool, conv 12@5x5,
/// relu, maxpool, flatten, dense 10.
Model lenet1(std::uint64_t seed);

/// Dense layers without activation; every layer but the first input is observed,
/// the last one through an explicit override. Used for hand-built MC/DC networks.
Model linear_chain(const std::vector<RowMatrixXf>& weights, const std::vector<Eigen::VectorXf>& biases);

/// Seven-segment style digits on a side x side grid, with random shift, stroke
/// intensity and additive noise. Labels are the digit classes.
Dataset synthetic_digits(std::size_t n, std::uint64_t seed, std::size_t side = 12);

/// Directory holding the committed trained convnet.
std::filesystem::path convnet_dir();

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

// Seeds and sizes the committed convnet was trained with.
inline constexpr std::uint64_t convnet_train_seed = 1;
inline constexpr std::uint64_t convnet_test_seed = 2;
inline constexpr std::size_t convnet_train_size = 20000;

} // namespace nncov::testing
