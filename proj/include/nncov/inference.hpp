#pragma once

#include "nncov/model.hpp"
#include "nncov/tensor.hpp"

#include <span>
#include <vector>

namespace nncov {

/// Unit activations of one input at every coverage-relevant layer.
struct ActivationTrace {
    std::size_t input_id = 0;
    Granularity granularity = Granularity::neuron;
    /// Raw activation per unit; a channel unit holds the mean over its feature map.
    std::vector<Eigen::VectorXf> raw;
    /// `raw` min-max scaled to [0, 1] within each layer; constant layers scale to 0.
    std::vector<Eigen::VectorXf> scaled;

    std::size_t layer_count() const noexcept { return raw.size(); }
};

struct ForwardResult {
    Tensor output;
    ActivationTrace trace;
};

/// Per-layer min-max normalization used by thresholded neuron coverage.
Eigen::VectorXf min_max_scale(const Eigen::VectorXf& values);

/// Evaluates `model` on `input`, recording activations at coverage-relevant layers.
/// Throws an input error on shape mismatch and a numeric error naming the first layer
/// that produces a non-finite value.
ForwardResult forward(const Model& model, const Tensor& input, Granularity granularity,
                      std::size_t input_id = 0);

/// Decision-layer output only.
Tensor evaluate(const Model& model, const Tensor& input);

/// Traces for every input; `jobs` > 1 splits the inputs over worker threads. The
/// result is identical for every `jobs` value.
std::vector<ActivationTrace> trace_all(const Model& model, std::span<const Tensor> inputs,
                                       Granularity granularity, unsigned jobs = 1);

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(const Eigen::VectorXf& values);

struct Predictions {
    std::vector<int> labels;
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy_percent = 0.0;
};

/// Argmax classification of every input, scored against `truth`.
Predictions predict_labels(const Model& model, std::span<const Tensor> inputs, std::span<const int> truth);

} // namespace nncov
