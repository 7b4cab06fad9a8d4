#pragma once

#include "nncov/tensor.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace nncov {

enum class LayerKind { dense, conv2d, maxpool2d, relu, flatten, batchnorm };
enum class TaskKind { classification, regression };

/// Unit granularity: one unit per neuron, or one unit per conv feature map.
enum class Granularity { neuron, channel };

const char* to_string(LayerKind kind) noexcept;
const char* to_string(TaskKind kind) noexcept;
const char* to_string(Granularity granularity) noexcept;
LayerKind parse_layer_kind(std::string_view text);
TaskKind parse_task_kind(std::string_view text);
Granularity parse_granularity(std::string_view text);

/// Comma-separated list of every kind `parse_layer_kind` accepts.
std::string supported_layer_kinds();

struct Dense {
    RowMatrixXf weight; // (out, in)
    Eigen::VectorXf bias;
};

struct Conv2d {
    std::size_t out_channels = 0;
    std::size_t in_channels = 0;
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    std::size_t stride = 1;
    std::size_t padding = 0;
    RowMatrixXf weight; // (out_ch, in_ch * kh * kw), i.e. (out_ch, in_ch, kh, kw) row-major
    Eigen::VectorXf bias;
};

struct MaxPool2d {
    std::size_t pool_h = 2;
    std::size_t pool_w = 2;
    std::size_t stride_h = 2;
    std::size_t stride_w = 2;
};

struct Relu {};
struct Flatten {};

/// Inference-only batch normalization over the leading (channel) axis.
struct BatchNorm {
    Eigen::VectorXf scale;
    Eigen::VectorXf shift;
    Eigen::VectorXf mean;
    Eigen::VectorXf variance;
    float epsilon = 1e-3F;
};

using LayerParams = std::variant<Dense, Conv2d, MaxPool2d, Relu, Flatten, BatchNorm>;

struct LayerSpec {
    LayerParams params;
    /// Explicit per-layer choice from the manifest; unset means the default rule applies.
    std::optional<bool> coverage_relevant;

    LayerKind kind() const noexcept;
};

/// Output shape of `layer` applied to `input`; throws a validation error naming `index`.
Shape layer_output_shape(const LayerSpec& layer, const Shape& input, std::size_t index);

/// A layer whose output is observed for coverage.
struct CoverageLayer {
    std::size_t layer_index = 0;
    Shape shape; // output shape of that layer
};

struct Unit {
    std::size_t layer_ordinal = 0; // index into Model::coverage_layers()
    std::size_t unit_index = 0;

    friend bool operator==(const Unit&, const Unit&) = default;
};

/// Validated feedforward model. Immutable after construction.
class Model {
public:
    /// Validates every layer invariant and end-to-end shape composability.
    Model(std::string name, TaskKind task, Shape input_shape, std::vector<LayerSpec> layers);

    const std::string& name() const noexcept { return name_; }
    TaskKind task() const noexcept { return task_; }
    const Shape& input_shape() const noexcept { return input_shape_; }
    const Shape& output_shape() const noexcept { return shapes_.back(); }
    const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
    /// Output shape of each layer, in layer order.
    const std::vector<Shape>& layer_shapes() const noexcept { return shapes_; }
    const std::vector<CoverageLayer>& coverage_layers() const noexcept { return coverage_; }

private:
    std::string name_;
    TaskKind task_;
    Shape input_shape_;
    std::vector<LayerSpec> layers_;
    std::vector<Shape> shapes_;
    std::vector<CoverageLayer> coverage_;
};

/// Units in a layer output of this shape: rank-1 outputs count neurons; rank-3 (C, H, W)
/// outputs count C under channel granularity and C*H*W under neuron granularity.
std::size_t unit_count(const Shape& shape, Granularity granularity);

/// Per coverage-relevant layer unit counts.
std::vector<std::size_t> unit_count(const Model& model, Granularity granularity);

bool is_valid_unit(const Model& model, Granularity granularity, const Unit& unit);

} // namespace nncov
