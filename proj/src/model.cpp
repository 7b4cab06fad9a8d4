#include "nncov/model.hpp"

#include "nncov/error.hpp"

#include <algorithm>

namespace nncov {

namespace {

[[noreturn]] void invalid_layer(std::size_t index, LayerKind kind, const std::string& why) {
    fail(ErrorKind::validation,
         "layer " + std::to_string(index) + " (" + to_string(kind) + "): " + why);
}

Shape dense_shape(const Dense& d, const Shape& in, std::size_t index) {
    if (d.weight.rows() == 0 || d.weight.cols() == 0) {
        invalid_layer(index, LayerKind::dense, "empty weight matrix");
    }
    if (d.bias.size() != d.weight.rows()) {
        invalid_layer(index, LayerKind::dense,
                      "weight has " + std::to_string(d.weight.rows()) + " outputs but bias has " +
                          std::to_string(d.bias.size()));
    }
    if (in.size() != 1 || in[0] != static_cast<std::size_t>(d.weight.cols())) {
        invalid_layer(index, LayerKind::dense,
                      "expects input [" + std::to_string(d.weight.cols()) + "], got " + to_string(in));
    }
    return {static_cast<std::size_t>(d.weight.rows())};
}

Shape conv_shape(const Conv2d& c, const Shape& in, std::size_t index) {
    if (c.out_channels == 0 || c.in_channels == 0 || c.kernel_h == 0 || c.kernel_w == 0 ||
        c.stride == 0) {
        invalid_layer(index, LayerKind::conv2d, "channels, kernel and stride must be positive");
    }
    if (static_cast<std::size_t>(c.weight.rows()) != c.out_channels ||
        static_cast<std::size_t>(c.weight.cols()) != c.in_channels * c.kernel_h * c.kernel_w) {
        invalid_layer(index, LayerKind::conv2d, "kernel does not match (out_ch, in_ch, kh, kw)");
    }
    if (static_cast<std::size_t>(c.bias.size()) != c.out_channels) {
        invalid_layer(index, LayerKind::conv2d,
                      "bias length " + std::to_string(c.bias.size()) + " != out_ch " +
                          std::to_string(c.out_channels));
    }
    if (in.size() != 3 || in[0] != c.in_channels) {
        invalid_layer(index, LayerKind::conv2d,
                      "expects input [" + std::to_string(c.in_channels) + ",H,W], got " + to_string(in));
    }
    const auto h = in[1] + 2 * c.padding;
    const auto w = in[2] + 2 * c.padding;
    if (h < c.kernel_h || w < c.kernel_w) {
        invalid_layer(index, LayerKind::conv2d, "kernel larger than padded input " + to_string(in));
    }
    return {c.out_channels, (h - c.kernel_h) / c.stride + 1, (w - c.kernel_w) / c.stride + 1};
}

Shape pool_shape(const MaxPool2d& p, const Shape& in, std::size_t index) {
    if (p.pool_h == 0 || p.pool_w == 0 || p.stride_h == 0 || p.stride_w == 0) {
        invalid_layer(index, LayerKind::maxpool2d, "pool size and stride must be positive");
    }
    if (in.size() != 3 || in[1] < p.pool_h || in[2] < p.pool_w) {
        invalid_layer(index, LayerKind::maxpool2d, "expects [C,H,W] input no smaller than the pool, got " +
                                                       to_string(in));
    }
    return {in[0], (in[1] - p.pool_h) / p.stride_h + 1, (in[2] - p.pool_w) / p.stride_w + 1};
}

Shape batchnorm_shape(const BatchNorm& b, const Shape& in, std::size_t index) {
    const auto n = b.scale.size();
    if (n == 0 || b.shift.size() != n || b.mean.size() != n || b.variance.size() != n) {
        invalid_layer(index, LayerKind::batchnorm, "scale/shift/mean/variance lengths differ");
    }
    if (!(b.variance.array() > 0.0F).all()) {
        invalid_layer(index, LayerKind::batchnorm, "variance entries must be strictly positive");
    }
    if (!(b.epsilon >= 0.0F)) {
        invalid_layer(index, LayerKind::batchnorm, "epsilon must be non-negative");
    }
    if ((in.size() != 1 && in.size() != 3) || in[0] != static_cast<std::size_t>(n)) {
        invalid_layer(index, LayerKind::batchnorm,
                      std::to_string(n) + " channels do not match input " + to_string(in));
    }
    return in;
}

bool is_affine(LayerKind kind) {
    return kind == LayerKind::dense || kind == LayerKind::conv2d;
}

// The default rule: relu outputs, plus dense/conv outputs not followed by a relu
// (batchnorm in between is skipped when looking for it).
bool default_candidate(const std::vector<LayerSpec>& layers, std::size_t t) {
    const auto kind = layers[t].kind();
    if (kind == LayerKind::relu) {
        return true;
    }
    if (!is_affine(kind)) {
        return false;
    }
    auto next = t + 1;
    while (next < layers.size() && layers[next].kind() == LayerKind::batchnorm) {
        ++next;
    }
    return next >= layers.size() || layers[next].kind() != LayerKind::relu;
}

} // namespace

const char* to_string(LayerKind kind) noexcept {
    switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool2d: return "maxpool2d";
    case LayerKind::relu: return "relu";
    case LayerKind::flatten: return "flatten";
    case LayerKind::batchnorm: return "batchnorm";
    }
    return "?";
}

const char* to_string(TaskKind kind) noexcept {
    return kind == TaskKind::classification ? "classification" : "regression";
}

const char* to_string(Granularity granularity) noexcept {
    return granularity == Granularity::neuron ? "neuron" : "channel";
}

std::string supported_layer_kinds() {
    return "dense, conv2d, maxpool2d, relu, flatten, batchnorm";
}

LayerKind parse_layer_kind(std::string_view text) {
    for (auto kind : {LayerKind::dense, LayerKind::conv2d, LayerKind::maxpool2d, LayerKind::relu,
                      LayerKind::flatten, LayerKind::batchnorm}) {
        if (text == to_string(kind)) {
            return kind;
        }
    }
    fail(ErrorKind::capability,
         "unsupported layer kind '" + std::string(text) + "'; supported: " + supported_layer_kinds());
}

TaskKind parse_task_kind(std::string_view text) {
    if (text == "classification") {
        return TaskKind::classification;
    }
    if (text == "regression") {
        return TaskKind::regression;
    }
    fail(ErrorKind::format, "unknown task kind '" + std::string(text) + "'");
}

Granularity parse_granularity(std::string_view text) {
    if (text == "neuron") {
        return Granularity::neuron;
    }
    if (text == "channel") {
        return Granularity::channel;
    }
    fail(ErrorKind::configuration, "unknown granularity '" + std::string(text) + "' (neuron|channel)");
}

LayerKind LayerSpec::kind() const noexcept {
    return static_cast<LayerKind>(params.index());
}

Shape layer_output_shape(const LayerSpec& layer, const Shape& input, std::size_t index) {
    return std::visit(
        [&](const auto& p) -> Shape {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Dense>) {
                return dense_shape(p, input, index);
            } else if constexpr (std::is_same_v<T, Conv2d>) {
                return conv_shape(p, input, index);
            } else if constexpr (std::is_same_v<T, MaxPool2d>) {
                return pool_shape(p, input, index);
            } else if constexpr (std::is_same_v<T, Flatten>) {
                return {element_count(input)};
            } else if constexpr (std::is_same_v<T, BatchNorm>) {
                return batchnorm_shape(p, input, index);
            } else {
                return input;
            }
        },
        layer.params);
}

Model::Model(std::string name, TaskKind task, Shape input_shape, std::vector<LayerSpec> layers)
    : name_(std::move(name)), task_(task), input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
    if (layers_.empty()) {
        fail(ErrorKind::validation, "model has no layers");
    }
    if (input_shape_.empty() || element_count(input_shape_) == 0 ||
        std::find(input_shape_.begin(), input_shape_.end(), 0U) != input_shape_.end()) {
        fail(ErrorKind::validation, "model input shape " + to_string(input_shape_) + " is empty");
    }
    Shape current = input_shape_;
    shapes_.reserve(layers_.size());
    for (std::size_t t = 0; t < layers_.size(); ++t) {
        current = layer_output_shape(layers_[t], current, t);
        shapes_.push_back(current);
    }

    // Everything from the last dense/conv layer onwards is the decision layer.
    std::size_t decision = layers_.size();
    for (std::size_t t = layers_.size(); t-- > 0;) {
        if (is_affine(layers_[t].kind())) {
            decision = t;
            break;
        }
    }

    std::vector<bool> relevant(layers_.size(), false);
    bool any_override = false;
    for (std::size_t t = 0; t < layers_.size(); ++t) {
        if (layers_[t].coverage_relevant) {
            relevant[t] = *layers_[t].coverage_relevant;
            any_override = true;
        } else {
            relevant[t] = t < decision && default_candidate(layers_, t);
        }
    }
    // A model with no hidden layer: observe the decision layer rather than nothing.
    if (!any_override && std::none_of(relevant.begin(), relevant.end(), [](bool b) { return b; })) {
        for (std::size_t t = layers_.size(); t-- > 0;) {
            if (default_candidate(layers_, t)) {
                relevant[t] = true;
                break;
            }
        }
    }
    for (std::size_t t = 0; t < layers_.size(); ++t) {
        if (!relevant[t]) {
            continue;
        }
        const auto& shape = shapes_[t];
        if (shape.size() != 1 && shape.size() != 3) {
            invalid_layer(t, layers_[t].kind(),
                          "coverage-relevant output must be [N] or [C,H,W], got " + to_string(shape));
        }
        coverage_.push_back({t, shape});
    }
    if (coverage_.empty()) {
        fail(ErrorKind::validation, "model has no coverage-relevant layer");
    }
}

std::size_t unit_count(const Shape& shape, Granularity granularity) {
    if (shape.size() == 3 && granularity == Granularity::channel) {
        return shape[0];
    }
    return element_count(shape);
}

std::vector<std::size_t> unit_count(const Model& model, Granularity granularity) {
    std::vector<std::size_t> counts;
    counts.reserve(model.coverage_layers().size());
    for (const auto& layer : model.coverage_layers()) {
        counts.push_back(unit_count(layer.shape, granularity));
    }
    return counts;
}

bool is_valid_unit(const Model& model, Granularity granularity, const Unit& unit) {
    const auto& layers = model.coverage_layers();
    return unit.layer_ordinal < layers.size() &&
           unit.unit_index < unit_count(layers[unit.layer_ordinal].shape, granularity);
}

} // namespace nncov
