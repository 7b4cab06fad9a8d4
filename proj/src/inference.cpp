#include "nncov/inference.hpp"

#include "nncov/error.hpp"
#include "nncov/parallel.hpp"

#include <cmath>
#include <limits>

namespace nncov {

namespace {

using Eigen::Index;

Eigen::VectorXf conv2d(const Conv2d& c, const Eigen::VectorXf& x, const Shape& in, const Shape& out) {
    const auto in_h = static_cast<Index>(in[1]);
    const auto in_w = static_cast<Index>(in[2]);
    const auto out_h = static_cast<Index>(out[1]);
    const auto out_w = static_cast<Index>(out[2]);
    const auto kh = static_cast<Index>(c.kernel_h);
    const auto kw = static_cast<Index>(c.kernel_w);
    const auto stride = static_cast<Index>(c.stride);
    const auto pad = static_cast<Index>(c.padding);

    // im2col: one column per output position, rows ordered (in_ch, ky, kx).
    Eigen::MatrixXf patches(static_cast<Index>(c.in_channels) * kh * kw, out_h * out_w);
    for (Index oy = 0; oy < out_h; ++oy) {
        for (Index ox = 0; ox < out_w; ++ox) {
            const Index col = oy * out_w + ox;
            Index row = 0;
            for (Index ch = 0; ch < static_cast<Index>(c.in_channels); ++ch) {
                for (Index ky = 0; ky < kh; ++ky) {
                    const Index iy = oy * stride + ky - pad;
                    for (Index kx = 0; kx < kw; ++kx, ++row) {
                        const Index ix = ox * stride + kx - pad;
                        const bool inside = iy >= 0 && iy < in_h && ix >= 0 && ix < in_w;
                        patches(row, col) = inside ? x[(ch * in_h + iy) * in_w + ix] : 0.0F;
                    }
                }
            }
        }
    }
    RowMatrixXf y = c.weight * patches;
    y.colwise() += c.bias;
    return Eigen::Map<const Eigen::VectorXf>(y.data(), y.size());
}

Eigen::VectorXf maxpool2d(const MaxPool2d& p, const Eigen::VectorXf& x, const Shape& in, const Shape& out) {
    Eigen::VectorXf y(static_cast<Index>(element_count(out)));
    for (std::size_t ch = 0; ch < out[0]; ++ch) {
        for (std::size_t oy = 0; oy < out[1]; ++oy) {
            for (std::size_t ox = 0; ox < out[2]; ++ox) {
                float best = -std::numeric_limits<float>::infinity();
                for (std::size_t py = 0; py < p.pool_h; ++py) {
                    for (std::size_t px = 0; px < p.pool_w; ++px) {
                        const auto iy = oy * p.stride_h + py;
                        const auto ix = ox * p.stride_w + px;
                        best = std::max(best, x[static_cast<Index>((ch * in[1] + iy) * in[2] + ix)]);
                    }
                }
                y[static_cast<Index>((ch * out[1] + oy) * out[2] + ox)] = best;
            }
        }
    }
    return y;
}

Eigen::VectorXf batchnorm(const BatchNorm& b, const Eigen::VectorXf& x) {
    const Index channels = b.scale.size();
    const Index per_channel = x.size() / channels;
    Eigen::VectorXf y(x.size());
    for (Index ch = 0; ch < channels; ++ch) {
        const float gain = b.scale[ch] / std::sqrt(b.variance[ch] + b.epsilon);
        y.segment(ch * per_channel, per_channel) =
            ((x.segment(ch * per_channel, per_channel).array() - b.mean[ch]) * gain + b.shift[ch]).matrix();
    }
    return y;
}

Eigen::VectorXf apply(const LayerSpec& layer, const Eigen::VectorXf& x, const Shape& in, const Shape& out) {
    return std::visit(
        [&](const auto& p) -> Eigen::VectorXf {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Dense>) {
                return p.weight * x + p.bias;
            } else if constexpr (std::is_same_v<T, Conv2d>) {
                return conv2d(p, x, in, out);
            } else if constexpr (std::is_same_v<T, MaxPool2d>) {
                return maxpool2d(p, x, in, out);
            } else if constexpr (std::is_same_v<T, Relu>) {
                return x.cwiseMax(0.0F);
            } else if constexpr (std::is_same_v<T, BatchNorm>) {
                return batchnorm(p, x);
            } else {
                return x;
            }
        },
        layer.params);
}

Eigen::VectorXf unit_values(const Eigen::VectorXf& x, const Shape& shape, Granularity granularity) {
    if (shape.size() != 3 || granularity == Granularity::neuron) {
        return x;
    }
    const auto channels = static_cast<Index>(shape[0]);
    const auto area = static_cast<Index>(shape[1] * shape[2]);
    Eigen::VectorXf means(channels);
    for (Index ch = 0; ch < channels; ++ch) {
        means[ch] = static_cast<float>(x.segment(ch * area, area).cast<double>().sum() / static_cast<double>(area));
    }
    return means;
}

template <bool Record>
ForwardResult run(const Model& model, const Tensor& input, Granularity granularity, std::size_t input_id) {
    if (input.shape() != model.input_shape()) {
        fail(ErrorKind::input, "input shape " + to_string(input.shape()) + " does not match model input " +
                                   to_string(model.input_shape()));
    }
    ForwardResult result;
    auto& trace = result.trace;
    trace.input_id = input_id;
    trace.granularity = granularity;
    if constexpr (Record) {
        trace.raw.reserve(model.coverage_layers().size());
    }

    const auto& layers = model.layers();
    const auto& shapes = model.layer_shapes();
    const auto& coverage = model.coverage_layers();
    std::size_t next_coverage = 0;
    Eigen::VectorXf x = input.data();
    const Shape* in_shape = &model.input_shape();
    for (std::size_t t = 0; t < layers.size(); ++t) {
        x = apply(layers[t], x, *in_shape, shapes[t]);
        if (!x.allFinite()) {
            fail(ErrorKind::numeric, "layer " + std::to_string(t) + " (" + to_string(layers[t].kind()) +
                                         ") produced a non-finite value for input " + std::to_string(input_id));
        }
        if constexpr (Record) {
            if (next_coverage < coverage.size() && coverage[next_coverage].layer_index == t) {
                trace.raw.push_back(unit_values(x, shapes[t], granularity));
                ++next_coverage;
            }
        }
        in_shape = &shapes[t];
    }
    if constexpr (Record) {
        trace.scaled.reserve(trace.raw.size());
        for (const auto& layer : trace.raw) {
            trace.scaled.push_back(min_max_scale(layer));
        }
    }
    result.output = Tensor(model.output_shape(), std::move(x));
    return result;
}

} // namespace

Eigen::VectorXf min_max_scale(const Eigen::VectorXf& values) {
    if (values.size() == 0) {
        return values;
    }
    const float lo = values.minCoeff();
    const float hi = values.maxCoeff();
    if (!(hi > lo)) {
        return Eigen::VectorXf::Zero(values.size());
    }
    return ((values.array() - lo) / (hi - lo)).min(1.0F).max(0.0F).matrix();
}

ForwardResult forward(const Model& model, const Tensor& input, Granularity granularity, std::size_t input_id) {
    return run<true>(model, input, granularity, input_id);
}

Tensor evaluate(const Model& model, const Tensor& input) {
    return run<false>(model, input, Granularity::neuron, 0).output;
}

std::vector<ActivationTrace> trace_all(const Model& model, std::span<const Tensor> inputs,
                                       Granularity granularity, unsigned jobs) {
    std::vector<ActivationTrace> traces(inputs.size());
    parallel_chunks(inputs.size(), jobs, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (auto i = begin; i < end; ++i) {
            traces[i] = forward(model, inputs[i], granularity, i).trace;
        }
    });
    return traces;
}

std::size_t argmax(const Eigen::VectorXf& values) {
    std::size_t best = 0;
    for (Index i = 1; i < values.size(); ++i) {
        if (values[i] > values[static_cast<Index>(best)]) {
            best = static_cast<std::size_t>(i);
        }
    }
    return best;
}

Predictions predict_labels(const Model& model, std::span<const Tensor> inputs, std::span<const int> truth) {
    if (model.task() != TaskKind::classification) {
        fail(ErrorKind::configuration, "accuracy requires a classification model");
    }
    if (inputs.empty()) {
        fail(ErrorKind::input, "cannot compute accuracy over an empty dataset");
    }
    if (truth.size() != inputs.size()) {
        fail(ErrorKind::input, std::to_string(truth.size()) + " labels for " + std::to_string(inputs.size()) +
                                   " inputs");
    }
    Predictions p;
    p.total = inputs.size();
    p.labels.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto label = static_cast<int>(argmax(evaluate(model, inputs[i]).data()));
        p.labels.push_back(label);
        p.correct += label == truth[i] ? 1 : 0;
    }
    p.accuracy_percent = 100.0 * static_cast<double>(p.correct) / static_cast<double>(p.total);
    return p;
}

} // namespace nncov
