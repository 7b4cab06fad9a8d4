#include "nncov/nncm.hpp"

#include "binary_io.hpp"
#include "nncov/error.hpp"

#include <json.hpp>

namespace nncov {

namespace {

using nlohmann::json;

struct ParamReader {
    const std::vector<std::uint8_t>& blob;
    std::size_t layer;

    Eigen::VectorXf read(const json& params, const char* key, const Shape& expected) const {
        const std::string where = "layer " + std::to_string(layer) + " param '" + key + "'";
        if (!params.contains(key)) {
            fail(ErrorKind::format, where + " missing");
        }
        const auto& p = params.at(key);
        const auto shape = p.at("shape").get<Shape>();
        const auto offset = p.at("byte_offset").get<std::size_t>();
        const auto length = p.at("byte_length").get<std::size_t>();
        if (shape != expected) {
            fail(ErrorKind::validation, where + " has shape " + to_string(shape) + ", expected " +
                                            to_string(expected));
        }
        if (length != 4 * element_count(shape)) {
            fail(ErrorKind::format, where + " byte_length " + std::to_string(length) +
                                        " does not match shape " + to_string(shape));
        }
        if (offset % 4 != 0 || offset > blob.size() || length > blob.size() - offset) {
            fail(ErrorKind::format, where + " range [" + std::to_string(offset) + ", " +
                                        std::to_string(offset + length) + ") exceeds weights.bin size " +
                                        std::to_string(blob.size()));
        }
        return detail::decode_f32_le({blob.data() + offset, length});
    }
};

RowMatrixXf as_matrix(const Eigen::VectorXf& flat, std::size_t rows, std::size_t cols) {
    return Eigen::Map<const RowMatrixXf>(flat.data(), static_cast<Eigen::Index>(rows),
                                         static_cast<Eigen::Index>(cols));
}

std::size_t positive(const json& j, const char* key, std::size_t layer) {
    const auto v = j.at(key).get<long long>();
    if (v <= 0) {
        fail(ErrorKind::validation, "layer " + std::to_string(layer) + ": '" + key + "' must be positive");
    }
    return static_cast<std::size_t>(v);
}

std::pair<std::size_t, std::size_t> pair_field(const json& j, const char* key, std::size_t layer,
                                               std::size_t fallback) {
    if (!j.contains(key)) {
        return {fallback, fallback};
    }
    const auto& v = j.at(key);
    if (v.is_array()) {
        const auto a = v.get<std::vector<long long>>();
        if (a.size() != 2 || a[0] <= 0 || a[1] <= 0) {
            fail(ErrorKind::validation, "layer " + std::to_string(layer) + ": '" + key +
                                            "' must be a positive integer or a pair of them");
        }
        return {static_cast<std::size_t>(a[0]), static_cast<std::size_t>(a[1])};
    }
    const auto s = positive(j, key, layer);
    return {s, s};
}

LayerSpec parse_layer(const json& j, std::size_t index, const std::vector<std::uint8_t>& blob) {
    const auto kind = parse_layer_kind(j.at("kind").get<std::string>());
    const ParamReader reader{blob, index};
    const json no_params = json::object();
    const auto& params = j.contains("params") ? j.at("params") : no_params;

    LayerSpec spec{Relu{}, std::nullopt};
    if (j.contains("coverage_relevant")) {
        spec.coverage_relevant = j.at("coverage_relevant").get<bool>();
    }
    switch (kind) {
    case LayerKind::dense: {
        const auto shape = params.at("weight").at("shape").get<Shape>();
        if (shape.size() != 2) {
            fail(ErrorKind::validation, "layer " + std::to_string(index) + " (dense): weight must be 2-D");
        }
        Dense d;
        d.weight = as_matrix(reader.read(params, "weight", shape), shape[0], shape[1]);
        d.bias = reader.read(params, "bias", params.at("bias").at("shape").get<Shape>());
        spec.params = std::move(d);
        break;
    }
    case LayerKind::conv2d: {
        const auto shape = params.at("weight").at("shape").get<Shape>();
        if (shape.size() != 4) {
            fail(ErrorKind::validation,
                 "layer " + std::to_string(index) + " (conv2d): kernel must be (out_ch, in_ch, kh, kw)");
        }
        Conv2d c;
        c.out_channels = shape[0];
        c.in_channels = shape[1];
        c.kernel_h = shape[2];
        c.kernel_w = shape[3];
        c.stride = j.contains("stride") ? positive(j, "stride", index) : 1;
        c.padding = j.value("padding", std::size_t{0});
        c.weight = as_matrix(reader.read(params, "weight", shape), shape[0], shape[1] * shape[2] * shape[3]);
        c.bias = reader.read(params, "bias", params.at("bias").at("shape").get<Shape>());
        spec.params = std::move(c);
        break;
    }
    case LayerKind::maxpool2d: {
        MaxPool2d p;
        std::tie(p.pool_h, p.pool_w) = pair_field(j, "pool", index, 2);
        const auto stride = pair_field(j, "stride", index, 0);
        p.stride_h = stride.first == 0 ? p.pool_h : stride.first;
        p.stride_w = stride.second == 0 ? p.pool_w : stride.second;
        spec.params = p;
        break;
    }
    case LayerKind::relu: spec.params = Relu{}; break;
    case LayerKind::flatten: spec.params = Flatten{}; break;
    case LayerKind::batchnorm: {
        BatchNorm b;
        b.epsilon = j.value("epsilon", 1e-3F);
        b.scale = reader.read(params, "scale", params.at("scale").at("shape").get<Shape>());
        b.shift = reader.read(params, "shift", params.at("shift").at("shape").get<Shape>());
        b.mean = reader.read(params, "mean", params.at("mean").at("shape").get<Shape>());
        b.variance = reader.read(params, "variance", params.at("variance").at("shape").get<Shape>());
        spec.params = std::move(b);
        break;
    }
    }
    return spec;
}

json param_entry(const float* values, std::size_t n, Shape shape, std::vector<std::uint8_t>& blob) {
    json entry = {{"shape", std::move(shape)}, {"byte_offset", blob.size()}, {"byte_length", 4 * n}};
    detail::encode_f32_le(values, n, blob);
    return entry;
}

json param_entry(const Eigen::VectorXf& v, std::vector<std::uint8_t>& blob) {
    return param_entry(v.data(), static_cast<std::size_t>(v.size()), {static_cast<std::size_t>(v.size())}, blob);
}

} // namespace

Model load_model(const std::filesystem::path& bundle_dir) {
    const auto manifest_path = bundle_dir / "manifest.json";
    const auto text = detail::read_text(manifest_path);
    json manifest;
    try {
        manifest = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::format, manifest_path.string() + ": malformed JSON at byte " +
                                    std::to_string(e.byte) + ": " + e.what());
    }

    try {
        if (manifest.value("format", std::string{}) != "nncm") {
            fail(ErrorKind::format, manifest_path.string() + ": 'format' must be \"nncm\"");
        }
        if (manifest.at("version").get<int>() != nncm_version) {
            fail(ErrorKind::capability, "unsupported NNCM version " + manifest.at("version").dump());
        }
        if (manifest.at("byte_order").get<std::string>() != "little") {
            fail(ErrorKind::capability, "only little-endian NNCM bundles are supported");
        }
        if (manifest.at("dtype").get<std::string>() != "float32") {
            fail(ErrorKind::capability, "only float32 NNCM bundles are supported");
        }
        const auto blob = detail::read_bytes(bundle_dir / "weights.bin");
        const auto input_shape = manifest.at("input_shape").get<Shape>();

        std::vector<LayerSpec> layers;
        std::size_t index = 0;
        for (const auto& j : manifest.at("layers")) {
            layers.push_back(parse_layer(j, index++, blob));
        }
        return Model(manifest.value("name", std::string{"model"}),
                     parse_task_kind(manifest.value("task", std::string{"classification"})), input_shape,
                     std::move(layers));
    } catch (const json::exception& e) {
        fail(ErrorKind::format, manifest_path.string() + ": " + e.what());
    }
}

void save_model(const Model& model, const std::filesystem::path& bundle_dir) {
    detail::ensure_directory(bundle_dir);
    std::vector<std::uint8_t> blob;
    json layers = json::array();
    for (const auto& layer : model.layers()) {
        json j = {{"kind", to_string(layer.kind())}};
        if (layer.coverage_relevant) {
            j["coverage_relevant"] = *layer.coverage_relevant;
        }
        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, Dense>) {
                    const auto rows = static_cast<std::size_t>(p.weight.rows());
                    const auto cols = static_cast<std::size_t>(p.weight.cols());
                    j["params"]["weight"] = param_entry(p.weight.data(), rows * cols, {rows, cols}, blob);
                    j["params"]["bias"] = param_entry(p.bias, blob);
                } else if constexpr (std::is_same_v<T, Conv2d>) {
                    j["stride"] = p.stride;
                    j["padding"] = p.padding;
                    j["params"]["weight"] =
                        param_entry(p.weight.data(), static_cast<std::size_t>(p.weight.size()),
                                    {p.out_channels, p.in_channels, p.kernel_h, p.kernel_w}, blob);
                    j["params"]["bias"] = param_entry(p.bias, blob);
                } else if constexpr (std::is_same_v<T, MaxPool2d>) {
                    j["pool"] = {p.pool_h, p.pool_w};
                    j["stride"] = {p.stride_h, p.stride_w};
                } else if constexpr (std::is_same_v<T, BatchNorm>) {
                    j["epsilon"] = p.epsilon;
                    j["params"]["scale"] = param_entry(p.scale, blob);
                    j["params"]["shift"] = param_entry(p.shift, blob);
                    j["params"]["mean"] = param_entry(p.mean, blob);
                    j["params"]["variance"] = param_entry(p.variance, blob);
                }
            },
            layer.params);
        layers.push_back(std::move(j));
    }
    const json manifest = {
        {"format", "nncm"},
        {"version", nncm_version},
        {"byte_order", "little"},
        {"dtype", "float32"},
        {"name", model.name()},
        {"task", to_string(model.task())},
        {"input_shape", model.input_shape()},
        {"layers", std::move(layers)},
    };
    detail::write_text(bundle_dir / "manifest.json", manifest.dump(2) + "\n");
    detail::write_bytes(bundle_dir / "weights.bin", blob);
}

} // namespace nncov
