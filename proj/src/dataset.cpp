#include "nncov/dataset.hpp"

#include "binary_io.hpp"
#include "nncov/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>

namespace nncov {

namespace {

using Eigen::Index;

struct IdxHeader {
    std::vector<std::uint32_t> dims;
    std::size_t header_bytes = 0;
};

IdxHeader read_idx_header(const std::vector<std::uint8_t>& bytes, std::uint32_t magic,
                          const std::filesystem::path& path) {
    if (bytes.size() < 4) {
        fail(ErrorKind::format, path.string() + ": truncated IDX header: expected at least 4 bytes, got " +
                                    std::to_string(bytes.size()));
    }
    const auto found = detail::load_u32_be(bytes.data());
    if (found != magic) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "wrong IDX magic 0x%08X (expected 0x%08X)", found, magic);
        fail(ErrorKind::format, path.string() + ": " + buf);
    }
    IdxHeader h;
    const auto ndims = magic & 0xFFU;
    h.header_bytes = 4 + 4 * std::size_t{ndims};
    if (bytes.size() < h.header_bytes) {
        fail(ErrorKind::format, path.string() + ": truncated IDX header: expected " + std::to_string(h.header_bytes) +
                                    " bytes, got " + std::to_string(bytes.size()));
    }
    for (std::uint32_t d = 0; d < ndims; ++d) {
        h.dims.push_back(detail::load_u32_be(bytes.data() + 4 + 4 * d));
    }
    std::size_t expected = h.header_bytes;
    std::size_t records = 1;
    for (auto d : h.dims) {
        records *= d;
    }
    expected += records;
    if (bytes.size() < expected) {
        fail(ErrorKind::format, path.string() + ": truncated IDX data: expected " + std::to_string(expected) +
                                    " bytes, got " + std::to_string(bytes.size()));
    }
    return h;
}

} // namespace

void Dataset::validate() const {
    for (const auto& t : inputs) {
        if (t.shape() != inputs.front().shape()) {
            fail(ErrorKind::input, "dataset '" + name + "' mixes input shapes " + to_string(inputs.front().shape()) +
                                       " and " + to_string(t.shape()));
        }
        t.validate();
    }
    const auto n = std::visit(
        [](const auto& l) -> std::optional<std::size_t> {
            if constexpr (std::is_same_v<std::decay_t<decltype(l)>, std::monostate>) {
                return std::nullopt;
            } else {
                return l.size();
            }
        },
        labels);
    if (n && *n != inputs.size()) {
        fail(ErrorKind::input, "dataset '" + name + "' has " + std::to_string(*n) + " labels for " +
                                   std::to_string(inputs.size()) + " inputs");
    }
}

Dataset Dataset::reshaped(const Shape& shape) const {
    Dataset out{name, {}, labels};
    out.inputs.reserve(inputs.size());
    for (const auto& t : inputs) {
        out.inputs.push_back(t.reshaped(shape));
    }
    return out;
}

Dataset Dataset::truncated(std::size_t n) const {
    if (n >= inputs.size()) {
        return *this;
    }
    Dataset out{name, {inputs.begin(), inputs.begin() + static_cast<std::ptrdiff_t>(n)}, {}};
    std::visit(
        [&](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                out.labels = l;
            } else {
                out.labels = T(l.begin(), l.begin() + static_cast<std::ptrdiff_t>(n));
            }
        },
        labels);
    return out;
}

Dataset load_idx(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels,
                 std::optional<std::size_t> limit) {
    const auto bytes = detail::read_bytes(images);
    const auto header = read_idx_header(bytes, idx_image_magic, images);
    const std::size_t count = header.dims[0];
    const Shape shape{header.dims[1], header.dims[2]};
    const auto area = element_count(shape);
    const auto kept = std::min(count, limit.value_or(count));

    Dataset d;
    d.name = images.stem().string();
    d.inputs.reserve(kept);
    for (std::size_t i = 0; i < kept; ++i) {
        Eigen::VectorXf pixels(static_cast<Index>(area));
        const auto* p = bytes.data() + header.header_bytes + i * area;
        for (std::size_t k = 0; k < area; ++k) {
            pixels[static_cast<Index>(k)] = static_cast<float>(p[k]) / 255.0F;
        }
        d.inputs.emplace_back(shape, std::move(pixels));
    }
    if (labels) {
        const auto lbytes = detail::read_bytes(*labels);
        const auto lheader = read_idx_header(lbytes, idx_label_magic, *labels);
        if (lheader.dims[0] != count) {
            fail(ErrorKind::format, labels->string() + ": " + std::to_string(lheader.dims[0]) + " labels for " +
                                        std::to_string(count) + " images");
        }
        ClassLabels l(lbytes.begin() + static_cast<std::ptrdiff_t>(lheader.header_bytes),
                      lbytes.begin() + static_cast<std::ptrdiff_t>(lheader.header_bytes + kept));
        d.labels = std::move(l);
    }
    return d;
}

Dataset load_raw(const std::filesystem::path& dir, std::optional<std::size_t> limit) {
    const auto path = dir / "data.json";
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(detail::read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::format, path.string() + ": malformed JSON at byte " + std::to_string(e.byte));
    }
    try {
        if (manifest.value("dtype", std::string{"float32"}) != "float32") {
            fail(ErrorKind::capability, path.string() + ": only float32 datasets are supported");
        }
        const auto shape = manifest.at("shape").get<Shape>();
        const auto count = manifest.at("count").get<std::size_t>();
        if (shape.empty() || element_count(shape) == 0) {
            fail(ErrorKind::format, path.string() + ": empty input shape");
        }
        const auto bytes = detail::read_bytes(dir / "data.bin");
        const auto per_input = element_count(shape);
        if (bytes.size() != 4 * per_input * count) {
            fail(ErrorKind::format, (dir / "data.bin").string() + ": expected " + std::to_string(4 * per_input * count) +
                                        " bytes for " + std::to_string(count) + " inputs of shape " + to_string(shape) +
                                        ", got " + std::to_string(bytes.size()));
        }
        const auto kept = std::min(count, limit.value_or(count));
        Dataset d;
        d.name = manifest.value("name", dir.filename().string());
        d.inputs.reserve(kept);
        for (std::size_t i = 0; i < kept; ++i) {
            d.inputs.emplace_back(shape, detail::decode_f32_le({bytes.data() + 4 * per_input * i, 4 * per_input}));
        }
        if (manifest.contains("labels")) {
            const auto& l = manifest.at("labels");
            const auto file = dir / l.at("file").get<std::string>();
            const auto dtype = l.value("dtype", std::string{"int32"});
            const auto lbytes = detail::read_bytes(file);
            if (lbytes.size() != 4 * count) {
                fail(ErrorKind::format, file.string() + ": expected " + std::to_string(4 * count) + " bytes, got " +
                                            std::to_string(lbytes.size()));
            }
            if (dtype == "int32") {
                ClassLabels labels(kept);
                for (std::size_t i = 0; i < kept; ++i) {
                    labels[i] = static_cast<std::int32_t>(detail::load_u32_le(lbytes.data() + 4 * i));
                }
                d.labels = std::move(labels);
            } else if (dtype == "float32") {
                RegressionTargets targets(kept);
                for (std::size_t i = 0; i < kept; ++i) {
                    targets[i] = detail::load_f32_le(lbytes.data() + 4 * i);
                }
                d.labels = std::move(targets);
            } else {
                fail(ErrorKind::capability, file.string() + ": label dtype must be int32 or float32");
            }
        }
        d.validate();
        return d;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, path.string() + ": " + e.what());
    }
}

void save_raw(const Dataset& dataset, const std::filesystem::path& dir) {
    dataset.validate();
    if (dataset.empty()) {
        fail(ErrorKind::input, "cannot save an empty dataset");
    }
    detail::ensure_directory(dir);
    std::vector<std::uint8_t> blob;
    for (const auto& t : dataset.inputs) {
        detail::encode_f32_le(t.data().data(), t.size(), blob);
    }
    nlohmann::json manifest = {
        {"name", dataset.name},
        {"shape", dataset.inputs.front().shape()},
        {"count", dataset.size()},
        {"dtype", "float32"},
    };
    if (const auto* l = std::get_if<ClassLabels>(&dataset.labels)) {
        std::vector<std::uint8_t> lb;
        for (int v : *l) {
            detail::store_u32_le(static_cast<std::uint32_t>(v), lb);
        }
        detail::write_bytes(dir / "labels.bin", lb);
        manifest["labels"] = {{"file", "labels.bin"}, {"dtype", "int32"}};
    } else if (const auto* t = std::get_if<RegressionTargets>(&dataset.labels)) {
        std::vector<std::uint8_t> lb;
        detail::encode_f32_le(t->data(), t->size(), lb);
        detail::write_bytes(dir / "labels.bin", lb);
        manifest["labels"] = {{"file", "labels.bin"}, {"dtype", "float32"}};
    }
    detail::write_text(dir / "data.json", manifest.dump(2) + "\n");
    detail::write_bytes(dir / "data.bin", blob);
}

} // namespace nncov
