#include "fixtures.hpp"

#include <algorithm>
#include <array>

namespace nncov::testing {

namespace {

using Eigen::Index;

Eigen::VectorXf random_vector(std::mt19937_64& rng, std::size_t n, double scale) {
    Eigen::VectorXf v(static_cast<Index>(n));
    for (Index i = 0; i < v.size(); ++i) {
        v[i] = static_cast<float>(uniform(rng, -scale, scale));
    }
    return v;
}

RowMatrixXf random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale) {
    RowMatrixXf m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            m(r, c) = static_cast<float>(uniform(rng, -scale, scale));
        }
    }
    return m;
}

Conv2d random_conv(std::mt19937_64& rng, std::size_t out, std::size_t in, std::size_t k) {
    Conv2d c;
    c.out_channels = out;
    c.in_channels = in;
    c.kernel_h = k;
    c.kernel_w = k;
    const double scale = 1.0 / std::sqrt(static_cast<double>(in * k * k));
    c.weight = random_matrix(rng, out, in * k * k, scale);
    c.bias = random_vector(rng, out, 0.1);
    return c;
}

// Segments a..g of a seven-segment display, as (row0, col0, row1, col1) in a 7x5 cell.
constexpr std::array<std::array<int, 4>, 7> segments{{
    {0, 0, 0, 4}, // a: top
    {0, 4, 3, 4}, // b: upper right
    {3, 4, 6, 4}, // c: lower right
    {6, 0, 6, 4}, // d: bottom
    {3, 0, 6, 0}, // e: lower left
    {0, 0, 3, 0}, // f: upper left
    {3, 0, 3, 4}, // g: middle
}};

constexpr std::array<const char*, 10> digit_segments{"abcdef", "bc", "abdeg", "abcdg", "bcfg",
                                                     "acdfg",  "acdefg", "abc", "abcdefg", "abcdfg"};

} // namespace

RowMatrixXf matrix(std::initializer_list<std::initializer_list<float>> rows) {
    RowMatrixXf m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
    Index r = 0;
    for (const auto& row : rows) {
        Index c = 0;
        for (float v : row) {
            m(r, c++) = v;
        }
        ++r;
    }
    return m;
}

Eigen::VectorXf vec(std::initializer_list<float> values) {
    Eigen::VectorXf v(static_cast<Index>(values.size()));
    Index i = 0;
    for (float x : values) {
        v[i++] = x;
    }
    return v;
}

Tensor tensor(std::initializer_list<float> values) {
    return {Shape{values.size()}, vec(values)};
}

ActivationTrace make_trace(const std::vector<std::vector<float>>& raw, std::size_t input_id,
                           Granularity granularity) {
    ActivationTrace t;
    t.input_id = input_id;
    t.granularity = granularity;
    for (const auto& layer : raw) {
        Eigen::VectorXf v(static_cast<Index>(layer.size()));
        for (std::size_t i = 0; i < layer.size(); ++i) {
            v[static_cast<Index>(i)] = layer[i];
        }
        t.scaled.push_back(min_max_scale(v));
        t.raw.push_back(std::move(v));
    }
    return t;
}

Profile make_profile(const std::vector<std::vector<std::pair<float, float>>>& bounds, Granularity granularity) {
    Profile p;
    p.granularity = granularity;
    p.training_count = 1;
    for (const auto& layer : bounds) {
        LayerBounds b{Eigen::VectorXf(static_cast<Index>(layer.size())), Eigen::VectorXf(static_cast<Index>(layer.size()))};
        for (std::size_t i = 0; i < layer.size(); ++i) {
            b.low[static_cast<Index>(i)] = layer[i].first;
            b.high[static_cast<Index>(i)] = layer[i].second;
        }
        p.layers.push_back(std::move(b));
    }
    return p;
}

Model dense_relu(const RowMatrixXf& weight, const Eigen::VectorXf& bias) {
    return {"dense_relu",
            TaskKind::classification,
            {static_cast<std::size_t>(weight.cols())},
            {{Dense{weight, bias}, {}}, {Relu{}, {}}}};
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

Tensor random_tensor(std::mt19937_64& rng, const Shape& shape, double lo, double hi) {
    Eigen::VectorXf v(static_cast<Index>(element_count(shape)));
    for (Index i = 0; i < v.size(); ++i) {
        v[i] = static_cast<float>(uniform(rng, lo, hi));
    }
    return {shape, std::move(v)};
}

std::vector<Tensor> random_inputs(std::mt19937_64& rng, const Shape& shape, std::size_t n, double lo, double hi) {
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(random_tensor(rng, shape, lo, hi));
    }
    return out;
}

Model random_mlp(std::mt19937_64& rng, std::size_t inputs, const std::vector<std::size_t>& hidden,
                 std::size_t outputs) {
    std::vector<LayerSpec> layers;
    auto width = inputs;
    for (auto h : hidden) {
        layers.push_back({Dense{random_matrix(rng, h, width, 1.0), random_vector(rng, h, 0.5)}, {}});
        layers.push_back({Relu{}, {}});
        width = h;
    }
    layers.push_back({Dense{random_matrix(rng, outputs, width, 1.0), random_vector(rng, outputs, 0.5)}, {}});
    return {"random_mlp", TaskKind::classification, {inputs}, std::move(layers)};
}

Model lenet1(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<LayerSpec> layers;
    layers.push_back({random_conv(rng, 4, 1, 5), {}});
    layers.push_back({Relu{}, {}});
    layers.push_back({MaxPool2d{}, {}});
    layers.push_back({random_conv(rng, 12, 4, 5), {}});
    layers.push_back({Relu{}, {}});
    layers.push_back({MaxPool2d{}, {}});
    layers.push_back({Flatten{}, {}});
    layers.push_back({Dense{random_matrix(rng, 10, 192, 0.07), random_vector(rng, 10, 0.1)}, {}});
    return {"lenet1", TaskKind::classification, {1, 28, 28}, std::move(layers)};
}

Model linear_chain(const std::vector<RowMatrixXf>& weights, const std::vector<Eigen::VectorXf>& biases) {
    std::vector<LayerSpec> layers;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        LayerSpec s{Dense{weights[i], biases[i]}, {}};
        if (i + 1 == weights.size()) {
            s.coverage_relevant = true;
        }
        layers.push_back(std::move(s));
    }
    return {"linear_chain", TaskKind::regression, {static_cast<std::size_t>(weights.front().cols())},
            std::move(layers)};
}

Dataset synthetic_digits(std::size_t n, std::uint64_t seed, std::size_t side) {
    std::mt19937_64 rng(seed);
    Dataset d;
    d.name = "digits";
    ClassLabels labels;
    const int cell_h = 7;
    const int cell_w = 5;
    const int s = static_cast<int>(side);
    for (std::size_t i = 0; i < n; ++i) {
        const int digit = static_cast<int>(rng() % 10);
        const int max_dy = s - cell_h;
        const int max_dx = s - cell_w;
        const int oy = static_cast<int>(rng() % static_cast<std::uint64_t>(max_dy + 1));
        const int ox = static_cast<int>(rng() % static_cast<std::uint64_t>(max_dx + 1));
        const double ink = uniform(rng, 0.5, 1.0);
        const bool thick = rng() % 2 == 0;
        Eigen::VectorXf img = Eigen::VectorXf::Zero(s * s);
        for (const char* seg = digit_segments[static_cast<std::size_t>(digit)]; *seg != '\0'; ++seg) {
            const auto& g = segments[static_cast<std::size_t>(*seg - 'a')];
            for (int r = g[0]; r <= g[2]; ++r) {
                for (int c = g[1]; c <= g[3]; ++c) {
                    const int y = oy + r;
                    const int x = ox + c;
                    img[y * s + x] = static_cast<float>(ink);
                    if (thick && x + 1 < s) {
                        img[y * s + x + 1] = std::max(img[y * s + x + 1], static_cast<float>(0.6 * ink));
                    }
                }
            }
        }
        for (Index k = 0; k < img.size(); ++k) {
            const double noisy = img[k] + uniform(rng, -0.15, 0.15);
            img[k] = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
        }
        d.inputs.emplace_back(Shape{1, side, side}, std::move(img));
        labels.push_back(digit);
    }
    d.labels = std::move(labels);
    return d;
}

std::filesystem::path convnet_dir() {
    return std::filesystem::path(NNCOV_FIXTURE_DIR) / "convnet";
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("nncov_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace nncov::testing
