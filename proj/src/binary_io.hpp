#pragma once

#include "nncov/error.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

// Byte-level helpers shared by the on-disk formats. All multi-byte values are
// assembled explicitly so results do not depend on host byte order.
namespace nncov::detail {

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::io, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string read_text(const std::filesystem::path& path) {
    auto bytes = read_bytes(path);
    return {bytes.begin(), bytes.end()};
}

inline void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::io, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorKind::io, "write failed for " + path.string());
    }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        fail(ErrorKind::io, "cannot create directory " + dir.string());
    }
}

inline std::uint32_t load_u32_le(const std::uint8_t* p) {
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
           (std::uint32_t{p[3]} << 24);
}

inline std::uint32_t load_u32_be(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
           std::uint32_t{p[3]};
}

inline void store_u32_le(std::uint32_t v, std::vector<std::uint8_t>& out) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline float load_f32_le(const std::uint8_t* p) {
    return std::bit_cast<float>(load_u32_le(p));
}

inline void store_f32_le(float v, std::vector<std::uint8_t>& out) {
    store_u32_le(std::bit_cast<std::uint32_t>(v), out);
}

inline Eigen::VectorXf decode_f32_le(std::span<const std::uint8_t> bytes) {
    Eigen::VectorXf v(static_cast<Eigen::Index>(bytes.size() / 4));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = load_f32_le(bytes.data() + 4 * i);
    }
    return v;
}

inline void encode_f32_le(const float* values, std::size_t n, std::vector<std::uint8_t>& out) {
    out.reserve(out.size() + 4 * n);
    for (std::size_t i = 0; i < n; ++i) {
        store_f32_le(values[i], out);
    }
}

} // namespace nncov::detail
