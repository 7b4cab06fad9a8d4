#include "nncov/tensor.hpp"

#include "nncov/error.hpp"

#include <functional>
#include <numeric>

namespace nncov {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::configuration: return "configuration error";
    case ErrorKind::input: return "input error";
    case ErrorKind::format: return "format error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::capability: return "capability error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::io: return "I/O error";
    }
    return "error";
}

std::size_t element_count(const Shape& shape) noexcept {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != 0) {
            out += ",";
        }
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(Shape shape, Eigen::VectorXf data) : shape_(std::move(shape)), data_(std::move(data)) {
    for (auto dim : shape_) {
        if (dim == 0) {
            fail(ErrorKind::input, "tensor shape " + to_string(shape_) + " has a zero dimension");
        }
    }
    if (element_count(shape_) != static_cast<std::size_t>(data_.size())) {
        fail(ErrorKind::input, "tensor shape " + to_string(shape_) + " does not match " +
                                   std::to_string(data_.size()) + " values");
    }
}

Tensor Tensor::zeros(Shape shape) {
    const auto n = static_cast<Eigen::Index>(element_count(shape));
    return {std::move(shape), Eigen::VectorXf::Zero(n)};
}

void Tensor::validate() const {
    if (!all_finite()) {
        fail(ErrorKind::input, "tensor contains non-finite values");
    }
}

Tensor Tensor::reshaped(Shape shape) const {
    return {std::move(shape), data_};
}

} // namespace nncov
