#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace nncov {

using Shape = std::vector<std::size_t>;
using RowMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::size_t element_count(const Shape& shape) noexcept;
std::string to_string(const Shape& shape);

/// Dense float32 array in row-major order tagged with its shape.
class Tensor {
public:
    Tensor() = default;
    /// Throws an input error when the shape does not describe `data`.
    Tensor(Shape shape, Eigen::VectorXf data);

    static Tensor zeros(Shape shape);

    const Shape& shape() const noexcept { return shape_; }
    const Eigen::VectorXf& data() const noexcept { return data_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(data_.size()); }
    std::size_t rank() const noexcept { return shape_.size(); }

    bool all_finite() const noexcept { return data_.allFinite(); }
    /// Throws an input error if any value is NaN or infinite.
    void validate() const;

    /// Same data viewed under another shape with the same element count.
    Tensor reshaped(Shape shape) const;

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_.size() == b.data_.size() &&
               (a.data_.array() == b.data_.array()).all();
    }

private:
    Shape shape_;
    Eigen::VectorXf data_;
};

} // namespace nncov
