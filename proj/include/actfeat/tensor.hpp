#pragma once

#include <actfeat/error.hpp>
#include <actfeat/matrix.hpp>

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace actfeat {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_volume(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i)
            s += ", ";
        s += std::to_string(shape[i]);
    }
    if (shape.size() == 1)
        s += ",";
    return s + ")";
}

/// N-dimensional row-major array of doubles. A rank-0 tensor holds one value.
class Tensor {
public:
    Tensor() : data_(1, 0.0) {}
    explicit Tensor(Shape shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(checked_volume(shape_), fill) {}
    Tensor(Shape shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != checked_volume(shape_))
            throw ShapeMismatch("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_string(shape_));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    /// Element access for rank-3 tensors laid out [C, H, W].
    double& at(std::size_t c, std::size_t h, std::size_t w) noexcept {
        return data_[(c * shape_[1] + h) * shape_[2] + w];
    }
    double at(std::size_t c, std::size_t h, std::size_t w) const noexcept {
        return data_[(c * shape_[1] + h) * shape_[2] + w];
    }

    /// Copy of channel `c` of a rank-3 tensor as a matrix.
    Matrix channel(std::size_t c) const {
        if (rank() != 3 || c >= shape_[0])
            throw ShapeMismatch("channel access requires a rank-3 tensor");
        const std::size_t plane = shape_[1] * shape_[2];
        const auto first = data_.begin() + static_cast<std::ptrdiff_t>(c * plane);
        return Matrix(shape_[1], shape_[2], std::vector<double>(first, first + static_cast<std::ptrdiff_t>(plane)));
    }

    Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

    bool operator==(const Tensor&) const = default;

private:
    static std::size_t checked_volume(const Shape& shape) {
        for (auto d : shape)
            if (d == 0)
                throw ShapeMismatch("tensor extents must be positive: " + shape_string(shape));
        return shape_volume(shape);
    }

    Shape shape_;
    std::vector<double> data_;
};

inline Tensor tensor_from_matrix(const Matrix& m) {
    return Tensor({m.rows(), m.cols()}, m.data());
}

} // namespace actfeat
