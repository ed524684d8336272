#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "leafnet/errors.hpp"

namespace leafnet {

/// Ordered list of positive dimension sizes. Rank >= 1, every dim >= 1.
class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<std::size_t> dims);
    explicit Shape(std::vector<std::size_t> dims);

    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }
    const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    std::size_t numel() const noexcept;

    /// "(126, 126, 32)" style, matching the model summary column.
    std::string to_string() const;

    friend bool operator==(const Shape&, const Shape&) = default;

private:
    std::vector<std::size_t> dims_;
};

/// Dense row-major n-dimensional array (last axis fastest).
template <class T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;
    explicit BasicTensor(Shape shape, T fill = T{0})
        : shape_(std::move(shape)), data_(shape_.numel(), fill) {}
    BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_.numel()) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_.to_string());
        }
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_[axis]; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    const std::vector<T>& values() const noexcept { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    const T& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    T& at(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    const T& at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    void fill(T value);

    /// Element-type conversion, used to build f64 replicas of f32 state.
    template <class U>
    BasicTensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return BasicTensor<U>(shape_, std::move(out));
    }

    /// Throws NumericError naming `context` if any element is NaN or Inf.
    void check_finite(const std::string& context) const;

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

void check_same_shape(const Shape& a, const Shape& b, const std::string& context);

// c = a * b for a[m,k], b[k,n].
template <class T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);
// c = a^T * b for a[k,m], b[k,n].
template <class T>
BasicTensor<T> matmul_at_b(const BasicTensor<T>& a, const BasicTensor<T>& b);
// c = a * b^T for a[m,k], b[n,k].
template <class T>
BasicTensor<T> matmul_a_bt(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <class T>
BasicTensor<T> relu(const BasicTensor<T>& x);
template <class T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& upstream);

/// Max-subtracted exp-normalization over a rank-1 tensor.
template <class T>
BasicTensor<T> softmax(const BasicTensor<T>& logits);

/// Zero-pads the two leading (spatial) axes of a [H, W, C] tensor.
template <class T>
BasicTensor<T> pad2d(const BasicTensor<T>& t, std::size_t pad);

/// Keeps indices [begin, end) along `axis`.
template <class T>
BasicTensor<T> slice(const BasicTensor<T>& t, std::size_t axis, std::size_t begin, std::size_t end);

template <class T>
BasicTensor<T> reshape(const BasicTensor<T>& t, Shape shape);

/// Rank-2 transpose.
template <class T>
BasicTensor<T> transpose(const BasicTensor<T>& t);

/// Sums out `axis`; a rank-1 input reduces to shape (1).
template <class T>
BasicTensor<T> reduce_sum(const BasicTensor<T>& t, std::size_t axis);

/// Flat argmax; ties go to the lowest index.
template <class T>
std::size_t argmax(const BasicTensor<T>& t);

/// Argmax along `axis`, returned in row-major order of the remaining axes.
template <class T>
std::vector<std::size_t> argmax(const BasicTensor<T>& t, std::size_t axis);

/// y[..., j] += bias[j] over the last axis.
template <class T>
void add_bias(BasicTensor<T>& y, const BasicTensor<T>& bias);

}  // namespace leafnet
