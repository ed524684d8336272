#include "leafnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace leafnet {

Shape::Shape(std::initializer_list<std::size_t> dims) : Shape(std::vector<std::size_t>(dims)) {}

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) {
        throw ShapeError("shape must have rank >= 1");
    }
    for (std::size_t d : dims_) {
        if (d == 0) {
            throw ShapeError("shape " + to_string() + " has a zero dimension");
        }
    }
}

std::size_t Shape::numel() const noexcept {
    if (dims_.empty()) {
        return 0;
    }
    return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>());
}

std::string Shape::to_string() const {
    std::string out = "(";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += std::to_string(dims_[i]);
    }
    return out + ")";
}

void check_same_shape(const Shape& a, const Shape& b, const std::string& context) {
    if (a != b) {
        throw ShapeError(context + ": shape " + a.to_string() + " does not match " + b.to_string());
    }
}

template <class T>
void BasicTensor<T>::fill(T value) {
    std::fill(data_.begin(), data_.end(), value);
}

template <class T>
void BasicTensor<T>::check_finite(const std::string& context) const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw NumericError(context + ": non-finite value at flat index " + std::to_string(i));
        }
    }
}

namespace {

void require_rank(const Shape& s, std::size_t rank, const char* op) {
    if (s.rank() != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         s.to_string());
    }
}

}  // namespace

template <class T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_rank(a.shape(), 2, "matmul");
    require_rank(b.shape(), 2, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw ShapeError("matmul: inner dimensions disagree for " + a.shape().to_string() + " x " +
                         b.shape().to_string());
    }
    BasicTensor<T> c(Shape{m, n});
    const T* pa = a.data().data();
    const T* pb = b.data().data();
    T* pc = c.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        T* row = pc + i * n;
        for (std::size_t t = 0; t < k; ++t) {
            const T av = pa[i * k + t];
            if (av == T{0}) {
                continue;
            }
            const T* brow = pb + t * n;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] += av * brow[j];
            }
        }
    }
    c.check_finite("matmul");
    return c;
}

template <class T>
BasicTensor<T> matmul_at_b(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_rank(a.shape(), 2, "matmul_at_b");
    require_rank(b.shape(), 2, "matmul_at_b");
    const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw ShapeError("matmul_at_b: leading dimensions disagree for " + a.shape().to_string() +
                         " and " + b.shape().to_string());
    }
    BasicTensor<T> c(Shape{m, n});
    const T* pa = a.data().data();
    const T* pb = b.data().data();
    T* pc = c.data().data();
    for (std::size_t t = 0; t < k; ++t) {
        const T* brow = pb + t * n;
        for (std::size_t i = 0; i < m; ++i) {
            const T av = pa[t * m + i];
            if (av == T{0}) {
                continue;
            }
            T* row = pc + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] += av * brow[j];
            }
        }
    }
    c.check_finite("matmul_at_b");
    return c;
}

template <class T>
BasicTensor<T> matmul_a_bt(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_rank(a.shape(), 2, "matmul_a_bt");
    require_rank(b.shape(), 2, "matmul_a_bt");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
    if (b.dim(1) != k) {
        throw ShapeError("matmul_a_bt: trailing dimensions disagree for " + a.shape().to_string() +
                         " and " + b.shape().to_string());
    }
    BasicTensor<T> c(Shape{m, n});
    const T* pa = a.data().data();
    const T* pb = b.data().data();
    T* pc = c.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = pa + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const T* brow = pb + j * k;
            T acc{0};
            for (std::size_t t = 0; t < k; ++t) {
                acc += arow[t] * brow[t];
            }
            pc[i * n + j] = acc;
        }
    }
    c.check_finite("matmul_a_bt");
    return c;
}

template <class T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
    BasicTensor<T> y = x;
    for (T& v : y.data()) {
        v = v > T{0} ? v : T{0};
    }
    return y;
}

template <class T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& upstream) {
    check_same_shape(x.shape(), upstream.shape(), "relu_backward");
    BasicTensor<T> g(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        g[i] = x[i] > T{0} ? upstream[i] : T{0};
    }
    return g;
}

template <class T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
    require_rank(logits.shape(), 1, "softmax");
    logits.check_finite("softmax input");
    const auto values = logits.data();
    const T peak = *std::max_element(values.begin(), values.end());
    BasicTensor<T> out(logits.shape());
    T total{0};
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (T& v : out.data()) {
        v /= total;
    }
    return out;
}

template <class T>
BasicTensor<T> pad2d(const BasicTensor<T>& t, std::size_t pad) {
    require_rank(t.shape(), 3, "pad2d");
    const std::size_t h = t.dim(0), w = t.dim(1), c = t.dim(2);
    BasicTensor<T> out(Shape{h + 2 * pad, w + 2 * pad, c});
    for (std::size_t i = 0; i < h; ++i) {
        const T* src = &t.at(i, 0, 0);
        std::copy(src, src + w * c, &out.at(i + pad, pad, 0));
    }
    return out;
}

template <class T>
BasicTensor<T> slice(const BasicTensor<T>& t, std::size_t axis, std::size_t begin, std::size_t end) {
    const Shape& s = t.shape();
    if (axis >= s.rank()) {
        throw ShapeError("slice: axis " + std::to_string(axis) + " invalid for " + s.to_string());
    }
    if (begin >= end || end > s[axis]) {
        throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid for axis of size " + std::to_string(s[axis]));
    }
    std::size_t outer = 1, inner = 1;
    for (std::size_t a = 0; a < axis; ++a) {
        outer *= s[a];
    }
    for (std::size_t a = axis + 1; a < s.rank(); ++a) {
        inner *= s[a];
    }
    std::vector<std::size_t> dims = s.dims();
    dims[axis] = end - begin;
    BasicTensor<T> out{Shape(dims)};
    const std::size_t span_len = (end - begin) * inner;
    for (std::size_t o = 0; o < outer; ++o) {
        const T* src = t.data().data() + (o * s[axis] + begin) * inner;
        std::copy(src, src + span_len, out.data().data() + o * span_len);
    }
    return out;
}

template <class T>
BasicTensor<T> reshape(const BasicTensor<T>& t, Shape shape) {
    if (shape.numel() != t.size()) {
        throw ShapeError("reshape: cannot view " + t.shape().to_string() + " as " + shape.to_string());
    }
    return BasicTensor<T>(std::move(shape), t.values());
}

template <class T>
BasicTensor<T> transpose(const BasicTensor<T>& t) {
    require_rank(t.shape(), 2, "transpose");
    const std::size_t m = t.dim(0), n = t.dim(1);
    BasicTensor<T> out(Shape{n, m});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out.at(j, i) = t.at(i, j);
        }
    }
    return out;
}

template <class T>
BasicTensor<T> reduce_sum(const BasicTensor<T>& t, std::size_t axis) {
    const Shape& s = t.shape();
    if (axis >= s.rank()) {
        throw ShapeError("reduce_sum: axis " + std::to_string(axis) + " invalid for " + s.to_string());
    }
    std::size_t outer = 1, inner = 1;
    for (std::size_t a = 0; a < axis; ++a) {
        outer *= s[a];
    }
    for (std::size_t a = axis + 1; a < s.rank(); ++a) {
        inner *= s[a];
    }
    std::vector<std::size_t> dims;
    for (std::size_t a = 0; a < s.rank(); ++a) {
        if (a != axis) {
            dims.push_back(s[a]);
        }
    }
    if (dims.empty()) {
        dims.push_back(1);
    }
    BasicTensor<T> out{Shape(dims)};
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t r = 0; r < s[axis]; ++r) {
            const T* src = t.data().data() + (o * s[axis] + r) * inner;
            T* dst = out.data().data() + o * inner;
            for (std::size_t i = 0; i < inner; ++i) {
                dst[i] += src[i];
            }
        }
    }
    return out;
}

template <class T>
std::size_t argmax(const BasicTensor<T>& t) {
    if (t.size() == 0) {
        throw ShapeError("argmax of an empty tensor");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (t[i] > t[best]) {
            best = i;
        }
    }
    return best;
}

template <class T>
std::vector<std::size_t> argmax(const BasicTensor<T>& t, std::size_t axis) {
    const Shape& s = t.shape();
    if (axis >= s.rank()) {
        throw ShapeError("argmax: axis " + std::to_string(axis) + " invalid for " + s.to_string());
    }
    std::size_t outer = 1, inner = 1;
    for (std::size_t a = 0; a < axis; ++a) {
        outer *= s[a];
    }
    for (std::size_t a = axis + 1; a < s.rank(); ++a) {
        inner *= s[a];
    }
    std::vector<std::size_t> out(outer * inner, 0);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
            std::size_t best = 0;
            T best_value = t[o * s[axis] * inner + i];
            for (std::size_t r = 1; r < s[axis]; ++r) {
                const T v = t[(o * s[axis] + r) * inner + i];
                if (v > best_value) {
                    best_value = v;
                    best = r;
                }
            }
            out[o * inner + i] = best;
        }
    }
    return out;
}

template <class T>
void add_bias(BasicTensor<T>& y, const BasicTensor<T>& bias) {
    const std::size_t n = bias.size();
    if (bias.shape().rank() != 1 || y.shape()[y.shape().rank() - 1] != n) {
        throw ShapeError("add_bias: bias " + bias.shape().to_string() + " does not match last axis of " +
                         y.shape().to_string());
    }
    T* p = y.data().data();
    for (std::size_t i = 0; i < y.size(); i += n) {
        for (std::size_t j = 0; j < n; ++j) {
            p[i + j] += bias[j];
        }
    }
}

#define LEAFNET_INSTANTIATE(T)                                                                     \
    template class BasicTensor<T>;                                                                 \
    template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);                  \
    template BasicTensor<T> matmul_at_b(const BasicTensor<T>&, const BasicTensor<T>&);             \
    template BasicTensor<T> matmul_a_bt(const BasicTensor<T>&, const BasicTensor<T>&);             \
    template BasicTensor<T> relu(const BasicTensor<T>&);                                           \
    template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);           \
    template BasicTensor<T> softmax(const BasicTensor<T>&);                                        \
    template BasicTensor<T> pad2d(const BasicTensor<T>&, std::size_t);                             \
    template BasicTensor<T> slice(const BasicTensor<T>&, std::size_t, std::size_t, std::size_t);   \
    template BasicTensor<T> reshape(const BasicTensor<T>&, Shape);                                 \
    template BasicTensor<T> transpose(const BasicTensor<T>&);                                      \
    template BasicTensor<T> reduce_sum(const BasicTensor<T>&, std::size_t);                        \
    template std::size_t argmax(const BasicTensor<T>&);                                            \
    template std::vector<std::size_t> argmax(const BasicTensor<T>&, std::size_t);                  \
    template void add_bias(BasicTensor<T>&, const BasicTensor<T>&);

LEAFNET_INSTANTIATE(float)
LEAFNET_INSTANTIATE(double)

#undef LEAFNET_INSTANTIATE

}  // namespace leafnet
