#include "leafnet/layers.hpp"

#include <cmath>
#include <string>

namespace leafnet {

std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, Padding padding) {
    if (padding == Padding::same) {
        if (kernel % 2 == 0) {
            throw ShapeError("same padding requires an odd kernel, got " + std::to_string(kernel));
        }
        return extent;
    }
    if (extent < kernel) {
        throw ShapeError("valid convolution: input extent " + std::to_string(extent) +
                         " is smaller than kernel " + std::to_string(kernel));
    }
    return extent - kernel + 1;
}

namespace {

std::size_t pad_for(std::size_t kernel, Padding padding) {
    return padding == Padding::same ? (kernel - 1) / 2 : 0;
}

void require_rank(const Shape& s, std::size_t rank, const char* op) {
    if (s.rank() != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + " input, got " +
                         s.to_string());
    }
}

template <class T>
T sigmoid(T z) {
    if (z >= T{0}) {
        return T{1} / (T{1} + std::exp(-z));
    }
    const T e = std::exp(z);
    return e / (T{1} + e);
}

}  // namespace

template <class T>
BasicTensor<T> im2col(const BasicTensor<T>& input, std::size_t kh, std::size_t kw, Padding padding) {
    require_rank(input.shape(), 3, "im2col");
    const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
    const std::size_t ho = conv_output_extent(h, kh, padding);
    const std::size_t wo = conv_output_extent(w, kw, padding);
    const std::size_t ph = pad_for(kh, padding), pw = pad_for(kw, padding);
    BasicTensor<T> cols(Shape{ho * wo, kh * kw * c});
    T* out = cols.data().data();
    for (std::size_t oi = 0; oi < ho; ++oi) {
        for (std::size_t oj = 0; oj < wo; ++oj) {
            T* row = out + (oi * wo + oj) * kh * kw * c;
            for (std::size_t a = 0; a < kh; ++a) {
                const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(oi + a) - static_cast<std::ptrdiff_t>(ph);
                for (std::size_t b = 0; b < kw; ++b) {
                    const std::ptrdiff_t sj =
                        static_cast<std::ptrdiff_t>(oj + b) - static_cast<std::ptrdiff_t>(pw);
                    T* dst = row + (a * kw + b) * c;
                    if (si < 0 || sj < 0 || si >= static_cast<std::ptrdiff_t>(h) ||
                        sj >= static_cast<std::ptrdiff_t>(w)) {
                        continue;  // zero padding; cols starts zeroed
                    }
                    const T* src = &input.at(static_cast<std::size_t>(si), static_cast<std::size_t>(sj), 0);
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        dst[ch] = src[ch];
                    }
                }
            }
        }
    }
    return cols;
}

template <class T>
BasicTensor<T> col2im(const BasicTensor<T>& cols, const Shape& input_shape, std::size_t kh, std::size_t kw,
                      Padding padding) {
    require_rank(input_shape, 3, "col2im");
    const std::size_t h = input_shape[0], w = input_shape[1], c = input_shape[2];
    const std::size_t ho = conv_output_extent(h, kh, padding);
    const std::size_t wo = conv_output_extent(w, kw, padding);
    check_same_shape(cols.shape(), Shape{ho * wo, kh * kw * c}, "col2im");
    const std::size_t ph = pad_for(kh, padding), pw = pad_for(kw, padding);
    BasicTensor<T> image(input_shape);
    const T* in = cols.data().data();
    for (std::size_t oi = 0; oi < ho; ++oi) {
        for (std::size_t oj = 0; oj < wo; ++oj) {
            const T* row = in + (oi * wo + oj) * kh * kw * c;
            for (std::size_t a = 0; a < kh; ++a) {
                const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(oi + a) - static_cast<std::ptrdiff_t>(ph);
                for (std::size_t b = 0; b < kw; ++b) {
                    const std::ptrdiff_t sj =
                        static_cast<std::ptrdiff_t>(oj + b) - static_cast<std::ptrdiff_t>(pw);
                    if (si < 0 || sj < 0 || si >= static_cast<std::ptrdiff_t>(h) ||
                        sj >= static_cast<std::ptrdiff_t>(w)) {
                        continue;
                    }
                    const T* src = row + (a * kw + b) * c;
                    T* dst = &image.at(static_cast<std::size_t>(si), static_cast<std::size_t>(sj), 0);
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        dst[ch] += src[ch];
                    }
                }
            }
        }
    }
    return image;
}

namespace {

template <class T>
void check_conv_operands(const BasicTensor<T>& input, const BasicTensor<T>& kernels) {
    require_rank(input.shape(), 3, "conv2d");
    if (kernels.shape().rank() != 4 || kernels.dim(2) != input.dim(2)) {
        throw ShapeError("conv2d: kernels " + kernels.shape().to_string() + " do not fit input " +
                         input.shape().to_string());
    }
}

}  // namespace

template <class T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                              const BasicTensor<T>& bias, Padding padding) {
    check_conv_operands(input, kernels);
    const std::size_t kh = kernels.dim(0), kw = kernels.dim(1), cin = kernels.dim(2), cout = kernels.dim(3);
    if (bias.shape() != Shape{cout}) {
        throw ShapeError("conv2d: bias " + bias.shape().to_string() + " does not match " +
                         std::to_string(cout) + " filters");
    }
    const std::size_t ho = conv_output_extent(input.dim(0), kh, padding);
    const std::size_t wo = conv_output_extent(input.dim(1), kw, padding);
    const BasicTensor<T> cols = im2col(input, kh, kw, padding);
    BasicTensor<T> out = matmul(cols, reshape(kernels, Shape{kh * kw * cin, cout}));
    add_bias(out, bias);
    return reshape(out, Shape{ho, wo, cout});
}

template <class T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels, Padding padding,
                             const BasicTensor<T>& upstream) {
    check_conv_operands(input, kernels);
    const std::size_t kh = kernels.dim(0), kw = kernels.dim(1), cin = kernels.dim(2), cout = kernels.dim(3);
    const std::size_t ho = conv_output_extent(input.dim(0), kh, padding);
    const std::size_t wo = conv_output_extent(input.dim(1), kw, padding);
    check_same_shape(upstream.shape(), Shape{ho, wo, cout}, "conv2d_backward upstream");

    const BasicTensor<T> up = reshape(upstream, Shape{ho * wo, cout});
    const BasicTensor<T> cols = im2col(input, kh, kw, padding);
    const BasicTensor<T> k2 = reshape(kernels, Shape{kh * kw * cin, cout});

    ConvGrads<T> g;
    g.kernels = reshape(matmul_at_b(cols, up), kernels.shape());
    g.bias = reduce_sum(up, 0);
    g.input = col2im(matmul_a_bt(up, k2), input.shape(), kh, kw, padding);
    return g;
}

template <class T>
PoolResult<T> maxpool2d_forward(const BasicTensor<T>& input) {
    require_rank(input.shape(), 3, "maxpool2d");
    const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
    if (h < 2 || w < 2) {
        throw ShapeError("maxpool2d: input " + input.shape().to_string() + " is smaller than the 2x2 window");
    }
    const std::size_t ho = h / 2, wo = w / 2;
    PoolResult<T> r{BasicTensor<T>(Shape{ho, wo, c}), std::vector<std::size_t>(ho * wo * c), input.shape()};
    for (std::size_t i = 0; i < ho; ++i) {
        for (std::size_t j = 0; j < wo; ++j) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                std::size_t best = ((2 * i) * w + 2 * j) * c + ch;
                for (std::size_t a = 0; a < 2; ++a) {
                    for (std::size_t b = 0; b < 2; ++b) {
                        const std::size_t idx = ((2 * i + a) * w + 2 * j + b) * c + ch;
                        if (input[idx] > input[best]) {
                            best = idx;
                        }
                    }
                }
                const std::size_t o = (i * wo + j) * c + ch;
                r.output[o] = input[best];
                r.argmax[o] = best;
            }
        }
    }
    return r;
}

template <class T>
BasicTensor<T> maxpool2d_backward(const std::vector<std::size_t>& argmax, const Shape& input_shape,
                                  const BasicTensor<T>& upstream) {
    if (argmax.size() != upstream.size()) {
        throw ShapeError("maxpool2d_backward: upstream " + upstream.shape().to_string() +
                         " does not match recorded window count " + std::to_string(argmax.size()));
    }
    BasicTensor<T> g(input_shape);
    for (std::size_t o = 0; o < argmax.size(); ++o) {
        g[argmax[o]] += upstream[o];
    }
    return g;
}

template <class T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias) {
    if (weights.shape().rank() != 2 || input.shape() != Shape{weights.dim(0)}) {
        throw ShapeError("dense: input " + input.shape().to_string() + " does not fit weights " +
                         weights.shape().to_string());
    }
    BasicTensor<T> y = matmul(reshape(input, Shape{1, input.size()}), weights);
    add_bias(y, bias);
    return reshape(y, Shape{weights.dim(1)});
}

template <class T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& upstream) {
    if (weights.shape().rank() != 2 || input.shape() != Shape{weights.dim(0)} ||
        upstream.shape() != Shape{weights.dim(1)}) {
        throw ShapeError("dense_backward: input " + input.shape().to_string() + ", upstream " +
                         upstream.shape().to_string() + " do not fit weights " + weights.shape().to_string());
    }
    const BasicTensor<T> x = reshape(input, Shape{1, input.size()});
    const BasicTensor<T> up = reshape(upstream, Shape{1, upstream.size()});
    DenseGrads<T> g;
    g.weights = matmul_at_b(x, up);
    g.bias = upstream;
    g.input = reshape(matmul_a_bt(up, weights), input.shape());
    return g;
}

template <class T>
DropoutResult<T> dropout_forward(const BasicTensor<T>& input, double rate, Mode mode, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
    }
    DropoutResult<T> r{input, DropoutMask<T>{rate, {}}};
    if (mode == Mode::infer || rate == 0.0) {
        return r;
    }
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    r.mask.scale = BasicTensor<T>(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) {
        const T s = rng.uniform() < rate ? T{0} : keep_scale;
        r.mask.scale[i] = s;
        r.output[i] *= s;
    }
    return r;
}

template <class T>
BasicTensor<T> dropout_backward(const DropoutMask<T>& mask, const BasicTensor<T>& upstream) {
    if (mask.scale.size() == 0) {
        return upstream;
    }
    check_same_shape(mask.scale.shape(), upstream.shape(), "dropout_backward");
    BasicTensor<T> g = upstream;
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] *= mask.scale[i];
    }
    return g;
}

template <class T>
BasicTensor<T> flatten(const BasicTensor<T>& input) {
    require_rank(input.shape(), 3, "flatten");
    return reshape(input, Shape{input.size()});
}

template <class T>
LstmStep<T> lstm_cell_step(const BasicTensor<T>& x, const BasicTensor<T>& h, const BasicTensor<T>& c,
                           const BasicTensor<T>& w, const BasicTensor<T>& u, const BasicTensor<T>& bias) {
    const std::size_t hidden = h.size();
    if (w.shape().rank() != 2 || u.shape() != Shape{hidden, 4 * hidden} || w.dim(1) != 4 * hidden ||
        x.shape() != Shape{w.dim(0)} || c.shape() != Shape{hidden} || bias.shape() != Shape{4 * hidden}) {
        throw ShapeError("lstm_cell_step: x " + x.shape().to_string() + ", h " + h.shape().to_string() +
                         ", c " + c.shape().to_string() + " do not fit W " + w.shape().to_string() + ", U " +
                         u.shape().to_string());
    }
    BasicTensor<T> z = matmul(reshape(x, Shape{1, x.size()}), w);
    const BasicTensor<T> zr = matmul(reshape(h, Shape{1, hidden}), u);
    for (std::size_t k = 0; k < z.size(); ++k) {
        z[k] += zr[k] + bias[k];
    }

    LstmStep<T> s;
    s.cache.x = x;
    s.cache.h_prev = h;
    s.cache.c_prev = c;
    s.cache.gates = BasicTensor<T>(Shape{4 * hidden});
    s.cache.tanh_c = BasicTensor<T>(Shape{hidden});
    s.h = BasicTensor<T>(Shape{hidden});
    s.c = BasicTensor<T>(Shape{hidden});
    BasicTensor<T>& gates = s.cache.gates;
    for (std::size_t j = 0; j < hidden; ++j) {
        const T ig = sigmoid(z[gate_input * hidden + j]);
        const T fg = sigmoid(z[gate_forget * hidden + j]);
        const T gg = std::tanh(z[gate_candidate * hidden + j]);
        const T og = sigmoid(z[gate_output * hidden + j]);
        gates[gate_input * hidden + j] = ig;
        gates[gate_forget * hidden + j] = fg;
        gates[gate_candidate * hidden + j] = gg;
        gates[gate_output * hidden + j] = og;
        s.c[j] = fg * c[j] + ig * gg;
        s.cache.tanh_c[j] = std::tanh(s.c[j]);
        s.h[j] = og * s.cache.tanh_c[j];
    }
    return s;
}

template <class T>
LstmCellGrads<T> lstm_cell_backward(const LstmStepCache<T>& cache, const BasicTensor<T>& w,
                                    const BasicTensor<T>& u, const BasicTensor<T>& dh,
                                    const BasicTensor<T>& dc) {
    const std::size_t hidden = cache.h_prev.size();
    check_same_shape(dh.shape(), Shape{hidden}, "lstm_cell_backward dh");
    check_same_shape(dc.shape(), Shape{hidden}, "lstm_cell_backward dc");
    const BasicTensor<T>& gates = cache.gates;

    LstmCellGrads<T> g;
    g.c_prev = BasicTensor<T>(Shape{hidden});
    BasicTensor<T> dz(Shape{4 * hidden});
    for (std::size_t j = 0; j < hidden; ++j) {
        const T ig = gates[gate_input * hidden + j];
        const T fg = gates[gate_forget * hidden + j];
        const T gg = gates[gate_candidate * hidden + j];
        const T og = gates[gate_output * hidden + j];
        const T tc = cache.tanh_c[j];
        const T dct = dc[j] + dh[j] * og * (T{1} - tc * tc);
        dz[gate_input * hidden + j] = dct * gg * ig * (T{1} - ig);
        dz[gate_forget * hidden + j] = dct * cache.c_prev[j] * fg * (T{1} - fg);
        dz[gate_candidate * hidden + j] = dct * ig * (T{1} - gg * gg);
        dz[gate_output * hidden + j] = dh[j] * tc * og * (T{1} - og);
        g.c_prev[j] = dct * fg;
    }
    const BasicTensor<T> dz_row = reshape(dz, Shape{1, 4 * hidden});
    g.w = matmul_at_b(reshape(cache.x, Shape{1, cache.x.size()}), dz_row);
    g.u = matmul_at_b(reshape(cache.h_prev, Shape{1, hidden}), dz_row);
    g.bias = dz;
    g.x = reshape(matmul_a_bt(dz_row, w), cache.x.shape());
    g.h_prev = reshape(matmul_a_bt(dz_row, u), Shape{hidden});
    return g;
}

template <class T>
LstmTrace<T> lstm_forward_trace(const BasicTensor<T>& sequence, const BasicTensor<T>& w,
                                const BasicTensor<T>& u, const BasicTensor<T>& bias) {
    if (sequence.shape().rank() != 2) {
        throw ShapeError("lstm_forward: expected a [T, In] sequence, got " + sequence.shape().to_string());
    }
    if (u.shape().rank() != 2) {
        throw ShapeError("lstm_forward: recurrent kernel must be rank 2, got " + u.shape().to_string());
    }
    const std::size_t steps = sequence.dim(0), features = sequence.dim(1), hidden = u.dim(0);
    LstmTrace<T> trace;
    trace.steps.reserve(steps);
    BasicTensor<T> h(Shape{hidden});
    BasicTensor<T> c(Shape{hidden});
    for (std::size_t t = 0; t < steps; ++t) {
        const BasicTensor<T> x = reshape(slice(sequence, 0, t, t + 1), Shape{features});
        LstmStep<T> s = lstm_cell_step(x, h, c, w, u, bias);
        h = std::move(s.h);
        c = std::move(s.c);
        trace.steps.push_back(std::move(s.cache));
    }
    trace.h = std::move(h);
    return trace;
}

template <class T>
BasicTensor<T> lstm_forward(const BasicTensor<T>& sequence, const BasicTensor<T>& w, const BasicTensor<T>& u,
                            const BasicTensor<T>& bias) {
    return lstm_forward_trace(sequence, w, u, bias).h;
}

template <class T>
LstmGrads<T> lstm_backward(const LstmTrace<T>& trace, const BasicTensor<T>& w, const BasicTensor<T>& u,
                           const BasicTensor<T>& dh_final) {
    if (trace.steps.empty()) {
        throw ParameterError("lstm_backward: empty trace");
    }
    const std::size_t steps = trace.steps.size();
    const std::size_t features = trace.steps.front().x.size();
    const std::size_t hidden = u.dim(0);
    LstmGrads<T> g{BasicTensor<T>(Shape{steps, features}), BasicTensor<T>(w.shape()),
                   BasicTensor<T>(u.shape()), BasicTensor<T>(Shape{4 * hidden})};
    BasicTensor<T> dh = dh_final;
    BasicTensor<T> dc(Shape{hidden});
    for (std::size_t t = steps; t-- > 0;) {
        LstmCellGrads<T> cg = lstm_cell_backward(trace.steps[t], w, u, dh, dc);
        for (std::size_t k = 0; k < g.w.size(); ++k) {
            g.w[k] += cg.w[k];
        }
        for (std::size_t k = 0; k < g.u.size(); ++k) {
            g.u[k] += cg.u[k];
        }
        for (std::size_t k = 0; k < g.bias.size(); ++k) {
            g.bias[k] += cg.bias[k];
        }
        std::copy(cg.x.data().begin(), cg.x.data().end(), g.sequence.data().begin() + t * features);
        dh = std::move(cg.h_prev);
        dc = std::move(cg.c_prev);
    }
    return g;
}

Tensor he_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    Tensor t(std::move(shape));
    for (float& v : t.data()) {
        v = static_cast<float>(rng.uniform(-limit, limit));
    }
    return t;
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t(std::move(shape));
    for (float& v : t.data()) {
        v = static_cast<float>(rng.uniform(-limit, limit));
    }
    return t;
}

#define LEAFNET_INSTANTIATE(T)                                                                                \
    template BasicTensor<T> im2col(const BasicTensor<T>&, std::size_t, std::size_t, Padding);                 \
    template BasicTensor<T> col2im(const BasicTensor<T>&, const Shape&, std::size_t, std::size_t, Padding);   \
    template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, \
                                           Padding);                                                          \
    template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&, Padding,              \
                                          const BasicTensor<T>&);                                             \
    template PoolResult<T> maxpool2d_forward(const BasicTensor<T>&);                                          \
    template BasicTensor<T> maxpool2d_backward(const std::vector<std::size_t>&, const Shape&,                 \
                                               const BasicTensor<T>&);                                        \
    template BasicTensor<T> dense_forward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&); \
    template DenseGrads<T> dense_backward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&); \
    template DropoutResult<T> dropout_forward(const BasicTensor<T>&, double, Mode, Rng&);                     \
    template BasicTensor<T> dropout_backward(const DropoutMask<T>&, const BasicTensor<T>&);                   \
    template BasicTensor<T> flatten(const BasicTensor<T>&);                                                   \
    template LstmStep<T> lstm_cell_step(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,  \
                                        const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&); \
    template LstmCellGrads<T> lstm_cell_backward(const LstmStepCache<T>&, const BasicTensor<T>&,              \
                                                 const BasicTensor<T>&, const BasicTensor<T>&,                \
                                                 const BasicTensor<T>&);                                      \
    template LstmTrace<T> lstm_forward_trace(const BasicTensor<T>&, const BasicTensor<T>&,                    \
                                             const BasicTensor<T>&, const BasicTensor<T>&);                   \
    template BasicTensor<T> lstm_forward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, \
                                         const BasicTensor<T>&);                                              \
    template LstmGrads<T> lstm_backward(const LstmTrace<T>&, const BasicTensor<T>&, const BasicTensor<T>&,    \
                                        const BasicTensor<T>&);

LEAFNET_INSTANTIATE(float)
LEAFNET_INSTANTIATE(double)

#undef LEAFNET_INSTANTIATE

}  // namespace leafnet
