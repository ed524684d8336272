#pragma once

#include <cstddef>
#include <vector>

#include "leafnet/rng.hpp"
#include "leafnet/tensor.hpp"

namespace leafnet {

enum class Padding { same, valid };
enum class Mode { train, infer };

// ---------------------------------------------------------------------------
// Parameter accounting

constexpr std::size_t conv_param_count(std::size_t kh, std::size_t kw, std::size_t cin, std::size_t cout) {
    return kh * kw * cin * cout + cout;
}
constexpr std::size_t dense_param_count(std::size_t in, std::size_t out) { return in * out + out; }
constexpr std::size_t lstm_param_count(std::size_t in, std::size_t hidden) {
    return 4 * (in * hidden + hidden * hidden + hidden);
}

// ---------------------------------------------------------------------------
// Convolution, stride 1. Kernels are [Kh, Kw, Cin, Cout], images [H, W, C].

/// Output spatial extent of a stride-1 convolution; throws ShapeError when the
/// input is smaller than the kernel under valid padding.
std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, Padding padding);

/// Unrolls every kernel window into one row: [H'*W', Kh*Kw*Cin].
template <class T>
BasicTensor<T> im2col(const BasicTensor<T>& input, std::size_t kh, std::size_t kw, Padding padding);

/// Adjoint of im2col: scatters-adds rows back into an [H, W, C] image.
template <class T>
BasicTensor<T> col2im(const BasicTensor<T>& cols, const Shape& input_shape, std::size_t kh, std::size_t kw,
                      Padding padding);

template <class T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                              const BasicTensor<T>& bias, Padding padding);

template <class T>
struct ConvGrads {
    BasicTensor<T> input;
    BasicTensor<T> kernels;
    BasicTensor<T> bias;
};

template <class T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels, Padding padding,
                             const BasicTensor<T>& upstream);

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2; a trailing odd row/column is dropped.

template <class T>
struct PoolResult {
    BasicTensor<T> output;
    std::vector<std::size_t> argmax;  // flat input index per output element
    Shape input_shape;
};

template <class T>
PoolResult<T> maxpool2d_forward(const BasicTensor<T>& input);

template <class T>
BasicTensor<T> maxpool2d_backward(const std::vector<std::size_t>& argmax, const Shape& input_shape,
                                  const BasicTensor<T>& upstream);

// ---------------------------------------------------------------------------
// Dense: y = W^T x + b with W stored [In, Out].

template <class T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias);

template <class T>
struct DenseGrads {
    BasicTensor<T> input;
    BasicTensor<T> weights;
    BasicTensor<T> bias;
};

template <class T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& upstream);

// ---------------------------------------------------------------------------
// Inverted dropout.

template <class T>
struct DropoutMask {
    double rate = 0.0;
    /// Per-element multiplier: 0 for dropped, 1/(1-rate) for kept. Empty means identity.
    BasicTensor<T> scale;
};

template <class T>
struct DropoutResult {
    BasicTensor<T> output;
    DropoutMask<T> mask;
};

template <class T>
DropoutResult<T> dropout_forward(const BasicTensor<T>& input, double rate, Mode mode, Rng& rng);

template <class T>
BasicTensor<T> dropout_backward(const DropoutMask<T>& mask, const BasicTensor<T>& upstream);

// ---------------------------------------------------------------------------

template <class T>
BasicTensor<T> flatten(const BasicTensor<T>& input);

// ---------------------------------------------------------------------------
// LSTM. Packed gate order along the 4H axis is [input, forget, candidate, output].
// W is [In, 4H], U is [H, 4H], bias is [4H].

enum LstmGate : std::size_t { gate_input = 0, gate_forget = 1, gate_candidate = 2, gate_output = 3 };

template <class T>
struct LstmStepCache {
    BasicTensor<T> x;
    BasicTensor<T> h_prev;
    BasicTensor<T> c_prev;
    BasicTensor<T> gates;   // activated i, f, g, o packed [4H]
    BasicTensor<T> tanh_c;  // tanh(c')
};

template <class T>
struct LstmStep {
    BasicTensor<T> h;
    BasicTensor<T> c;
    LstmStepCache<T> cache;
};

template <class T>
LstmStep<T> lstm_cell_step(const BasicTensor<T>& x, const BasicTensor<T>& h, const BasicTensor<T>& c,
                           const BasicTensor<T>& w, const BasicTensor<T>& u, const BasicTensor<T>& bias);

template <class T>
struct LstmCellGrads {
    BasicTensor<T> x;
    BasicTensor<T> h_prev;
    BasicTensor<T> c_prev;
    BasicTensor<T> w;
    BasicTensor<T> u;
    BasicTensor<T> bias;
};

/// dh, dc are gradients flowing into h' and c'.
template <class T>
LstmCellGrads<T> lstm_cell_backward(const LstmStepCache<T>& cache, const BasicTensor<T>& w,
                                    const BasicTensor<T>& u, const BasicTensor<T>& dh,
                                    const BasicTensor<T>& dc);

template <class T>
struct LstmTrace {
    BasicTensor<T> h;  // final hidden state
    std::vector<LstmStepCache<T>> steps;
};

/// Runs the cell over sequence[T, In] from zero state; returns h_T plus per-step caches.
template <class T>
LstmTrace<T> lstm_forward_trace(const BasicTensor<T>& sequence, const BasicTensor<T>& w,
                                const BasicTensor<T>& u, const BasicTensor<T>& bias);

template <class T>
BasicTensor<T> lstm_forward(const BasicTensor<T>& sequence, const BasicTensor<T>& w, const BasicTensor<T>& u,
                            const BasicTensor<T>& bias);

template <class T>
struct LstmGrads {
    BasicTensor<T> sequence;
    BasicTensor<T> w;
    BasicTensor<T> u;
    BasicTensor<T> bias;
};

/// Backpropagation through time from a gradient on h_T.
template <class T>
LstmGrads<T> lstm_backward(const LstmTrace<T>& trace, const BasicTensor<T>& w, const BasicTensor<T>& u,
                           const BasicTensor<T>& dh_final);

// ---------------------------------------------------------------------------
// Initializers

/// U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
Tensor he_uniform(Shape shape, std::size_t fan_in, Rng& rng);
/// U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace leafnet
