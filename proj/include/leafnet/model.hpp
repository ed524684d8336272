#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "leafnet/layers.hpp"
#include "leafnet/rng.hpp"
#include "leafnet/tensor.hpp"

namespace leafnet {

enum class LayerKind { conv2d, maxpool2d, dropout, flatten, dense, lstm };
enum class Activation { linear, relu, softmax };

const char* to_string(LayerKind kind);
const char* to_string(Activation activation);
const char* to_string(Padding padding);

struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    std::string name;
    Shape input_shape;
    Shape output_shape;
    std::size_t units = 0;  // filters, dense width or hidden size
    std::size_t kernel = 0;
    Padding padding = Padding::valid;
    Activation activation = Activation::linear;
    double rate = 0.0;  // dropout only

    /// Parameter tensor shapes in storage order: conv {kernels, bias},
    /// dense {weights, bias}, lstm {W, U, bias}; none for the rest.
    std::vector<Shape> param_shapes() const;
    std::size_t param_count() const;
};

/// Convolutional classifier. Each entry of `filters` adds one block of
/// conv(same)+ReLU, conv(valid)+ReLU, 2x2 max pool.
struct CnnConfig {
    std::size_t height = 128;
    std::size_t width = 128;
    std::size_t channels = 3;
    std::vector<std::size_t> filters{32, 64, 128, 256, 512};
    std::size_t kernel = 3;
    std::size_t dense_units = 1500;
    std::size_t classes = 38;
    double conv_dropout = 0.25;
    double dense_dropout = 0.4;

    friend bool operator==(const CnnConfig&, const CnnConfig&) = default;
};

/// Recurrent classifier: LSTM over [timesteps, features] -> dense+ReLU -> dense+softmax.
/// `image_size` is the square RGB resize whose pixels are reshaped into the sequence.
struct LstmConfig {
    std::size_t timesteps = 15;
    std::size_t features = 1280;
    std::size_t hidden = 128;
    std::size_t dense_units = 128;
    std::size_t classes = 38;
    std::size_t image_size = 80;

    friend bool operator==(const LstmConfig&, const LstmConfig&) = default;
};

using ArchConfig = std::variant<CnnConfig, LstmConfig>;

struct ModelSpec {
    ArchConfig config;
    Shape input_shape;
    std::size_t classes = 0;
    std::vector<LayerSpec> layers;

    bool is_cnn() const { return std::holds_alternative<CnnConfig>(config); }
    std::size_t total_params() const;
};

/// Builds and validates the layer chain; throws ShapeError naming the first
/// layer whose input cannot be processed.
ModelSpec make_cnn_spec(const CnnConfig& config);
ModelSpec make_lstm_spec(const LstmConfig& config);
ModelSpec make_spec(const ArchConfig& config);

template <class T>
using LayerParams = std::vector<BasicTensor<T>>;

template <class T>
struct BasicModel {
    ModelSpec spec;
    std::vector<LayerParams<T>> params;  // one entry per spec layer
    std::vector<std::string> labels;     // class id -> class name; empty until assigned

    std::size_t param_count() const;

    template <class U>
    BasicModel<U> cast() const {
        BasicModel<U> out{spec, {}, labels};
        out.params.reserve(params.size());
        for (const LayerParams<T>& layer : params) {
            LayerParams<U> converted;
            for (const BasicTensor<T>& t : layer) {
                converted.push_back(t.template cast<U>());
            }
            out.params.push_back(std::move(converted));
        }
        return out;
    }
};

using SequentialModel = BasicModel<float>;

inline constexpr std::uint64_t default_seed = 1234;

/// Freshly initialized model: He-uniform for conv/dense, Glorot-uniform for
/// LSTM kernels, LSTM forget bias 1, all other biases 0.
SequentialModel build_model(const ModelSpec& spec, std::uint64_t seed = default_seed);
SequentialModel build_cnn(const CnnConfig& config = {}, std::uint64_t seed = default_seed);
SequentialModel build_lstm(const LstmConfig& config = {}, std::uint64_t seed = default_seed);

/// Same architecture with every parameter zero.
template <class T>
BasicModel<T> zero_model(const ModelSpec& spec);

struct SummaryRow {
    std::string name;
    std::string type;
    Shape output_shape;
    std::size_t params = 0;
};

struct ModelSummary {
    std::vector<SummaryRow> rows;
    std::size_t total = 0;
    std::size_t trainable = 0;
    std::size_t non_trainable = 0;
};

ModelSummary summary(const ModelSpec& spec);
/// Fixed-width table: Layer (Type) | Output Shape | Param #, then totals.
std::string format_summary(const ModelSummary& s);
/// 7842762 -> "7,842,762".
std::string group_thousands(std::size_t value);

// ---------------------------------------------------------------------------
// Forward / backward

template <class T>
struct LayerCache {
    Shape input_shape;
    BasicTensor<T> input;
    BasicTensor<T> pre_activation;
    std::vector<std::size_t> argmax;
    DropoutMask<T> mask;
    LstmTrace<T> lstm;
};

template <class T>
struct ForwardTrace {
    std::vector<LayerCache<T>> layers;
    BasicTensor<T> logits;
    BasicTensor<T> probs;
};

/// Full forward pass keeping everything backward needs. Dropout draws from
/// `rng` in train mode and is the identity in infer mode.
template <class T>
ForwardTrace<T> forward_trace(const BasicModel<T>& model, const BasicTensor<T>& input, Mode mode, Rng& rng);

/// Inference-mode class probabilities.
template <class T>
BasicTensor<T> forward(const BasicModel<T>& model, const BasicTensor<T>& input);

/// Parameter gradients given d(loss)/d(logits) for a recorded trace.
template <class T>
std::vector<LayerParams<T>> backward(const BasicModel<T>& model, const ForwardTrace<T>& trace,
                                     const BasicTensor<T>& dlogits);

struct Prediction {
    std::size_t class_id = 0;
    std::string label;
    double confidence = 0.0;
};

/// argmax over inference probabilities; ties go to the lowest class id.
Prediction predict(const SequentialModel& model, const Tensor& input);

}  // namespace leafnet
