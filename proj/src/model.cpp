#include "leafnet/model.hpp"

#include <iomanip>
#include <map>
#include <sstream>

namespace leafnet {

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::maxpool2d: return "maxpool2d";
        case LayerKind::dropout: return "dropout";
        case LayerKind::flatten: return "flatten";
        case LayerKind::dense: return "dense";
        case LayerKind::lstm: return "lstm";
    }
    return "?";
}

const char* to_string(Activation activation) {
    switch (activation) {
        case Activation::linear: return "linear";
        case Activation::relu: return "relu";
        case Activation::softmax: return "softmax";
    }
    return "?";
}

const char* to_string(Padding padding) { return padding == Padding::same ? "same" : "valid"; }

namespace {

const char* type_label(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv2d: return "Conv2D";
        case LayerKind::maxpool2d: return "MaxPooling2D";
        case LayerKind::dropout: return "Dropout";
        case LayerKind::flatten: return "Flatten";
        case LayerKind::dense: return "Dense";
        case LayerKind::lstm: return "LSTM";
    }
    return "?";
}

/// Hands out conv2d, conv2d_1, conv2d_2, ... per base name.
class LayerNamer {
public:
    std::string next(const std::string& base) {
        const std::size_t n = counts_[base]++;
        return n == 0 ? base : base + "_" + std::to_string(n);
    }

private:
    std::map<std::string, std::size_t> counts_;
};

void require_positive(std::size_t value, const char* what) {
    if (value == 0) {
        throw ParameterError(std::string(what) + " must be positive");
    }
}

void require_rate(double rate, const char* what) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ParameterError(std::string(what) + " must lie in [0, 1), got " + std::to_string(rate));
    }
}

}  // namespace

std::vector<Shape> LayerSpec::param_shapes() const {
    switch (kind) {
        case LayerKind::conv2d:
            return {Shape{kernel, kernel, input_shape[2], units}, Shape{units}};
        case LayerKind::dense:
            return {Shape{input_shape[0], units}, Shape{units}};
        case LayerKind::lstm:
            return {Shape{input_shape[1], 4 * units}, Shape{units, 4 * units}, Shape{4 * units}};
        default:
            return {};
    }
}

std::size_t LayerSpec::param_count() const {
    switch (kind) {
        case LayerKind::conv2d: return conv_param_count(kernel, kernel, input_shape[2], units);
        case LayerKind::dense: return dense_param_count(input_shape[0], units);
        case LayerKind::lstm: return lstm_param_count(input_shape[1], units);
        default: return 0;
    }
}

std::size_t ModelSpec::total_params() const {
    std::size_t total = 0;
    for (const LayerSpec& layer : layers) {
        total += layer.param_count();
    }
    return total;
}

ModelSpec make_cnn_spec(const CnnConfig& config) {
    require_positive(config.height, "input height");
    require_positive(config.width, "input width");
    require_positive(config.channels, "input channels");
    require_positive(config.kernel, "kernel size");
    require_positive(config.dense_units, "dense width");
    require_positive(config.classes, "class count");
    require_rate(config.conv_dropout, "convolutional dropout rate");
    require_rate(config.dense_dropout, "dense dropout rate");
    if (config.filters.empty()) {
        throw ParameterError("at least one convolutional block is required");
    }
    if (config.kernel % 2 == 0) {
        throw ParameterError("kernel size must be odd for same padding, got " + std::to_string(config.kernel));
    }

    ModelSpec spec{config, Shape{config.height, config.width, config.channels}, config.classes, {}};
    LayerNamer namer;
    Shape current = spec.input_shape;

    auto add_conv = [&](std::size_t filters, Padding padding) {
        require_positive(filters, "filter count");
        LayerSpec l;
        l.kind = LayerKind::conv2d;
        l.name = namer.next("conv2d");
        l.input_shape = current;
        l.units = filters;
        l.kernel = config.kernel;
        l.padding = padding;
        l.activation = Activation::relu;
        if (padding == Padding::valid && (current[0] < config.kernel || current[1] < config.kernel)) {
            throw ShapeError("layer " + l.name + ": input " + current.to_string() + " is smaller than the " +
                             std::to_string(config.kernel) + "x" + std::to_string(config.kernel) +
                             " kernel under valid padding");
        }
        l.output_shape = Shape{conv_output_extent(current[0], config.kernel, padding),
                               conv_output_extent(current[1], config.kernel, padding), filters};
        current = l.output_shape;
        spec.layers.push_back(std::move(l));
    };
    auto add_pool = [&] {
        LayerSpec l;
        l.kind = LayerKind::maxpool2d;
        l.name = namer.next("max_pooling2d");
        l.input_shape = current;
        if (current[0] < 2 || current[1] < 2) {
            throw ShapeError("layer " + l.name + ": input " + current.to_string() +
                             " is smaller than the 2x2 pooling window");
        }
        l.output_shape = Shape{current[0] / 2, current[1] / 2, current[2]};
        current = l.output_shape;
        spec.layers.push_back(std::move(l));
    };
    auto add_dropout = [&](double rate) {
        LayerSpec l;
        l.kind = LayerKind::dropout;
        l.name = namer.next("dropout");
        l.input_shape = current;
        l.output_shape = current;
        l.rate = rate;
        spec.layers.push_back(std::move(l));
    };
    auto add_dense = [&](std::size_t units, Activation activation) {
        LayerSpec l;
        l.kind = LayerKind::dense;
        l.name = namer.next("dense");
        l.input_shape = current;
        l.units = units;
        l.activation = activation;
        l.output_shape = Shape{units};
        current = l.output_shape;
        spec.layers.push_back(std::move(l));
    };

    for (std::size_t filters : config.filters) {
        add_conv(filters, Padding::same);
        add_conv(filters, Padding::valid);
        add_pool();
    }
    add_dropout(config.conv_dropout);
    {
        LayerSpec l;
        l.kind = LayerKind::flatten;
        l.name = namer.next("flatten");
        l.input_shape = current;
        l.output_shape = Shape{current.numel()};
        current = l.output_shape;
        spec.layers.push_back(std::move(l));
    }
    add_dense(config.dense_units, Activation::relu);
    add_dropout(config.dense_dropout);
    add_dense(config.classes, Activation::softmax);
    return spec;
}

ModelSpec make_lstm_spec(const LstmConfig& config) {
    require_positive(config.timesteps, "sequence length");
    require_positive(config.features, "feature dimension");
    require_positive(config.hidden, "hidden units");
    require_positive(config.dense_units, "dense width");
    require_positive(config.classes, "class count");
    require_positive(config.image_size, "image size");

    ModelSpec spec{config, Shape{config.timesteps, config.features}, config.classes, {}};
    LayerNamer namer;

    LayerSpec lstm;
    lstm.kind = LayerKind::lstm;
    lstm.name = namer.next("lstm");
    lstm.input_shape = spec.input_shape;
    lstm.units = config.hidden;
    lstm.output_shape = Shape{config.hidden};
    spec.layers.push_back(lstm);

    LayerSpec hidden;
    hidden.kind = LayerKind::dense;
    hidden.name = namer.next("dense");
    hidden.input_shape = Shape{config.hidden};
    hidden.units = config.dense_units;
    hidden.activation = Activation::relu;
    hidden.output_shape = Shape{config.dense_units};
    spec.layers.push_back(hidden);

    LayerSpec head;
    head.kind = LayerKind::dense;
    head.name = namer.next("dense");
    head.input_shape = Shape{config.dense_units};
    head.units = config.classes;
    head.activation = Activation::softmax;
    head.output_shape = Shape{config.classes};
    spec.layers.push_back(head);
    return spec;
}

ModelSpec make_spec(const ArchConfig& config) {
    return std::visit(
        [](const auto& c) -> ModelSpec {
            if constexpr (std::is_same_v<std::decay_t<decltype(c)>, CnnConfig>) {
                return make_cnn_spec(c);
            } else {
                return make_lstm_spec(c);
            }
        },
        config);
}

template <class T>
std::size_t BasicModel<T>::param_count() const {
    std::size_t total = 0;
    for (const LayerParams<T>& layer : params) {
        for (const BasicTensor<T>& t : layer) {
            total += t.size();
        }
    }
    return total;
}

SequentialModel build_model(const ModelSpec& spec, std::uint64_t seed) {
    SequentialModel model{spec, {}, {}};
    model.params.reserve(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const std::vector<Shape> shapes = l.param_shapes();
        Rng rng(derive_seed(seed, {0x1a7e, i}));
        LayerParams<float> p;
        switch (l.kind) {
            case LayerKind::conv2d:
                p.push_back(he_uniform(shapes[0], l.kernel * l.kernel * l.input_shape[2], rng));
                p.emplace_back(shapes[1]);
                break;
            case LayerKind::dense:
                if (l.activation == Activation::relu) {
                    p.push_back(he_uniform(shapes[0], l.input_shape[0], rng));
                } else {
                    p.push_back(glorot_uniform(shapes[0], l.input_shape[0], l.units, rng));
                }
                p.emplace_back(shapes[1]);
                break;
            case LayerKind::lstm: {
                const std::size_t in = l.input_shape[1], h = l.units;
                p.push_back(glorot_uniform(shapes[0], in, 4 * h, rng));
                p.push_back(glorot_uniform(shapes[1], h, 4 * h, rng));
                Tensor bias(shapes[2]);
                for (std::size_t j = 0; j < h; ++j) {
                    bias[gate_forget * h + j] = 1.0f;
                }
                p.push_back(std::move(bias));
                break;
            }
            default:
                break;
        }
        model.params.push_back(std::move(p));
    }
    return model;
}

SequentialModel build_cnn(const CnnConfig& config, std::uint64_t seed) {
    return build_model(make_cnn_spec(config), seed);
}

SequentialModel build_lstm(const LstmConfig& config, std::uint64_t seed) {
    return build_model(make_lstm_spec(config), seed);
}

template <class T>
BasicModel<T> zero_model(const ModelSpec& spec) {
    BasicModel<T> model{spec, {}, {}};
    for (const LayerSpec& l : spec.layers) {
        LayerParams<T> p;
        for (const Shape& s : l.param_shapes()) {
            p.emplace_back(s);
        }
        model.params.push_back(std::move(p));
    }
    return model;
}

std::string group_thousands(std::size_t value) {
    std::string digits = std::to_string(value);
    std::string out;
    const std::size_t lead = digits.size() % 3;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i > 0 && (i - lead) % 3 == 0 && i >= lead) {
            out += ',';
        }
        out += digits[i];
    }
    return out;
}

ModelSummary summary(const ModelSpec& spec) {
    ModelSummary s;
    for (const LayerSpec& l : spec.layers) {
        s.rows.push_back({l.name, type_label(l.kind), l.output_shape, l.param_count()});
        s.total += l.param_count();
    }
    s.trainable = s.total;
    s.non_trainable = 0;
    return s;
}

std::string format_summary(const ModelSummary& s) {
    constexpr int name_w = 32, shape_w = 22, param_w = 12;
    std::ostringstream out;
    const std::string rule(name_w + shape_w + param_w, '_');
    const std::string heavy(name_w + shape_w + param_w, '=');
    out << rule << '\n';
    out << std::left << std::setw(name_w) << "Layer (Type)" << std::setw(shape_w) << "Output Shape"
        << std::right << std::setw(param_w) << "Param #" << '\n';
    out << heavy << '\n';
    for (const SummaryRow& row : s.rows) {
        out << std::left << std::setw(name_w) << (row.name + " (" + row.type + ")") << std::setw(shape_w)
            << row.output_shape.to_string() << std::right << std::setw(param_w) << group_thousands(row.params)
            << '\n';
    }
    out << heavy << '\n';
    out << "Total params: " << group_thousands(s.total) << '\n';
    out << "Trainable params: " << group_thousands(s.trainable) << '\n';
    out << "Non-trainable params: " << group_thousands(s.non_trainable) << '\n';
    out << rule << '\n';
    return out.str();
}

namespace {

template <class T>
BasicTensor<T> activate(const BasicTensor<T>& pre, Activation activation) {
    return activation == Activation::relu ? relu(pre) : pre;
}

/// Shared by inference and training; records caches only when `trace` is set.
template <class T>
BasicTensor<T> run_forward(const BasicModel<T>& model, const BasicTensor<T>& input, Mode mode, Rng* rng,
                           ForwardTrace<T>* trace) {
    if (input.shape() != model.spec.input_shape) {
        throw ShapeError("model input: expected " + model.spec.input_shape.to_string() + ", got " +
                         input.shape().to_string());
    }
    if (model.params.size() != model.spec.layers.size()) {
        throw StateError("model parameters do not match its layer list");
    }
    if (trace != nullptr) {
        trace->layers.assign(model.spec.layers.size(), LayerCache<T>{});
    }
    BasicTensor<T> x = input;
    for (std::size_t i = 0; i < model.spec.layers.size(); ++i) {
        const LayerSpec& l = model.spec.layers[i];
        const LayerParams<T>& p = model.params[i];
        LayerCache<T>* cache = trace != nullptr ? &trace->layers[i] : nullptr;
        if (cache != nullptr) {
            cache->input_shape = x.shape();
        }
        switch (l.kind) {
            case LayerKind::conv2d:
            case LayerKind::dense: {
                BasicTensor<T> pre = l.kind == LayerKind::conv2d ? conv2d_forward(x, p[0], p[1], l.padding)
                                                                 : dense_forward(x, p[0], p[1]);
                BasicTensor<T> y = activate(pre, l.activation);
                if (cache != nullptr) {
                    cache->input = std::move(x);
                    cache->pre_activation = std::move(pre);
                }
                x = std::move(y);
                break;
            }
            case LayerKind::maxpool2d: {
                PoolResult<T> r = maxpool2d_forward(x);
                if (cache != nullptr) {
                    cache->argmax = std::move(r.argmax);
                }
                x = std::move(r.output);
                break;
            }
            case LayerKind::dropout: {
                if (mode == Mode::train && rng == nullptr) {
                    throw StateError("train-mode forward requires a random stream");
                }
                Rng dummy(0);
                DropoutResult<T> r = dropout_forward(x, l.rate, mode, rng != nullptr ? *rng : dummy);
                if (cache != nullptr) {
                    cache->mask = std::move(r.mask);
                }
                x = std::move(r.output);
                break;
            }
            case LayerKind::flatten:
                x = flatten(x);
                break;
            case LayerKind::lstm: {
                LstmTrace<T> t = lstm_forward_trace(x, p[0], p[1], p[2]);
                x = t.h;
                if (cache != nullptr) {
                    cache->lstm = std::move(t);
                }
                break;
            }
        }
    }
    return x;
}

}  // namespace

template <class T>
ForwardTrace<T> forward_trace(const BasicModel<T>& model, const BasicTensor<T>& input, Mode mode, Rng& rng) {
    ForwardTrace<T> trace;
    trace.logits = run_forward(model, input, mode, &rng, &trace);
    trace.probs = softmax(trace.logits);
    return trace;
}

template <class T>
BasicTensor<T> forward(const BasicModel<T>& model, const BasicTensor<T>& input) {
    return softmax(run_forward<T>(model, input, Mode::infer, nullptr, nullptr));
}

template <class T>
std::vector<LayerParams<T>> backward(const BasicModel<T>& model, const ForwardTrace<T>& trace,
                                     const BasicTensor<T>& dlogits) {
    const std::size_t n = model.spec.layers.size();
    if (trace.layers.size() != n) {
        throw StateError("forward trace does not belong to this model");
    }
    std::vector<LayerParams<T>> grads(n);
    BasicTensor<T> g = dlogits;
    for (std::size_t i = n; i-- > 0;) {
        const LayerSpec& l = model.spec.layers[i];
        const LayerParams<T>& p = model.params[i];
        const LayerCache<T>& cache = trace.layers[i];
        switch (l.kind) {
            case LayerKind::conv2d: {
                if (l.activation == Activation::relu) {
                    g = relu_backward(cache.pre_activation, g);
                }
                ConvGrads<T> cg = conv2d_backward(cache.input, p[0], l.padding, g);
                grads[i] = {std::move(cg.kernels), std::move(cg.bias)};
                g = std::move(cg.input);
                break;
            }
            case LayerKind::dense: {
                if (l.activation == Activation::relu) {
                    g = relu_backward(cache.pre_activation, g);
                }
                DenseGrads<T> dg = dense_backward(cache.input, p[0], g);
                grads[i] = {std::move(dg.weights), std::move(dg.bias)};
                g = std::move(dg.input);
                break;
            }
            case LayerKind::maxpool2d:
                g = maxpool2d_backward(cache.argmax, cache.input_shape, g);
                break;
            case LayerKind::dropout:
                g = dropout_backward(cache.mask, g);
                break;
            case LayerKind::flatten:
                g = reshape(g, cache.input_shape);
                break;
            case LayerKind::lstm: {
                LstmGrads<T> lg = lstm_backward(cache.lstm, p[0], p[1], g);
                grads[i] = {std::move(lg.w), std::move(lg.u), std::move(lg.bias)};
                g = std::move(lg.sequence);
                break;
            }
        }
    }
    return grads;
}

Prediction predict(const SequentialModel& model, const Tensor& input) {
    if (model.labels.size() != model.spec.classes) {
        throw StateError("model has no label map for its " + std::to_string(model.spec.classes) + " classes");
    }
    const Tensor probs = forward(model, input);
    const std::size_t id = argmax(probs);
    return {id, model.labels[id], static_cast<double>(probs[id])};
}

#define LEAFNET_INSTANTIATE(T)                                                                           \
    template struct BasicModel<T>;                                                                       \
    template BasicModel<T> zero_model(const ModelSpec&);                                                 \
    template ForwardTrace<T> forward_trace(const BasicModel<T>&, const BasicTensor<T>&, Mode, Rng&);     \
    template BasicTensor<T> forward(const BasicModel<T>&, const BasicTensor<T>&);                        \
    template std::vector<LayerParams<T>> backward(const BasicModel<T>&, const ForwardTrace<T>&,          \
                                                  const BasicTensor<T>&);

LEAFNET_INSTANTIATE(float)
LEAFNET_INSTANTIATE(double)

#undef LEAFNET_INSTANTIATE

}  // namespace leafnet
