#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "leafnet/dataset.hpp"
#include "leafnet/model.hpp"

namespace leafnet {

inline constexpr double probability_clip = 1e-12;

template <class T>
struct CrossEntropy {
    double loss = 0.0;
    BasicTensor<T> grad;  // d(loss)/d(logits) = probs - onehot(target)
};

/// -ln(probs[target] + 1e-12), with the fused softmax+CE logit gradient.
template <class T>
CrossEntropy<T> categorical_cross_entropy(const BasicTensor<T>& probs, std::size_t target);

struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    std::vector<LayerParams<float>> m;
    std::vector<LayerParams<float>> v;
};

/// One bias-corrected Adam update. Moments are allocated on the first call.
void adam_step(std::vector<LayerParams<float>>& params, const std::vector<LayerParams<float>>& grads,
               AdamState& state);

template <class T>
struct SampleGradient {
    double loss = 0.0;
    BasicTensor<T> probs;
    std::vector<LayerParams<T>> grads;
};

/// Loss and parameter gradients for one labelled sample.
template <class T>
SampleGradient<T> sample_gradient(const BasicModel<T>& model, const BasicTensor<T>& input, std::size_t label,
                                  Mode mode, Rng& rng);

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = default_seed;
    /// 0 picks the hardware concurrency. Results do not depend on it.
    std::size_t workers = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Minibatch Adam on the mean batch loss. Mutates `model` in place and
/// returns one record per epoch. Throws NumericError on a non-finite loss.
std::vector<EpochRecord> train(SequentialModel& model, const SampleSource& train_set,
                               const SampleSource& valid_set, const TrainConfig& config,
                               const EpochCallback& on_epoch = {});

/// Mean gradient over `indices`, reduced in a fixed order independent of
/// `workers`. Also reports per-sample losses and train-mode hits.
struct BatchGradient {
    std::vector<LayerParams<float>> grads;
    std::vector<double> losses;
    std::size_t correct = 0;
};

BatchGradient batch_gradient(const SequentialModel& model, const SampleSource& data,
                             const std::vector<std::size_t>& indices, Mode mode, std::uint64_t stream_seed,
                             std::size_t workers);

struct LossAccuracy {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Inference-mode mean loss and accuracy.
LossAccuracy evaluate_loss_acc(const SequentialModel& model, const SampleSource& data);

/// Inference-mode argmax predictions, one per sample.
std::vector<std::size_t> predict_all(const SequentialModel& model, const SampleSource& data);

std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace leafnet
