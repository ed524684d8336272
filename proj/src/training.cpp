#include "leafnet/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>
#include <thread>

namespace leafnet {

template <class T>
CrossEntropy<T> categorical_cross_entropy(const BasicTensor<T>& probs, std::size_t target) {
    if (probs.shape().rank() != 1) {
        throw ShapeError("cross-entropy expects a probability vector, got " + probs.shape().to_string());
    }
    if (target >= probs.size()) {
        throw ParameterError("target class " + std::to_string(target) + " out of range for " +
                             std::to_string(probs.size()) + " classes");
    }
    CrossEntropy<T> ce;
    ce.loss = -std::log(static_cast<double>(probs[target]) + probability_clip);
    ce.grad = probs;
    ce.grad[target] -= T{1};
    return ce;
}

void adam_step(std::vector<LayerParams<float>>& params, const std::vector<LayerParams<float>>& grads,
               AdamState& state) {
    if (grads.size() != params.size()) {
        throw ShapeError("adam_step: " + std::to_string(grads.size()) + " gradient groups for " +
                         std::to_string(params.size()) + " parameter groups");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i].size() != params[i].size()) {
            throw ShapeError("adam_step: gradient group " + std::to_string(i) + " has the wrong tensor count");
        }
        for (std::size_t j = 0; j < params[i].size(); ++j) {
            check_same_shape(params[i][j].shape(), grads[i][j].shape(), "adam_step");
        }
    }
    if (state.m.empty()) {
        for (const LayerParams<float>& layer : params) {
            LayerParams<float> zeros;
            for (const Tensor& t : layer) {
                zeros.emplace_back(t.shape());
            }
            state.m.push_back(zeros);
            state.v.push_back(std::move(zeros));
        }
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::size_t j = 0; j < params[i].size(); ++j) {
            Tensor& p = params[i][j];
            Tensor& m = state.m[i][j];
            Tensor& v = state.v[i][j];
            const Tensor& g = grads[i][j];
            for (std::size_t k = 0; k < p.size(); ++k) {
                const double gk = g[k];
                const double mk = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
                const double vk = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
                m[k] = static_cast<float>(mk);
                v[k] = static_cast<float>(vk);
                const double m_hat = mk / correction1;
                const double v_hat = vk / correction2;
                p[k] = static_cast<float>(p[k] - state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon));
            }
        }
    }
}

template <class T>
SampleGradient<T> sample_gradient(const BasicModel<T>& model, const BasicTensor<T>& input, std::size_t label,
                                  Mode mode, Rng& rng) {
    ForwardTrace<T> trace = forward_trace(model, input, mode, rng);
    CrossEntropy<T> ce = categorical_cross_entropy(trace.probs, label);
    SampleGradient<T> out;
    out.loss = ce.loss;
    out.grads = backward(model, trace, ce.grad);
    out.probs = std::move(trace.probs);
    return out;
}

namespace {

// Samples per reduction shard. Fixed so the summation order never depends on
// how many threads run.
constexpr std::size_t shard_size = 4;

void accumulate(std::vector<LayerParams<float>>& into, const std::vector<LayerParams<float>>& from) {
    if (into.empty()) {
        into = from;
        return;
    }
    for (std::size_t i = 0; i < into.size(); ++i) {
        for (std::size_t j = 0; j < into[i].size(); ++j) {
            auto dst = into[i][j].data();
            auto src = from[i][j].data();
            for (std::size_t k = 0; k < dst.size(); ++k) {
                dst[k] += src[k];
            }
        }
    }
}

std::size_t resolve_workers(std::size_t requested) {
    if (requested != 0) {
        return requested;
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs job(0..count-1) on up to `workers` threads; rethrows the first failure by index.
template <class Job>
void parallel_for(std::size_t count, std::size_t workers, Job job) {
    std::vector<std::exception_ptr> errors(count);
    auto run = [&](std::size_t i) {
        try {
            job(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            run(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    run(i);
                }
            });
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }
    for (const std::exception_ptr& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace

BatchGradient batch_gradient(const SequentialModel& model, const SampleSource& data,
                             const std::vector<std::size_t>& indices, Mode mode, std::uint64_t stream_seed,
                             std::size_t workers) {
    if (indices.empty()) {
        throw ParameterError("empty batch");
    }
    const std::size_t shards = (indices.size() + shard_size - 1) / shard_size;
    std::vector<std::vector<LayerParams<float>>> partial(shards);
    BatchGradient out;
    out.losses.assign(indices.size(), 0.0);
    std::vector<char> hit(indices.size(), 0);

    parallel_for(shards, resolve_workers(workers), [&](std::size_t s) {
        const std::size_t end = std::min(indices.size(), (s + 1) * shard_size);
        for (std::size_t pos = s * shard_size; pos < end; ++pos) {
            const std::size_t idx = indices[pos];
            Rng rng(derive_seed(stream_seed, {pos}));
            SampleGradient<float> sg = sample_gradient(model, data.input(idx), data.label(idx), mode, rng);
            out.losses[pos] = sg.loss;
            hit[pos] = argmax(sg.probs) == data.label(idx) ? 1 : 0;
            accumulate(partial[s], sg.grads);
        }
    });

    for (std::vector<LayerParams<float>>& p : partial) {
        accumulate(out.grads, p);
    }
    const float inv = 1.0f / static_cast<float>(indices.size());
    for (LayerParams<float>& layer : out.grads) {
        for (Tensor& t : layer) {
            for (float& v : t.data()) {
                v *= inv;
            }
        }
    }
    out.correct = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
    return out;
}

std::vector<EpochRecord> train(SequentialModel& model, const SampleSource& train_set,
                               const SampleSource& valid_set, const TrainConfig& config,
                               const EpochCallback& on_epoch) {
    if (train_set.empty()) {
        throw ParameterError("training set is empty");
    }
    if (valid_set.empty()) {
        throw ParameterError("validation set is empty");
    }
    if (config.epochs == 0 || config.batch_size == 0) {
        throw ParameterError("epochs and batch size must be positive");
    }
    if (!(config.lr >= 0.0) || !std::isfinite(config.lr)) {
        throw ParameterError("learning rate must be a finite non-negative number");
    }

    AdamState adam;
    adam.lr = config.lr;
    adam.beta1 = config.beta1;
    adam.beta2 = config.beta2;
    adam.epsilon = config.epsilon;

    std::vector<EpochRecord> history;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto batches = shuffled_batches(train_set.size(), config.batch_size, config.seed, epoch);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            BatchGradient bg;
            try {
                bg = batch_gradient(model, train_set, batches[b], Mode::train,
                                    derive_seed(config.seed, {0xd50f, epoch, b}), config.workers);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) + ": " +
                                   e.what());
            }
            for (double l : bg.losses) {
                if (!std::isfinite(l)) {
                    throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(b));
                }
                loss_sum += l;
            }
            for (const LayerParams<float>& layer : bg.grads) {
                for (const Tensor& t : layer) {
                    t.check_finite("gradient at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
                }
            }
            correct += bg.correct;
            adam_step(model.params, bg.grads, adam);
        }
        const LossAccuracy val = evaluate_loss_acc(model, valid_set);
        EpochRecord rec{epoch, loss_sum / static_cast<double>(train_set.size()),
                        static_cast<double>(correct) / static_cast<double>(train_set.size()), val.loss,
                        val.accuracy};
        history.push_back(rec);
        if (on_epoch) {
            on_epoch(rec);
        }
    }
    return history;
}

LossAccuracy evaluate_loss_acc(const SequentialModel& model, const SampleSource& data) {
    if (data.empty()) {
        throw ParameterError("cannot evaluate on an empty dataset");
    }
    double loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Tensor probs = forward(model, data.input(i));
        loss += categorical_cross_entropy(probs, data.label(i)).loss;
        if (argmax(probs) == data.label(i)) {
            ++correct;
        }
    }
    const double n = static_cast<double>(data.size());
    return {loss / n, static_cast<double>(correct) / n};
}

std::vector<std::size_t> predict_all(const SequentialModel& model, const SampleSource& data) {
    std::vector<std::size_t> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.push_back(argmax(forward(model, data.input(i))));
    }
    return out;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
    std::ostringstream out;
    out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
    char line[160];
    for (const EpochRecord& r : history) {
        std::snprintf(line, sizeof line, "%zu,%.6f,%.6f,%.6f,%.6f\n", r.epoch, r.train_loss, r.train_acc,
                      r.val_loss, r.val_acc);
        out << line;
    }
    return out.str();
}

template CrossEntropy<float> categorical_cross_entropy(const BasicTensor<float>&, std::size_t);
template CrossEntropy<double> categorical_cross_entropy(const BasicTensor<double>&, std::size_t);
template SampleGradient<float> sample_gradient(const BasicModel<float>&, const BasicTensor<float>&, std::size_t,
                                               Mode, Rng&);
template SampleGradient<double> sample_gradient(const BasicModel<double>&, const BasicTensor<double>&,
                                                std::size_t, Mode, Rng&);

}  // namespace leafnet
