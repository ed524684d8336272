#include "leafnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "leafnet/rng.hpp"

namespace leafnet {

InMemoryDataset::InMemoryDataset(std::vector<Tensor> inputs, std::vector<std::size_t> labels)
    : inputs_(std::move(inputs)), labels_(std::move(labels)) {
    if (inputs_.size() != labels_.size()) {
        throw ParameterError("dataset has " + std::to_string(inputs_.size()) + " inputs but " +
                             std::to_string(labels_.size()) + " labels");
    }
}

void InMemoryDataset::add(Tensor input, std::size_t label) {
    inputs_.push_back(std::move(input));
    labels_.push_back(label);
}

std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                        std::uint64_t epoch) {
    if (n == 0) {
        throw ParameterError("cannot batch an empty split");
    }
    if (batch_size == 0) {
        throw ParameterError("batch size must be positive");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, {0x5f0f, epoch}));
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(order[i], order[rng.below(i + 1)]);
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

std::vector<double> synth_base_color(std::size_t k, std::size_t classes) {
    std::size_t levels = 2;
    while (levels * levels * levels < classes) {
        ++levels;
    }
    auto level = [&](std::size_t idx) { return 0.15 + 0.7 * static_cast<double>(idx) / static_cast<double>(levels - 1); };
    return {level(k / (levels * levels) % levels), level(k / levels % levels), level(k % levels)};
}

InMemoryDataset synth_dataset(std::size_t classes, std::size_t per_class, std::uint64_t seed,
                              const Shape& sample_shape, double noise) {
    if (classes < 2) {
        throw ParameterError("synthetic dataset needs at least 2 classes");
    }
    InMemoryDataset data;
    for (std::size_t k = 0; k < classes; ++k) {
        const std::vector<double> base = synth_base_color(k, classes);
        for (std::size_t n = 0; n < per_class; ++n) {
            Rng rng(derive_seed(seed, {0x5714, k, n}));
            Tensor t(sample_shape);
            for (std::size_t e = 0; e < t.size(); ++e) {
                t[e] = static_cast<float>(std::clamp(base[e % 3] + noise * rng.normal(), 0.0, 1.0));
            }
            data.add(std::move(t), k);
        }
    }
    return data;
}

}  // namespace leafnet
