#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "leafnet/tensor.hpp"

namespace leafnet {

/// Random-access labelled samples. Implementations must be safe to read
/// from several threads at once.
class SampleSource {
public:
    virtual ~SampleSource() = default;

    virtual std::size_t size() const = 0;
    virtual std::size_t label(std::size_t index) const = 0;
    virtual Tensor input(std::size_t index) const = 0;

    bool empty() const { return size() == 0; }
};

class InMemoryDataset final : public SampleSource {
public:
    InMemoryDataset() = default;
    InMemoryDataset(std::vector<Tensor> inputs, std::vector<std::size_t> labels);

    void add(Tensor input, std::size_t label);

    std::size_t size() const override { return inputs_.size(); }
    std::size_t label(std::size_t index) const override { return labels_.at(index); }
    Tensor input(std::size_t index) const override { return inputs_.at(index); }

    const std::vector<Tensor>& inputs() const { return inputs_; }
    const std::vector<std::size_t>& labels() const { return labels_; }

private:
    std::vector<Tensor> inputs_;
    std::vector<std::size_t> labels_;
};

/// Deterministic shuffle of [0, n) for (seed, epoch), cut into batches of
/// `batch_size`; the final short batch is kept.
std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                        std::uint64_t epoch);

/// Class-separable fixture: class k is a distinct base colour plus seeded
/// Gaussian noise (sigma 0.05) clamped to [0, 1]. Element e of a sample takes
/// channel e % 3 of the base colour, so image and sequence shapes both work.
InMemoryDataset synth_dataset(std::size_t classes, std::size_t per_class, std::uint64_t seed,
                              const Shape& sample_shape, double noise = 0.05);

/// Base RGB colour used for class k out of `classes`.
std::vector<double> synth_base_color(std::size_t k, std::size_t classes);

}  // namespace leafnet
