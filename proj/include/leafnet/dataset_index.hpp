#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "leafnet/dataset.hpp"
#include "leafnet/image.hpp"

namespace leafnet {

enum class Split { train, valid };

const char* to_string(Split split);

struct DatasetRecord {
    std::filesystem::path path;
    std::size_t label = 0;
    Split split = Split::train;
};

/// Class names sorted by byte order (ids 0..K-1) plus every image record.
struct DatasetIndex {
    std::vector<std::string> classes;
    std::vector<DatasetRecord> records;
    std::vector<std::string> warnings;

    std::size_t count(Split split) const;
    std::vector<DatasetRecord> split_records(Split split) const;
};

/// Scans `<root>/train/<Class>/*` and `<root>/valid/<Class>/*` for
/// jpg/jpeg/png/ppm files (case-insensitive). Throws StructuralError if a
/// split directory is missing. Classes seen only under valid/ are still
/// mapped and reported in `warnings`.
DatasetIndex scan_dataset(const std::filesystem::path& root);

/// Index batches over one split of `index`; see shuffled_batches.
std::vector<std::vector<std::size_t>> batches(const DatasetIndex& index, Split split, std::size_t batch_size,
                                               std::uint64_t seed, std::uint64_t epoch);

/// Decodes and preprocesses images on demand.
class FileDataset final : public SampleSource {
public:
    FileDataset(std::vector<DatasetRecord> records, InputFormat format);

    std::size_t size() const override { return records_.size(); }
    std::size_t label(std::size_t index) const override { return records_.at(index).label; }
    Tensor input(std::size_t index) const override;

    const DatasetRecord& record(std::size_t index) const { return records_.at(index); }

private:
    std::vector<DatasetRecord> records_;
    InputFormat format_;
};

/// Writes a synthetic PPM tree in the dataset layout: for each class,
/// `train_per_class` + `valid_per_class` images of `size`x`size` pixels.
void write_synthetic_tree(const std::filesystem::path& root, const std::vector<std::string>& classes,
                          std::size_t train_per_class, std::size_t valid_per_class, std::size_t size,
                          std::uint64_t seed);

}  // namespace leafnet
