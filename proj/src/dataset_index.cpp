#include "leafnet/dataset_index.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "leafnet/rng.hpp"

namespace fs = std::filesystem;

namespace leafnet {

const char* to_string(Split split) { return split == Split::train ? "train" : "valid"; }

std::size_t DatasetIndex::count(Split split) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [&](const DatasetRecord& r) { return r.split == split; }));
}

std::vector<DatasetRecord> DatasetIndex::split_records(Split split) const {
    std::vector<DatasetRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out),
                 [&](const DatasetRecord& r) { return r.split == split; });
    return out;
}

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".ppm";
}

std::vector<std::string> class_dirs(const fs::path& split_dir) {
    std::vector<std::string> names;
    for (const fs::directory_entry& e : fs::directory_iterator(split_dir)) {
        if (e.is_directory()) {
            names.push_back(e.path().filename().string());
        }
    }
    return names;
}

}  // namespace

DatasetIndex scan_dataset(const fs::path& root) {
    const fs::path train_dir = root / "train";
    const fs::path valid_dir = root / "valid";
    for (const fs::path& d : {train_dir, valid_dir}) {
        if (!fs::is_directory(d)) {
            throw StructuralError("dataset root " + root.string() + " has no " + d.filename().string() +
                                  "/ directory");
        }
    }

    const std::vector<std::string> train_classes = class_dirs(train_dir);
    const std::vector<std::string> valid_classes = class_dirs(valid_dir);
    std::set<std::string> all(train_classes.begin(), train_classes.end());
    all.insert(valid_classes.begin(), valid_classes.end());

    DatasetIndex index;
    index.classes.assign(all.begin(), all.end());  // std::set<std::string> orders by bytes
    const std::set<std::string> in_train(train_classes.begin(), train_classes.end());
    for (const std::string& v : valid_classes) {
        if (in_train.count(v) == 0) {
            index.warnings.push_back("class '" + v + "' appears under valid/ but not train/");
        }
    }

    for (Split split : {Split::train, Split::valid}) {
        const fs::path split_dir = split == Split::train ? train_dir : valid_dir;
        for (std::size_t label = 0; label < index.classes.size(); ++label) {
            const fs::path class_dir = split_dir / index.classes[label];
            if (!fs::is_directory(class_dir)) {
                continue;
            }
            std::vector<fs::path> files;
            for (const fs::directory_entry& e : fs::directory_iterator(class_dir)) {
                if (e.is_regular_file() && is_image_file(e.path())) {
                    files.push_back(e.path());
                }
            }
            std::sort(files.begin(), files.end());
            for (fs::path& f : files) {
                index.records.push_back({std::move(f), label, split});
            }
        }
    }
    return index;
}

std::vector<std::vector<std::size_t>> batches(const DatasetIndex& index, Split split, std::size_t batch_size,
                                               std::uint64_t seed, std::uint64_t epoch) {
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < index.records.size(); ++i) {
        if (index.records[i].split == split) {
            positions.push_back(i);
        }
    }
    if (positions.empty()) {
        throw ParameterError(std::string("the ") + to_string(split) + " split is empty");
    }
    auto local = shuffled_batches(positions.size(), batch_size, seed, epoch);
    for (std::vector<std::size_t>& b : local) {
        for (std::size_t& i : b) {
            i = positions[i];
        }
    }
    return local;
}

FileDataset::FileDataset(std::vector<DatasetRecord> records, InputFormat format)
    : records_(std::move(records)), format_(format) {}

Tensor FileDataset::input(std::size_t index) const { return load_image(records_.at(index).path, format_); }

void write_synthetic_tree(const fs::path& root, const std::vector<std::string>& classes,
                          std::size_t train_per_class, std::size_t valid_per_class, std::size_t size,
                          std::uint64_t seed) {
    for (std::size_t k = 0; k < classes.size(); ++k) {
        const std::vector<double> base = synth_base_color(k, classes.size());
        for (Split split : {Split::train, Split::valid}) {
            const std::size_t count = split == Split::train ? train_per_class : valid_per_class;
            const fs::path dir = root / to_string(split) / classes[k];
            fs::create_directories(dir);
            for (std::size_t n = 0; n < count; ++n) {
                Rng rng(derive_seed(seed, {k, static_cast<std::uint64_t>(split), n}));
                RgbImage img{size, size, std::vector<std::uint8_t>(size * size * 3)};
                for (std::size_t e = 0; e < img.pixels.size(); ++e) {
                    const double v = std::clamp(base[e % 3] + 0.05 * rng.normal(), 0.0, 1.0);
                    img.pixels[e] = static_cast<std::uint8_t>(std::lround(v * 255.0));
                }
                write_ppm(dir / ("img_" + std::to_string(n) + ".ppm"), img);
            }
        }
    }
}

}  // namespace leafnet
