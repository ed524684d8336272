#include "leafnet/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace leafnet {

namespace {

const char* tensor_names(LayerKind kind, std::size_t i) {
    static constexpr const char* conv[] = {"kernels", "bias"};
    static constexpr const char* dense[] = {"weights", "bias"};
    static constexpr const char* lstm[] = {"W", "U", "bias"};
    switch (kind) {
        case LayerKind::conv2d: return conv[i];
        case LayerKind::dense: return dense[i];
        case LayerKind::lstm: return lstm[i];
        default: return "?";
    }
}

json config_to_json(const ArchConfig& config) {
    if (const auto* c = std::get_if<CnnConfig>(&config)) {
        return {{"height", c->height},         {"width", c->width},
                {"channels", c->channels},     {"filters", c->filters},
                {"kernel", c->kernel},         {"dense_units", c->dense_units},
                {"classes", c->classes},       {"conv_dropout", c->conv_dropout},
                {"dense_dropout", c->dense_dropout}};
    }
    const auto& l = std::get<LstmConfig>(config);
    return {{"timesteps", l.timesteps}, {"features", l.features}, {"hidden", l.hidden},
            {"dense_units", l.dense_units}, {"classes", l.classes}, {"image_size", l.image_size}};
}

ArchConfig config_from_json(const std::string& arch, const json& j) {
    if (arch == "cnn") {
        CnnConfig c;
        c.height = j.at("height").get<std::size_t>();
        c.width = j.at("width").get<std::size_t>();
        c.channels = j.at("channels").get<std::size_t>();
        c.filters = j.at("filters").get<std::vector<std::size_t>>();
        c.kernel = j.at("kernel").get<std::size_t>();
        c.dense_units = j.at("dense_units").get<std::size_t>();
        c.classes = j.at("classes").get<std::size_t>();
        c.conv_dropout = j.at("conv_dropout").get<double>();
        c.dense_dropout = j.at("dense_dropout").get<double>();
        return c;
    }
    if (arch == "lstm") {
        LstmConfig c;
        c.timesteps = j.at("timesteps").get<std::size_t>();
        c.features = j.at("features").get<std::size_t>();
        c.hidden = j.at("hidden").get<std::size_t>();
        c.dense_units = j.at("dense_units").get<std::size_t>();
        c.classes = j.at("classes").get<std::size_t>();
        c.image_size = j.at("image_size").get<std::size_t>();
        return c;
    }
    throw std::invalid_argument("unknown architecture '" + arch + "'");
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n) {
            throw FormatError(pos_, std::string("truncated ") + what + ": need " + std::to_string(n) +
                                        " bytes, " + std::to_string(remaining()) + " left");
        }
    }

    std::uint64_t uint(std::size_t width, const char* what) {
        need(width, what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < width; ++i) {
            v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
        }
        pos_ += width;
        return v;
    }

    std::string text(std::size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string model_manifest(const SequentialModel& model) {
    json tensors = json::array();
    for (std::size_t i = 0; i < model.spec.layers.size(); ++i) {
        const LayerSpec& l = model.spec.layers[i];
        for (std::size_t j = 0; j < model.params[i].size(); ++j) {
            tensors.push_back({{"layer", l.name}, {"name", tensor_names(l.kind, j)},
                               {"shape", model.params[i][j].shape().dims()}});
        }
    }
    json layers = json::array();
    for (const LayerSpec& l : model.spec.layers) {
        layers.push_back(l.name);
    }
    const json manifest = {{"arch", model.spec.is_cnn() ? "cnn" : "lstm"},
                           {"config", config_to_json(model.spec.config)},
                           {"labels", model.labels},
                           {"layers", layers},
                           {"gate_order", "ifgo"},
                           {"dtype", "f32le"},
                           {"tensors", tensors}};
    return manifest.dump();
}

std::vector<std::uint8_t> serialize_model(const SequentialModel& model) {
    const std::string manifest = model_manifest(model);
    std::vector<std::uint8_t> out(std::begin(model_magic), std::end(model_magic));
    put_u32(out, model_format_version);
    put_u64(out, manifest.size());
    out.insert(out.end(), manifest.begin(), manifest.end());
    out.reserve(out.size() + 4 * model.param_count());
    for (const LayerParams<float>& layer : model.params) {
        for (const Tensor& t : layer) {
            for (float v : t.data()) {
                put_u32(out, std::bit_cast<std::uint32_t>(v));
            }
        }
    }
    return out;
}

SequentialModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
    ByteReader in(bytes);
    const std::string magic = in.text(4, "magic");
    if (std::memcmp(magic.data(), model_magic, 4) != 0) {
        throw FormatError(0, "bad magic, not a leafnet model file");
    }
    const std::uint64_t version = in.uint(4, "version");
    if (version != model_format_version) {
        throw FormatError(4, "unsupported format version " + std::to_string(version));
    }
    const std::uint64_t manifest_len = in.uint(8, "manifest length");
    if (manifest_len > in.remaining()) {
        throw FormatError(in.offset(), "manifest length " + std::to_string(manifest_len) + " exceeds the " +
                                           std::to_string(in.remaining()) + " remaining bytes");
    }
    const std::size_t manifest_offset = in.offset();
    const std::string manifest_text = in.text(manifest_len, "manifest");

    SequentialModel model;
    std::vector<Shape> declared;
    try {
        const json manifest = json::parse(manifest_text);
        if (manifest.at("gate_order").get<std::string>() != "ifgo" || manifest.at("dtype").get<std::string>() != "f32le") {
            throw FormatError(manifest_offset, "unsupported gate order or element type");
        }
        model.spec = make_spec(config_from_json(manifest.at("arch").get<std::string>(), manifest.at("config")));
        model.labels = manifest.at("labels").get<std::vector<std::string>>();
        for (const json& t : manifest.at("tensors")) {
            declared.emplace_back(t.at("shape").get<std::vector<std::size_t>>());
        }
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw FormatError(manifest_offset, std::string("invalid manifest: ") + e.what());
    }
    if (!model.labels.empty() && model.labels.size() != model.spec.classes) {
        throw FormatError(manifest_offset, "label map has " + std::to_string(model.labels.size()) + " entries for " +
                                               std::to_string(model.spec.classes) + " classes");
    }

    std::vector<Shape> expected;
    for (const LayerSpec& l : model.spec.layers) {
        for (const Shape& s : l.param_shapes()) {
            expected.push_back(s);
        }
    }
    if (declared != expected) {
        throw FormatError(manifest_offset, "tensor list does not match the declared architecture");
    }
    std::size_t values = 0;
    for (const Shape& s : expected) {
        values += s.numel();
    }
    if (in.remaining() != 4 * values) {
        throw FormatError(in.offset(), "parameter blob is " + std::to_string(in.remaining()) + " bytes, manifest declares " +
                                           std::to_string(4 * values));
    }

    for (const LayerSpec& l : model.spec.layers) {
        LayerParams<float> p;
        for (const Shape& s : l.param_shapes()) {
            Tensor t(s);
            for (float& v : t.data()) {
                v = std::bit_cast<float>(static_cast<std::uint32_t>(in.uint(4, "parameter")));
            }
            p.push_back(std::move(t));
        }
        model.params.push_back(std::move(p));
    }
    return model;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot open " + tmp.string() + " for writing");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw Error("failed writing " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

void save_model(const SequentialModel& model, const fs::path& path) {
    const std::vector<std::uint8_t> bytes = serialize_model(model);
    write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

SequentialModel load_model(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open model file " + path.string());
    }
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return deserialize_model(bytes);
}

}  // namespace leafnet
