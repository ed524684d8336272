#include "leafnet/image.hpp"

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <jpeglib.h>
#include <jerror.h>
#include <png.h>

namespace leafnet {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DecodeError(path.string(), "cannot open file");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// --- PPM / PGM --------------------------------------------------------------

class PnmReader {
public:
    PnmReader(const std::vector<std::uint8_t>& bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

    std::size_t number() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
            throw DecodeError(origin_, "malformed PNM header");
        }
        std::size_t v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + static_cast<std::size_t>(bytes_[pos_++] - '0');
            if (v > (1u << 24)) {
                throw DecodeError(origin_, "PNM header value too large");
            }
        }
        return v;
    }

    RgbImage read() {
        const bool colour = bytes_[1] == '6';
        pos_ = 2;
        RgbImage img;
        img.width = number();
        img.height = number();
        const std::size_t maxval = number();
        if (img.width == 0 || img.height == 0 || maxval == 0 || maxval > 65535) {
            throw DecodeError(origin_, "invalid PNM dimensions or maxval");
        }
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
            throw DecodeError(origin_, "malformed PNM header");
        }
        ++pos_;  // single whitespace before the raster
        const std::size_t channels = colour ? 3 : 1;
        const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
        const std::size_t samples = img.width * img.height * channels;
        if (bytes_.size() - pos_ < samples * sample_bytes) {
            throw DecodeError(origin_, "truncated PNM raster");
        }
        img.pixels.resize(img.width * img.height * 3);
        for (std::size_t i = 0; i < img.width * img.height; ++i) {
            for (std::size_t c = 0; c < 3; ++c) {
                const std::size_t s = i * channels + (colour ? c : 0);
                std::size_t v = sample_bytes == 1
                                    ? bytes_[pos_ + s]
                                    : (std::size_t{bytes_[pos_ + 2 * s]} << 8) | bytes_[pos_ + 2 * s + 1];
                img.pixels[i * 3 + c] = static_cast<std::uint8_t>((std::min(v, maxval) * 255 + maxval / 2) / maxval);
            }
        }
        return img;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') {
                    ++pos_;
                }
            } else {
                break;
            }
        }
    }

    const std::vector<std::uint8_t>& bytes_;
    const std::string& origin_;
    std::size_t pos_ = 0;
};

// --- JPEG -------------------------------------------------------------------

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

// Warnings are silent, except premature EOF: libjpeg would pad the missing
// rows with grey instead of failing.
void jpeg_emit_message(j_common_ptr cinfo, int level) {
    if (level < 0 && cinfo->err->msg_code == JWRN_JPEG_EOF) {
        (*cinfo->err->error_exit)(cinfo);
    }
}

struct JpegOutput {
    RgbImage image;
    std::vector<std::uint8_t> row;
    std::string error;
};

// Only trivially destructible locals live in this frame, so longjmp out of
// libjpeg is safe; all owning buffers sit in `out`.
bool run_jpeg(const std::vector<std::uint8_t>& bytes, JpegOutput& out) {
    jpeg_decompress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    err.base.emit_message = jpeg_emit_message;
    if (setjmp(err.jump) != 0) {
        jpeg_destroy_decompress(&cinfo);
        out.error = err.message;
        return false;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    const bool gray = cinfo.jpeg_color_space == JCS_GRAYSCALE;
    if (!gray && cinfo.num_components != 3) {
        jpeg_destroy_decompress(&cinfo);
        out.error = "unsupported colour space";
        return false;
    }
    cinfo.out_color_space = gray ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);
    RgbImage& img = out.image;
    img.width = cinfo.output_width;
    img.height = cinfo.output_height;
    img.pixels.resize(img.width * img.height * 3);
    out.row.resize(img.width * static_cast<std::size_t>(cinfo.output_components));
    while (cinfo.output_scanline < cinfo.output_height) {
        const std::size_t y = cinfo.output_scanline;
        JSAMPROW rows[1] = {out.row.data()};
        jpeg_read_scanlines(&cinfo, rows, 1);
        for (std::size_t x = 0; x < img.width; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                img.pixels[(y * img.width + x) * 3 + c] = gray ? out.row[x] : out.row[x * 3 + c];
            }
        }
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return true;
}

RgbImage decode_jpeg(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
    JpegOutput out;
    if (!run_jpeg(bytes, out)) {
        throw DecodeError(origin, "JPEG: " + out.error);
    }
    return std::move(out.image);
}

// --- PNG --------------------------------------------------------------------

RgbImage decode_png(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
        throw DecodeError(origin, std::string("PNG: ") + image.message);
    }
    image.format = PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
    if (png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr) == 0) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DecodeError(origin, "PNG: " + msg);
    }
    RgbImage img;
    img.width = image.width;
    img.height = image.height;
    img.pixels.resize(img.width * img.height * 3);
    for (std::size_t i = 0; i < img.width * img.height; ++i) {
        std::copy_n(rgba.begin() + static_cast<std::ptrdiff_t>(i * 4), 3,
                    img.pixels.begin() + static_cast<std::ptrdiff_t>(i * 3));
    }
    return img;
}

}  // namespace

RgbImage decode_image_bytes(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
        return decode_jpeg(bytes, origin);
    }
    static constexpr std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (bytes.size() >= 8 && std::equal(png_sig, png_sig + 8, bytes.begin())) {
        return decode_png(bytes, origin);
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '6' || bytes[1] == '5')) {
        return PnmReader(bytes, origin).read();
    }
    throw DecodeError(origin, "unrecognized image format");
}

RgbImage decode_image(const std::filesystem::path& path) {
    return decode_image_bytes(read_file(path), path.string());
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
    if (image.pixels.size() != image.width * image.height * 3) {
        throw ParameterError("write_ppm: pixel buffer does not match dimensions");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
    if (!out) {
        throw Error("failed writing " + path.string());
    }
}

Tensor resize_bilinear(const RgbImage& image, std::size_t height, std::size_t width) {
    if (image.width == 0 || image.height == 0) {
        throw ParameterError("cannot resize an empty image");
    }
    Tensor out(Shape{height, width, 3});
    const double sy = static_cast<double>(image.height) / static_cast<double>(height);
    const double sx = static_cast<double>(image.width) / static_cast<double>(width);
    const double ymax = static_cast<double>(image.height - 1);
    const double xmax = static_cast<double>(image.width - 1);
    for (std::size_t y = 0; y < height; ++y) {
        const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, ymax);
        const auto y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, image.height - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < width; ++x) {
            const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, xmax);
            const auto x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, image.width - 1);
            const double wx = fx - static_cast<double>(x0);
            for (std::size_t c = 0; c < 3; ++c) {
                const double top = (1.0 - wx) * image.at(y0, x0, c) + wx * image.at(y0, x1, c);
                const double bottom = (1.0 - wx) * image.at(y1, x0, c) + wx * image.at(y1, x1, c);
                out.at(y, x, c) = static_cast<float>((1.0 - wy) * top + wy * bottom);
            }
        }
    }
    return out;
}

Shape InputFormat::shape() const {
    if (timesteps == 0) {
        return Shape{height, width, 3};
    }
    return Shape{timesteps, features};
}

InputFormat cnn_input_format(std::size_t size) { return {size, size, 0, 0}; }

InputFormat lstm_input_format(std::size_t image_size, std::size_t timesteps) {
    const std::size_t values = image_size * image_size * 3;
    if (timesteps == 0 || values % timesteps != 0) {
        throw ParameterError(std::to_string(image_size) + "x" + std::to_string(image_size) +
                             "x3 pixels cannot be split into " + std::to_string(timesteps) + " equal timesteps");
    }
    return {image_size, image_size, timesteps, values / timesteps};
}

InputFormat input_format(const ModelSpec& spec) {
    if (const auto* cnn = std::get_if<CnnConfig>(&spec.config)) {
        if (cnn->channels != 3) {
            throw ParameterError("image input requires 3 channels, model expects " + std::to_string(cnn->channels));
        }
        return {cnn->height, cnn->width, 0, 0};
    }
    const auto& lstm = std::get<LstmConfig>(spec.config);
    InputFormat f = lstm_input_format(lstm.image_size, lstm.timesteps);
    if (f.features != lstm.features) {
        throw ParameterError("a " + std::to_string(lstm.image_size) + "x" + std::to_string(lstm.image_size) +
                             "x3 image gives " + std::to_string(f.features) + " features per step, model expects " +
                             std::to_string(lstm.features));
    }
    return f;
}

Tensor preprocess(const RgbImage& image, const InputFormat& format) {
    Tensor t = resize_bilinear(image, format.height, format.width);
    for (float& v : t.data()) {
        v /= 255.0f;
    }
    if (format.timesteps != 0) {
        return reshape(t, Shape{format.timesteps, format.features});
    }
    return t;
}

Tensor load_image(const std::filesystem::path& path, const InputFormat& format) {
    return preprocess(decode_image(path), format);
}

}  // namespace leafnet
