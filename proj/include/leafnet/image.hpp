#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "leafnet/model.hpp"
#include "leafnet/tensor.hpp"

namespace leafnet {

/// Interleaved 8-bit RGB pixels, row-major.
struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // width * height * 3

    std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }
};

/// Decodes baseline JPEG, PNG or binary PPM/PGM (P6/P5), chosen by file
/// signature. Grayscale is replicated to three channels and alpha dropped.
/// Throws DecodeError carrying the path.
RgbImage decode_image(const std::filesystem::path& path);
RgbImage decode_image_bytes(const std::vector<std::uint8_t>& bytes, const std::string& origin);

/// Binary P6 writer (used for fixtures and tests).
void write_ppm(const std::filesystem::path& path, const RgbImage& image);

/// Bilinear resample with half-pixel centres; the identity when sizes match.
/// Returns [height, width, 3] floats in the source's 0..255 scale.
Tensor resize_bilinear(const RgbImage& image, std::size_t height, std::size_t width);

/// How a model wants its pixels: an [H, W, 3] image, or that image
/// reshaped row-major to [timesteps, features].
struct InputFormat {
    std::size_t height = 128;
    std::size_t width = 128;
    std::size_t timesteps = 0;  // 0 = image input
    std::size_t features = 0;

    Shape shape() const;
};

InputFormat cnn_input_format(std::size_t size = 128);
InputFormat lstm_input_format(std::size_t image_size = 80, std::size_t timesteps = 15);
/// Derived from a model spec; throws ParameterError when an LSTM sequence
/// shape cannot be filled exactly by its square RGB image.
InputFormat input_format(const ModelSpec& spec);

/// resize -> scale by 1/255 -> (sequence) reshape.
Tensor preprocess(const RgbImage& image, const InputFormat& format);
Tensor load_image(const std::filesystem::path& path, const InputFormat& format);

}  // namespace leafnet
