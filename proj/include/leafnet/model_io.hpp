#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "leafnet/model.hpp"

namespace leafnet {

/// Model file layout (all integers little-endian):
///   "LEAF" | u32 version | u64 manifest length | UTF-8 JSON manifest |
///   f32 parameter values, tensor by tensor in manifest order.
/// The manifest records the architecture config, label map, LSTM gate order
/// and every tensor's layer, name and shape.
inline constexpr char model_magic[4] = {'L', 'E', 'A', 'F'};
inline constexpr std::uint32_t model_format_version = 1;

std::string model_manifest(const SequentialModel& model);
std::vector<std::uint8_t> serialize_model(const SequentialModel& model);

/// Throws FormatError (with byte offset) on bad magic, version, truncation,
/// trailing bytes or a manifest that does not describe the blob. Nothing is
/// returned unless the whole file validates.
SequentialModel deserialize_model(const std::vector<std::uint8_t>& bytes);

/// Writes via a temporary file and rename, so a failed save leaves no partial file.
void save_model(const SequentialModel& model, const std::filesystem::path& path);
SequentialModel load_model(const std::filesystem::path& path);

/// Writes `contents` to `path` through `<path>.tmp` + rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace leafnet
