#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ulvm/segnet.hpp"

namespace ulvm::io {

// Weight file layout (all integers and floats little-endian):
//   "UVMW" | u16 version | u32 entry count |
//   entries sorted by name, each:
//     u16 name length | UTF-8 name | u8 rank | rank x u32 extents | float32 payload
inline constexpr std::uint16_t kWeightFileVersion = 1;

using NamedTensors = std::map<std::string, Tensor>;
using WeightEntry = std::pair<std::string, Tensor>;

// Serializes entries in the given order without validation.
std::vector<std::uint8_t> encode_entries(std::span<const WeightEntry> entries);
std::vector<std::uint8_t> encode_weight_file(const NamedTensors& tensors);

/// Throws ParseError (with byte offset) on bad magic, unsupported version,
/// truncation, trailing bytes, duplicate names or non-lexicographic order.
NamedTensors decode_weight_file(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

NamedTensors to_named(const NetWeights& w, const NetConfig& cfg);
// Throws ConfigError on missing, unexpected or mis-shaped tensors.
NetWeights from_named(const NamedTensors& tensors, const NetConfig& cfg);

void save_weights(const std::filesystem::path& path, const NetWeights& w, const NetConfig& cfg);
NetWeights load_weights(const std::filesystem::path& path, const NetConfig& cfg);

}  // namespace ulvm::io
