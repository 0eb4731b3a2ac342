#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ulvm/tensor.hpp"

namespace ulvm::io {

/// 8-bit binary netpbm image: P5 (1 channel) or P6 (3 channels, interleaved).
struct PnmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;  // row-major, channels interleaved
};

// Only maxval 255 is accepted. Throws ParseError on malformed input.
PnmImage decode_pnm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pnm(const PnmImage& img);

PnmImage read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const PnmImage& img);

// Planar float conversions, values scaled by 1/255.
Tensor to_tensor(const PnmImage& img);  // [channels x H x W]
// Clamps to [0, 1] and rounds 255 * v. Accepts [C x H x W] with C in {1, 3}.
PnmImage from_tensor(const Tensor& t);

Tensor load_image_pgm(const std::filesystem::path& path);  // [1 x H x W] in [0, 1]
Tensor load_image_ppm(const std::filesystem::path& path);  // [3 x H x W] in [0, 1]
// Binary mask: byte >= 128 -> 1, else 0. Shape [1 x H x W].
Tensor load_mask_pgm(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const Tensor& t);
void write_ppm(const std::filesystem::path& path, const Tensor& t);

}  // namespace ulvm::io
