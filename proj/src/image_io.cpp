#include "ulvm/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "ulvm/weights_io.hpp"

namespace ulvm::io {

namespace {

class HeaderParser {
 public:
  explicit HeaderParser(std::span<const std::uint8_t> b) : b_(b) {}

  std::size_t pos() const noexcept { return pos_; }

  std::size_t number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_] - '0');
      if (v > 1'000'000) throw ParseError(std::string("netpbm ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("netpbm header: expected ") + what, start);
    return v;
  }

  void single_whitespace() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) {
      throw ParseError("netpbm header: expected whitespace before pixel data", pos_);
    }
    ++pos_;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 2;
};

}  // namespace

PnmImage decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw ParseError("not a binary PGM (P5) or PPM (P6) file", 0);
  }
  PnmImage img;
  img.channels = bytes[1] == '5' ? 1 : 3;
  HeaderParser p(bytes);
  img.width = p.number("width");
  img.height = p.number("height");
  const std::size_t maxval_at = p.pos();
  const std::size_t maxval = p.number("maxval");
  if (img.width == 0 || img.height == 0) throw ParseError("netpbm image has zero extent", maxval_at);
  if (maxval != 255) throw ParseError("netpbm maxval must be 255", maxval_at);
  p.single_whitespace();
  const std::size_t n = img.width * img.height * img.channels;
  if (bytes.size() - p.pos() < n) throw ParseError("truncated netpbm pixel data", bytes.size());
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(p.pos()),
                    bytes.begin() + static_cast<std::ptrdiff_t>(p.pos() + n));
  return img;
}

std::vector<std::uint8_t> encode_pnm(const PnmImage& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw DimensionError("netpbm images have 1 or 3 channels");
  }
  const std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(img.width) + " " + std::to_string(img.height) +
                             "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

PnmImage read_pnm(const std::filesystem::path& path) { return decode_pnm(read_file_bytes(path)); }

void write_pnm(const std::filesystem::path& path, const PnmImage& img) {
  write_file_bytes(path, encode_pnm(img));
}

Tensor to_tensor(const PnmImage& img) {
  const std::size_t hw = img.width * img.height, c = img.channels;
  Tensor t({c, img.height, img.width});
  for (std::size_t p = 0; p < hw; ++p)
    for (std::size_t ch = 0; ch < c; ++ch)
      t[ch * hw + p] = static_cast<float>(img.pixels[p * c + ch]) / 255.0f;
  return t;
}

PnmImage from_tensor(const Tensor& t) {
  if (t.rank() != 3 || (t.dim(0) != 1 && t.dim(0) != 3)) {
    throw DimensionError("image tensor must be [1|3 x H x W], got " + shape_to_string(t.shape()));
  }
  PnmImage img;
  img.channels = t.dim(0);
  img.height = t.dim(1);
  img.width = t.dim(2);
  const std::size_t hw = img.width * img.height;
  img.pixels.resize(hw * img.channels);
  for (std::size_t p = 0; p < hw; ++p)
    for (std::size_t ch = 0; ch < img.channels; ++ch) {
      const float v = std::clamp(t[ch * hw + p], 0.0f, 1.0f);
      img.pixels[p * img.channels + ch] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  return img;
}

namespace {
PnmImage read_expecting(const std::filesystem::path& path, std::size_t channels) {
  PnmImage img = read_pnm(path);
  if (img.channels != channels) {
    throw ParseError(path.string() + ": expected " + (channels == 1 ? "P5" : "P6") + " image", 0);
  }
  return img;
}
}  // namespace

Tensor load_image_pgm(const std::filesystem::path& path) {
  return to_tensor(read_expecting(path, 1));
}

Tensor load_image_ppm(const std::filesystem::path& path) {
  return to_tensor(read_expecting(path, 3));
}

Tensor load_mask_pgm(const std::filesystem::path& path) {
  const PnmImage img = read_expecting(path, 1);
  Tensor t({1, img.height, img.width});
  for (std::size_t i = 0; i < img.pixels.size(); ++i) t[i] = img.pixels[i] >= 128 ? 1.0f : 0.0f;
  return t;
}

void write_pgm(const std::filesystem::path& path, const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 1) {
    throw DimensionError("write_pgm: expected [1 x H x W], got " + shape_to_string(t.shape()));
  }
  write_pnm(path, from_tensor(t));
}

void write_ppm(const std::filesystem::path& path, const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 3) {
    throw DimensionError("write_ppm: expected [3 x H x W], got " + shape_to_string(t.shape()));
  }
  write_pnm(path, from_tensor(t));
}

}  // namespace ulvm::io
