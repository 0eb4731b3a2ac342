#include "ulvm/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

namespace ulvm::io {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::size_t offset() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ == b_.size(); }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return b_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(b_[pos_] | (b_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) {
    if (b_.size() - pos_ < n) {
      throw ParseError(std::string("truncated weight file while reading ") + what, pos_);
    }
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_entries(std::span<const WeightEntry> entries) {
  Writer w;
  w.bytes("UVMW");
  w.u16(kWeightFileVersion);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, t] : entries) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name);
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (auto e : t.shape()) w.u32(static_cast<std::uint32_t>(e));
    for (float v : t.data()) w.f32(v);
  }
  return w.take();
}

std::vector<std::uint8_t> encode_weight_file(const NamedTensors& tensors) {
  std::vector<WeightEntry> entries(tensors.begin(), tensors.end());
  return encode_entries(entries);
}

NamedTensors decode_weight_file(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.str(4, "magic") != "UVMW") throw ParseError("bad weight file magic", 0);
  const std::size_t version_at = r.offset();
  if (const auto v = r.u16("version"); v != kWeightFileVersion) {
    throw ParseError("unsupported weight file version " + std::to_string(v), version_at);
  }
  const std::uint32_t count = r.u32("entry count");
  NamedTensors out;
  std::string prev;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t entry_at = r.offset();
    const std::uint16_t len = r.u16("name length");
    std::string name = r.str(len, "name");
    if (i > 0 && name == prev) throw ParseError("duplicate tensor name '" + name + "'", entry_at);
    if (i > 0 && name < prev) {
      throw ParseError("tensor '" + name + "' breaks lexicographic order", entry_at);
    }
    const std::size_t rank_at = r.offset();
    const std::uint8_t rank = r.u8("rank");
    if (rank < 1 || rank > 4) {
      throw ParseError("tensor '" + name + "' has invalid rank " + std::to_string(rank), rank_at);
    }
    Shape shape;
    for (std::uint8_t d = 0; d < rank; ++d) {
      const std::size_t at = r.offset();
      const std::uint32_t e = r.u32("extent");
      if (e == 0) throw ParseError("tensor '" + name + "' has a zero extent", at);
      shape.push_back(e);
    }
    const std::size_t n = shape_numel(shape);
    if ((bytes.size() - r.offset()) / 4 < n) {
      throw ParseError("truncated payload for tensor '" + name + "'", r.offset());
    }
    std::vector<float> data(n);
    for (auto& v : data) v = r.f32("payload");
    out.emplace(name, Tensor(std::move(shape), std::move(data)));
    prev = std::move(name);
  }
  if (!r.done()) throw ParseError("trailing bytes after last entry", r.offset());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

NamedTensors to_named(const NetWeights& w, const NetConfig& cfg) {
  NamedTensors out;
  for_each_param(w, cfg, [&](const std::string& name, const Tensor& t, ParamKind, std::size_t) {
    out.emplace(name, t);
  });
  return out;
}

NetWeights from_named(const NamedTensors& tensors, const NetConfig& cfg) {
  NetWeights w = make_net_weights(cfg);
  std::set<std::string> used;
  for_each_param(w, cfg, [&](const std::string& name, Tensor& t, ParamKind, std::size_t) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ConfigError("weight file lacks tensor '" + name + "'");
    if (it->second.shape() != t.shape()) {
      throw ConfigError("tensor '" + name + "' has shape " + shape_to_string(it->second.shape()) +
                        ", config expects " + shape_to_string(t.shape()));
    }
    t = it->second;
    used.insert(name);
  });
  for (const auto& [name, t] : tensors) {
    if (!used.contains(name)) throw ConfigError("weight file has unexpected tensor '" + name + "'");
  }
  return w;
}

void save_weights(const std::filesystem::path& path, const NetWeights& w, const NetConfig& cfg) {
  write_file_bytes(path, encode_weight_file(to_named(w, cfg)));
}

NetWeights load_weights(const std::filesystem::path& path, const NetConfig& cfg) {
  return from_named(decode_weight_file(read_file_bytes(path)), cfg);
}

}  // namespace ulvm::io
