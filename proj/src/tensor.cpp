#include "ulvm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace ulvm {

namespace {

void validate_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 4) {
    throw DimensionError("tensor rank must be 1..4, got " + std::to_string(shape.size()));
  }
  for (auto e : shape) {
    if (e == 0) throw DimensionError("zero extent in shape " + shape_to_string(shape));
  }
}

[[noreturn]] void fail_rank(const char* op, std::size_t want, const Tensor& t) {
  throw DimensionError(std::string(op) + ": expected rank " + std::to_string(want) + ", got " +
                       shape_to_string(t.shape()));
}

void require_rank(const char* op, std::size_t want, const Tensor& t) {
  if (t.rank() != want) fail_rank(op, want, t);
}

Tensor map(const Tensor& x, const std::function<float(float)>& f) {
  Tensor out(x.shape());
  auto src = x.data();
  auto dst = out.data();
  std::transform(src.begin(), src.end(), dst.begin(), f);
  return out;
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor() : shape_{1}, data_(1, 0.0f) {}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  if (data_.size() != shape_numel(shape_)) {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_to_string(shape_));
  }
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0f;
  return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         shape_to_string(shape_));
  }
  return shape_[axis];
}

std::size_t Tensor::flat_index(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw DimensionError("index rank " + std::to_string(index.size()) + " for tensor " +
                         shape_to_string(shape_));
  }
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= shape_[axis]) {
      throw DimensionError("index " + std::to_string(i) + " out of range on axis " +
                           std::to_string(axis) + " of " + shape_to_string(shape_));
    }
    flat = flat * shape_[axis] + i;
    ++axis;
  }
  return flat;
}

float& Tensor::at(std::initializer_list<std::size_t> index) { return data_[flat_index(index)]; }
float Tensor::at(std::initializer_list<std::size_t> index) const {
  return data_[flat_index(index)];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + shape_to_string(shape_) + " to " +
                         shape_to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

Tensor Tensor::slice0(std::size_t i) const {
  if (i >= shape_[0]) {
    throw DimensionError("slice " + std::to_string(i) + " out of range for " +
                         shape_to_string(shape_));
  }
  Shape sub(shape_.begin() + 1, shape_.end());
  if (sub.empty()) sub = {1};
  const std::size_t n = shape_numel(sub);
  std::vector<float> out(data_.begin() + static_cast<std::ptrdiff_t>(i * n),
                         data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
  return Tensor(std::move(sub), std::move(out));
}

bool operator==(const Tensor& a, const Tensor& b) {
  return a.shape_ == b.shape_ && a.data_ == b.data_;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
}

namespace ops {

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Tensor scale(const Tensor& x, float s) {
  return map(x, [s](float v) { return v * s; });
}

Tensor axpy(const Tensor& a, float s, const Tensor& b) {
  require_same_shape(a, b, "axpy");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + s * b[i];
  return out;
}

float sigmoid(float x) {
  if (x >= 0.0f) return 1.0f / (1.0f + std::exp(-x));
  const float e = std::exp(x);
  return e / (1.0f + e);
}

float silu(float x) { return x * sigmoid(x); }

float softplus(float x) {
  if (x > 20.0f) return x;
  return std::log1p(std::exp(x));
}

Tensor silu(const Tensor& x) { return map(x, [](float v) { return silu(v); }); }
Tensor sigmoid(const Tensor& x) { return map(x, [](float v) { return sigmoid(v); }); }
Tensor softplus(const Tensor& x) { return map(x, [](float v) { return softplus(v); }); }
Tensor relu(const Tensor& x) { return map(x, [](float v) { return v > 0.0f ? v : 0.0f; }); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  const float* pa = a.data().data();
  const float* pb = b.data().data();
  float* pc = out.data().data();
  // i-k-j order keeps the per-element accumulation sequential in k.
  for (std::size_t i = 0; i < m; ++i) {
    float* row = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = pa[i * k + p];
      const float* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return out;
}

Tensor transpose(const Tensor& x) {
  require_rank("transpose", 2, x);
  const std::size_t r = x.dim(0), c = x.dim(1);
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
  return out;
}

Tensor chw_to_hwc(const Tensor& x) {
  require_rank("chw_to_hwc", 3, x);
  const std::size_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  Tensor out({x.dim(1), x.dim(2), c});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t p = 0; p < hw; ++p) out[p * c + ch] = x[ch * hw + p];
  return out;
}

Tensor hwc_to_chw(const Tensor& x) {
  require_rank("hwc_to_chw", 3, x);
  const std::size_t c = x.dim(2), hw = x.dim(0) * x.dim(1);
  Tensor out({c, x.dim(0), x.dim(1)});
  for (std::size_t p = 0; p < hw; ++p)
    for (std::size_t ch = 0; ch < c; ++ch) out[ch * hw + p] = x[p * c + ch];
  return out;
}

std::vector<Tensor> split_last(const Tensor& x, std::size_t parts) {
  const std::size_t c = x.shape().back();
  if (parts == 0 || c % parts != 0) {
    throw ConfigError("split_last: " + std::to_string(c) + " channels not divisible by " +
                      std::to_string(parts));
  }
  const std::size_t g = c / parts;
  const std::size_t rows = x.size() / c;
  std::vector<Tensor> out;
  out.reserve(parts);
  for (std::size_t p = 0; p < parts; ++p) {
    Shape s = x.shape();
    s.back() = g;
    Tensor t(s);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(r * c + p * g), g,
                  t.data().begin() + static_cast<std::ptrdiff_t>(r * g));
    out.push_back(std::move(t));
  }
  return out;
}

Tensor concat_last(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_last: no inputs");
  Shape lead(parts[0].shape().begin(), parts[0].shape().end() - 1);
  std::size_t total = 0;
  for (const auto& p : parts) {
    Shape pl(p.shape().begin(), p.shape().end() - 1);
    if (pl != lead) {
      throw DimensionError("concat_last: leading shape mismatch " +
                           shape_to_string(parts[0].shape()) + " vs " +
                           shape_to_string(p.shape()));
    }
    total += p.shape().back();
  }
  Shape s = parts[0].shape();
  s.back() = total;
  Tensor out(s);
  const std::size_t rows = out.size() / total;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t g = p.shape().back();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(p.data().begin() + static_cast<std::ptrdiff_t>(r * g), g,
                  out.data().begin() + static_cast<std::ptrdiff_t>(r * total + offset));
    offset += g;
  }
  return out;
}

Tensor slice_last(const Tensor& x, std::size_t begin, std::size_t count) {
  const std::size_t c = x.shape().back();
  if (count == 0 || begin + count > c) {
    throw DimensionError("slice_last: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " +
                         shape_to_string(x.shape()));
  }
  Shape s = x.shape();
  s.back() = count;
  Tensor out(s);
  const std::size_t rows = x.size() / c;
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(r * c + begin), count,
                out.data().begin() + static_cast<std::ptrdiff_t>(r * count));
  return out;
}

Tensor stack(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("stack: no inputs");
  Shape s = parts[0].shape();
  if (s.size() >= 4) throw DimensionError("stack: result would exceed rank 4");
  std::vector<float> data;
  data.reserve(parts.size() * parts[0].size());
  for (const auto& p : parts) {
    require_same_shape(parts[0], p, "stack");
    data.insert(data.end(), p.data().begin(), p.data().end());
  }
  s.insert(s.begin(), parts.size());
  return Tensor(std::move(s), std::move(data));
}

Tensor conv1d_depthwise(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                        std::size_t pad_left) {
  require_rank("conv1d_depthwise", 2, x);
  require_rank("conv1d_depthwise kernel", 2, kernel);
  const std::size_t c = x.dim(0), len = x.dim(1), k = kernel.dim(1);
  if (kernel.dim(0) != c || bias.size() != c) {
    throw DimensionError("conv1d_depthwise: channel mismatch between input " +
                         shape_to_string(x.shape()) + ", kernel " +
                         shape_to_string(kernel.shape()) + " and bias " +
                         shape_to_string(bias.shape()));
  }
  if (len + pad_left < k) throw DimensionError("conv1d_depthwise: kernel longer than input");
  const std::size_t out_len = len + pad_left - k + 1;
  Tensor out({c, out_len});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t t = 0; t < out_len; ++t) {
      float acc = bias[ch];
      for (std::size_t j = 0; j < k; ++j) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) -
                                   static_cast<std::ptrdiff_t>(pad_left);
        if (src >= 0 && src < static_cast<std::ptrdiff_t>(len))
          acc += kernel[ch * k + j] * x[ch * len + static_cast<std::size_t>(src)];
      }
      out[ch * out_len + t] = acc;
    }
  }
  return out;
}

Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              std::size_t pad_left) {
  require_rank("conv1d", 2, x);
  require_rank("conv1d kernel", 3, kernel);
  const std::size_t cin = x.dim(0), len = x.dim(1);
  const std::size_t cout = kernel.dim(0), k = kernel.dim(2);
  if (kernel.dim(1) != cin || bias.size() != cout) {
    throw DimensionError("conv1d: channel mismatch between input " +
                         shape_to_string(x.shape()) + ", kernel " +
                         shape_to_string(kernel.shape()) + " and bias " +
                         shape_to_string(bias.shape()));
  }
  if (len + pad_left < k) throw DimensionError("conv1d: kernel longer than input");
  const std::size_t out_len = len + pad_left - k + 1;
  Tensor out({cout, out_len});
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t t = 0; t < out_len; ++t) {
      float acc = bias[o];
      for (std::size_t i = 0; i < cin; ++i) {
        const float* w = kernel.data().data() + (o * cin + i) * k;
        for (std::size_t j = 0; j < k; ++j) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) -
                                     static_cast<std::ptrdiff_t>(pad_left);
          if (src >= 0 && src < static_cast<std::ptrdiff_t>(len))
            acc += w[j] * x[i * len + static_cast<std::size_t>(src)];
        }
      }
      out[o * out_len + t] = acc;
    }
  }
  return out;
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias, int pad,
              int dilation) {
  require_rank("conv2d", 3, x);
  require_rank("conv2d kernel", 4, kernel);
  if (pad < 0 || dilation < 1) {
    throw DimensionError("conv2d: invalid pad " + std::to_string(pad) + " / dilation " +
                         std::to_string(dilation));
  }
  const std::size_t cin = x.dim(0);
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(x.dim(1));
  const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(x.dim(2));
  const std::size_t cout = kernel.dim(0);
  const std::ptrdiff_t kh = static_cast<std::ptrdiff_t>(kernel.dim(2));
  const std::ptrdiff_t kw = static_cast<std::ptrdiff_t>(kernel.dim(3));
  if (kernel.dim(1) != cin || bias.size() != cout) {
    throw DimensionError("conv2d: channel mismatch between input " +
                         shape_to_string(x.shape()) + ", kernel " +
                         shape_to_string(kernel.shape()) + " and bias " +
                         shape_to_string(bias.shape()));
  }
  const std::ptrdiff_t oh = h + 2 * pad - dilation * (kh - 1);
  const std::ptrdiff_t ow = w + 2 * pad - dilation * (kw - 1);
  if (oh < 1 || ow < 1) throw DimensionError("conv2d: kernel larger than padded input");

  Tensor out({cout, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
  const float* px = x.data().data();
  const float* pk = kernel.data().data();
  float* po = out.data().data();
  for (std::size_t o = 0; o < cout; ++o) {
    float* plane = po + o * static_cast<std::size_t>(oh * ow);
    std::fill_n(plane, oh * ow, bias[o]);
    for (std::size_t i = 0; i < cin; ++i) {
      const float* src = px + i * static_cast<std::size_t>(h * w);
      const float* ker = pk + (o * cin + i) * static_cast<std::size_t>(kh * kw);
      for (std::ptrdiff_t a = 0; a < kh; ++a) {
        for (std::ptrdiff_t b = 0; b < kw; ++b) {
          const float wv = ker[a * kw + b];
          const std::ptrdiff_t dy = a * dilation - pad;
          const std::ptrdiff_t dx = b * dilation - pad;
          const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy);
          const std::ptrdiff_t y1 = std::min<std::ptrdiff_t>(oh, h - dy);
          const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
          const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(ow, w - dx);
          for (std::ptrdiff_t y = y0; y < y1; ++y) {
            const float* srow = src + (y + dy) * w + dx;
            float* orow = plane + y * ow;
            for (std::ptrdiff_t xx = x0; xx < x1; ++xx) orow[xx] += wv * srow[xx];
          }
        }
      }
    }
  }
  return out;
}

Tensor conv2d_depthwise(const Tensor& x, const Tensor& kernel, const Tensor& bias, int pad) {
  require_rank("conv2d_depthwise", 3, x);
  require_rank("conv2d_depthwise kernel", 3, kernel);
  const std::size_t c = x.dim(0);
  if (kernel.dim(0) != c || bias.size() != c) {
    throw DimensionError("conv2d_depthwise: channel mismatch between input " +
                         shape_to_string(x.shape()) + " and kernel " +
                         shape_to_string(kernel.shape()));
  }
  // A depthwise conv is a dense conv per channel; reuse the dense kernel on slices.
  std::vector<Tensor> planes;
  planes.reserve(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    Tensor xin = x.slice0(ch).reshaped({1, x.dim(1), x.dim(2)});
    Tensor k = kernel.slice0(ch).reshaped({1, 1, kernel.dim(1), kernel.dim(2)});
    Tensor b({1}, bias[ch]);
    planes.push_back(conv2d(xin, k, b, pad).slice0(0));
  }
  return stack(planes);
}

Tensor maxpool2(const Tensor& x) {
  require_rank("maxpool2", 3, x);
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw DimensionError("maxpool2: odd spatial extent " + shape_to_string(x.shape()));
  }
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out({c, oh, ow});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const std::size_t base = ch * h * w + 2 * y * w + 2 * xx;
        out[(ch * oh + y) * ow + xx] =
            std::max(std::max(x[base], x[base + 1]), std::max(x[base + w], x[base + w + 1]));
      }
  return out;
}

Tensor avgpool_global(const Tensor& x) {
  require_rank("avgpool_global", 3, x);
  const std::size_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  Tensor out({c});
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (std::size_t p = 0; p < hw; ++p) acc += x[ch * hw + p];
    out[ch] = static_cast<float>(acc / static_cast<double>(hw));
  }
  return out;
}

Tensor upsample2_nearest(const Tensor& x) {
  require_rank("upsample2_nearest", 3, x);
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor out({c, 2 * h, 2 * w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < 2 * h; ++y)
      for (std::size_t xx = 0; xx < 2 * w; ++xx)
        out[(ch * 2 * h + y) * 2 * w + xx] = x[(ch * h + y / 2) * w + xx / 2];
  return out;
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  const std::size_t c = x.shape().back();
  if (gamma.rank() != 1 || beta.rank() != 1 || gamma.size() != c || beta.size() != c) {
    throw DimensionError("layernorm: channel mismatch between input " +
                         shape_to_string(x.shape()) + " and affine " +
                         shape_to_string(gamma.shape()) + "/" + shape_to_string(beta.shape()));
  }
  Tensor out(x.shape());
  const std::size_t rows = x.size() / c;
  for (std::size_t r = 0; r < rows; ++r) {
    const float* src = x.data().data() + r * c;
    float* dst = out.data().data() + r * c;
    float mean = 0.0f;
    for (std::size_t i = 0; i < c; ++i) mean += src[i];
    mean /= static_cast<float>(c);
    float var = 0.0f;
    for (std::size_t i = 0; i < c; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= static_cast<float>(c);
    const float inv = 1.0f / std::sqrt(var + eps);
    for (std::size_t i = 0; i < c; ++i) dst[i] = (src[i] - mean) * inv * gamma[i] + beta[i];
  }
  return out;
}

}  // namespace ops
}  // namespace ulvm
