#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "ulvm/errors.hpp"

namespace ulvm {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Dense row-major float32 array of rank 1..4.
///
/// Every extent is at least 1 and the flat buffer always holds exactly
/// product(shape) elements. A default-constructed tensor is the scalar-like
/// shape {1} holding 0.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0f); }
  static Tensor full(Shape shape, float value) { return Tensor(std::move(shape), value); }
  static Tensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  const std::vector<float>& vec() const noexcept { return data_; }

  float& operator[](std::size_t flat) noexcept { return data_[flat]; }
  float operator[](std::size_t flat) const noexcept { return data_[flat]; }

  // Bounds-checked multi-index access; index count must equal rank.
  float& at(std::initializer_list<std::size_t> index);
  float at(std::initializer_list<std::size_t> index) const;

  Tensor reshaped(Shape shape) const;

  // Copy of the sub-tensor at position i along axis 0 (rank drops by one;
  // rank-1 input yields shape {1}).
  Tensor slice0(std::size_t i) const;

  // Value equality (shape and every element compares ==).
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  std::size_t flat_index(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<float> data_;
};

// Byte-level equality of shape and payload (distinguishes -0.0 and NaN payloads).
bool bitwise_equal(const Tensor& a, const Tensor& b);

// Throws DimensionError naming both shapes when they differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

namespace ops {

// --- elementwise -----------------------------------------------------------
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, float s);
// a + s*b
Tensor axpy(const Tensor& a, float s, const Tensor& b);

Tensor silu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor relu(const Tensor& x);

float silu(float x);
float sigmoid(float x);
float softplus(float x);

// --- linear algebra --------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);  // rank 2

// --- layout ----------------------------------------------------------------
Tensor chw_to_hwc(const Tensor& x);
Tensor hwc_to_chw(const Tensor& x);
// Contiguous split of the trailing axis into `parts` equal groups, in order.
std::vector<Tensor> split_last(const Tensor& x, std::size_t parts);
Tensor concat_last(std::span<const Tensor> parts);
// Columns [begin, begin + count) of the trailing axis.
Tensor slice_last(const Tensor& x, std::size_t begin, std::size_t count);
// Stack equally shaped tensors along a new leading axis.
Tensor stack(std::span<const Tensor> parts);

// --- convolution -----------------------------------------------------------

// Per-channel 1-D convolution of x[C x L] with kernel[C x k], left-padded by
// `pad_left` zeros. Output length is L + pad_left - k + 1; pad_left = k - 1
// gives the causal, length-preserving form.
Tensor conv1d_depthwise(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                        std::size_t pad_left);

// Dense 1-D convolution: x[Cin x L], kernel[Cout x Cin x k], bias[Cout].
Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              std::size_t pad_left);

// 2-D cross-correlation (no kernel flip), stride 1:
// x[Cin x H x W], kernel[Cout x Cin x kh x kw], bias[Cout].
Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias, int pad,
              int dilation = 1);

// Depthwise 2-D cross-correlation: x[C x H x W], kernel[C x kh x kw], bias[C].
Tensor conv2d_depthwise(const Tensor& x, const Tensor& kernel, const Tensor& bias, int pad);

// --- pooling / resampling --------------------------------------------------
Tensor maxpool2(const Tensor& x);          // [C x H x W] -> [C x H/2 x W/2]
Tensor avgpool_global(const Tensor& x);    // [C x H x W] -> [C]
Tensor upsample2_nearest(const Tensor& x); // [C x H x W] -> [C x 2H x 2W]

// --- normalization ---------------------------------------------------------
// Normalizes over the trailing axis with biased variance.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-5f);

}  // namespace ops
}  // namespace ulvm
