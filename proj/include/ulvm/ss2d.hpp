#pragma once

#include <array>
#include <concepts>
#include <cstddef>
#include <string>
#include <type_traits>

#include "ulvm/params.hpp"
#include "ulvm/tensor.hpp"

namespace ulvm {

/// Hyperparameters of an SS2D (2-D selective scan) / VSS block.
struct SS2DConfig {
  std::size_t d_model = 16;
  std::size_t expand = 2;
  std::size_t d_state = 16;
  std::size_t d_conv = 3;
  std::size_t dt_rank = 0;     // 0 selects max(1, d_model / 16)
  std::size_t directions = 4;  // K
  ConvLayout conv = ConvLayout::kDense;

  std::size_t d_inner() const noexcept { return expand * d_model; }
  std::size_t resolved_dt_rank() const noexcept {
    if (dt_rank != 0) return dt_rank;
    return d_model / 16 > 0 ? d_model / 16 : 1;
  }
  void validate() const;
};

struct VSSWeights {
  Tensor in_proj;        // [d_model x 2*d_inner]
  Tensor conv_weight;    // dense [d_inner x d_inner x k x k], depthwise [d_inner x k x k]
  Tensor conv_bias;      // [d_inner]
  Tensor x_proj;         // [K x d_inner x (dt_rank + 2*d_state)]
  Tensor dt_proj;        // [K x dt_rank x d_inner]
  Tensor dt_proj_bias;   // [K x d_inner]
  Tensor A_log;          // [K*d_inner x d_state]
  Tensor Ds;             // [K*d_inner]
  Tensor out_norm_gamma; // [d_inner]
  Tensor out_norm_beta;  // [d_inner]
  Tensor out_proj;       // [d_inner x d_model]

  friend bool operator==(const VSSWeights&, const VSSWeights&) = default;
};

VSSWeights make_vss_weights(const SS2DConfig& cfg);
std::size_t element_count(const VSSWeights& w);

template <class W, class F>
  requires std::same_as<std::remove_const_t<W>, VSSWeights>
void for_each_param(W& w, const SS2DConfig& cfg, const std::string& prefix, F&& f) {
  const std::size_t di = cfg.d_inner();
  const std::size_t taps = cfg.d_conv * cfg.d_conv;
  const std::size_t conv_fan_in = cfg.conv == ConvLayout::kDense ? di * taps : taps;
  f(join_name(prefix, "in_proj"), w.in_proj, ParamKind::kWeight, cfg.d_model);
  f(join_name(prefix, "conv_weight"), w.conv_weight, ParamKind::kWeight, conv_fan_in);
  f(join_name(prefix, "conv_bias"), w.conv_bias, ParamKind::kBias, conv_fan_in);
  f(join_name(prefix, "x_proj"), w.x_proj, ParamKind::kWeight, di);
  f(join_name(prefix, "dt_proj"), w.dt_proj, ParamKind::kWeight, cfg.resolved_dt_rank());
  f(join_name(prefix, "dt_proj_bias"), w.dt_proj_bias, ParamKind::kDtBias,
    cfg.resolved_dt_rank());
  f(join_name(prefix, "A_log"), w.A_log, ParamKind::kALog, cfg.d_state);
  f(join_name(prefix, "Ds"), w.Ds, ParamKind::kSkip, 1);
  f(join_name(prefix, "out_norm_gamma"), w.out_norm_gamma, ParamKind::kNormGamma, di);
  f(join_name(prefix, "out_norm_beta"), w.out_norm_beta, ParamKind::kNormBeta, di);
  f(join_name(prefix, "out_proj"), w.out_proj, ParamKind::kWeight, di);
}

// Four scan orders over an H x W grid:
//   0 row-major (top-left -> bottom-right)
//   1 reverse of 0 (bottom-right -> top-left)
//   2 column-major, i.e. the transposed raster
//   3 reverse of 2
// Returns the row-major grid index visited at sequence position `pos`.
std::size_t direction_index(std::size_t direction, std::size_t pos, std::size_t height,
                            std::size_t width);

/// x[C x H x W] -> [4 x C x (H*W)], one sequence per direction.
Tensor scan_expand(const Tensor& x);

/// seqs[4 x C x (H*W)] -> [C x H x W]: each direction re-indexed to grid
/// order, then summed.
Tensor scan_merge(const Tensor& seqs, std::size_t height, std::size_t width);

/// VSS block on x[H x W x d_model] -> [H x W x d_model].
Tensor vss_forward(const SS2DConfig& cfg, const VSSWeights& w, const Tensor& x);

/// vss_forward(x) + theta * x.
Tensor vm_forward(const SS2DConfig& cfg, const VSSWeights& w, float theta, const Tensor& x);

}  // namespace ulvm
