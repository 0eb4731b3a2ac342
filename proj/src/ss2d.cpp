#include "ulvm/ss2d.hpp"

#include <vector>

#include "ulvm/mamba.hpp"

namespace ulvm {

void SS2DConfig::validate() const {
  if (d_model == 0 || expand == 0 || d_state == 0 || d_conv == 0) {
    throw ConfigError("ss2d config: d_model, expand, d_state and d_conv must be >= 1");
  }
  if (d_conv % 2 == 0) throw ConfigError("ss2d config: d_conv must be odd to keep H x W");
  if (directions != 4) throw ConfigError("ss2d config: only K = 4 scan directions supported");
}

VSSWeights make_vss_weights(const SS2DConfig& cfg) {
  cfg.validate();
  const std::size_t dm = cfg.d_model, di = cfg.d_inner(), n = cfg.d_state;
  const std::size_t r = cfg.resolved_dt_rank(), k = cfg.d_conv, K = cfg.directions;
  VSSWeights w;
  w.in_proj = Tensor({dm, 2 * di});
  w.conv_weight =
      cfg.conv == ConvLayout::kDense ? Tensor({di, di, k, k}) : Tensor({di, k, k});
  w.conv_bias = Tensor({di});
  w.x_proj = Tensor({K, di, r + 2 * n});
  w.dt_proj = Tensor({K, r, di});
  w.dt_proj_bias = Tensor({K, di});
  w.A_log = Tensor({K * di, n});
  w.Ds = Tensor({K * di});
  w.out_norm_gamma = Tensor({di}, 1.0f);
  w.out_norm_beta = Tensor({di});
  w.out_proj = Tensor({di, dm});
  return w;
}

std::size_t element_count(const VSSWeights& w) {
  std::size_t total = 0;
  for (const Tensor* t : {&w.in_proj, &w.conv_weight, &w.conv_bias, &w.x_proj, &w.dt_proj,
                          &w.dt_proj_bias, &w.A_log, &w.Ds, &w.out_norm_gamma,
                          &w.out_norm_beta, &w.out_proj}) {
    total += t->size();
  }
  return total;
}

std::size_t direction_index(std::size_t direction, std::size_t pos, std::size_t height,
                            std::size_t width) {
  const std::size_t n = height * width;
  if (pos >= n) throw DimensionError("direction_index: position out of range");
  switch (direction) {
    case 0:
      return pos;
    case 1:
      return n - 1 - pos;
    case 2:
      return (pos % height) * width + pos / height;
    case 3: {
      const std::size_t p = n - 1 - pos;
      return (p % height) * width + p / height;
    }
    default:
      throw DimensionError("direction_index: direction must be 0..3");
  }
}

Tensor scan_expand(const Tensor& x) {
  if (x.rank() != 3) {
    throw DimensionError("scan_expand: expected [C x H x W], got " + shape_to_string(x.shape()));
  }
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2), n = h * w;
  Tensor out({4, c, n});
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t pos = 0; pos < n; ++pos) {
      const std::size_t src = direction_index(k, pos, h, w);
      for (std::size_t ch = 0; ch < c; ++ch) out[(k * c + ch) * n + pos] = x[ch * n + src];
    }
  return out;
}

Tensor scan_merge(const Tensor& seqs, std::size_t height, std::size_t width) {
  if (seqs.rank() != 3 || seqs.dim(0) != 4 || seqs.dim(2) != height * width) {
    throw DimensionError("scan_merge: expected [4 x C x " + std::to_string(height * width) +
                         "], got " + shape_to_string(seqs.shape()));
  }
  const std::size_t c = seqs.dim(1), n = height * width;
  Tensor out({c, height, width});
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t pos = 0; pos < n; ++pos) {
      const std::size_t dst = direction_index(k, pos, height, width);
      for (std::size_t ch = 0; ch < c; ++ch) out[ch * n + dst] += seqs[(k * c + ch) * n + pos];
    }
  return out;
}

Tensor vss_forward(const SS2DConfig& cfg, const VSSWeights& w, const Tensor& x) {
  cfg.validate();
  if (x.rank() != 3 || x.dim(2) != cfg.d_model) {
    throw DimensionError("vss_forward: expected [H x W x " + std::to_string(cfg.d_model) +
                         "], got " + shape_to_string(x.shape()));
  }
  const std::size_t h = x.dim(0), wd = x.dim(1), n = h * wd, di = cfg.d_inner();
  const std::size_t r = cfg.resolved_dt_rank(), ns = cfg.d_state;

  const Tensor xz = ops::matmul(x.reshaped({n, cfg.d_model}), w.in_proj);  // [HW x 2di]
  const Tensor z = ops::slice_last(xz, di, di);
  const Tensor u = ops::transpose(ops::slice_last(xz, 0, di)).reshaped({di, h, wd});

  const int pad = static_cast<int>(cfg.d_conv / 2);
  const Tensor conv = cfg.conv == ConvLayout::kDense
                          ? ops::conv2d(u, w.conv_weight, w.conv_bias, pad)
                          : ops::conv2d_depthwise(u, w.conv_weight, w.conv_bias, pad);
  const Tensor seqs = scan_expand(ops::silu(conv));  // [4 x di x HW]

  std::vector<Tensor> outs;
  outs.reserve(4);
  for (std::size_t k = 0; k < 4; ++k) {
    const Tensor A_log = w.A_log.reshaped({4, di, ns}).slice0(k);
    const Tensor Ds = w.Ds.reshaped({4, di}).slice0(k);
    outs.push_back(s6_sequence(seqs.slice0(k), w.x_proj.slice0(k), w.dt_proj.slice0(k),
                               w.dt_proj_bias.slice0(k), A_log, Ds, r, ns));
  }
  const Tensor merged = scan_merge(ops::stack(outs), h, wd);  // [di x H x W]

  const Tensor y = ops::layernorm(ops::transpose(merged.reshaped({di, n})), w.out_norm_gamma,
                                  w.out_norm_beta);  // [HW x di]
  const Tensor out = ops::matmul(ops::mul(y, ops::silu(z)), w.out_proj);
  return out.reshaped({h, wd, cfg.d_model});
}

Tensor vm_forward(const SS2DConfig& cfg, const VSSWeights& w, float theta, const Tensor& x) {
  return ops::axpy(vss_forward(cfg, w, x), theta, x);
}

}  // namespace ulvm
