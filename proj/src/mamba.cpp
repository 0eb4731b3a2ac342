#include "ulvm/mamba.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ulvm/selective_scan.hpp"

namespace ulvm {

const char* to_string(ConvLayout layout) {
  return layout == ConvLayout::kDense ? "dense" : "depthwise";
}

ConvLayout conv_layout_from_string(const std::string& s) {
  if (s == "dense") return ConvLayout::kDense;
  if (s == "depthwise") return ConvLayout::kDepthwise;
  throw ConfigError("unknown conv layout '" + s + "' (expected dense|depthwise)");
}

void MambaConfig::validate() const {
  if (d_model == 0 || expand == 0 || d_state == 0 || d_conv == 0) {
    throw ConfigError("mamba config: d_model, expand, d_state and d_conv must be >= 1");
  }
}

MambaWeights make_mamba_weights(const MambaConfig& cfg) {
  cfg.validate();
  const std::size_t dm = cfg.d_model, di = cfg.d_inner(), n = cfg.d_state;
  const std::size_t r = cfg.resolved_dt_rank(), k = cfg.d_conv;
  MambaWeights w;
  w.in_proj = Tensor({dm, 2 * di});
  w.conv_weight = cfg.conv == ConvLayout::kDense ? Tensor({di, di, k}) : Tensor({di, k});
  w.conv_bias = Tensor({di});
  w.x_proj = Tensor({di, r + 2 * n});
  w.dt_proj = Tensor({r, di});
  w.dt_proj_bias = Tensor({di});
  w.A_log = Tensor({di, n});
  w.D = Tensor({di});
  w.out_proj = Tensor({di, dm});
  return w;
}

std::size_t element_count(const MambaWeights& w) {
  std::size_t total = 0;
  for (const Tensor* t : {&w.in_proj, &w.conv_weight, &w.conv_bias, &w.x_proj, &w.dt_proj,
                          &w.dt_proj_bias, &w.A_log, &w.D, &w.out_proj}) {
    total += t->size();
  }
  return total;
}

Tensor s6_sequence(const Tensor& u, const Tensor& x_proj, const Tensor& dt_proj,
                   const Tensor& dt_bias, const Tensor& A_log, const Tensor& D,
                   std::size_t dt_rank, std::size_t d_state) {
  const std::size_t di = u.dim(0);
  if (x_proj.rank() != 2 || x_proj.dim(0) != di || x_proj.dim(1) != dt_rank + 2 * d_state) {
    throw DimensionError("s6: x_proj " + shape_to_string(x_proj.shape()) +
                         " does not match sequence " + shape_to_string(u.shape()));
  }
  const Tensor u_t = ops::transpose(u);                    // [L x di]
  const Tensor x_dbl = ops::matmul(u_t, x_proj);           // [L x (r + 2N)]
  const Tensor dt_raw = ops::slice_last(x_dbl, 0, dt_rank);
  const Tensor B = ops::transpose(ops::slice_last(x_dbl, dt_rank, d_state));
  const Tensor C = ops::transpose(ops::slice_last(x_dbl, dt_rank + d_state, d_state));

  Tensor dt_lin = ops::matmul(dt_raw, dt_proj);  // [L x di]
  if (dt_bias.size() != di) throw DimensionError("s6: dt_proj bias length mismatch");
  const std::size_t len = dt_lin.dim(0);
  for (std::size_t t = 0; t < len; ++t)
    for (std::size_t c = 0; c < di; ++c) dt_lin[t * di + c] += dt_bias[c];
  // softplus underflows to 0 below about -88; keep dt strictly positive.
  Tensor dt = ops::transpose(ops::softplus(dt_lin));  // [di x L]
  for (float& v : dt.data()) v = std::max(v, std::numeric_limits<float>::min());

  Tensor A(A_log.shape());
  for (std::size_t i = 0; i < A.size(); ++i) A[i] = -std::exp(A_log[i]);

  return scan::selective_scan({dt, A, B, C, D, u});
}

Tensor mamba_forward(const MambaConfig& cfg, const MambaWeights& w, const Tensor& x) {
  cfg.validate();
  if (x.rank() != 2 || x.dim(1) != cfg.d_model) {
    throw DimensionError("mamba_forward: expected [L x " + std::to_string(cfg.d_model) +
                         "], got " + shape_to_string(x.shape()));
  }
  const std::size_t di = cfg.d_inner();
  const Tensor xz = ops::matmul(x, w.in_proj);  // [L x 2di]
  const Tensor u = ops::transpose(ops::slice_last(xz, 0, di));
  const Tensor z = ops::slice_last(xz, di, di);

  const std::size_t pad = cfg.d_conv - 1;
  Tensor conv = cfg.conv == ConvLayout::kDense
                    ? ops::conv1d(u, w.conv_weight, w.conv_bias, pad)
                    : ops::conv1d_depthwise(u, w.conv_weight, w.conv_bias, pad);
  const Tensor u_act = ops::silu(conv);

  const Tensor y = s6_sequence(u_act, w.x_proj, w.dt_proj, w.dt_proj_bias, w.A_log, w.D,
                               cfg.resolved_dt_rank(), cfg.d_state);
  const Tensor gated = ops::mul(ops::transpose(y), ops::silu(z));
  return ops::matmul(gated, w.out_proj);
}

Tensor vm_forward(const MambaConfig& cfg, const MambaWeights& w, float theta, const Tensor& x) {
  return ops::axpy(mamba_forward(cfg, w, x), theta, x);
}

}  // namespace ulvm
