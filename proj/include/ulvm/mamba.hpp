#pragma once

#include <concepts>
#include <cstddef>
#include <string>
#include <type_traits>

#include "ulvm/params.hpp"
#include "ulvm/tensor.hpp"

namespace ulvm {

/// Hyperparameters of a Mamba block.
struct MambaConfig {
  std::size_t d_model = 16;
  std::size_t expand = 2;
  std::size_t d_state = 16;
  std::size_t d_conv = 4;
  std::size_t dt_rank = 0;  // 0 selects max(1, d_model / 16)
  ConvLayout conv = ConvLayout::kDense;

  std::size_t d_inner() const noexcept { return expand * d_model; }
  std::size_t resolved_dt_rank() const noexcept {
    if (dt_rank != 0) return dt_rank;
    return d_model / 16 > 0 ? d_model / 16 : 1;
  }
  void validate() const;  // throws ConfigError
};

/// Learnable tensors of a Mamba block. Linear maps are stored input-major
/// ([in x out]) so that y = x . W.
struct MambaWeights {
  Tensor in_proj;       // [d_model x 2*d_inner]
  Tensor conv_weight;   // dense [d_inner x d_inner x d_conv], depthwise [d_inner x d_conv]
  Tensor conv_bias;     // [d_inner]
  Tensor x_proj;        // [d_inner x (dt_rank + 2*d_state)]
  Tensor dt_proj;       // [dt_rank x d_inner]
  Tensor dt_proj_bias;  // [d_inner]
  Tensor A_log;         // [d_inner x d_state]
  Tensor D;             // [d_inner]
  Tensor out_proj;      // [d_inner x d_model]

  friend bool operator==(const MambaWeights&, const MambaWeights&) = default;
};

// Zero-filled bundle with the shapes implied by cfg.
MambaWeights make_mamba_weights(const MambaConfig& cfg);

template <class W, class F>
  requires std::same_as<std::remove_const_t<W>, MambaWeights>
void for_each_param(W& w, const MambaConfig& cfg, const std::string& prefix, F&& f) {
  const std::size_t di = cfg.d_inner();
  const std::size_t conv_fan_in =
      cfg.conv == ConvLayout::kDense ? di * cfg.d_conv : cfg.d_conv;
  f(join_name(prefix, "in_proj"), w.in_proj, ParamKind::kWeight, cfg.d_model);
  f(join_name(prefix, "conv_weight"), w.conv_weight, ParamKind::kWeight, conv_fan_in);
  f(join_name(prefix, "conv_bias"), w.conv_bias, ParamKind::kBias, conv_fan_in);
  f(join_name(prefix, "x_proj"), w.x_proj, ParamKind::kWeight, di);
  f(join_name(prefix, "dt_proj"), w.dt_proj, ParamKind::kWeight, cfg.resolved_dt_rank());
  f(join_name(prefix, "dt_proj_bias"), w.dt_proj_bias, ParamKind::kDtBias,
    cfg.resolved_dt_rank());
  f(join_name(prefix, "A_log"), w.A_log, ParamKind::kALog, cfg.d_state);
  f(join_name(prefix, "D"), w.D, ParamKind::kSkip, 1);
  f(join_name(prefix, "out_proj"), w.out_proj, ParamKind::kWeight, di);
}

// Total number of scalars in the bundle.
std::size_t element_count(const MambaWeights& w);

/// Input-dependent S6 over one sequence u[d_inner x L]:
/// x_proj gives (dt_raw, B, C), dt = softplus(dt_raw . dt_proj + dt_bias),
/// A = -exp(A_log), then discretize, scan and read out with skip gain D.
Tensor s6_sequence(const Tensor& u, const Tensor& x_proj, const Tensor& dt_proj,
                   const Tensor& dt_bias, const Tensor& A_log, const Tensor& D,
                   std::size_t dt_rank, std::size_t d_state);

/// Mamba block on x[L x d_model] -> [L x d_model].
Tensor mamba_forward(const MambaConfig& cfg, const MambaWeights& w, const Tensor& x);

/// Vision Mamba unit: mamba_forward(x) + theta * x.
Tensor vm_forward(const MambaConfig& cfg, const MambaWeights& w, float theta, const Tensor& x);

}  // namespace ulvm
