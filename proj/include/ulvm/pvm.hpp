#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "ulvm/mamba.hpp"
#include "ulvm/ss2d.hpp"

namespace ulvm {

enum class InnerKind { kMamba, kSS2D };

// Whether the p branches of a PVM layer own separate block weights or all
// reuse a single block.
enum class BranchSharing { kDistinct, kShared };

const char* to_string(InnerKind kind);
const char* to_string(BranchSharing sharing);
InnerKind inner_kind_from_string(const std::string& s);
BranchSharing branch_sharing_from_string(const std::string& s);

/// Parallel Vision Mamba layer.
///
/// LayerNorm over C_in, split into `parallelism` contiguous channel groups,
/// residual Vision Mamba per group (block(Y) + theta * Y), concatenate,
/// LayerNorm, then a bias-free C_in x C_out projection.
struct PVMConfig {
  std::size_t channels = 64;
  std::size_t out_channels = 0;  // 0 keeps `channels`
  std::size_t parallelism = 4;
  InnerKind inner_kind = InnerKind::kMamba;
  BranchSharing sharing = BranchSharing::kDistinct;
  ConvLayout conv = ConvLayout::kDense;
  float theta_init = 1.0f;

  std::size_t resolved_out_channels() const noexcept {
    return out_channels == 0 ? channels : out_channels;
  }
  std::size_t branch_channels() const noexcept { return channels / parallelism; }
  std::size_t weight_sets() const noexcept {
    return sharing == BranchSharing::kShared ? 1 : parallelism;
  }
  MambaConfig mamba_config() const;
  SS2DConfig ss2d_config() const;
  void validate() const;  // ConfigError when channels % parallelism != 0
};

using BranchWeights = std::variant<MambaWeights, VSSWeights>;

struct PVMWeights {
  Tensor ln_in_gamma;   // [C_in]
  Tensor ln_in_beta;    // [C_in]
  std::vector<BranchWeights> branches;  // parallelism entries, or 1 when shared
  Tensor theta;         // [parallelism]
  Tensor ln_out_gamma;  // [C_in]
  Tensor ln_out_beta;   // [C_in]
  Tensor proj;          // [C_in x C_out]

  friend bool operator==(const PVMWeights&, const PVMWeights&) = default;
};

// Identity-ish defaults: unit LayerNorm affine, zero blocks, theta = theta_init,
// zero projection.
PVMWeights make_pvm_weights(const PVMConfig& cfg);
std::size_t element_count(const PVMWeights& w);

template <class W, class F>
  requires std::same_as<std::remove_const_t<W>, PVMWeights>
void for_each_param(W& w, const PVMConfig& cfg, const std::string& prefix, F&& f) {
  const std::size_t c = cfg.channels;
  f(join_name(prefix, "ln_in_gamma"), w.ln_in_gamma, ParamKind::kNormGamma, c);
  f(join_name(prefix, "ln_in_beta"), w.ln_in_beta, ParamKind::kNormBeta, c);
  for (std::size_t i = 0; i < w.branches.size(); ++i) {
    const std::string bp = join_name(prefix, ("branch" + std::to_string(i)).c_str());
    if (cfg.inner_kind == InnerKind::kMamba) {
      for_each_param(std::get<MambaWeights>(w.branches[i]), cfg.mamba_config(), bp, f);
    } else {
      for_each_param(std::get<VSSWeights>(w.branches[i]), cfg.ss2d_config(), bp, f);
    }
  }
  f(join_name(prefix, "theta"), w.theta, ParamKind::kTheta, 1);
  f(join_name(prefix, "ln_out_gamma"), w.ln_out_gamma, ParamKind::kNormGamma, c);
  f(join_name(prefix, "ln_out_beta"), w.ln_out_beta, ParamKind::kNormBeta, c);
  f(join_name(prefix, "proj"), w.proj, ParamKind::kWeight, c);
}

/// x[H x W x C] -> [H x W x C_out]. With the mamba kind each group is
/// flattened row-major into a length H*W sequence; the ss2d kind keeps the
/// grid and runs the four-direction VSS block.
Tensor pvm_forward(const PVMConfig& cfg, const PVMWeights& w, const Tensor& x);

}  // namespace ulvm
