#include "ulvm/pvm.hpp"

#include <thread>

namespace ulvm {

const char* to_string(InnerKind kind) { return kind == InnerKind::kMamba ? "mamba" : "ss2d"; }

const char* to_string(BranchSharing sharing) {
  return sharing == BranchSharing::kShared ? "shared" : "distinct";
}

InnerKind inner_kind_from_string(const std::string& s) {
  if (s == "mamba" || s == "mamba-1d") return InnerKind::kMamba;
  if (s == "ss2d") return InnerKind::kSS2D;
  throw ConfigError("unknown inner kind '" + s + "' (expected mamba|ss2d)");
}

BranchSharing branch_sharing_from_string(const std::string& s) {
  if (s == "distinct") return BranchSharing::kDistinct;
  if (s == "shared") return BranchSharing::kShared;
  throw ConfigError("unknown branch sharing '" + s + "' (expected distinct|shared)");
}

MambaConfig PVMConfig::mamba_config() const {
  MambaConfig m;
  m.d_model = branch_channels();
  m.conv = conv;
  return m;
}

SS2DConfig PVMConfig::ss2d_config() const {
  SS2DConfig s;
  s.d_model = branch_channels();
  s.conv = conv;
  return s;
}

void PVMConfig::validate() const {
  if (channels == 0 || parallelism == 0) {
    throw ConfigError("pvm config: channels and parallelism must be >= 1");
  }
  if (channels % parallelism != 0) {
    throw ConfigError("pvm config: " + std::to_string(channels) +
                      " channels not divisible by parallelism " + std::to_string(parallelism));
  }
}

PVMWeights make_pvm_weights(const PVMConfig& cfg) {
  cfg.validate();
  const std::size_t c = cfg.channels;
  PVMWeights w;
  w.ln_in_gamma = Tensor({c}, 1.0f);
  w.ln_in_beta = Tensor({c});
  for (std::size_t i = 0; i < cfg.weight_sets(); ++i) {
    if (cfg.inner_kind == InnerKind::kMamba) {
      w.branches.emplace_back(make_mamba_weights(cfg.mamba_config()));
    } else {
      w.branches.emplace_back(make_vss_weights(cfg.ss2d_config()));
    }
  }
  w.theta = Tensor({cfg.parallelism}, cfg.theta_init);
  w.ln_out_gamma = Tensor({c}, 1.0f);
  w.ln_out_beta = Tensor({c});
  w.proj = Tensor({c, cfg.resolved_out_channels()});
  return w;
}

std::size_t element_count(const PVMWeights& w) {
  std::size_t total = w.ln_in_gamma.size() + w.ln_in_beta.size() + w.theta.size() +
                      w.ln_out_gamma.size() + w.ln_out_beta.size() + w.proj.size();
  for (const auto& b : w.branches) {
    total += std::visit([](const auto& bw) { return element_count(bw); }, b);
  }
  return total;
}

Tensor pvm_forward(const PVMConfig& cfg, const PVMWeights& w, const Tensor& x) {
  cfg.validate();
  const std::size_t c = cfg.channels, p = cfg.parallelism;
  if (x.rank() != 3 || x.dim(2) != c) {
    throw DimensionError("pvm_forward: expected [H x W x " + std::to_string(c) + "], got " +
                         shape_to_string(x.shape()));
  }
  if (w.branches.size() != cfg.weight_sets() || w.theta.size() != p) {
    throw ConfigError("pvm_forward: expected " + std::to_string(cfg.weight_sets()) +
                      " branch weight sets and " + std::to_string(p) + " theta values, got " +
                      std::to_string(w.branches.size()) + " and " +
                      std::to_string(w.theta.size()));
  }
  const std::size_t h = x.dim(0), wd = x.dim(1), n = h * wd, g = cfg.branch_channels();

  const Tensor normed = ops::layernorm(x.reshaped({n, c}), w.ln_in_gamma, w.ln_in_beta);
  const std::vector<Tensor> groups = ops::split_last(normed, p);
  std::vector<Tensor> outs(p);

  auto run_branch = [&](std::size_t i) {
    const BranchWeights& bw = w.branches[cfg.sharing == BranchSharing::kShared ? 0 : i];
    const float theta = w.theta[i];
    if (cfg.inner_kind == InnerKind::kMamba) {
      outs[i] = vm_forward(cfg.mamba_config(), std::get<MambaWeights>(bw), theta, groups[i]);
    } else {
      outs[i] = vm_forward(cfg.ss2d_config(), std::get<VSSWeights>(bw), theta,
                           groups[i].reshaped({h, wd, g}))
                    .reshaped({n, g});
    }
  };

  // Groups touch disjoint channels; each branch writes only its own slot.
  if (p > 1 && n * c >= 4096 && std::thread::hardware_concurrency() > 1) {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < p; ++i) pool.emplace_back(run_branch, i);
  } else {
    for (std::size_t i = 0; i < p; ++i) run_branch(i);
  }

  const Tensor merged = ops::concat_last(outs);
  const Tensor out = ops::matmul(ops::layernorm(merged, w.ln_out_gamma, w.ln_out_beta), w.proj);
  return out.reshaped({h, wd, cfg.resolved_out_channels()});
}

}  // namespace ulvm
