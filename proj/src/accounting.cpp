#include "ulvm/accounting.hpp"

#include <cmath>
#include <numeric>

namespace ulvm::accounting {

std::uint64_t ParamReport::total() const {
  std::uint64_t t = 0;
  for (const auto& it : items) t += it.count;
  return t;
}

std::optional<double> ParamReport::reduction_fraction() const {
  if (!baseline || *baseline == 0) return std::nullopt;
  return 1.0 - static_cast<double>(total()) / static_cast<double>(*baseline);
}

ParamReport& ParamReport::add(std::string name, std::uint64_t count) {
  items.push_back({std::move(name), count});
  return *this;
}

ParamReport& ParamReport::append(const std::string& prefix, const ParamReport& other) {
  for (const auto& it : other.items) items.push_back({prefix + "." + it.name, it.count});
  return *this;
}

const char* to_string(FlopConvention c) { return c == FlopConvention::kMacs ? "macs" : "2macs"; }

FlopConvention flop_convention_from_string(const std::string& s) {
  if (s == "macs" || s == "1macs") return FlopConvention::kMacs;
  if (s == "2macs") return FlopConvention::kTwoMacs;
  throw ConfigError("unknown flop convention '" + s + "' (expected macs|2macs)");
}

std::uint64_t FlopReport::total_macs() const {
  std::uint64_t t = 0;
  for (const auto& it : items) t += it.count;
  return t;
}

std::uint64_t FlopReport::total_flops() const {
  return convention == FlopConvention::kMacs ? total_macs() : 2 * total_macs();
}

double FlopReport::total_gflops() const { return static_cast<double>(total_flops()) / 1e9; }

ParamReport mamba_params(const MambaConfig& cfg) {
  cfg.validate();
  const std::uint64_t dm = cfg.d_model, di = cfg.d_inner(), n = cfg.d_state;
  const std::uint64_t r = cfg.resolved_dt_rank(), k = cfg.d_conv;
  const std::uint64_t conv = cfg.conv == ConvLayout::kDense ? k * di * di + di : k * di + di;
  ParamReport rep;
  rep.add("in_proj", dm * di * 2)
      .add("out_proj", di * dm)
      .add("x_proj", di * (r + 2 * n))
      .add("dt_proj", r * di + di)
      .add("conv1d", conv)
      .add("A_logs", di * n)
      .add("D", di);
  return rep;
}

ParamReport ss2d_params(const SS2DConfig& cfg) {
  cfg.validate();
  const std::uint64_t dm = cfg.d_model, di = cfg.d_inner(), n = cfg.d_state;
  const std::uint64_t r = cfg.resolved_dt_rank(), k = cfg.d_conv, K = cfg.directions;
  const std::uint64_t conv =
      cfg.conv == ConvLayout::kDense ? k * k * di * di + di : k * k * di + di;
  ParamReport rep;
  rep.add("in_proj", dm * di * 2)
      .add("out_proj", di * dm)
      .add("out_norm", 2 * di)
      .add("x_proj", K * di * (r + 2 * n))
      .add("dt_proj", K * (r * di + di))
      .add("conv2d", conv)
      .add("A_logs", K * di * n)
      .add("Ds", K * di);
  return rep;
}

std::uint64_t pvm_branch_params(const PVMConfig& cfg) {
  cfg.validate();
  const std::uint64_t block = cfg.inner_kind == InnerKind::kMamba
                                  ? mamba_params(cfg.mamba_config()).total()
                                  : ss2d_params(cfg.ss2d_config()).total();
  return cfg.weight_sets() * block;
}

ParamReport pvm_params(const PVMConfig& cfg) {
  const std::uint64_t c = cfg.channels;
  ParamReport rep;
  rep.add("branches", pvm_branch_params(cfg))
      .add("norm_in", 2 * c)
      .add("norm_out", 2 * c)
      .add("theta", cfg.parallelism)
      .add("proj", c * cfg.resolved_out_channels());
  return rep;
}

ParamReport model_params(const NetConfig& cfg) {
  cfg.validate();
  const auto& c = cfg.channels;
  auto conv = [](std::uint64_t cin, std::uint64_t cout, std::uint64_t k) {
    return cout * cin * k * k + cout;
  };
  ParamReport rep;
  rep.add("enc1.conv", conv(cfg.in_channels, c[0], 3))
      .add("enc2.conv", conv(c[0], c[1], 3))
      .add("enc3.conv", conv(c[1], c[2], 3));
  for (std::size_t i = 0; i < 3; ++i) {
    rep.append("enc" + std::to_string(i + 4), pvm_params(cfg.pvm_config(c[i + 2], c[i + 3])));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    rep.append("dec" + std::to_string(5 - i), pvm_params(cfg.pvm_config(c[5 - i], c[4 - i])));
  }
  rep.add("dec2.conv", conv(c[2], c[1], 3))
      .add("dec1.conv", conv(c[1], c[0], 3))
      .add("head.conv", conv(c[0], 1, 1));
  if (cfg.bridge_enabled) {
    const std::uint64_t k = cfg.sab_kernel;
    rep.add("bridge.sab", 2 * k * k + 1);
    const std::uint64_t s = cfg.skip_channel_sum();
    rep.add("bridge.cab", s * s + s);  // sum_i (s * c_i + c_i)
  }
  return rep;
}

ParallelReduction parallel_reduction(std::size_t channels, std::size_t parallelism,
                                     InnerKind kind) {
  PVMConfig whole;
  whole.channels = channels;
  whole.parallelism = 1;
  whole.inner_kind = kind;
  PVMConfig split = whole;
  split.parallelism = parallelism;
  const double full = static_cast<double>(pvm_branch_params(whole));
  const double one = static_cast<double>(pvm_branch_params(split)) / parallelism;
  const double per_branch = one / full;
  ParallelReduction r;
  r.exact_ratio = per_branch * static_cast<double>(parallelism);
  r.rounded_ratio = std::round(per_branch * 1000.0) / 1000.0 * static_cast<double>(parallelism);
  return r;
}

std::uint64_t mamba_macs(const MambaConfig& cfg, std::uint64_t length) {
  const std::uint64_t dm = cfg.d_model, di = cfg.d_inner(), n = cfg.d_state;
  const std::uint64_t r = cfg.resolved_dt_rank(), k = cfg.d_conv;
  const std::uint64_t conv = cfg.conv == ConvLayout::kDense ? di * di * k : di * k;
  // discretized input term, state update and readout per (channel, state, step)
  const std::uint64_t scan = 3 * di * n + di;
  return length * (dm * 2 * di + conv + di * (r + 2 * n) + r * di + scan + di * dm);
}

std::uint64_t ss2d_macs(const SS2DConfig& cfg, std::uint64_t height, std::uint64_t width) {
  const std::uint64_t dm = cfg.d_model, di = cfg.d_inner(), n = cfg.d_state;
  const std::uint64_t r = cfg.resolved_dt_rank(), k = cfg.d_conv, K = cfg.directions;
  const std::uint64_t conv = cfg.conv == ConvLayout::kDense ? di * di * k * k : di * k * k;
  const std::uint64_t per_dir = di * (r + 2 * n) + r * di + 3 * di * n + di;
  return height * width * (dm * 2 * di + conv + K * per_dir + di * dm);
}

std::uint64_t pvm_macs(const PVMConfig& cfg, std::uint64_t height, std::uint64_t width) {
  const std::uint64_t block = cfg.inner_kind == InnerKind::kMamba
                                  ? mamba_macs(cfg.mamba_config(), height * width)
                                  : ss2d_macs(cfg.ss2d_config(), height, width);
  return cfg.parallelism * block + height * width * cfg.channels * cfg.resolved_out_channels();
}

FlopReport model_flops(const NetConfig& cfg, FlopConvention convention) {
  cfg.validate();
  const auto& c = cfg.channels;
  const std::uint64_t h = cfg.height, w = cfg.width;
  auto conv = [](std::uint64_t cin, std::uint64_t cout, std::uint64_t k, std::uint64_t hh,
                 std::uint64_t ww) { return cout * cin * k * k * hh * ww; };
  FlopReport rep;
  rep.convention = convention;
  auto add = [&](std::string name, std::uint64_t macs) { rep.items.push_back({std::move(name), macs}); };

  add("enc1.conv", conv(cfg.in_channels, c[0], 3, h, w));
  add("enc2.conv", conv(c[0], c[1], 3, h / 2, w / 2));
  add("enc3.conv", conv(c[1], c[2], 3, h / 4, w / 4));
  for (std::size_t i = 0; i < 3; ++i) {
    const std::uint64_t s = std::uint64_t{8} << i;
    add("enc" + std::to_string(i + 4) + ".pvm",
        pvm_macs(cfg.pvm_config(c[i + 2], c[i + 3]), h / s, w / s));
  }
  add("dec5.pvm", pvm_macs(cfg.pvm_config(c[5], c[4]), h / 32, w / 32));
  add("dec4.pvm", pvm_macs(cfg.pvm_config(c[4], c[3]), h / 32, w / 32));
  add("dec3.pvm", pvm_macs(cfg.pvm_config(c[3], c[2]), h / 16, w / 16));
  add("dec2.conv", conv(c[2], c[1], 3, h / 8, w / 8));
  add("dec1.conv", conv(c[1], c[0], 3, h / 4, w / 4));
  add("head.conv", conv(c[0], 1, 1, h / 2, w / 2));
  if (cfg.bridge_enabled) {
    std::uint64_t sab = 0, cab = 0;
    const std::uint64_t k = cfg.sab_kernel, s = cfg.skip_channel_sum();
    for (std::size_t i = 0; i < 5; ++i) {
      const std::uint64_t hh = h >> (i + 1), ww = w >> (i + 1);
      sab += 2 * k * k * hh * ww;
      cab += s * c[i];
    }
    add("bridge.sab", sab);
    add("bridge.cab", cab);
  }
  return rep;
}

}  // namespace ulvm::accounting
