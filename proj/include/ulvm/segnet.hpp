#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ulvm/pvm.hpp"

namespace ulvm {

/// Configuration of the six-stage U-shaped segmentation network.
///
/// Stages 1-3 are conv blocks, stages 4-6 PVM layers; the decoder mirrors the
/// encoder and five skip tensors pass through the SAB -> CAB bridge.
struct NetConfig {
  std::array<std::size_t, 6> channels{8, 16, 24, 32, 48, 64};
  std::size_t height = 256;
  std::size_t width = 256;
  std::size_t in_channels = 3;
  std::size_t parallelism = 4;
  InnerKind inner_kind = InnerKind::kMamba;
  bool bridge_enabled = true;
  BranchSharing sharing = BranchSharing::kShared;
  ConvLayout conv = ConvLayout::kDepthwise;
  float theta_init = 1.0f;
  std::size_t sab_kernel = 7;
  std::size_t sab_dilation = 3;

  static constexpr std::size_t kDownsamples = 5;

  void validate() const;  // ConfigError
  PVMConfig pvm_config(std::size_t in, std::size_t out) const;
  // Channel counts of the five bridged skip tensors.
  std::span<const std::size_t> skip_channels() const { return {channels.data(), 5}; }
  std::size_t skip_channel_sum() const;
};

struct ConvWeights {
  Tensor kernel;  // [Cout x Cin x k x k]
  Tensor bias;    // [Cout]
  friend bool operator==(const ConvWeights&, const ConvWeights&) = default;
};

struct BridgeWeights {
  Tensor sab_kernel;              // [1 x 2 x k x k], shared by every stage
  Tensor sab_bias;                // [1]
  std::vector<Tensor> cab_fc;     // per stage [sum(skip channels) x C_i]
  std::vector<Tensor> cab_bias;   // per stage [C_i]
  friend bool operator==(const BridgeWeights&, const BridgeWeights&) = default;
};

struct NetWeights {
  std::array<ConvWeights, 3> enc_conv;  // stages 1..3
  std::array<PVMWeights, 3> enc_pvm;    // stages 4..6
  std::array<PVMWeights, 3> dec_pvm;    // c6->c5, c5->c4, c4->c3
  std::array<ConvWeights, 2> dec_conv;  // c3->c2, c2->c1
  ConvWeights head;                     // 1x1, c1 -> 1
  std::optional<BridgeWeights> bridge;  // present iff bridge_enabled
  friend bool operator==(const NetWeights&, const NetWeights&) = default;
};

// Zero-filled weights with the shapes implied by cfg (LayerNorm gammas are 1,
// thetas are theta_init).
NetWeights make_net_weights(const NetConfig& cfg);

template <class W, class F>
  requires std::same_as<std::remove_const_t<W>, ConvWeights>
void for_each_param(W& w, const std::string& prefix, F&& f) {
  const std::size_t fan_in = w.kernel.dim(1) * w.kernel.dim(2) * w.kernel.dim(3);
  f(join_name(prefix, "kernel"), w.kernel, ParamKind::kWeight, fan_in);
  f(join_name(prefix, "bias"), w.bias, ParamKind::kBias, fan_in);
}

/// Visits every learnable tensor of the network in a fixed order with its
/// canonical name, role and fan-in.
template <class W, class F>
  requires std::same_as<std::remove_const_t<W>, NetWeights>
void for_each_param(W& w, const NetConfig& cfg, F&& f) {
  const auto& c = cfg.channels;
  for (std::size_t i = 0; i < 3; ++i) {
    for_each_param(w.enc_conv[i], "enc" + std::to_string(i + 1), f);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for_each_param(w.enc_pvm[i], cfg.pvm_config(c[i + 2], c[i + 3]),
                   "enc" + std::to_string(i + 4), f);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for_each_param(w.dec_pvm[i], cfg.pvm_config(c[5 - i], c[4 - i]),
                   "dec" + std::to_string(5 - i), f);
  }
  for (std::size_t i = 0; i < 2; ++i) {
    for_each_param(w.dec_conv[i], "dec" + std::to_string(2 - i), f);
  }
  for_each_param(w.head, std::string("head"), f);
  if (w.bridge) {
    auto& b = *w.bridge;
    const std::size_t taps = b.sab_kernel.dim(1) * b.sab_kernel.dim(2) * b.sab_kernel.dim(3);
    f(std::string("bridge.sab.kernel"), b.sab_kernel, ParamKind::kWeight, taps);
    f(std::string("bridge.sab.bias"), b.sab_bias, ParamKind::kBias, taps);
    for (std::size_t i = 0; i < b.cab_fc.size(); ++i) {
      const std::string p = "bridge.cab.fc" + std::to_string(i + 1);
      f(p + ".weight", b.cab_fc[i], ParamKind::kWeight, cfg.skip_channel_sum());
      f(p + ".bias", b.cab_bias[i], ParamKind::kBias, cfg.skip_channel_sum());
    }
  }
}

std::size_t element_count(const NetWeights& w, const NetConfig& cfg);

/// conv2d(k=3, pad=1) -> relu -> maxpool2.
Tensor conv_block(const ConvWeights& w, const Tensor& x);

/// Spatial attention bridge: for each stage, stack the channelwise max and
/// mean maps, run the shared dilated conv + sigmoid, and return
/// feature * gate + feature.
std::vector<Tensor> sab(const Tensor& kernel, const Tensor& bias, std::span<const Tensor> features,
                        std::size_t dilation);

/// Channel attention bridge: concatenate per-stage global averages into one
/// descriptor, map it through a per-stage fully connected layer + sigmoid,
/// and return feature * gate + feature.
std::vector<Tensor> cab(std::span<const Tensor> fc, std::span<const Tensor> bias,
                        std::span<const Tensor> features);

/// image[in_channels x H x W] -> probability map [1 x H x W].
Tensor net_forward(const NetConfig& cfg, const NetWeights& w, const Tensor& image);

}  // namespace ulvm
