#include "ulvm/segnet.hpp"

#include <algorithm>
#include <numeric>

namespace ulvm {

void NetConfig::validate() const {
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i] == 0) throw ConfigError("net config: channel widths must be >= 1");
    if (i > 0 && channels[i] <= channels[i - 1]) {
      throw ConfigError("net config: channel widths must be strictly increasing");
    }
  }
  if (in_channels == 0) throw ConfigError("net config: in_channels must be >= 1");
  const std::size_t m = std::size_t{1} << kDownsamples;
  if (height == 0 || width == 0 || height % m != 0 || width % m != 0) {
    throw ConfigError("net config: input " + std::to_string(height) + "x" +
                      std::to_string(width) + " must be a positive multiple of " +
                      std::to_string(m));
  }
  if (parallelism == 0) throw ConfigError("net config: parallelism must be >= 1");
  for (std::size_t i = 2; i < 6; ++i) {
    if (channels[i] % parallelism != 0) {
      throw ConfigError("net config: PVM width " + std::to_string(channels[i]) +
                        " not divisible by parallelism " + std::to_string(parallelism));
    }
  }
  if (sab_kernel == 0 || sab_kernel % 2 == 0 || sab_dilation == 0) {
    throw ConfigError("net config: SAB kernel must be odd and dilation >= 1");
  }
}

PVMConfig NetConfig::pvm_config(std::size_t in, std::size_t out) const {
  PVMConfig p;
  p.channels = in;
  p.out_channels = out;
  p.parallelism = parallelism;
  p.inner_kind = inner_kind;
  p.sharing = sharing;
  p.conv = conv;
  p.theta_init = theta_init;
  return p;
}

std::size_t NetConfig::skip_channel_sum() const {
  auto s = skip_channels();
  return std::accumulate(s.begin(), s.end(), std::size_t{0});
}

namespace {

ConvWeights make_conv(std::size_t cin, std::size_t cout, std::size_t k) {
  return {Tensor({cout, cin, k, k}), Tensor({cout})};
}

Tensor pvm_chw(const PVMConfig& cfg, const PVMWeights& w, const Tensor& x) {
  return ops::hwc_to_chw(pvm_forward(cfg, w, ops::chw_to_hwc(x)));
}

Tensor decoder_conv(const ConvWeights& w, const Tensor& x) {
  return ops::upsample2_nearest(ops::relu(ops::conv2d(x, w.kernel, w.bias, 1)));
}

}  // namespace

NetWeights make_net_weights(const NetConfig& cfg) {
  cfg.validate();
  const auto& c = cfg.channels;
  NetWeights w;
  w.enc_conv = {make_conv(cfg.in_channels, c[0], 3), make_conv(c[0], c[1], 3),
                make_conv(c[1], c[2], 3)};
  for (std::size_t i = 0; i < 3; ++i) {
    w.enc_pvm[i] = make_pvm_weights(cfg.pvm_config(c[i + 2], c[i + 3]));
    w.dec_pvm[i] = make_pvm_weights(cfg.pvm_config(c[5 - i], c[4 - i]));
  }
  w.dec_conv = {make_conv(c[2], c[1], 3), make_conv(c[1], c[0], 3)};
  w.head = make_conv(c[0], 1, 1);
  if (cfg.bridge_enabled) {
    BridgeWeights b;
    b.sab_kernel = Tensor({1, 2, cfg.sab_kernel, cfg.sab_kernel});
    b.sab_bias = Tensor({1});
    for (std::size_t ch : cfg.skip_channels()) {
      b.cab_fc.emplace_back(Shape{cfg.skip_channel_sum(), ch});
      b.cab_bias.emplace_back(Shape{ch});
    }
    w.bridge = std::move(b);
  }
  return w;
}

std::size_t element_count(const NetWeights& w, const NetConfig& cfg) {
  std::size_t total = 0;
  for_each_param(w, cfg, [&](const std::string&, const Tensor& t, ParamKind, std::size_t) {
    total += t.size();
  });
  return total;
}

Tensor conv_block(const ConvWeights& w, const Tensor& x) {
  return ops::maxpool2(ops::relu(ops::conv2d(x, w.kernel, w.bias, 1)));
}

std::vector<Tensor> sab(const Tensor& kernel, const Tensor& bias, std::span<const Tensor> features,
                        std::size_t dilation) {
  if (features.empty()) throw DimensionError("sab: no stages");
  if (kernel.rank() != 4 || kernel.dim(0) != 1 || kernel.dim(1) != 2) {
    throw DimensionError("sab: kernel must be [1 x 2 x k x k], got " +
                         shape_to_string(kernel.shape()));
  }
  const int pad = static_cast<int>(dilation * (kernel.dim(2) - 1) / 2);
  std::vector<Tensor> out;
  out.reserve(features.size());
  for (const Tensor& f : features) {
    if (f.rank() != 3) throw DimensionError("sab: features must be [C x H x W]");
    const std::size_t c = f.dim(0), hw = f.dim(1) * f.dim(2);
    Tensor pooled({2, f.dim(1), f.dim(2)});
    for (std::size_t p = 0; p < hw; ++p) {
      float mx = f[p];
      float sum = 0.0f;
      for (std::size_t ch = 0; ch < c; ++ch) {
        mx = std::max(mx, f[ch * hw + p]);
        sum += f[ch * hw + p];
      }
      pooled[p] = mx;
      pooled[hw + p] = sum / static_cast<float>(c);
    }
    const Tensor gate =
        ops::sigmoid(ops::conv2d(pooled, kernel, bias, pad, static_cast<int>(dilation)));
    Tensor g(f.shape());
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t p = 0; p < hw; ++p) g[ch * hw + p] = f[ch * hw + p] * gate[p] + f[ch * hw + p];
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<Tensor> cab(std::span<const Tensor> fc, std::span<const Tensor> bias,
                        std::span<const Tensor> features) {
  if (features.empty()) throw DimensionError("cab: no stages");
  if (fc.size() != features.size() || bias.size() != features.size()) {
    throw DimensionError("cab: need one fully connected layer per stage");
  }
  std::vector<Tensor> pooled;
  pooled.reserve(features.size());
  for (const Tensor& f : features) pooled.push_back(ops::avgpool_global(f));
  const Tensor descriptor = ops::concat_last(pooled);
  const Tensor row = descriptor.reshaped({1, descriptor.size()});

  std::vector<Tensor> out;
  out.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Tensor& f = features[i];
    const std::size_t c = f.dim(0), hw = f.dim(1) * f.dim(2);
    if (fc[i].rank() != 2 || fc[i].dim(1) != c || bias[i].size() != c) {
      throw DimensionError("cab: stage " + std::to_string(i) + " layer " +
                           shape_to_string(fc[i].shape()) + " does not map to " +
                           std::to_string(c) + " channels");
    }
    Tensor gate = ops::matmul(row, fc[i]);
    for (std::size_t ch = 0; ch < c; ++ch) gate[ch] = ops::sigmoid(gate[ch] + bias[i][ch]);
    Tensor g(f.shape());
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t p = 0; p < hw; ++p) g[ch * hw + p] = f[ch * hw + p] * gate[ch] + f[ch * hw + p];
    out.push_back(std::move(g));
  }
  return out;
}

Tensor net_forward(const NetConfig& cfg, const NetWeights& w, const Tensor& image) {
  cfg.validate();
  if (image.rank() != 3 || image.dim(0) != cfg.in_channels || image.dim(1) != cfg.height ||
      image.dim(2) != cfg.width) {
    throw DimensionError("net_forward: expected image [" + std::to_string(cfg.in_channels) + "x" +
                         std::to_string(cfg.height) + "x" + std::to_string(cfg.width) +
                         "], got " + shape_to_string(image.shape()));
  }
  if (cfg.bridge_enabled != w.bridge.has_value()) {
    throw ConfigError("net_forward: bridge weights do not match bridge_enabled");
  }
  const auto& c = cfg.channels;

  std::vector<Tensor> skips;
  skips.reserve(5);
  Tensor x = image;
  for (std::size_t i = 0; i < 3; ++i) {
    x = conv_block(w.enc_conv[i], x);
    skips.push_back(x);
  }
  for (std::size_t i = 0; i < 2; ++i) {
    x = ops::maxpool2(pvm_chw(cfg.pvm_config(c[i + 2], c[i + 3]), w.enc_pvm[i], x));
    skips.push_back(x);
  }
  x = pvm_chw(cfg.pvm_config(c[4], c[5]), w.enc_pvm[2], x);

  if (w.bridge) {
    skips = sab(w.bridge->sab_kernel, w.bridge->sab_bias, skips, cfg.sab_dilation);
    skips = cab(w.bridge->cab_fc, w.bridge->cab_bias, skips);
  }

  x = ops::add(pvm_chw(cfg.pvm_config(c[5], c[4]), w.dec_pvm[0], x), skips[4]);
  x = ops::add(ops::upsample2_nearest(pvm_chw(cfg.pvm_config(c[4], c[3]), w.dec_pvm[1], x)),
               skips[3]);
  x = ops::add(ops::upsample2_nearest(pvm_chw(cfg.pvm_config(c[3], c[2]), w.dec_pvm[2], x)),
               skips[2]);
  x = ops::add(decoder_conv(w.dec_conv[0], x), skips[1]);
  x = ops::add(decoder_conv(w.dec_conv[1], x), skips[0]);

  return ops::sigmoid(ops::upsample2_nearest(ops::conv2d(x, w.head.kernel, w.head.bias, 0)));
}

}  // namespace ulvm
