#include "ulvm/rng.hpp"

#include <cmath>

namespace ulvm {

std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

struct Filler {
  std::uint64_t seed;
  float theta;

  void operator()(const std::string& name, Tensor& t, ParamKind kind, std::size_t fan_in) const {
    SplitMix64 rng(seed ^ fnv1a64(name));
    switch (kind) {
      case ParamKind::kWeight:
      case ParamKind::kBias: {
        const float s = 1.0f / std::sqrt(static_cast<float>(fan_in == 0 ? 1 : fan_in));
        for (float& v : t.data()) v = rng.uniform(-s, s);
        break;
      }
      case ParamKind::kALog: {
        const std::size_t n = t.shape().back();
        const float top = std::log(static_cast<float>(n));
        for (std::size_t i = 0; i < t.size(); ++i) {
          const std::size_t j = i % n;
          t[i] = n == 1 ? 0.0f : top * static_cast<float>(j) / static_cast<float>(n - 1);
        }
        break;
      }
      case ParamKind::kDtBias: {
        const float lo = std::log(1e-3f), hi = std::log(1e-1f);
        for (float& v : t.data()) {
          const float dt = std::exp(rng.uniform(lo, hi));
          v = dt + std::log(-std::expm1(-dt));  // softplus^-1
        }
        break;
      }
      case ParamKind::kSkip:
      case ParamKind::kNormGamma:
        for (float& v : t.data()) v = 1.0f;
        break;
      case ParamKind::kNormBeta:
        for (float& v : t.data()) v = 0.0f;
        break;
      case ParamKind::kTheta:
        for (float& v : t.data()) v = theta;
        break;
    }
  }
};

}  // namespace

void init_params(NetWeights& w, const NetConfig& cfg, std::uint64_t seed) {
  for_each_param(w, cfg, Filler{seed, cfg.theta_init});
}

NetWeights init_weights(const NetConfig& cfg, std::uint64_t seed) {
  NetWeights w = make_net_weights(cfg);
  init_params(w, cfg, seed);
  return w;
}

void init_params(MambaWeights& w, const MambaConfig& cfg, std::uint64_t seed) {
  for_each_param(w, cfg, "", Filler{seed, 1.0f});
}

void init_params(VSSWeights& w, const SS2DConfig& cfg, std::uint64_t seed) {
  for_each_param(w, cfg, "", Filler{seed, 1.0f});
}

void init_params(PVMWeights& w, const PVMConfig& cfg, std::uint64_t seed) {
  for_each_param(w, cfg, "", Filler{seed, cfg.theta_init});
}

}  // namespace ulvm
