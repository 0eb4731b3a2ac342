#pragma once

#include <cstdint>
#include <string_view>

#include "ulvm/segnet.hpp"

namespace ulvm {

/// SplitMix64 stream. Portable bit-for-bit across languages.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 24 random mantissa bits.
  float uniform01() noexcept { return static_cast<float>(next() >> 40) * 0x1.0p-24f; }
  float uniform(float lo, float hi) noexcept { return lo + (hi - lo) * uniform01(); }

 private:
  std::uint64_t state_;
};

// FNV-1a over the bytes of `s`.
std::uint64_t fnv1a64(std::string_view s) noexcept;

/// Fills every tensor of `w` according to its ParamKind. Each tensor draws
/// from its own SplitMix64 stream seeded with seed ^ fnv1a64(name), so the
/// result does not depend on visiting order.
///   weights/biases: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
///   A_log: log-spaced so that -exp(A_log) spans [-d_state, -1] per channel
///   dt bias: inverse softplus of exp(uniform(log 1e-3, log 1e-1))
///   D and LayerNorm gamma: 1, LayerNorm beta: 0, theta: cfg.theta_init
void init_params(NetWeights& w, const NetConfig& cfg, std::uint64_t seed);

NetWeights init_weights(const NetConfig& cfg, std::uint64_t seed);

// Block-level initializers with the same rules (used by tests and tools).
void init_params(MambaWeights& w, const MambaConfig& cfg, std::uint64_t seed);
void init_params(VSSWeights& w, const SS2DConfig& cfg, std::uint64_t seed);
void init_params(PVMWeights& w, const PVMConfig& cfg, std::uint64_t seed);

}  // namespace ulvm
