#pragma once

#include <cstddef>
#include <string>

namespace ulvm {

// Role of a learnable tensor; drives initialization.
enum class ParamKind {
  kWeight,     // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
  kBias,       // same range as the owning weight
  kALog,       // log-magnitude of the negative state matrix
  kDtBias,     // inverse-softplus of the initial step size
  kSkip,       // SSM skip gain D
  kNormGamma,  // ones
  kNormBeta,   // zeros
  kTheta,      // residual adjustment factor
};

inline std::string join_name(const std::string& prefix, const char* leaf) {
  return prefix.empty() ? std::string(leaf) : prefix + "." + leaf;
}

// How the block's short convolution mixes channels.
//   kDense:     every output channel sees every input channel (d_conv * d_inner^2 weights)
//   kDepthwise: one filter per channel (d_conv * d_inner weights)
enum class ConvLayout { kDense, kDepthwise };

const char* to_string(ConvLayout layout);
ConvLayout conv_layout_from_string(const std::string& s);

}  // namespace ulvm
