#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ulvm/mamba.hpp"
#include "ulvm/pvm.hpp"
#include "ulvm/segnet.hpp"
#include "ulvm/ss2d.hpp"

namespace ulvm::accounting {

struct ParamItem {
  std::string name;
  std::uint64_t count = 0;
};

/// Itemized exact parameter census.
struct ParamReport {
  std::vector<ParamItem> items;
  std::optional<std::uint64_t> baseline;

  std::uint64_t total() const;
  // 1 - total / baseline; empty when no baseline is set.
  std::optional<double> reduction_fraction() const;

  ParamReport& add(std::string name, std::uint64_t count);
  // Appends every item of `other` under `prefix.`.
  ParamReport& append(const std::string& prefix, const ParamReport& other);
};

enum class FlopConvention {
  kMacs,     // one multiply-accumulate counts as one operation
  kTwoMacs,  // multiply and add counted separately
};

const char* to_string(FlopConvention c);
FlopConvention flop_convention_from_string(const std::string& s);

/// Itemized operation counts. Items hold multiply-accumulates; the
/// convention scales them into the reported FLOP total.
struct FlopReport {
  std::vector<ParamItem> items;  // MACs per term
  FlopConvention convention = FlopConvention::kMacs;

  std::uint64_t total_macs() const;
  std::uint64_t total_flops() const;
  double total_gflops() const;
};

ParamReport mamba_params(const MambaConfig& cfg);
ParamReport ss2d_params(const SS2DConfig& cfg);

/// Branch blocks (p blocks of width C/p, or one when shared), the two outer
/// LayerNorms, the per-branch theta values and the C_in x C_out projection.
ParamReport pvm_params(const PVMConfig& cfg);

// Branch-sum only part of pvm_params.
std::uint64_t pvm_branch_params(const PVMConfig& cfg);

ParamReport model_params(const NetConfig& cfg);

/// Parameters of p parallel distinct blocks of width C/p relative to one
/// block of width C.
struct ParallelReduction {
  double exact_ratio = 0.0;    // p * block(C/p) / block(C)
  double rounded_ratio = 0.0;  // p * round(block(C/p) / block(C), 3 decimals)
  double exact_reduction() const { return 1.0 - exact_ratio; }
  double rounded_reduction() const { return 1.0 - rounded_ratio; }
};
ParallelReduction parallel_reduction(std::size_t channels, std::size_t parallelism,
                                     InnerKind kind);

// Multiply-accumulates of one block over a sequence / grid.
std::uint64_t mamba_macs(const MambaConfig& cfg, std::uint64_t length);
std::uint64_t ss2d_macs(const SS2DConfig& cfg, std::uint64_t height, std::uint64_t width);
std::uint64_t pvm_macs(const PVMConfig& cfg, std::uint64_t height, std::uint64_t width);

/// Closed-form operation count of net_forward at cfg's input size. Counts
/// convolutions, linear maps and the scan recurrence; activations,
/// normalization, pooling and elementwise gating are not counted.
FlopReport model_flops(const NetConfig& cfg, FlopConvention convention = FlopConvention::kTwoMacs);

}  // namespace ulvm::accounting
