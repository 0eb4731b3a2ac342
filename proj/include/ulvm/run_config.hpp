#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ulvm/accounting.hpp"
#include "ulvm/segnet.hpp"

namespace ulvm::io {

/// Parsed run configuration: network shape plus run-level settings.
///
/// JSON keys (all optional, unknown keys rejected):
///   channels         array of 6 strictly increasing ints   [8,16,24,32,48,64]
///   parallelism      int                                   4
///   inner_kind       "mamba" | "ss2d"                      "mamba"
///   input_size       int (square) or [H, W]                256
///   seed             non-negative int                      0
///   bridge_enabled   bool                                  true
///   flop_convention  "macs" | "2macs"                      "2macs"
///   theta_init       number                                1.0
///   branch_sharing   "shared" | "distinct"                 "shared"
///   conv_layout      "depthwise" | "dense"                 "depthwise"
struct RunConfig {
  NetConfig net;
  std::uint64_t seed = 0;
  accounting::FlopConvention flop_convention = accounting::FlopConvention::kTwoMacs;
};

// Throws ConfigError on schema violations (message names the key).
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string dump_run_config(const RunConfig& cfg);

}  // namespace ulvm::io
