// ulvm: parameter/FLOP accounting, toy inference, evaluation and scan
// benchmarking for the U-shaped parallel vision Mamba network.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "report.hpp"
#include "ulvm/accounting.hpp"
#include "ulvm/errors.hpp"
#include "ulvm/image_io.hpp"
#include "ulvm/metrics.hpp"
#include "ulvm/rng.hpp"
#include "ulvm/run_config.hpp"
#include "ulvm/segnet.hpp"
#include "ulvm/selective_scan.hpp"
#include "ulvm/weights_io.hpp"

namespace fs = std::filesystem;
using ulvm::cli::Format;
using ulvm::cli::Report;
using ulvm::cli::fixed;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitEmpty = 3;
constexpr int kExitCheckFailed = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyWork : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* kHelpFooter = R"(Exit codes: 0 ok, 1 usage, 2 shape/config/file error, 3 empty work,
4 a self-check failed (selftest, scan-bench tolerance).

Config file (JSON object, every key optional, unknown keys rejected):
  channels         [8,16,24,32,48,64]  six strictly increasing widths
  parallelism      4                   branches per PVM layer
  inner_kind       "mamba"             "mamba" | "ss2d"
  input_size       256                 int or [H, W], multiples of 32
  seed             0                   weight initialization seed
  bridge_enabled   true                SAB/CAB skip bridge
  flop_convention  "2macs"             "macs" | "2macs"
  theta_init       1.0                 residual adjustment factor
  branch_sharing   "shared"            "shared" | "distinct"
  conv_layout      "depthwise"         "depthwise" | "dense"

JSON output (--format json), top-level keys per command:
  params      command, subject, items[{name,count}], total, baseline,
              reduction{exact,rounded}, branch_ratio{exact,rounded}
  flops       command, convention, items[{name,macs}], total_macs,
              total_flops, gflops
  infer       command, image, out, height, width, min, max, mean
  eval        command, threshold, files[{file,dsc,se,sp,acc,tp,tn,fp,fn}],
              mean{dsc,se,sp,acc}, excluded[]
  scan-bench  command, d, n, len, repeat, tolerance, sequential_ms,
              variants[{chunk,median_ms,max_rel_dev}], within_tolerance
  selftest    command, checks[{name,status,value,expected}], passed, total)";

std::string percent(double fraction, int decimals) { return fixed(100.0 * fraction, decimals) + "%"; }

json items_json(const std::vector<ulvm::accounting::ParamItem>& items, const char* key) {
  json arr = json::array();
  for (const auto& it : items) arr.push_back({{"name", it.name}, {key, it.count}});
  return arr;
}

// ---------------------------------------------------------------- params

struct ParamsOpts {
  std::string config;
  std::string block;
  std::size_t d_model = 0;
  std::size_t p = 1;
  std::string inner = "mamba";
  std::string sharing = "distinct";
  std::string conv = "dense";
  std::optional<std::uint64_t> baseline;
};

Report cmd_params(const ParamsOpts& o) {
  namespace acc = ulvm::accounting;
  acc::ParamReport pr;
  std::string subject;
  std::optional<acc::ParallelReduction> branch;
  if (o.block.empty()) {
    subject = "model";
    pr = acc::model_params(o.config.empty() ? ulvm::NetConfig{}
                                            : ulvm::io::load_run_config(o.config).net);
  } else {
    if (o.d_model == 0) throw UsageError("--block requires --d-model");
    subject = o.block;
    const auto conv = ulvm::conv_layout_from_string(o.conv);
    if (o.block == "mamba") {
      ulvm::MambaConfig c;
      c.d_model = o.d_model;
      c.conv = conv;
      c.validate();
      pr = acc::mamba_params(c);
    } else if (o.block == "ss2d") {
      ulvm::SS2DConfig c;
      c.d_model = o.d_model;
      c.conv = conv;
      c.validate();
      pr = acc::ss2d_params(c);
    } else {
      ulvm::PVMConfig c;
      c.channels = o.d_model;
      c.parallelism = o.p;
      c.inner_kind = ulvm::inner_kind_from_string(o.inner);
      c.sharing = ulvm::branch_sharing_from_string(o.sharing);
      c.conv = conv;
      c.validate();
      pr = acc::pvm_params(c);
      if (o.p > 1) branch = acc::parallel_reduction(o.d_model, o.p, c.inner_kind);
    }
  }
  pr.baseline = o.baseline;

  Report r;
  r.table.header = {"item", "count"};
  for (const auto& it : pr.items) r.table.row({it.name, std::to_string(it.count)});
  r.table.row({"total", std::to_string(pr.total())});
  r.doc["command"] = "params";
  r.doc["subject"] = subject;
  r.doc["items"] = items_json(pr.items, "count");
  r.doc["total"] = pr.total();
  r.doc["baseline"] = o.baseline ? json(*o.baseline) : json(nullptr);
  r.doc["reduction"] = nullptr;
  if (auto red = pr.reduction_fraction()) {
    const double rounded = std::round(*red * 1000.0) / 1000.0;
    r.table.row({"baseline", std::to_string(*o.baseline)});
    r.table.row({"reduction_exact", percent(*red, 4)});
    r.table.row({"reduction_rounded", percent(rounded, 1)});
    r.doc["reduction"] = {{"exact", *red}, {"rounded", rounded}};
  }
  r.doc["branch_ratio"] = nullptr;
  if (branch) {
    r.table.row({"branch_ratio_exact", fixed(branch->exact_ratio, 4)});
    r.table.row({"branch_ratio_rounded", fixed(branch->rounded_ratio, 3)});
    r.table.row({"branch_reduction_exact", percent(branch->exact_reduction(), 2)});
    r.table.row({"branch_reduction_rounded", percent(branch->rounded_reduction(), 1)});
    r.doc["branch_ratio"] = {{"exact", branch->exact_ratio}, {"rounded", branch->rounded_ratio}};
  }
  return r;
}

// ---------------------------------------------------------------- flops

Report cmd_flops(const std::string& config, const std::string& convention) {
  ulvm::io::RunConfig rc;
  if (!config.empty()) rc = ulvm::io::load_run_config(config);
  if (!convention.empty()) {
    rc.flop_convention = ulvm::accounting::flop_convention_from_string(convention);
  }
  const auto fr = ulvm::accounting::model_flops(rc.net, rc.flop_convention);
  Report r;
  r.table.header = {"item", "macs"};
  for (const auto& it : fr.items) r.table.row({it.name, std::to_string(it.count)});
  r.table.row({"total_macs", std::to_string(fr.total_macs())});
  r.table.row({"convention", ulvm::accounting::to_string(fr.convention)});
  r.table.row({"total_flops", std::to_string(fr.total_flops())});
  r.table.row({"gflops", fixed(fr.total_gflops(), 4)});
  r.doc["command"] = "flops";
  r.doc["convention"] = ulvm::accounting::to_string(fr.convention);
  r.doc["items"] = items_json(fr.items, "macs");
  r.doc["total_macs"] = fr.total_macs();
  r.doc["total_flops"] = fr.total_flops();
  r.doc["gflops"] = fr.total_gflops();
  return r;
}

// ---------------------------------------------------------------- infer

struct InferOpts {
  std::string config;
  std::string weights;
  std::optional<std::uint64_t> seed;
  std::string image;
  std::string out;
};

Report cmd_infer(const InferOpts& o) {
  ulvm::io::RunConfig rc;
  if (!o.config.empty()) rc = ulvm::io::load_run_config(o.config);
  if (o.seed) rc.seed = *o.seed;
  const ulvm::NetConfig& cfg = rc.net;
  cfg.validate();

  const ulvm::Tensor img = ulvm::io::load_image_ppm(o.image);
  if (img.dim(1) != cfg.height || img.dim(2) != cfg.width) {
    throw ulvm::DimensionError("image " + o.image + " is " + std::to_string(img.dim(2)) + "x" +
                               std::to_string(img.dim(1)) + " but the config expects " +
                               std::to_string(cfg.width) + "x" + std::to_string(cfg.height));
  }
  const ulvm::NetWeights w = o.weights.empty() ? ulvm::init_weights(cfg, rc.seed)
                                               : ulvm::io::load_weights(o.weights, cfg);
  const ulvm::Tensor prob = ulvm::net_forward(cfg, w, img);
  ulvm::io::write_pgm(o.out, prob);

  const auto [lo, hi] = std::minmax_element(prob.data().begin(), prob.data().end());
  double sum = 0.0;
  for (float v : prob.data()) sum += v;
  const double mean = sum / static_cast<double>(prob.size());

  Report r;
  r.table.header = {"key", "value"};
  r.table.row({"out", o.out})
      .row({"height", std::to_string(prob.dim(1))})
      .row({"width", std::to_string(prob.dim(2))})
      .row({"min", fixed(*lo, 6)})
      .row({"max", fixed(*hi, 6)})
      .row({"mean", fixed(mean, 6)});
  r.doc = {{"command", "infer"}, {"image", o.image},        {"out", o.out},
           {"height", prob.dim(1)}, {"width", prob.dim(2)}, {"min", *lo},
           {"max", *hi},            {"mean", mean}};
  return r;
}

// ---------------------------------------------------------------- eval

std::map<std::string, fs::path> pgm_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") {
      out.emplace(e.path().filename().string(), e.path());
    }
  }
  return out;
}

Report cmd_eval(const std::string& pred_dir, const std::string& truth_dir, float threshold) {
  namespace m = ulvm::metrics;
  const auto preds = pgm_files(pred_dir);
  const auto truths = pgm_files(truth_dir);
  std::vector<std::string> excluded;
  for (const auto& [name, _] : preds)
    if (!truths.contains(name)) excluded.push_back(name);
  for (const auto& [name, _] : truths)
    if (!preds.contains(name)) excluded.push_back(name);
  std::sort(excluded.begin(), excluded.end());
  for (const auto& name : excluded) {
    std::cerr << "ulvm: warning: " << name << " has no counterpart, excluded\n";
  }

  Report r;
  r.table.header = {"file", "dsc", "se", "sp", "acc"};
  r.doc["command"] = "eval";
  r.doc["threshold"] = threshold;
  r.doc["files"] = json::array();
  double sum[4] = {0, 0, 0, 0};
  std::size_t pairs = 0;
  for (const auto& [name, pred_path] : preds) {  // map order == sorted by filename
    auto it = truths.find(name);
    if (it == truths.end()) continue;
    const ulvm::Tensor pred = ulvm::io::load_image_pgm(pred_path);
    const ulvm::Tensor truth = ulvm::io::load_mask_pgm(it->second);
    const m::ConfusionCounts c = m::confusion(pred, truth, threshold);
    const double v[4] = {m::dsc(c), m::se(c), m::sp(c), m::acc(c)};
    for (int k = 0; k < 4; ++k) sum[k] += v[k];
    ++pairs;
    r.table.row({name, fixed(v[0], 4), fixed(v[1], 4), fixed(v[2], 4), fixed(v[3], 4)});
    r.doc["files"].push_back({{"file", name},
                              {"dsc", v[0]},
                              {"se", v[1]},
                              {"sp", v[2]},
                              {"acc", v[3]},
                              {"tp", c.tp},
                              {"tn", c.tn},
                              {"fp", c.fp},
                              {"fn", c.fn}});
  }
  if (pairs == 0) throw EmptyWork("no prediction/ground-truth pairs with matching filenames");
  const double n = static_cast<double>(pairs);
  r.table.row({"mean", fixed(sum[0] / n, 4), fixed(sum[1] / n, 4), fixed(sum[2] / n, 4),
               fixed(sum[3] / n, 4)});
  r.doc["mean"] = {{"dsc", sum[0] / n}, {"se", sum[1] / n}, {"sp", sum[2] / n}, {"acc", sum[3] / n}};
  r.doc["excluded"] = excluded;
  return r;
}

// ---------------------------------------------------------------- scan-bench

struct BenchOpts {
  std::size_t d = 8;
  std::size_t n = 16;
  std::size_t len = 4096;
  std::vector<std::string> chunks{"1", "7", "64", "L"};
  std::size_t repeat = 5;
  std::uint64_t seed = 0;
};

constexpr double kScanTolerance = 1e-5;

// Random discretized scan inputs with dt in [1e-3, 1e-1] and A in [-N, -1].
ulvm::scan::Discretized bench_inputs(std::size_t d, std::size_t n, std::size_t len,
                                     std::uint64_t seed) {
  ulvm::SplitMix64 rng(seed);
  ulvm::Tensor dt({d, len}), A({d, n}), B({n, len}), x({d, len});
  for (float& v : dt.data()) v = std::exp(rng.uniform(std::log(1e-3f), std::log(1e-1f)));
  for (float& v : A.data()) v = -std::exp(rng.uniform(0.0f, std::log(static_cast<float>(n))));
  for (float& v : B.data()) v = rng.uniform(-1.0f, 1.0f);
  for (float& v : x.data()) v = rng.uniform(-1.0f, 1.0f);
  return ulvm::scan::discretize(dt, A, B, x);
}

// max |got - want| / max |want|
double max_rel_dev(const ulvm::Tensor& got, const ulvm::Tensor& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    num = std::max(num, std::abs(static_cast<double>(got[i]) - want[i]));
    den = std::max(den, std::abs(static_cast<double>(want[i])));
  }
  return den == 0.0 ? num : num / den;
}

template <class F>
double median_ms(std::size_t repeat, F&& f) {
  std::vector<double> t;
  for (std::size_t i = 0; i < repeat; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    t.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

Report cmd_scan_bench(const BenchOpts& o, bool& within) {
  if (o.d == 0 || o.n == 0 || o.len == 0 || o.repeat == 0) {
    throw ulvm::ConfigError("scan-bench sizes must be positive");
  }
  std::vector<std::size_t> chunks;
  for (const auto& c : o.chunks) {
    if (c == "L") {
      chunks.push_back(o.len);
      continue;
    }
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(c, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != c.size() || v == 0) throw ulvm::ConfigError("invalid chunk '" + c + "'");
    chunks.push_back(static_cast<std::size_t>(v));
  }

  const auto in = bench_inputs(o.d, o.n, o.len, o.seed);
  ulvm::Tensor ref;
  const double seq_ms = median_ms(o.repeat, [&] { ref = ulvm::scan::scan_sequential(in.a_bar, in.b_term); });

  Report r;
  r.table.header = {"variant", "chunk", "median_ms", "max_rel_dev"};
  r.table.row({"sequential", "-", fixed(seq_ms, 3), fixed(0.0, 1)});
  r.doc = {{"command", "scan-bench"}, {"d", o.d},           {"n", o.n},
           {"len", o.len},            {"repeat", o.repeat}, {"tolerance", kScanTolerance},
           {"sequential_ms", seq_ms}, {"variants", json::array()}};
  within = true;
  for (std::size_t chunk : chunks) {
    ulvm::Tensor h;
    const double ms =
        median_ms(o.repeat, [&] { h = ulvm::scan::scan_parallel(in.a_bar, in.b_term, chunk); });
    const double dev = max_rel_dev(h, ref);
    within = within && dev <= kScanTolerance;
    char devbuf[32];
    std::snprintf(devbuf, sizeof devbuf, "%.3e", dev);
    r.table.row({"parallel", std::to_string(chunk), fixed(ms, 3), devbuf});
    r.doc["variants"].push_back({{"chunk", chunk}, {"median_ms", ms}, {"max_rel_dev", dev}});
  }
  r.doc["within_tolerance"] = within;
  return r;
}

// ---------------------------------------------------------------- selftest

struct Check {
  std::string name;
  bool pass;
  std::string value;
  std::string expected;
};

std::uint64_t fnv_of(const ulvm::Tensor& t) {
  const auto bytes = ulvm::io::encode_pnm(ulvm::io::from_tensor(t));
  return ulvm::fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::vector<Check> run_selftest() {
  namespace acc = ulvm::accounting;
  std::vector<Check> out;
  auto exact = [&](const std::string& name, std::uint64_t got, std::uint64_t want) {
    out.push_back({name, got == want, std::to_string(got), std::to_string(want)});
  };
  auto near = [&](const std::string& name, double got, double want, double tol, int dec) {
    out.push_back({name, std::abs(got - want) <= tol, fixed(got, dec),
                   fixed(want, dec) + " +/- " + fixed(tol, dec)});
  };
  auto mamba = [](std::size_t d) {
    ulvm::MambaConfig c;
    c.d_model = d;
    return acc::mamba_params(c).total();
  };
  auto ss2d = [](std::size_t d) {
    ulvm::SS2DConfig c;
    c.d_model = d;
    return acc::ss2d_params(c).total();
  };

  exact("mamba_params(d_model=1024)", mamba(1024), 23435264);
  exact("mamba_params(d_model=256)", mamba(256), 1484288);
  exact("ss2d_params(d_model=1024)", ss2d(1024), 45504512);
  exact("ss2d_params(d_model=256)", ss2d(256), 2921984);
  near("mamba reduction 1024->256 (%)", 100.0 * (1.0 - double(mamba(256)) / double(mamba(1024))),
       93.7, 0.05, 4);
  near("ss2d reduction 1024->256 (%)", 100.0 * (1.0 - double(ss2d(256)) / double(ss2d(1024))), 93.6,
       0.05, 4);
  const auto pr = acc::parallel_reduction(1024, 4, ulvm::InnerKind::kMamba);
  near("4-branch ratio, exact", pr.exact_ratio, 0.2534, 0.0005, 4);
  near("4-branch ratio, rounded per branch", pr.rounded_ratio, 0.252, 1e-9, 3);

  ulvm::NetConfig def;
  const std::uint64_t total = acc::model_params(def).total();
  out.push_back({"default model params in [44000, 54000]", total >= 44000 && total <= 54000,
                 std::to_string(total), "[44000, 54000]"});

  double worst = 0.0;
  for (std::size_t len : {1u, 7u, 64u, 1000u}) {
    const auto in = bench_inputs(4, 16, len, 7 + len);
    const auto ref = ulvm::scan::scan_sequential(in.a_bar, in.b_term);
    for (std::size_t chunk : {std::size_t{1}, std::size_t{7}, std::size_t{64}, len}) {
      worst = std::max(worst, max_rel_dev(ulvm::scan::scan_parallel(in.a_bar, in.b_term, chunk), ref));
    }
  }
  char devbuf[32];
  std::snprintf(devbuf, sizeof devbuf, "%.3e", worst);
  out.push_back({"parallel scan matches sequential", worst <= kScanTolerance, devbuf, "<= 1e-05"});

  ulvm::NetConfig toy;
  toy.height = toy.width = 32;
  const auto w = ulvm::init_weights(toy, 1);
  ulvm::SplitMix64 rng(2);
  ulvm::Tensor img({3, 32, 32});
  for (float& v : img.data()) v = rng.uniform01();
  const auto a = ulvm::net_forward(toy, w, img);
  const auto b = ulvm::net_forward(toy, w, img);
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv_of(a)));
  out.push_back({"32x32 inference is deterministic", ulvm::bitwise_equal(a, b), hash, "repeatable"});
  return out;
}

Report cmd_selftest(bool& ok) {
  const auto checks = run_selftest();
  Report r;
  r.table.header = {"status", "check", "value", "expected"};
  r.doc["command"] = "selftest";
  r.doc["checks"] = json::array();
  std::size_t passed = 0;
  for (const auto& c : checks) {
    passed += c.pass;
    r.table.row({c.pass ? "PASS" : "FAIL", c.name, c.value, c.expected});
    r.doc["checks"].push_back({{"name", c.name},
                               {"status", c.pass ? "PASS" : "FAIL"},
                               {"value", c.value},
                               {"expected", c.expected}});
  }
  r.doc["passed"] = passed;
  r.doc["total"] = checks.size();
  ok = passed == checks.size();
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ulvm: parallel vision Mamba U-Net toolkit"};
  app.footer(kHelpFooter);
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  std::string format = "text";
  app.add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"text", "json", "csv"}))
      ->capture_default_str();

  ParamsOpts po;
  auto* params = app.add_subcommand("params", "Itemized exact parameter census");
  auto* p_config = params->add_option("--config", po.config, "Run config JSON (whole network; default config if omitted)")
                       ->check(CLI::ExistingFile);
  auto* p_block = params->add_option("--block", po.block, "Single block")
                      ->check(CLI::IsMember({"mamba", "ss2d", "pvm"}));
  p_config->excludes(p_block);
  auto* p_dm = params->add_option("--d-model", po.d_model, "Block width")->needs(p_block);
  params->add_option("--p", po.p, "PVM parallelism")->needs(p_block)->capture_default_str();
  params->add_option("--inner", po.inner, "PVM inner block")
      ->check(CLI::IsMember({"mamba", "ss2d"}))
      ->needs(p_block)
      ->capture_default_str();
  params->add_option("--sharing", po.sharing, "PVM branch weights")
      ->check(CLI::IsMember({"distinct", "shared"}))
      ->needs(p_block)
      ->capture_default_str();
  params->add_option("--conv-layout", po.conv, "Block conv layout")
      ->check(CLI::IsMember({"dense", "depthwise"}))
      ->needs(p_block)
      ->capture_default_str();
  params->add_option("--baseline", po.baseline, "Reference count; prints reduction");
  (void)p_dm;

  std::string f_config, f_conv;
  auto* flops = app.add_subcommand("flops", "Itemized operation count of the network");
  flops->add_option("--config", f_config, "Run config JSON")->check(CLI::ExistingFile);
  flops->add_option("--convention", f_conv, "Override flop_convention")
      ->check(CLI::IsMember({"macs", "2macs"}));

  InferOpts io;
  auto* infer = app.add_subcommand("infer", "Run the network on one PPM image");
  infer->add_option("--config", io.config, "Run config JSON")->check(CLI::ExistingFile);
  infer->add_option("--weights", io.weights, "Weight file (default: seeded init)")
      ->check(CLI::ExistingFile);
  infer->add_option("--seed", io.seed, "Override the config seed");
  infer->add_option("--image", io.image, "Input P6 image")->required()->check(CLI::ExistingFile);
  infer->add_option("--out", io.out, "Output P5 probability map")->required();

  std::string pred_dir, truth_dir;
  float threshold = 0.5f;
  auto* eval = app.add_subcommand("eval", "DSC/SE/SP/ACC over matching PGM files");
  eval->add_option("--pred", pred_dir, "Directory of predicted probability maps")->required();
  eval->add_option("--truth", truth_dir, "Directory of ground-truth masks")->required();
  eval->add_option("--threshold", threshold, "Prediction threshold")->capture_default_str();

  BenchOpts bo;
  auto* bench = app.add_subcommand("scan-bench", "Time parallel scan variants against sequential");
  bench->add_option("--d", bo.d, "Channels")->capture_default_str();
  bench->add_option("--n", bo.n, "State size")->capture_default_str();
  bench->add_option("--len", bo.len, "Sequence length")->capture_default_str();
  bench->add_option("--chunks", bo.chunks, "Block lengths; L = whole sequence")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--repeat", bo.repeat, "Timed repetitions")->capture_default_str();
  bench->add_option("--seed", bo.seed, "Input seed")->capture_default_str();

  auto* selftest = app.add_subcommand("selftest", "Reference-integer and determinism checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "ulvm: error: " << e.what() << '\n';
    return kExitUsage;
  }

  const Format fmt = format == "json" ? Format::kJson : format == "csv" ? Format::kCsv : Format::kText;
  int code = 0;
  try {
    Report r;
    if (*params) {
      r = cmd_params(po);
    } else if (*flops) {
      r = cmd_flops(f_config, f_conv);
    } else if (*infer) {
      r = cmd_infer(io);
    } else if (*eval) {
      r = cmd_eval(pred_dir, truth_dir, threshold);
    } else if (*bench) {
      bool within = true;
      r = cmd_scan_bench(bo, within);
      if (!within) code = kExitCheckFailed;
    } else if (*selftest) {
      bool ok = true;
      r = cmd_selftest(ok);
      if (!ok) code = kExitCheckFailed;
    }
    ulvm::cli::emit(std::cout, r, fmt);
  } catch (const UsageError& e) {
    std::cerr << "ulvm: error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const EmptyWork& e) {
    std::cerr << "ulvm: error: " << e.what() << '\n';
    return kExitEmpty;
  } catch (const std::exception& e) {
    std::cerr << "ulvm: error: " << e.what() << '\n';
    return kExitConfig;
  }
  return code;
}
