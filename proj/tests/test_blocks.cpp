#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "ulvm/accounting.hpp"
#include "ulvm/errors.hpp"
#include "ulvm/mamba.hpp"
#include "ulvm/pvm.hpp"
#include "ulvm/rng.hpp"
#include "ulvm/ss2d.hpp"

using ulvm::Tensor;
namespace ops = ulvm::ops;
namespace acc = ulvm::accounting;

namespace {

oracle::Vec vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST_CASE("mamba: zero weights give zero output") {
  ulvm::MambaConfig cfg;
  cfg.d_model = 8;
  const auto w = ulvm::make_mamba_weights(cfg);
  CHECK(ulvm::mamba_forward(cfg, w, oracle::random_tensor({5, 8}, 1)) == Tensor({5, 8}));
}

TEST_CASE("mamba: matches straight-line oracle") {
  for (auto conv : {ulvm::ConvLayout::kDense, ulvm::ConvLayout::kDepthwise})
    for (std::size_t dm : {4u, 8u})
      for (std::size_t len : {1u, 6u}) {
        ulvm::MambaConfig cfg;
        cfg.d_model = dm;
        cfg.conv = conv;
        const auto w = oracle::random_weights(ulvm::make_mamba_weights(cfg), cfg, 100 + dm);
        const Tensor x = oracle::random_tensor({len, dm}, 200 + len);
        CAPTURE(dm);
        CAPTURE(len);
        CHECK(oracle::rel_err(ulvm::mamba_forward(cfg, w, x), oracle::mamba(cfg, w, vec(x), len)) <=
              1e-5);
      }
}

TEST_CASE("mamba: single step unrolled by hand") {
  ulvm::MambaConfig cfg;
  cfg.d_model = 4;
  cfg.expand = 1;
  cfg.d_state = 2;
  cfg.d_conv = 2;
  cfg.conv = ulvm::ConvLayout::kDepthwise;
  const auto w = oracle::random_weights(ulvm::make_mamba_weights(cfg), cfg, 7);
  const Tensor x = oracle::random_tensor({1, 4}, 8);
  // With L = 1 the state starts at zero, so h = dt * B * u and y = C h + D u.
  const std::size_t di = 4, ns = 2, r = 1;
  double out[4] = {0, 0, 0, 0};
  double u[4], z[4];
  for (std::size_t j = 0; j < di; ++j) {
    double su = 0, sz = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      su += double(x[c]) * w.in_proj.at({c, j});
      sz += double(x[c]) * w.in_proj.at({c, di + j});
    }
    u[j] = oracle::silu(su * w.conv_weight.at({j, 1}) + w.conv_bias[j]);
    z[j] = sz;
  }
  double dbl[r + 2 * ns] = {};
  for (std::size_t q = 0; q < r + 2 * ns; ++q)
    for (std::size_t c = 0; c < di; ++c) dbl[q] += u[c] * w.x_proj.at({c, q});
  for (std::size_t c = 0; c < di; ++c) {
    const double dt = oracle::softplus(dbl[0] * w.dt_proj.at({0, c}) + w.dt_proj_bias[c]);
    double y = w.D[c] * u[c];
    for (std::size_t n = 0; n < ns; ++n) y += dbl[r + ns + n] * dt * dbl[r + n] * u[c];
    for (std::size_t o = 0; o < 4; ++o) out[o] += y * oracle::silu(z[c]) * w.out_proj.at({c, o});
  }
  CHECK(oracle::rel_err(ulvm::mamba_forward(cfg, w, x), oracle::Vec(out, out + 4)) <= 1e-5);
}

TEST_CASE("mamba: vm residual") {
  ulvm::MambaConfig cfg;
  cfg.d_model = 8;
  const auto zero = ulvm::make_mamba_weights(cfg);
  const Tensor x = oracle::random_tensor({6, 8}, 3);
  CHECK(ulvm::vm_forward(cfg, zero, 1.0f, x) == x);
  CHECK(ulvm::vm_forward(cfg, zero, 0.5f, x) == ops::scale(x, 0.5f));
  const auto w = oracle::random_weights(zero, cfg, 4);
  const Tensor m = ulvm::mamba_forward(cfg, w, x);
  CHECK(ulvm::vm_forward(cfg, w, 0.0f, x) == m);
  const Tensor diff = ops::axpy(ulvm::vm_forward(cfg, w, 1.7f, x), -1.0f, m);
  CHECK(oracle::rel_err(diff, ops::scale(x, 1.7f)) <= 1e-6);
  CHECK(ulvm::bitwise_equal(ulvm::mamba_forward(cfg, w, x), m));
}

TEST_CASE("mamba: shape errors") {
  ulvm::MambaConfig cfg;
  cfg.d_model = 8;
  const auto w = ulvm::make_mamba_weights(cfg);
  CHECK_THROWS_AS(ulvm::mamba_forward(cfg, w, Tensor({5, 4})), ulvm::DimensionError);
  cfg.d_state = 0;
  CHECK_THROWS_AS(cfg.validate(), ulvm::ConfigError);
}

TEST_CASE("ss2d: direction index maps") {
  const Tensor grid({1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  const Tensor seqs = ulvm::scan_expand(grid);
  const std::vector<std::vector<float>> want{{1, 2, 3, 4}, {4, 3, 2, 1}, {1, 3, 2, 4}, {4, 2, 3, 1}};
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t p = 0; p < 4; ++p) CHECK(seqs.at({k, 0, p}) == want[k][p]);

  const Tensor one = oracle::random_tensor({3, 1, 1}, 5);
  const Tensor s1 = ulvm::scan_expand(one);
  for (std::size_t k = 1; k < 4; ++k) CHECK(s1.slice0(k) == s1.slice0(0));

  for (auto [h, w] : {std::pair{3, 5}, std::pair{4, 4}, std::pair{1, 6}}) {
    const Tensor x = oracle::random_tensor({2, std::size_t(h), std::size_t(w)}, 6);
    CHECK(ulvm::scan_merge(ulvm::scan_expand(x), h, w) == ops::scale(x, 4.0f));
  }
  const auto orders = oracle::scan_orders(3, 5);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t p = 0; p < 15; ++p) CHECK(ulvm::direction_index(k, p, 3, 5) == orders[k][p]);
}

TEST_CASE("ss2d: zero weights give zero output") {
  ulvm::SS2DConfig cfg;
  cfg.d_model = 4;
  CHECK(ulvm::vss_forward(cfg, ulvm::make_vss_weights(cfg), oracle::random_tensor({2, 2, 4}, 7)) ==
        Tensor({2, 2, 4}));
}

TEST_CASE("ss2d: matches per-direction oracle") {
  for (auto conv : {ulvm::ConvLayout::kDense, ulvm::ConvLayout::kDepthwise})
    for (std::size_t dm : {4u, 8u})
      for (auto [h, wd] : {std::pair{1, 1}, std::pair{2, 2}, std::pair{3, 4}, std::pair{4, 4}}) {
        ulvm::SS2DConfig cfg;
        cfg.d_model = dm;
        cfg.conv = conv;
        const auto w = oracle::random_weights(ulvm::make_vss_weights(cfg), cfg, 300 + dm);
        const Tensor x = oracle::random_tensor({std::size_t(h), std::size_t(wd), dm}, 400 + h * wd);
        CAPTURE(dm);
        CAPTURE(h);
        CAPTURE(wd);
        CHECK(oracle::rel_err(ulvm::vss_forward(cfg, w, x), oracle::vss(cfg, w, vec(x), h, wd)) <=
              1e-5);
      }
}

TEST_CASE("ss2d: config validation") {
  ulvm::SS2DConfig cfg;
  cfg.d_conv = 4;
  CHECK_THROWS_AS(cfg.validate(), ulvm::ConfigError);
  cfg.d_conv = 3;
  cfg.directions = 2;
  CHECK_THROWS_AS(cfg.validate(), ulvm::ConfigError);
}

TEST_CASE("pvm: matches straight-line oracle") {
  for (auto kind : {ulvm::InnerKind::kMamba, ulvm::InnerKind::kSS2D})
    for (auto sharing : {ulvm::BranchSharing::kDistinct, ulvm::BranchSharing::kShared})
      for (std::size_t c : {4u, 8u})
        for (std::size_t p : {1u, 2u, 4u}) {
          ulvm::PVMConfig cfg;
          cfg.channels = c;
          cfg.out_channels = c + 4;
          cfg.parallelism = p;
          cfg.inner_kind = kind;
          cfg.sharing = sharing;
          const auto w = oracle::random_weights(ulvm::make_pvm_weights(cfg), cfg, 500 + c * p);
          const Tensor x = oracle::random_tensor({3, 4, c}, 600 + p);
          CAPTURE(c);
          CAPTURE(p);
          CAPTURE(ulvm::to_string(kind));
          CAPTURE(ulvm::to_string(sharing));
          const Tensor y = ulvm::pvm_forward(cfg, w, x);
          CHECK(y.shape() == ulvm::Shape{3, 4, c + 4});
          CHECK(oracle::rel_err(y, oracle::pvm(cfg, w, x)) <= 1e-5);
        }
}

TEST_CASE("pvm: threaded branches match oracle") {
  ulvm::PVMConfig cfg;
  cfg.channels = 16;
  cfg.parallelism = 4;
  cfg.conv = ulvm::ConvLayout::kDepthwise;
  const auto w = oracle::random_weights(ulvm::make_pvm_weights(cfg), cfg, 9);
  const Tensor x = oracle::random_tensor({16, 16, 16}, 10);
  const Tensor y = ulvm::pvm_forward(cfg, w, x);
  CHECK(oracle::rel_err(y, oracle::pvm(cfg, w, x)) <= 1e-5);
  CHECK(ulvm::bitwise_equal(y, ulvm::pvm_forward(cfg, w, x)));
}

TEST_CASE("pvm: single branch equals vm on the whole tensor") {
  ulvm::PVMConfig cfg;
  cfg.channels = 8;
  cfg.parallelism = 1;
  auto w = oracle::random_weights(ulvm::make_pvm_weights(cfg), cfg, 11);
  w.proj = Tensor::identity(8);
  const Tensor x = oracle::random_tensor({2, 3, 8}, 12);
  const Tensor flat = x.reshaped({6, 8});
  const Tensor inner = ops::layernorm(flat, w.ln_in_gamma, w.ln_in_beta);
  const Tensor vm = ulvm::vm_forward(cfg.mamba_config(), std::get<ulvm::MambaWeights>(w.branches[0]),
                                     w.theta[0], inner);
  const Tensor want = ops::layernorm(vm, w.ln_out_gamma, w.ln_out_beta);
  CHECK(oracle::rel_err(ulvm::pvm_forward(cfg, w, x), want) <= 1e-6);
}

TEST_CASE("pvm: zeroed branches agree across parallelism") {
  const Tensor x = oracle::random_tensor({3, 3, 16}, 13);
  std::vector<Tensor> outs;
  for (std::size_t p : {1u, 2u, 4u}) {
    ulvm::PVMConfig cfg;
    cfg.channels = 16;
    cfg.parallelism = p;
    auto w = ulvm::make_pvm_weights(cfg);
    w.proj = Tensor::identity(16);
    outs.push_back(ulvm::pvm_forward(cfg, w, x));
  }
  CHECK(outs[0] == outs[1]);
  CHECK(outs[0] == outs[2]);
  const Tensor ln = ops::layernorm(ops::layernorm(x.reshaped({9, 16}), Tensor({16}, 1.0f),
                                                  Tensor({16})),
                                   Tensor({16}, 1.0f), Tensor({16}));
  CHECK(outs[0] == ln.reshaped({3, 3, 16}));
}

TEST_CASE("pvm: channel conservation and errors") {
  for (std::size_t p : {1u, 2u, 4u, 8u}) {
    ulvm::PVMConfig cfg;
    cfg.channels = 16;
    cfg.parallelism = p;
    const auto w = oracle::random_weights(ulvm::make_pvm_weights(cfg), cfg, 14);
    CHECK(ulvm::pvm_forward(cfg, w, oracle::random_tensor({2, 2, 16}, 15)).shape() ==
          ulvm::Shape{2, 2, 16});
  }
  ulvm::PVMConfig bad;
  bad.channels = 10;
  bad.parallelism = 4;
  CHECK_THROWS_AS(bad.validate(), ulvm::ConfigError);
  CHECK_THROWS_AS(ulvm::make_pvm_weights(bad), ulvm::ConfigError);
  ulvm::PVMConfig cfg;
  cfg.channels = 8;
  CHECK_THROWS_AS(ulvm::pvm_forward(cfg, ulvm::make_pvm_weights(cfg), Tensor({2, 2, 6})),
                  ulvm::DimensionError);
}

TEST_CASE("census identity: blocks") {
  for (std::size_t dm : {8u, 16u, 64u, 256u})
    for (auto conv : {ulvm::ConvLayout::kDense, ulvm::ConvLayout::kDepthwise}) {
      CAPTURE(dm);
      ulvm::MambaConfig m;
      m.d_model = dm;
      m.conv = conv;
      CHECK(ulvm::element_count(ulvm::make_mamba_weights(m)) == acc::mamba_params(m).total());
      ulvm::SS2DConfig s;
      s.d_model = dm;
      s.conv = conv;
      CHECK(ulvm::element_count(ulvm::make_vss_weights(s)) == acc::ss2d_params(s).total());
      for (auto kind : {ulvm::InnerKind::kMamba, ulvm::InnerKind::kSS2D})
        for (auto sharing : {ulvm::BranchSharing::kDistinct, ulvm::BranchSharing::kShared})
          for (std::size_t p : {1u, 2u, 4u}) {
            ulvm::PVMConfig c;
            c.channels = dm;
            c.parallelism = p;
            c.inner_kind = kind;
            c.sharing = sharing;
            c.conv = conv;
            CHECK(ulvm::element_count(ulvm::make_pvm_weights(c)) == acc::pvm_params(c).total());
          }
    }
}
