#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "ulvm/errors.hpp"
#include "ulvm/selective_scan.hpp"

using ulvm::Tensor;
namespace scan = ulvm::scan;

namespace {

// Random valid scan inputs: dt in [1e-3, 1e-1], A in [-N, -1].
scan::ScanInputs random_inputs(std::size_t d, std::size_t n, std::size_t len, std::uint64_t seed) {
  ulvm::SplitMix64 rng(seed);
  scan::ScanInputs in{Tensor({d, len}), Tensor({d, n}), Tensor({n, len}),
                      Tensor({n, len}), Tensor({d}),    Tensor({d, len})};
  for (float& v : in.dt.data()) v = std::exp(rng.uniform(std::log(1e-3f), std::log(1e-1f)));
  for (float& v : in.A.data()) v = -std::exp(rng.uniform(0.0f, std::log(float(n))));
  for (Tensor* t : {&in.B, &in.C, &in.d_skip, &in.x})
    for (float& v : t->data()) v = rng.uniform(-1.0f, 1.0f);
  return in;
}

}  // namespace

TEST_CASE("scan: discretize") {
  const Tensor one({1, 1}, 1.0f);
  const auto d = scan::discretize(one, Tensor({1, 1}, -1.0f), one, one);
  CHECK(d.a_bar[0] == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK(d.b_term[0] == doctest::Approx(1.0));

  const auto small = scan::discretize(Tensor({1, 1}, 1e-7f), Tensor({1, 1}, -1.0f), one, one);
  CHECK(std::abs(small.a_bar[0] - 1.0f) <= 1e-5f);
  CHECK(std::abs(small.b_term[0]) <= 1e-5f);

  const auto in = random_inputs(2, 3, 4, 1);
  const auto r = scan::discretize(in.dt, in.A, in.B, in.x);
  CHECK(r.a_bar.shape() == ulvm::Shape{2, 3, 4});
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t n = 0; n < 3; ++n)
      for (std::size_t t = 0; t < 4; ++t) {
        const double dt = in.dt.at({c, t});
        CHECK(r.a_bar.at({c, n, t}) ==
              doctest::Approx(std::exp(dt * in.A.at({c, n}))).epsilon(1e-6));
        CHECK(r.b_term.at({c, n, t}) ==
              doctest::Approx(dt * in.B.at({n, t}) * in.x.at({c, t})).epsilon(1e-6));
      }

  CHECK_THROWS_AS(scan::discretize(Tensor({1, 1}), Tensor({1, 1}, -1.0f), one, one),
                  ulvm::DomainError);
}

TEST_CASE("scan: sequential closed forms") {
  const Tensor ones({2, 3, 5}, 1.0f);
  const Tensor h = scan::scan_sequential(ones, ones);
  for (std::size_t t = 0; t < 5; ++t) CHECK(h.at({1, 2, t}) == float(t + 1));

  const Tensor b = oracle::random_tensor({2, 2, 6}, 2);
  CHECK(scan::scan_sequential(Tensor({2, 2, 6}), b) == b);

  const Tensor a = oracle::random_tensor({3, 2, 16}, 3, 0.0f, 1.0f), bb = oracle::random_tensor({3, 2, 16}, 4);
  CHECK(oracle::rel_err(scan::scan_sequential(a, bb), oracle::scan_closed_form(a, bb)) <= 1e-5);
}

TEST_CASE("scan: combine is associative") {
  ulvm::SplitMix64 rng(5);
  for (int i = 0; i < 200; ++i) {
    scan::ScanElement e[3];
    for (auto& x : e) x = {rng.uniform(0.0f, 1.0f), rng.uniform(-1.0f, 1.0f)};
    const auto l = scan::combine(scan::combine(e[0], e[1]), e[2]);
    const auto r = scan::combine(e[0], scan::combine(e[1], e[2]));
    CHECK(std::abs(l.a - r.a) <= 1e-6f * std::max(1.0f, std::abs(l.a)));
    CHECK(std::abs(l.b - r.b) <= 1e-6f * std::max(1.0f, std::abs(l.b)));
  }
  constexpr scan::ScanElement id{};
  constexpr scan::ScanElement e{0.5f, 2.0f};
  static_assert(scan::combine(id, e).a == e.a && scan::combine(id, e).b == e.b);
  static_assert(scan::combine(e, id).a == e.a && scan::combine(e, id).b == e.b);
}

TEST_CASE("scan: parallel matches sequential") {
  for (std::size_t len : {1u, 2u, 7u, 64u, 1024u}) {
    const auto in = random_inputs(4, 16, len, 10 + len);
    const auto d = scan::discretize(in.dt, in.A, in.B, in.x);
    const Tensor ref = scan::scan_sequential(d.a_bar, d.b_term);
    for (std::size_t chunk : {std::size_t{1}, std::size_t{7}, std::size_t{64}, len, len + 5}) {
      CAPTURE(len);
      CAPTURE(chunk);
      CHECK(oracle::rel_err(scan::scan_parallel(d.a_bar, d.b_term, chunk), ref) <= 1e-5);
    }
  }
  const Tensor b = oracle::random_tensor({1, 1, 1}, 6);
  CHECK(scan::scan_parallel(Tensor({1, 1, 1}, 0.3f), b, 4) == b);
  CHECK_THROWS_AS(scan::scan_parallel(b, b, 0), ulvm::ConfigError);
}

TEST_CASE("scan: result independent of chunk size") {
  const auto in = random_inputs(3, 16, 300, 7);
  const auto d = scan::discretize(in.dt, in.A, in.B, in.x);
  const Tensor base = scan::scan_parallel(d.a_bar, d.b_term, 300);
  for (std::size_t chunk : {1u, 7u, 64u}) {
    CHECK(oracle::rel_err(scan::scan_parallel(d.a_bar, d.b_term, chunk), base) <= 1e-6);
  }
}

TEST_CASE("scan: linearity in b") {
  const Tensor a = oracle::random_tensor({2, 4, 50}, 8, 0.0f, 1.0f);
  const Tensor b1 = oracle::random_tensor({2, 4, 50}, 9), b2 = oracle::random_tensor({2, 4, 50}, 10);
  const float alpha = 0.75f, beta = -1.25f;
  const Tensor lhs = scan::scan_sequential(a, ulvm::ops::axpy(ulvm::ops::scale(b1, alpha), beta, b2));
  const Tensor rhs = ulvm::ops::axpy(ulvm::ops::scale(scan::scan_sequential(a, b1), alpha), beta,
                                     scan::scan_sequential(a, b2));
  CHECK(oracle::rel_err(lhs, rhs) <= 1e-5);
}

TEST_CASE("scan: bounded accumulation") {
  const auto in = random_inputs(4, 8, 200, 11);
  const auto d = scan::discretize(in.dt, in.A, in.B, in.x);
  for (float v : d.a_bar.data()) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
  const Tensor h = scan::scan_parallel(d.a_bar, d.b_term, 16);
  const std::size_t len = 200, lanes = h.size() / len;
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    double bound = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      bound += std::abs(d.b_term[lane * len + t]);
      CHECK(std::abs(h[lane * len + t]) <= bound * (1 + 1e-5) + 1e-12);
    }
  }
}

TEST_CASE("scan: output readout") {
  const auto in = random_inputs(2, 3, 5, 12);
  const auto d = scan::discretize(in.dt, in.A, in.B, in.x);
  const Tensor h = scan::scan_sequential(d.a_bar, d.b_term);

  const Tensor skip = scan::ssm_output(h, Tensor({3, 5}), in.d_skip, in.x);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t t = 0; t < 5; ++t) CHECK(skip.at({c, t}) == in.d_skip[c] * in.x.at({c, t}));
  CHECK(scan::ssm_output(Tensor({2, 3, 5}), in.C, Tensor({2}), in.x) == Tensor({2, 5}));

  const Tensor y = scan::ssm_output(h, in.C, in.d_skip, in.x);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t t = 0; t < 5; ++t) {
      double want = double(in.d_skip[c]) * in.x.at({c, t});
      for (std::size_t n = 0; n < 3; ++n) want += double(in.C.at({n, t})) * h.at({c, n, t});
      CHECK(y.at({c, t}) == doctest::Approx(want).epsilon(1e-6));
    }
  CHECK(scan::selective_scan(in) == y);
}
