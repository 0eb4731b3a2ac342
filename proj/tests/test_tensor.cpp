#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "ulvm/errors.hpp"
#include "ulvm/tensor.hpp"

using ulvm::DimensionError;
using ulvm::Tensor;
namespace ops = ulvm::ops;

TEST_CASE("tensor: shape invariants") {
  CHECK_THROWS_AS(Tensor(ulvm::Shape{}), DimensionError);
  CHECK_THROWS_AS(Tensor({1, 2, 3, 4, 5}), DimensionError);
  CHECK_THROWS_AS(Tensor({3, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>{1, 2, 3}), DimensionError);
  Tensor t({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.rank() == 3);
  t.at({1, 2, 3}) = 5.0f;
  CHECK(t[23] == 5.0f);
  CHECK_THROWS_AS(t.at({2, 0, 0}), DimensionError);
  CHECK_THROWS_AS(t.reshaped({5, 5}), DimensionError);
  CHECK(t.reshaped({6, 4})[23] == 5.0f);
  CHECK(t.slice0(1).shape() == ulvm::Shape{3, 4});
}

TEST_CASE("tensor: matmul") {
  const Tensor i3 = Tensor::identity(3);
  CHECK(ops::matmul(i3, i3) == i3);
  const Tensor a({2, 2}, std::vector<float>{1, 2, 3, 4});
  CHECK(ops::matmul(a, Tensor::identity(2)) == a);
  const Tensor x = oracle::random_tensor({4, 5}, 1), y = oracle::random_tensor({5, 3}, 2);
  CHECK(oracle::rel_err(ops::matmul(x, y), oracle::matmul(x, y)) <= 1e-6);
  CHECK_THROWS_AS(ops::matmul(x, x), DimensionError);
  CHECK_THROWS_AS(ops::matmul(Tensor({4}), y), DimensionError);
}

TEST_CASE("tensor: elementwise ops reject shape mismatch") {
  CHECK_THROWS_AS(ops::add(Tensor({2, 3}), Tensor({3, 2})), DimensionError);
  CHECK_THROWS_AS(ops::mul(Tensor({6}), Tensor({2, 3})), DimensionError);
}

TEST_CASE("tensor: activations") {
  CHECK(ops::silu(0.0f) == 0.0f);
  CHECK(ops::sigmoid(0.0f) == 0.5f);
  CHECK(ops::softplus(0.0f) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(std::abs(ops::softplus(30.0f) - 30.0f) <= 1e-6f);
  CHECK(std::isfinite(ops::softplus(200.0f)));
  for (float v : {-8.0f, -1.5f, -0.2f, 0.3f, 2.0f, 7.5f}) {
    CHECK(ops::sigmoid(v) + ops::sigmoid(-v) == doctest::Approx(1.0).epsilon(1e-6));
  }
  const Tensor r = ops::relu(Tensor({3}, std::vector<float>{-1, 0, 2}));
  CHECK(r == Tensor({3}, std::vector<float>{0, 0, 2}));
}

TEST_CASE("tensor: conv1d depthwise") {
  const Tensor x = oracle::random_tensor({2, 6}, 3);
  Tensor delta({2, 4});
  delta.at({0, 3}) = delta.at({1, 3}) = 1.0f;
  CHECK(ops::conv1d_depthwise(x, delta, Tensor({2}), 3) == x);

  const Tensor zk({2, 4}), bias({2}, std::vector<float>{0.5f, -2.0f});
  const Tensor flat = ops::conv1d_depthwise(x, zk, bias, 3);
  for (std::size_t t = 0; t < 6; ++t) {
    CHECK(flat.at({0, t}) == 0.5f);
    CHECK(flat.at({1, t}) == -2.0f);
  }

  const Tensor k = oracle::random_tensor({2, 4}, 4), b = oracle::random_tensor({2}, 5);
  const oracle::Vec xv(x.data().begin(), x.data().end());
  CHECK(oracle::rel_err(ops::conv1d_depthwise(x, k, b, 3),
                        oracle::conv1d_causal_depthwise(xv, 2, 6, k, b)) <= 1e-6);
  CHECK_THROWS_AS(ops::conv1d_depthwise(x, Tensor({3, 4}), b, 3), DimensionError);
}

TEST_CASE("tensor: conv1d dense") {
  const Tensor x = oracle::random_tensor({3, 7}, 6);
  const Tensor k = oracle::random_tensor({3, 3, 4}, 7), b = oracle::random_tensor({3}, 8);
  const oracle::Vec xv(x.data().begin(), x.data().end());
  CHECK(oracle::rel_err(ops::conv1d(x, k, b, 3), oracle::conv1d_causal_dense(xv, 3, 7, k, b)) <=
        1e-6);
}

TEST_CASE("tensor: conv2d") {
  const Tensor x = oracle::random_tensor({1, 4, 5}, 9);
  CHECK(ops::conv2d(x, Tensor({1, 1, 1, 1}, 1.0f), Tensor({1}), 0) == x);

  const Tensor zero = ops::conv2d(x, Tensor({2, 1, 3, 3}), Tensor({2}, 0.25f), 1);
  for (float v : zero.data()) CHECK(v == 0.25f);

  const Tensor x3 = oracle::random_tensor({3, 5, 5}, 10);
  const Tensor k = oracle::random_tensor({2, 3, 3, 3}, 11), b = oracle::random_tensor({2}, 12);
  const Tensor valid = ops::conv2d(x3, k, b, 0);
  CHECK(valid.shape() == ulvm::Shape{2, 3, 3});
  CHECK(oracle::rel_err(valid, oracle::conv2d(x3, k, b, 0)) <= 1e-6);
  CHECK(oracle::rel_err(ops::conv2d(x3, k, b, 1), oracle::conv2d(x3, k, b, 1)) <= 1e-6);

  const Tensor big = oracle::random_tensor({2, 8, 8}, 13);
  const Tensor k7 = oracle::random_tensor({1, 2, 7, 7}, 14), b1 = oracle::random_tensor({1}, 15);
  const Tensor dil = ops::conv2d(big, k7, b1, 9, 3);
  CHECK(dil.shape() == ulvm::Shape{1, 8, 8});
  CHECK(oracle::rel_err(dil, oracle::conv2d(big, k7, b1, 9, 3)) <= 1e-6);
  CHECK_THROWS_AS(ops::conv2d(x3, Tensor({2, 2, 3, 3}), b, 1), DimensionError);
}

TEST_CASE("tensor: conv2d depthwise equals per-channel dense conv") {
  const Tensor x = oracle::random_tensor({3, 4, 4}, 16);
  const Tensor k = oracle::random_tensor({3, 3, 3}, 17), b = oracle::random_tensor({3}, 18);
  Tensor dense({3, 3, 3, 3});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 9; ++i) dense[(c * 3 + c) * 9 + i] = k[c * 9 + i];
  CHECK(oracle::rel_err(ops::conv2d_depthwise(x, k, b, 1), oracle::conv2d(x, dense, b, 1)) <= 1e-6);
}

TEST_CASE("tensor: pooling and resampling") {
  const Tensor c = Tensor::full({2, 4, 4}, 1.5f);
  CHECK(ops::maxpool2(c) == Tensor::full({2, 2, 2}, 1.5f));
  CHECK(ops::upsample2_nearest(c) == Tensor::full({2, 8, 8}, 1.5f));
  CHECK(ops::avgpool_global(c) == Tensor::full({2}, 1.5f));

  const Tensor q({1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  CHECK(ops::maxpool2(q) == Tensor({1, 1, 1}, std::vector<float>{4}));
  CHECK(ops::avgpool_global(q)[0] == 2.5f);

  const Tensor x = oracle::random_tensor({3, 3, 5}, 19);
  CHECK(ops::maxpool2(ops::upsample2_nearest(x)) == x);
  CHECK_THROWS_AS(ops::maxpool2(x), DimensionError);
}

TEST_CASE("tensor: layernorm") {
  const Tensor x = oracle::random_tensor({4, 8}, 20, -3.0f, 3.0f);
  const Tensor g({8}, 1.0f), b({8});
  const Tensor y = ops::layernorm(x, g, b);
  for (std::size_t i = 0; i < 4; ++i) {
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < 8; ++j) mean += y[i * 8 + j];
    mean /= 8;
    for (std::size_t j = 0; j < 8; ++j) var += (y[i * 8 + j] - mean) * (y[i * 8 + j] - mean);
    var /= 8;
    CHECK(std::abs(mean) <= 1e-6);
    CHECK(std::abs(var - 1.0) <= 1e-4);
  }
  CHECK(ops::layernorm(Tensor::full({3, 8}, 7.0f), g, b) == Tensor({3, 8}));

  const Tensor gr = oracle::random_tensor({8}, 21), br = oracle::random_tensor({8}, 22);
  CHECK(oracle::rel_err(ops::layernorm(x, gr, br),
                        oracle::layernorm_rows(oracle::Vec(x.data().begin(), x.data().end()), 4, 8,
                                               gr, br)) <= 1e-5);
  CHECK_THROWS_AS(ops::layernorm(x, Tensor({4}, 1.0f), Tensor({4})), DimensionError);
}

TEST_CASE("tensor: split/concat/layout round trips") {
  const Tensor x = oracle::random_tensor({3, 8}, 23);
  for (std::size_t p : {1u, 2u, 4u}) {
    const auto parts = ops::split_last(x, p);
    CHECK(parts.size() == p);
    CHECK(parts[0].dim(1) == 8 / p);
    CHECK(ops::concat_last(parts) == x);
  }
  CHECK_THROWS_AS(ops::split_last(x, 3), ulvm::ConfigError);
  const Tensor chw = oracle::random_tensor({3, 2, 4}, 24);
  CHECK(ops::hwc_to_chw(ops::chw_to_hwc(chw)) == chw);
  CHECK(ops::chw_to_hwc(chw).at({1, 3, 2}) == chw.at({2, 1, 3}));
  CHECK(ops::transpose(ops::transpose(x)) == x);
}

TEST_CASE("tensor: ops are pure") {
  const Tensor x = oracle::random_tensor({2, 6, 6}, 25);
  const Tensor k = oracle::random_tensor({3, 2, 3, 3}, 26), b = oracle::random_tensor({3}, 27);
  CHECK(ulvm::bitwise_equal(ops::conv2d(x, k, b, 1), ops::conv2d(x, k, b, 1)));
}
