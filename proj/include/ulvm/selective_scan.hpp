#pragma once

#include <cstddef>

#include "ulvm/tensor.hpp"

namespace ulvm::scan {

/// Inputs of one selective-scan invocation.
///
/// D channels, N state dimensions, L time steps:
///   dt[D x L] > 0, A[D x N] < 0, B[N x L], C[N x L], d_skip[D], x[D x L].
struct ScanInputs {
  Tensor dt;
  Tensor A;
  Tensor B;
  Tensor C;
  Tensor d_skip;
  Tensor x;
};

struct Discretized {
  Tensor a_bar;   // [D x N x L], exp(dt * A)
  Tensor b_term;  // [D x N x L], dt * B * x
};

/// One element of the first-order linear recurrence h = a*h_prev + b.
struct ScanElement {
  float a = 1.0f;
  float b = 0.0f;
};

/// Associative composition: applying `first` then `second`.
/// (a1,b1) (+) (a2,b2) = (a2*a1, a2*b1 + b2). The identity is (1, 0).
constexpr ScanElement combine(ScanElement first, ScanElement second) noexcept {
  return {second.a * first.a, second.a * first.b + second.b};
}

/// Zero-order hold on A and Euler on B. Throws DomainError on dt <= 0.
Discretized discretize(const Tensor& dt, const Tensor& A, const Tensor& B, const Tensor& x);

/// Reference recurrence h_t = a_t * h_{t-1} + b_t with h_{-1} = 0.
Tensor scan_sequential(const Tensor& a_bar, const Tensor& b_term);

/// Same contract as scan_sequential, computed with a work-efficient
/// (up-sweep / down-sweep) tree over blocks of `chunk` steps. Carries are
/// threaded sequentially between blocks, so chunk == L is a single tree over
/// the whole sequence and chunk == 1 degenerates to the sequential loop.
/// Lanes (d, n) are distributed over worker threads.
Tensor scan_parallel(const Tensor& a_bar, const Tensor& b_term, std::size_t chunk);

/// y[d,t] = sum_n C[n,t] * h[d,n,t] + d_skip[d] * x[d,t].
Tensor ssm_output(const Tensor& h, const Tensor& C, const Tensor& d_skip, const Tensor& x);

/// discretize -> scan_sequential -> ssm_output.
Tensor selective_scan(const ScanInputs& in);

}  // namespace ulvm::scan
