#include "ulvm/selective_scan.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <thread>
#include <vector>

namespace ulvm::scan {

namespace {

void require_scan_pair(const Tensor& a_bar, const Tensor& b_term, const char* op) {
  if (a_bar.rank() != 3) {
    throw DimensionError(std::string(op) + ": expected [D x N x L], got " +
                         shape_to_string(a_bar.shape()));
  }
  require_same_shape(a_bar, b_term, op);
}

// Exclusive-then-inclusive tree scan over one block held in `buf` (size is a
// power of two, tail padded with identities).
void blelloch_inclusive(std::vector<ScanElement>& buf, std::vector<ScanElement>& orig) {
  const std::size_t n = buf.size();
  orig.assign(buf.begin(), buf.end());
  for (std::size_t stride = 1; stride < n; stride *= 2) {
    for (std::size_t i = 2 * stride - 1; i < n; i += 2 * stride) {
      buf[i] = combine(buf[i - stride], buf[i]);
    }
  }
  buf[n - 1] = ScanElement{};
  for (std::size_t stride = n / 2; stride >= 1; stride /= 2) {
    for (std::size_t i = 2 * stride - 1; i < n; i += 2 * stride) {
      const ScanElement left = buf[i - stride];
      buf[i - stride] = buf[i];
      buf[i] = combine(buf[i], left);
    }
  }
  for (std::size_t i = 0; i < n; ++i) buf[i] = combine(buf[i], orig[i]);
}

void scan_lane(const float* a, const float* b, float* h, std::size_t len, std::size_t chunk,
               std::vector<ScanElement>& buf, std::vector<ScanElement>& scratch) {
  float carry = 0.0f;
  for (std::size_t start = 0; start < len; start += chunk) {
    const std::size_t m = std::min(chunk, len - start);
    buf.assign(std::bit_ceil(m), ScanElement{});
    for (std::size_t j = 0; j < m; ++j) buf[j] = {a[start + j], b[start + j]};
    blelloch_inclusive(buf, scratch);
    for (std::size_t j = 0; j < m; ++j) h[start + j] = buf[j].a * carry + buf[j].b;
    carry = h[start + m - 1];
  }
}

}  // namespace

Discretized discretize(const Tensor& dt, const Tensor& A, const Tensor& B, const Tensor& x) {
  if (dt.rank() != 2 || A.rank() != 2 || B.rank() != 2) {
    throw DimensionError("discretize: dt, A and B must be rank 2");
  }
  const std::size_t d = dt.dim(0), len = dt.dim(1), n = A.dim(1);
  require_same_shape(dt, x, "discretize (dt vs x)");
  if (A.dim(0) != d || B.dim(0) != n || B.dim(1) != len) {
    throw DimensionError("discretize: inconsistent shapes dt " + shape_to_string(dt.shape()) +
                         ", A " + shape_to_string(A.shape()) + ", B " +
                         shape_to_string(B.shape()));
  }
  for (float v : dt.data()) {
    if (!(v > 0.0f)) throw DomainError("discretize: step size must be positive, got " +
                                       std::to_string(v));
  }
  Discretized out{Tensor({d, n, len}), Tensor({d, n, len})};
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t s = 0; s < n; ++s) {
      const float a = A[c * n + s];
      float* abar = out.a_bar.data().data() + (c * n + s) * len;
      float* bterm = out.b_term.data().data() + (c * n + s) * len;
      for (std::size_t t = 0; t < len; ++t) {
        const float step = dt[c * len + t];
        abar[t] = std::exp(step * a);
        bterm[t] = step * B[s * len + t] * x[c * len + t];
      }
    }
  }
  return out;
}

Tensor scan_sequential(const Tensor& a_bar, const Tensor& b_term) {
  require_scan_pair(a_bar, b_term, "scan_sequential");
  const std::size_t len = a_bar.dim(2);
  const std::size_t lanes = a_bar.dim(0) * a_bar.dim(1);
  Tensor h(a_bar.shape());
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    const float* a = a_bar.data().data() + lane * len;
    const float* b = b_term.data().data() + lane * len;
    float* out = h.data().data() + lane * len;
    float state = 0.0f;
    for (std::size_t t = 0; t < len; ++t) {
      state = a[t] * state + b[t];
      out[t] = state;
    }
  }
  return h;
}

Tensor scan_parallel(const Tensor& a_bar, const Tensor& b_term, std::size_t chunk) {
  require_scan_pair(a_bar, b_term, "scan_parallel");
  if (chunk == 0) throw ConfigError("scan_parallel: chunk must be >= 1");
  const std::size_t len = a_bar.dim(2);
  const std::size_t lanes = a_bar.dim(0) * a_bar.dim(1);
  chunk = std::min(chunk, len);
  Tensor h(a_bar.shape());

  auto run = [&](std::size_t first, std::size_t last) {
    std::vector<ScanElement> buf, scratch;
    for (std::size_t lane = first; lane < last; ++lane) {
      scan_lane(a_bar.data().data() + lane * len, b_term.data().data() + lane * len,
                h.data().data() + lane * len, len, chunk, buf, scratch);
    }
  };

  // Lanes are independent, so the result does not depend on how they are split.
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = (lanes * len < (1u << 15)) ? 1 : std::min(hw, lanes);
  if (workers <= 1) {
    run(0, lanes);
    return h;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t per = (lanes + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t first = w * per;
    const std::size_t last = std::min(lanes, first + per);
    if (first < last) pool.emplace_back(run, first, last);
  }
  pool.clear();  // join
  return h;
}

Tensor ssm_output(const Tensor& h, const Tensor& C, const Tensor& d_skip, const Tensor& x) {
  if (h.rank() != 3 || C.rank() != 2 || x.rank() != 2) {
    throw DimensionError("ssm_output: expected h[D x N x L], C[N x L], x[D x L]");
  }
  const std::size_t d = h.dim(0), n = h.dim(1), len = h.dim(2);
  if (C.dim(0) != n || C.dim(1) != len || x.dim(0) != d || x.dim(1) != len ||
      d_skip.size() != d) {
    throw DimensionError("ssm_output: inconsistent shapes h " + shape_to_string(h.shape()) +
                         ", C " + shape_to_string(C.shape()) + ", x " +
                         shape_to_string(x.shape()) + ", D " + shape_to_string(d_skip.shape()));
  }
  Tensor y({d, len});
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t t = 0; t < len; ++t) {
      float acc = 0.0f;
      for (std::size_t s = 0; s < n; ++s) acc += C[s * len + t] * h[(c * n + s) * len + t];
      y[c * len + t] = acc + d_skip[c] * x[c * len + t];
    }
  }
  return y;
}

Tensor selective_scan(const ScanInputs& in) {
  auto disc = discretize(in.dt, in.A, in.B, in.x);
  auto h = scan_sequential(disc.a_bar, disc.b_term);
  return ssm_output(h, in.C, in.d_skip, in.x);
}

}  // namespace ulvm::scan
