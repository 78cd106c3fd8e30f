#pragma once

// Dense kernels used by the tape ops. Every kernel exists twice: a plain
// serial reference and an OpenMP version that splits the work by output row.
// Both call the same per-row routine, so each output element sees the same
// sequence of floating-point operations and the two paths agree bit for bit.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <omp.h>

namespace nrel::kernels {

struct Exec {
  int threads = 1;
  bool parallel() const { return threads > 1; }
};

/// Row groups for neighbor sums: output row r is the ordered sum of input rows
/// indices[offsets[r]] .. indices[offsets[r+1]-1]. The transposed lists let the
/// backward pass gather instead of scatter, preserving the accumulation order.
struct Segments {
  std::size_t num_inputs = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> indices;
  std::vector<std::size_t> t_offsets{0};
  std::vector<std::size_t> t_segments;

  std::size_t num_segments() const { return offsets.size() - 1; }

  static Segments from_lists(const std::vector<std::vector<std::size_t>>& lists, std::size_t num_inputs) {
    Segments s;
    s.num_inputs = num_inputs;
    for (const auto& l : lists) {
      s.indices.insert(s.indices.end(), l.begin(), l.end());
      s.offsets.push_back(s.indices.size());
    }
    // Counting sort by input row; stable in position order.
    std::vector<std::size_t> count(num_inputs + 1, 0);
    for (std::size_t p = 0; p < s.indices.size(); ++p) ++count[s.indices[p] + 1];
    for (std::size_t i = 0; i < num_inputs; ++i) count[i + 1] += count[i];
    s.t_offsets.assign(count.begin(), count.end());
    s.t_segments.assign(s.indices.size(), 0);
    std::vector<std::size_t> cursor(count.begin(), count.end() - 1);
    for (std::size_t r = 0; r < s.num_segments(); ++r)
      for (std::size_t p = s.offsets[r]; p < s.offsets[r + 1]; ++p) s.t_segments[cursor[s.indices[p]]++] = r;
    return s;
  }
};

namespace detail {

// c += a * B, B is k x n row-major.
template <typename T>
inline void gemm_nn_row(const T* a, const T* b, T* c, std::size_t k, std::size_t n) {
  for (std::size_t kk = 0; kk < k; ++kk) {
    const T av = a[kk];
    const T* br = b + kk * n;
    for (std::size_t j = 0; j < n; ++j) c[j] += av * br[j];
  }
}

// c[j] += dot(a, B[j]), B is n x k row-major. Same operation order as
// gemm_nn_row against the transpose of B.
template <typename T>
inline void gemm_nt_row(const T* a, const T* b, T* c, std::size_t k, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    T s = c[j];
    const T* br = b + j * k;
    for (std::size_t kk = 0; kk < k; ++kk) s += a[kk] * br[kk];
    c[j] = s;
  }
}

// Row r of C += (A^T B)[r]; A is m x p, B is m x q.
template <typename T>
inline void gemm_tn_row(const T* a, const T* b, T* c, std::size_t r, std::size_t m, std::size_t p,
                        std::size_t q) {
  for (std::size_t i = 0; i < m; ++i) {
    const T av = a[i * p + r];
    const T* br = b + i * q;
    for (std::size_t j = 0; j < q; ++j) c[j] += av * br[j];
  }
}

template <typename T>
inline void segment_row(const T* x, T* y, std::size_t d, const std::size_t* idx, std::size_t count) {
  for (std::size_t p = 0; p < count; ++p) {
    const T* xr = x + idx[p] * d;
    for (std::size_t j = 0; j < d; ++j) y[j] += xr[j];
  }
}

template <typename T>
inline std::vector<T> transpose(const T* b, std::size_t rows, std::size_t cols) {
  std::vector<T> t(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = b[i * cols + j];
  return t;
}

// Below this many rows the dot-product form is cheaper than transposing.
inline constexpr std::size_t kTransposeRows = 4;

}  // namespace detail

namespace serial {

/// C (m x n) += A (m x k) * B (k x n)
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) detail::gemm_nn_row(a + i * k, b, c + i * n, k, n);
}

/// C (m x n) += A (m x k) * B^T, B is n x k
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  if (m < detail::kTransposeRows) {
    for (std::size_t i = 0; i < m; ++i) detail::gemm_nt_row(a + i * k, b, c + i * n, k, n);
    return;
  }
  const auto bt = detail::transpose(b, n, k);
  for (std::size_t i = 0; i < m; ++i) detail::gemm_nn_row(a + i * k, bt.data(), c + i * n, k, n);
}

/// C (p x q) += A^T * B, A is m x p, B is m x q
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t p, std::size_t q) {
  for (std::size_t r = 0; r < p; ++r) detail::gemm_tn_row(a, b, c + r * q, r, m, p, q);
}

/// Y (segments x d) += grouped row sums of X.
template <typename T>
void segment_sum(const T* x, T* y, std::size_t d, const Segments& s) {
  for (std::size_t r = 0; r < s.num_segments(); ++r)
    detail::segment_row(x, y + r * d, d, s.indices.data() + s.offsets[r], s.offsets[r + 1] - s.offsets[r]);
}

/// dX (inputs x d) += transpose of segment_sum applied to dY.
template <typename T>
void segment_sum_transpose(const T* dy, T* dx, std::size_t d, const Segments& s) {
  for (std::size_t i = 0; i < s.num_inputs; ++i)
    detail::segment_row(dy, dx + i * d, d, s.t_segments.data() + s.t_offsets[i], s.t_offsets[i + 1] - s.t_offsets[i]);
}

template <typename T, typename F>
void map(const T* x, T* y, std::size_t n, F f) {
  for (std::size_t i = 0; i < n; ++i) y[i] = f(x[i]);
}

template <typename T, typename F>
void zip(const T* a, const T* b, T* y, std::size_t n, F f) {
  for (std::size_t i = 0; i < n; ++i) y[i] = f(a[i], b[i]);
}

}  // namespace serial

namespace omp {

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, int threads) {
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::size_t i = 0; i < m; ++i) detail::gemm_nn_row(a + i * k, b, c + i * n, k, n);
}

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, int threads) {
  if (m < detail::kTransposeRows) {
#pragma omp parallel for num_threads(threads) schedule(static)
    for (std::size_t i = 0; i < m; ++i) detail::gemm_nt_row(a + i * k, b, c + i * n, k, n);
    return;
  }
  const auto bt = detail::transpose(b, n, k);
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::size_t i = 0; i < m; ++i) detail::gemm_nn_row(a + i * k, bt.data(), c + i * n, k, n);
}

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t p, std::size_t q, int threads) {
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::size_t r = 0; r < p; ++r) detail::gemm_tn_row(a, b, c + r * q, r, m, p, q);
}

template <typename T>
void segment_sum(const T* x, T* y, std::size_t d, const Segments& s, int threads) {
  const std::size_t rows = s.num_segments();
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::size_t r = 0; r < rows; ++r)
    detail::segment_row(x, y + r * d, d, s.indices.data() + s.offsets[r], s.offsets[r + 1] - s.offsets[r]);
}

template <typename T>
void segment_sum_transpose(const T* dy, T* dx, std::size_t d, const Segments& s, int threads) {
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::size_t i = 0; i < s.num_inputs; ++i)
    detail::segment_row(dy, dx + i * d, d, s.t_segments.data() + s.t_offsets[i], s.t_offsets[i + 1] - s.t_offsets[i]);
}

template <typename T, typename F>
void map(const T* x, T* y, std::size_t n, F f, int threads) {
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::size_t i = 0; i < n; ++i) y[i] = f(x[i]);
}

template <typename T, typename F>
void zip(const T* a, const T* b, T* y, std::size_t n, F f, int threads) {
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::size_t i = 0; i < n; ++i) y[i] = f(a[i], b[i]);
}

}  // namespace omp

// Dispatch. Small elementwise work stays serial; the choice never changes results.

inline constexpr std::size_t kParallelMinElements = 2048;

template <typename T>
void gemm_nn(Exec e, const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  if (e.parallel() && m > 1) return omp::gemm_nn(a, b, c, m, k, n, e.threads);
  serial::gemm_nn(a, b, c, m, k, n);
}

template <typename T>
void gemm_nt(Exec e, const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  if (e.parallel() && m > 1) return omp::gemm_nt(a, b, c, m, k, n, e.threads);
  serial::gemm_nt(a, b, c, m, k, n);
}

template <typename T>
void gemm_tn(Exec e, const T* a, const T* b, T* c, std::size_t m, std::size_t p, std::size_t q) {
  if (e.parallel() && p > 1) return omp::gemm_tn(a, b, c, m, p, q, e.threads);
  serial::gemm_tn(a, b, c, m, p, q);
}

template <typename T>
void segment_sum(Exec e, const T* x, T* y, std::size_t d, const Segments& s) {
  if (e.parallel() && s.num_segments() > 1) return omp::segment_sum(x, y, d, s, e.threads);
  serial::segment_sum(x, y, d, s);
}

template <typename T>
void segment_sum_transpose(Exec e, const T* dy, T* dx, std::size_t d, const Segments& s) {
  if (e.parallel() && s.num_inputs > 1) return omp::segment_sum_transpose(dy, dx, d, s, e.threads);
  serial::segment_sum_transpose(dy, dx, d, s);
}

template <typename T, typename F>
void map(Exec e, const T* x, T* y, std::size_t n, F f) {
  if (e.parallel() && n >= kParallelMinElements) return omp::map(x, y, n, f, e.threads);
  serial::map(x, y, n, f);
}

template <typename T, typename F>
void zip(Exec e, const T* a, const T* b, T* y, std::size_t n, F f) {
  if (e.parallel() && n >= kParallelMinElements) return omp::zip(a, b, y, n, f, e.threads);
  serial::zip(a, b, y, n, f);
}

}  // namespace nrel::kernels
