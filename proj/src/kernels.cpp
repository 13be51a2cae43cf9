#include "aste/kernels.hpp"

#include <atomic>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace aste::kernels {

namespace {
std::atomic<ExecMode> g_mode{ExecMode::Parallel};
}

ExecMode exec_mode() { return g_mode.load(std::memory_order_relaxed); }
void set_exec_mode(ExecMode mode) { g_mode.store(mode, std::memory_order_relaxed); }

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

inline void matmul_nn_row(const double* a, const double* b, double* c, int k, int n, int i) {
  const double* ai = a + static_cast<std::size_t>(i) * k;
  double* ci = c + static_cast<std::size_t>(i) * n;
  for (int j = 0; j < n; ++j) ci[j] = 0.0;
  for (int p = 0; p < k; ++p) {
    const double av = ai[p];
    const double* bp = b + static_cast<std::size_t>(p) * n;
    for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
  }
}

inline void matmul_nt_row(const double* a, const double* b, double* c, int k, int n, int i) {
  const double* ai = a + static_cast<std::size_t>(i) * k;
  double* ci = c + static_cast<std::size_t>(i) * n;
  for (int j = 0; j < n; ++j) {
    const double* bj = b + static_cast<std::size_t>(j) * k;
    double acc = 0.0;
    for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
    ci[j] = acc;
  }
}

// Output row r of a^T·b gathers column r of a; iterating the reduction over
// m in index order keeps the serial and parallel sums identical.
inline void matmul_tn_row(const double* a, const double* b, double* c, int m, int k, int n,
                          int r) {
  double* cr = c + static_cast<std::size_t>(r) * n;
  for (int j = 0; j < n; ++j) cr[j] = 0.0;
  for (int i = 0; i < m; ++i) {
    const double av = a[static_cast<std::size_t>(i) * k + r];
    const double* bi = b + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) cr[j] += av * bi[j];
  }
}

inline void softmax_row_masked(const double* scores, const std::uint8_t* mask, double* out,
                               int cols, int r) {
  const double* s = scores + static_cast<std::size_t>(r) * cols;
  const std::uint8_t* m = mask + static_cast<std::size_t>(r) * cols;
  double* o = out + static_cast<std::size_t>(r) * cols;
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < cols; ++j)
    if (m[j] && s[j] > mx) mx = s[j];
  double denom = 0.0;
  for (int j = 0; j < cols; ++j) {
    if (m[j]) {
      o[j] = std::exp(s[j] - mx);
      denom += o[j];
    } else {
      o[j] = 0.0;
    }
  }
  const double inv = 1.0 / denom;
  for (int j = 0; j < cols; ++j)
    if (m[j]) o[j] *= inv;
}

}  // namespace

namespace serial {

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) matmul_nn_row(a, b, c, k, n, i);
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) matmul_nt_row(a, b, c, k, n, i);
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int r = 0; r < k; ++r) matmul_tn_row(a, b, c, m, k, n, r);
}

void softmax_rows_masked(const double* scores, const std::uint8_t* mask, double* out, int rows,
                         int cols) {
  for (int r = 0; r < rows; ++r) softmax_row_masked(scores, mask, out, cols, r);
}

}  // namespace serial

namespace parallel {

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) matmul_nn_row(a, b, c, k, n, i);
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) matmul_nt_row(a, b, c, k, n, i);
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < k; ++r) matmul_tn_row(a, b, c, m, k, n, r);
}

void softmax_rows_masked(const double* scores, const std::uint8_t* mask, double* out, int rows,
                         int cols) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) softmax_row_masked(scores, mask, out, cols, r);
}

}  // namespace parallel

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n) {
  if (exec_mode() == ExecMode::Parallel)
    parallel::matmul_nn(a, b, c, m, k, n);
  else
    serial::matmul_nn(a, b, c, m, k, n);
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
  if (exec_mode() == ExecMode::Parallel)
    parallel::matmul_nt(a, b, c, m, k, n);
  else
    serial::matmul_nt(a, b, c, m, k, n);
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
  if (exec_mode() == ExecMode::Parallel)
    parallel::matmul_tn(a, b, c, m, k, n);
  else
    serial::matmul_tn(a, b, c, m, k, n);
}

void softmax_rows_masked(const double* scores, const std::uint8_t* mask, double* out, int rows,
                         int cols) {
  if (exec_mode() == ExecMode::Parallel)
    parallel::softmax_rows_masked(scores, mask, out, rows, cols);
  else
    serial::softmax_rows_masked(scores, mask, out, rows, cols);
}

}  // namespace aste::kernels
