#pragma once

#include <cstdint>

#include "aste/array.hpp"

namespace aste::kernels {

/// Execution mode for the dense kernels. Parallel splits work over output
/// rows only, so every element is computed with the exact arithmetic order
/// of the serial reference and results are bit-identical for any thread
/// count.
enum class ExecMode { Serial, Parallel };

ExecMode exec_mode();
void set_exec_mode(ExecMode mode);
int thread_count();

// Serial reference implementations, kept public so tests and the benchmark
// can compare against the dispatched versions.
namespace serial {
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);
void softmax_rows_masked(const double* scores, const std::uint8_t* mask, double* out,
                         int rows, int cols);
}  // namespace serial

namespace parallel {
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);
void softmax_rows_masked(const double* scores, const std::uint8_t* mask, double* out,
                         int rows, int cols);
}  // namespace parallel

/// c[m×n] = a[m×k] · b[k×n]
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n);
/// c[m×n] = a[m×k] · b[n×k]^T
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);
/// c[k×n] = a[m×k]^T · b[m×n]
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);
/// Row-wise softmax over unmasked entries; masked cells are exactly 0.
/// Rows with no unmasked entry must be rejected by the caller.
void softmax_rows_masked(const double* scores, const std::uint8_t* mask, double* out,
                         int rows, int cols);

}  // namespace aste::kernels
