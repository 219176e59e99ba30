#include "sentattn/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <limits>

namespace sentattn::kernels {

namespace {
int g_threads = 0;  // 0 = not initialized yet

// Skip the OpenMP machinery when the matrix product is tiny.
constexpr long kParallelMinWork = 64 * 1024;
}  // namespace

void set_threads(int n) { g_threads = n < 1 ? 1 : n; }

int threads() {
  if (g_threads == 0) g_threads = omp_get_max_threads();
  return g_threads;
}

// ---------------------------------------------------------------------------
// matmul_nn: i-k-j order, streaming rows of B through the row of C.

static inline void nn_row(const double* A, const double* B, double* C, int i,
                          int k, int n, bool accumulate) {
  double* c = C + static_cast<std::size_t>(i) * n;
  if (!accumulate)
    for (int j = 0; j < n; ++j) c[j] = 0.0;
  const double* a = A + static_cast<std::size_t>(i) * k;
  for (int l = 0; l < k; ++l) {
    double av = a[l];
    const double* b = B + static_cast<std::size_t>(l) * n;
    for (int j = 0; j < n; ++j) c[j] += av * b[j];
  }
}

void matmul_nn_serial(const double* A, const double* B, double* C, int m, int k,
                      int n, bool accumulate) {
  for (int i = 0; i < m; ++i) nn_row(A, B, C, i, k, n, accumulate);
}

void matmul_nn(const double* A, const double* B, double* C, int m, int k, int n,
               bool accumulate) {
  long work = static_cast<long>(m) * k * n;
  int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) \
    if (nt > 1 && work >= kParallelMinWork)
  for (int i = 0; i < m; ++i) nn_row(A, B, C, i, k, n, accumulate);
}

// ---------------------------------------------------------------------------
// matmul_nt: dot products of rows, both operands stride-1.

static inline void nt_row(const double* A, const double* B, double* C, int i,
                          int k, int n, bool accumulate) {
  const double* a = A + static_cast<std::size_t>(i) * k;
  double* c = C + static_cast<std::size_t>(i) * n;
  for (int j = 0; j < n; ++j) {
    const double* b = B + static_cast<std::size_t>(j) * k;
    double s = 0.0;
    for (int l = 0; l < k; ++l) s += a[l] * b[l];
    c[j] = accumulate ? c[j] + s : s;
  }
}

void matmul_nt_serial(const double* A, const double* B, double* C, int m, int k,
                      int n, bool accumulate) {
  for (int i = 0; i < m; ++i) nt_row(A, B, C, i, k, n, accumulate);
}

void matmul_nt(const double* A, const double* B, double* C, int m, int k, int n,
               bool accumulate) {
  long work = static_cast<long>(m) * k * n;
  int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) \
    if (nt > 1 && work >= kParallelMinWork)
  for (int i = 0; i < m; ++i) nt_row(A, B, C, i, k, n, accumulate);
}

// ---------------------------------------------------------------------------
// matmul_tn: C = A^T B with A[k,m]; used for weight gradients.

static inline void tn_row(const double* A, const double* B, double* C, int i,
                          int k, int m, int n, bool accumulate) {
  double* c = C + static_cast<std::size_t>(i) * n;
  if (!accumulate)
    for (int j = 0; j < n; ++j) c[j] = 0.0;
  for (int l = 0; l < k; ++l) {
    double av = A[static_cast<std::size_t>(l) * m + i];
    const double* b = B + static_cast<std::size_t>(l) * n;
    for (int j = 0; j < n; ++j) c[j] += av * b[j];
  }
}

void matmul_tn_serial(const double* A, const double* B, double* C, int m, int k,
                      int n, bool accumulate) {
  for (int i = 0; i < m; ++i) tn_row(A, B, C, i, k, m, n, accumulate);
}

void matmul_tn(const double* A, const double* B, double* C, int m, int k, int n,
               bool accumulate) {
  long work = static_cast<long>(m) * k * n;
  int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) \
    if (nt > 1 && work >= kParallelMinWork)
  for (int i = 0; i < m; ++i) tn_row(A, B, C, i, k, m, n, accumulate);
}

// ---------------------------------------------------------------------------

static inline void softmax_row(double* x, int cols) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < cols; ++j)
    if (x[j] > mx) mx = x[j];
  if (!std::isfinite(mx)) {
    // whole row is -inf; define the result as uniform to keep it a distribution
    double u = 1.0 / cols;
    for (int j = 0; j < cols; ++j) x[j] = u;
    return;
  }
  double z = 0.0;
  for (int j = 0; j < cols; ++j) {
    x[j] = std::exp(x[j] - mx);
    z += x[j];
  }
  double inv = 1.0 / z;
  for (int j = 0; j < cols; ++j) x[j] *= inv;
}

void softmax_rows_serial(double* X, int rows, int cols) {
  for (int i = 0; i < rows; ++i) softmax_row(X + static_cast<std::size_t>(i) * cols, cols);
}

void softmax_rows(double* X, int rows, int cols) {
  long work = static_cast<long>(rows) * cols;
  int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) \
    if (nt > 1 && work >= kParallelMinWork)
  for (int i = 0; i < rows; ++i) softmax_row(X + static_cast<std::size_t>(i) * cols, cols);
}

// ---------------------------------------------------------------------------

static inline void ln_row(const double* x, const double* gain, const double* bias,
                          double* y, int cols, double eps) {
  double mean = 0.0;
  for (int j = 0; j < cols; ++j) mean += x[j];
  mean /= cols;
  double var = 0.0;
  for (int j = 0; j < cols; ++j) {
    double d = x[j] - mean;
    var += d * d;
  }
  var /= cols;
  double inv = 1.0 / std::sqrt(var + eps);
  for (int j = 0; j < cols; ++j) y[j] = (x[j] - mean) * inv * gain[j] + bias[j];
}

void layer_norm_rows_serial(const double* X, const double* gain, const double* bias,
                            double* Y, int rows, int cols, double eps) {
  for (int i = 0; i < rows; ++i)
    ln_row(X + static_cast<std::size_t>(i) * cols, gain, bias,
           Y + static_cast<std::size_t>(i) * cols, cols, eps);
}

void layer_norm_rows(const double* X, const double* gain, const double* bias,
                     double* Y, int rows, int cols, double eps) {
  long work = static_cast<long>(rows) * cols;
  int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) \
    if (nt > 1 && work >= kParallelMinWork)
  for (int i = 0; i < rows; ++i)
    ln_row(X + static_cast<std::size_t>(i) * cols, gain, bias,
           Y + static_cast<std::size_t>(i) * cols, cols, eps);
}

}  // namespace sentattn::kernels
