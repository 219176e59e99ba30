#pragma once

#include <cstddef>

// Dense float64 compute kernels. Every kernel comes in two forms: a plain
// serial reference (`*_serial`) and an OpenMP version that parallelizes over
// output rows. A thread never shares an output element with another thread
// and the accumulation order inside each element is identical in both forms,
// so results are bit-identical for any thread count. tools/kernel_bench.cpp
// compares the two forms.
namespace sentattn::kernels {

// Global cap on OpenMP threads used by the kernels. 1 disables parallelism.
void set_threads(int n);
int threads();

// C[m,n] = A[m,k] * B[k,n]        (+ C if accumulate)
void matmul_nn_serial(const double* A, const double* B, double* C, int m, int k,
                      int n, bool accumulate = false);
void matmul_nn(const double* A, const double* B, double* C, int m, int k, int n,
               bool accumulate = false);

// C[m,n] = A[m,k] * B[n,k]^T
void matmul_nt_serial(const double* A, const double* B, double* C, int m, int k,
                      int n, bool accumulate = false);
void matmul_nt(const double* A, const double* B, double* C, int m, int k, int n,
               bool accumulate = false);

// C[m,n] = A[k,m]^T * B[k,n]
void matmul_tn_serial(const double* A, const double* B, double* C, int m, int k,
                      int n, bool accumulate = false);
void matmul_tn(const double* A, const double* B, double* C, int m, int k, int n,
               bool accumulate = false);

// Row-wise softmax over `cols` entries per row, max-subtracted. -inf inputs
// come out as exact zeros.
void softmax_rows_serial(double* X, int rows, int cols);
void softmax_rows(double* X, int rows, int cols);

// y[r,:] = layer_norm(x[r,:]) * gain + bias, per row; mean/var over cols.
void layer_norm_rows_serial(const double* X, const double* gain, const double* bias,
                            double* Y, int rows, int cols, double eps);
void layer_norm_rows(const double* X, const double* gain, const double* bias,
                     double* Y, int rows, int cols, double eps);

}  // namespace sentattn::kernels
