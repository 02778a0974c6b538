#pragma once

#include <cstdint>

namespace wbmm::kernels {

// Dense inner loops of the denoiser training path. Each kernel has a scalar
// reference implementation (namespace scalar) and, on x86 machines with
// AVX2+FMA, a vectorized variant picked once at startup. The two variants are
// equivalence-tested against each other; they may differ in the last ulp
// because the vector path uses fused multiply-adds and tree reductions.

namespace scalar {

double dot(const double* x, const double* y, int n);
void axpy(double a, const double* x, double* y, int n);
// y = W x + b, W row-major (rows x cols)
void dense_forward(const double* w, const double* b, const double* x, double* y,
                   int rows, int cols);
// dx = W^T dy
void dense_backward_input(const double* w, const double* dy, double* dx,
                          int rows, int cols);
// dW += dy x^T, db += dy
void dense_accumulate_grads(const double* dy, const double* x, double* dw, double* db,
                            int rows, int cols);
void adam_step(double* p, const double* g, double* m, double* v, int n, double lr,
               double beta1, double beta2, double eps, double bias1, double bias2);

}  // namespace scalar

// Dispatched entry points (AVX2 when available, scalar otherwise).
double dot(const double* x, const double* y, int n);
void axpy(double a, const double* x, double* y, int n);
void dense_forward(const double* w, const double* b, const double* x, double* y,
                   int rows, int cols);
void dense_backward_input(const double* w, const double* dy, double* dx,
                          int rows, int cols);
void dense_accumulate_grads(const double* dy, const double* x, double* dw, double* db,
                            int rows, int cols);
void adam_step(double* p, const double* g, double* m, double* v, int n, double lr,
               double beta1, double beta2, double eps, double bias1, double bias2);

// Elementwise activations; transcendental, kept scalar in both paths.
void tanh_forward(const double* z, double* y, int n);
void tanh_backward(const double* y, const double* dy, double* dz, int n);

/// True when the dispatcher selected the AVX2 path.
bool avx2_active();

}  // namespace wbmm::kernels
