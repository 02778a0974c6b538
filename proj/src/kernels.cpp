#include "wbmm/kernels.hpp"

#include <cmath>

namespace wbmm::kernels {

namespace scalar {

double dot(const double* x, const double* y, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy(double a, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

void dense_forward(const double* w, const double* b, const double* x, double* y,
                   int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    y[r] = b[r] + dot(w + static_cast<long>(r) * cols, x, cols);
  }
}

void dense_backward_input(const double* w, const double* dy, double* dx,
                          int rows, int cols) {
  for (int j = 0; j < cols; ++j) dx[j] = 0.0;
  for (int r = 0; r < rows; ++r) {
    axpy(dy[r], w + static_cast<long>(r) * cols, dx, cols);
  }
}

void dense_accumulate_grads(const double* dy, const double* x, double* dw, double* db,
                            int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    axpy(dy[r], x, dw + static_cast<long>(r) * cols, cols);
    db[r] += dy[r];
  }
}

void adam_step(double* p, const double* g, double* m, double* v, int n, double lr,
               double beta1, double beta2, double eps, double bias1, double bias2) {
  for (int i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double m_hat = m[i] / bias1;
    const double v_hat = v[i] / bias2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace scalar

void tanh_forward(const double* z, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] = std::tanh(z[i]);
}

void tanh_backward(const double* y, const double* dy, double* dz, int n) {
  for (int i = 0; i < n; ++i) dz[i] = dy[i] * (1.0 - y[i] * y[i]);
}

#if defined(__x86_64__) || defined(_M_X64)

namespace avx2 {
// Implemented in kernels_avx2.cpp (compiled with -mavx2 -mfma).
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
}  // namespace avx2

namespace {
bool detect_avx2() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
const bool kUseAvx2 = detect_avx2();
}  // namespace

bool avx2_active() { return kUseAvx2; }

double dot(const double* x, const double* y, int n) {
  return kUseAvx2 ? avx2::dot(x, y, n) : scalar::dot(x, y, n);
}
void axpy(double a, const double* x, double* y, int n) {
  kUseAvx2 ? avx2::axpy(a, x, y, n) : scalar::axpy(a, x, y, n);
}
void dense_forward(const double* w, const double* b, const double* x, double* y,
                   int rows, int cols) {
  kUseAvx2 ? avx2::dense_forward(w, b, x, y, rows, cols)
           : scalar::dense_forward(w, b, x, y, rows, cols);
}
void dense_backward_input(const double* w, const double* dy, double* dx,
                          int rows, int cols) {
  kUseAvx2 ? avx2::dense_backward_input(w, dy, dx, rows, cols)
           : scalar::dense_backward_input(w, dy, dx, rows, cols);
}
void dense_accumulate_grads(const double* dy, const double* x, double* dw, double* db,
                            int rows, int cols) {
  kUseAvx2 ? avx2::dense_accumulate_grads(dy, x, dw, db, rows, cols)
           : scalar::dense_accumulate_grads(dy, x, dw, db, rows, cols);
}
void adam_step(double* p, const double* g, double* m, double* v, int n, double lr,
               double beta1, double beta2, double eps, double bias1, double bias2) {
  kUseAvx2 ? avx2::adam_step(p, g, m, v, n, lr, beta1, beta2, eps, bias1, bias2)
           : scalar::adam_step(p, g, m, v, n, lr, beta1, beta2, eps, bias1, bias2);
}

#else  // non-x86: scalar only

bool avx2_active() { return false; }

double dot(const double* x, const double* y, int n) { return scalar::dot(x, y, n); }
void axpy(double a, const double* x, double* y, int n) { scalar::axpy(a, x, y, n); }
void dense_forward(const double* w, const double* b, const double* x, double* y,
                   int rows, int cols) {
  scalar::dense_forward(w, b, x, y, rows, cols);
}
void dense_backward_input(const double* w, const double* dy, double* dx,
                          int rows, int cols) {
  scalar::dense_backward_input(w, dy, dx, rows, cols);
}
void dense_accumulate_grads(const double* dy, const double* x, double* dw, double* db,
                            int rows, int cols) {
  scalar::dense_accumulate_grads(dy, x, dw, db, rows, cols);
}
void adam_step(double* p, const double* g, double* m, double* v, int n, double lr,
               double beta1, double beta2, double eps, double bias1, double bias2) {
  scalar::adam_step(p, g, m, v, n, lr, beta1, beta2, eps, bias1, bias2);
}

#endif

}  // namespace wbmm::kernels
