#include <cmath>

#include "dmtl/kernels.hpp"
#include "kernels_impl.hpp"

namespace dmtl::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return acc;
}

void gemv(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(w + r * cols, x, cols);
}

void scale(double alpha, double* x, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) x[k] *= alpha;
}

void adam_update(double* param, const double* grad, double* m, double* v, std::size_t n,
                 double lr, double beta1, double beta2, double eps, double bc1, double bc2) {
  for (std::size_t k = 0; k < n; ++k) {
    const double g = grad[k];
    m[k] = beta1 * m[k] + (1.0 - beta1) * g;
    v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
    const double m_hat = m[k] / bc1;
    const double v_hat = v[k] / bc2;
    param[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace dmtl::kernels::scalar
