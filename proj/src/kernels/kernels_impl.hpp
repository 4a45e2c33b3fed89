#pragma once

#include <cstddef>

namespace dmtl::kernels {

#define DMTL_KERNEL_DECLS                                                                       \
  double dot(const double* a, const double* b, std::size_t n);                                  \
  void axpy(double alpha, const double* x, double* y, std::size_t n);                           \
  double squared_distance(const double* a, const double* b, std::size_t n);                     \
  void gemv(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y);   \
  void scale(double alpha, double* x, std::size_t n);                                           \
  void adam_update(double* param, const double* grad, double* m, double* v, std::size_t n,      \
                   double lr, double beta1, double beta2, double eps, double bc1, double bc2);

namespace scalar {
DMTL_KERNEL_DECLS
}
namespace avx2 {
DMTL_KERNEL_DECLS
}

#undef DMTL_KERNEL_DECLS

}  // namespace dmtl::kernels
