#pragma once

// Data-parallel inner loops shared by every module. Each kernel has a scalar
// reference implementation and, on x86-64, an AVX2/FMA variant. The variant is
// picked once at startup from CPUID; DMTL_FORCE_SCALAR=1 in the environment
// pins the scalar path.

#include <cstddef>
#include <span>
#include <string_view>

namespace dmtl::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // y = W x, W row-major rows x cols
  void (*gemv)(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y);
  // x *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  // Bias-corrected adaptive-moment step over one flat buffer; bc1 = 1 - beta1^t,
  // bc2 = 1 - beta2^t.
  void (*adam_update)(double* param, const double* grad, double* m, double* v, std::size_t n,
                      double lr, double beta1, double beta2, double eps, double bc1, double bc2);
};

const KernelTable& scalar_table();
/// Null when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_table();

const KernelTable& active();
std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}
inline void scale(double alpha, std::span<double> x) { active().scale(alpha, x.data(), x.size()); }

}  // namespace dmtl::kernels
