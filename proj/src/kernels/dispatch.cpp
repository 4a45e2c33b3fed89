#include <cstdlib>
#include <cstring>

#include "dmtl/kernels.hpp"
#include "kernels_impl.hpp"

namespace dmtl::kernels {

namespace {

constexpr KernelTable kScalar{Isa::scalar,    scalar::dot,   scalar::axpy,       scalar::squared_distance,
                              scalar::gemv, scalar::scale, scalar::adam_update};

#if DMTL_HAVE_AVX2
constexpr KernelTable kAvx2{Isa::avx2,     avx2::dot,   avx2::axpy,       avx2::squared_distance,
                            avx2::gemv, avx2::scale, avx2::adam_update};

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

bool scalar_forced() {
  const char* env = std::getenv("DMTL_FORCE_SCALAR");
  return env != nullptr && std::strcmp(env, "") != 0 && std::strcmp(env, "0") != 0;
}

const KernelTable& select() {
  if (!scalar_forced()) {
    if (const KernelTable* t = avx2_table()) return *t;
  }
  return kScalar;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if DMTL_HAVE_AVX2
  static const bool ok = cpu_has_avx2();
  return ok ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace dmtl::kernels
