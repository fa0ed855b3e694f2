#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace visitscope::simd {

namespace {

constexpr KernelTable kScalar{Backend::Scalar,          scalar::sum,
                              scalar::dot,              scalar::centered_cross,
                              scalar::mahalanobis_sq,   scalar::squared_distance,
                              scalar::log_normalize,    scalar::exp};

#if defined(VISITSCOPE_HAVE_AVX2)
constexpr KernelTable kAvx2{Backend::Avx2,            avx2::sum,
                            avx2::dot,                avx2::centered_cross,
                            avx2::mahalanobis_sq,     avx2::squared_distance,
                            avx2::log_normalize,      avx2::exp};

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const KernelTable* pick_initial() {
  const char* env = std::getenv("VISITSCOPE_SIMD");
  const std::string_view want = env ? env : "auto";
  if (want == "scalar") return &kScalar;
  if (const KernelTable* t = avx2_kernels()) return t;
  return &kScalar;
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{pick_initial()};
  return table;
}

}  // namespace

const char* to_string(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

const KernelTable& scalar_kernels() { return kScalar; }

const KernelTable* avx2_kernels() {
#if defined(VISITSCOPE_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

bool set_backend(Backend b) {
  const KernelTable* t = b == Backend::Scalar ? &kScalar : avx2_kernels();
  if (!t) return false;
  active().store(t, std::memory_order_release);
  return true;
}

}  // namespace visitscope::simd
