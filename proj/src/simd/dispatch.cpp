#include <atomic>
#include <cstdlib>
#include <string>

#include "judgevar/simd/kernels.hpp"

namespace judgevar::simd {

#if defined(JUDGEVAR_HAVE_AVX2)
const KernelTable& avx2_kernels() noexcept;
#endif
#if defined(JUDGEVAR_HAVE_NEON)
const KernelTable& neon_kernels() noexcept;
#endif

namespace {

bool cpu_has_avx2() noexcept {
#if defined(JUDGEVAR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* widest() noexcept {
  if (const KernelTable* t = kernels_for(Isa::Avx2)) return t;
  if (const KernelTable* t = kernels_for(Isa::Neon)) return t;
  return &scalar_kernels();
}

const KernelTable* initial_choice() noexcept {
  if (const char* env = std::getenv("JUDGEVAR_ISA")) {
    const std::string name(env);
    if (name == "scalar") return &scalar_kernels();
    if (name == "avx2" && kernels_for(Isa::Avx2)) return kernels_for(Isa::Avx2);
    if (name == "neon" && kernels_for(Isa::Neon)) return kernels_for(Isa::Neon);
  }
  return widest();
}

std::atomic<const KernelTable*>& slot() noexcept {
  static std::atomic<const KernelTable*> current{initial_choice()};
  return current;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

const KernelTable* kernels_for(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return &scalar_kernels();
    case Isa::Avx2:
#if defined(JUDGEVAR_HAVE_AVX2)
      if (cpu_has_avx2()) return &avx2_kernels();
#endif
      return nullptr;
    case Isa::Neon:
#if defined(JUDGEVAR_HAVE_NEON)
      return &neon_kernels();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
  for (Isa isa : {Isa::Avx2, Isa::Neon})
    if (const KernelTable* t = kernels_for(isa)) out.push_back(t);
  return out;
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_acquire); }

bool select(Isa isa) noexcept {
  const KernelTable* t = kernels_for(isa);
  if (!t) return false;
  slot().store(t, std::memory_order_release);
  return true;
}

}  // namespace judgevar::simd
