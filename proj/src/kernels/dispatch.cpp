#include "l1surface/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace l1surface::kernels {

namespace {

constexpr KernelTable kScalar{Isa::scalar, &scalar::dot, &scalar::axpy, &scalar::gemv};
#if defined(L1SURFACE_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::avx2, &avx2::dot, &avx2::axpy, &avx2::gemv};
#endif

bool cpu_has_avx2() noexcept {
#if defined(L1SURFACE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* initial_table() noexcept {
    const char* env = std::getenv("L1SURFACE_KERNELS");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) return &kScalar;
#if defined(L1SURFACE_HAVE_AVX2)
    if (cpu_has_avx2()) return &kAvx2;
#endif
    return &kScalar;
}

std::atomic<const KernelTable*>& current() noexcept {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

bool avx2_available() noexcept { return cpu_has_avx2(); }

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

Isa select(Isa isa) noexcept {
#if defined(L1SURFACE_HAVE_AVX2)
    if (isa == Isa::avx2 && cpu_has_avx2()) {
        current().store(&kAvx2, std::memory_order_release);
        return Isa::avx2;
    }
#endif
    (void)isa;
    current().store(&kScalar, std::memory_order_release);
    return Isa::scalar;
}

std::string_view name(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace l1surface::kernels
