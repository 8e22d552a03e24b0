#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "mmsched/kernels.hpp"

namespace mmsched::kernels {

namespace {

constexpr KernelTable kScalar{Backend::kScalar, scalar::dot_conj, scalar::matvec, scalar::rank1_update,
                              scalar::norm2};
#if defined(MMSCHED_HAVE_AVX2)
constexpr KernelTable kAvx2{Backend::kAvx2, avx2::dot_conj, avx2::matvec, avx2::rank1_update, avx2::norm2};
#endif

const KernelTable* detect() {
    const char* env = std::getenv("MMSCHED_SIMD");
    const std::string forced = env != nullptr ? env : "";
    if (forced == "scalar") return &kScalar;
#if defined(MMSCHED_HAVE_AVX2)
    if (cpu_has_avx2()) return &kAvx2;
#endif
    return &kScalar;
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> ptr{detect()};
    return ptr;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(MMSCHED_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable& table(Backend b) {
    if (b == Backend::kScalar) return kScalar;
#if defined(MMSCHED_HAVE_AVX2)
    if (cpu_has_avx2()) return kAvx2;
#endif
    throw std::runtime_error("AVX2 kernels are not available on this CPU/build");
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

void select(Backend b) { current().store(&table(b), std::memory_order_relaxed); }

std::string_view name(Backend b) { return b == Backend::kAvx2 ? "avx2" : "scalar"; }

}  // namespace mmsched::kernels

namespace mmsched {

std::vector<cplx> matvec(const CMatrix& a, std::span<const cplx> x) {
    if (x.size() != a.cols) throw std::invalid_argument("matvec: dimension mismatch");
    std::vector<cplx> y(a.rows);
    kernels::active().matvec(a.data.data(), a.rows, a.cols, x.data(), y.data());
    return y;
}

}  // namespace mmsched
