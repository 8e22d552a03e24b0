#pragma once

// Complex-double inner loops used by channel synthesis, beam alignment and
// effective-channel computation. Every kernel has a portable scalar reference
// and an AVX2/FMA variant; the variant is picked once at runtime from CPUID
// (override with MMSCHED_SIMD=scalar|avx2). The two backends agree to
// rounding, not necessarily bit-for-bit.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace mmsched {

using cplx = std::complex<double>;

/// Dense row-major complex matrix.
struct CMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<cplx> data;

    CMatrix() = default;
    CMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

    cplx& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const cplx> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
    std::span<cplx> row(std::size_t r) { return {data.data() + r * cols, cols}; }
};

namespace kernels {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
    Backend backend;
    /// sum_i conj(a_i) * b_i
    cplx (*dot_conj)(const cplx* a, const cplx* b, std::size_t n);
    /// y = A x, A is rows x cols row-major
    void (*matvec)(const cplx* a, std::size_t rows, std::size_t cols, const cplx* x, cplx* y);
    /// A += (g * u) b^H
    void (*rank1_update)(cplx* a, std::size_t rows, std::size_t cols, cplx g, const cplx* u, const cplx* b);
    /// sum_i |a_i|^2
    double (*norm2)(const cplx* a, std::size_t n);
};

namespace scalar {
cplx dot_conj(const cplx* a, const cplx* b, std::size_t n);
void matvec(const cplx* a, std::size_t rows, std::size_t cols, const cplx* x, cplx* y);
void rank1_update(cplx* a, std::size_t rows, std::size_t cols, cplx g, const cplx* u, const cplx* b);
double norm2(const cplx* a, std::size_t n);
}  // namespace scalar

namespace avx2 {
cplx dot_conj(const cplx* a, const cplx* b, std::size_t n);
void matvec(const cplx* a, std::size_t rows, std::size_t cols, const cplx* x, cplx* y);
void rank1_update(cplx* a, std::size_t rows, std::size_t cols, cplx g, const cplx* u, const cplx* b);
double norm2(const cplx* a, std::size_t n);
}  // namespace avx2

bool cpu_has_avx2();
const KernelTable& table(Backend b);
/// Backend chosen for this process.
const KernelTable& active();
/// Forces a backend (tests, benchmarking). Throws if the CPU cannot run it.
void select(Backend b);
std::string_view name(Backend b);

}  // namespace kernels

// Convenience wrappers over the active backend.
inline cplx dot_conj(std::span<const cplx> a, std::span<const cplx> b) {
    return kernels::active().dot_conj(a.data(), b.data(), a.size());
}
inline double norm2(std::span<const cplx> a) { return kernels::active().norm2(a.data(), a.size()); }

/// y = A x
std::vector<cplx> matvec(const CMatrix& a, std::span<const cplx> x);

}  // namespace mmsched
