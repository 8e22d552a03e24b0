// Compiled with -mavx2 -mfma. Nothing in this file may be called unless
// kernels::cpu_has_avx2() returned true.

#include "mmsched/kernels.hpp"

#include <immintrin.h>

namespace mmsched::kernels::avx2 {

namespace {

// Two complex doubles per register: [re0, im0, re1, im1].
inline __m256d load2(const cplx* p) { return _mm256_loadu_pd(reinterpret_cast<const double*>(p)); }
inline void store2(cplx* p, __m256d v) { _mm256_storeu_pd(reinterpret_cast<double*>(p), v); }

inline double hsum_even_minus_odd(__m256d v, bool subtract) {
    alignas(32) double t[4];
    _mm256_store_pd(t, v);
    return subtract ? (t[0] + t[2]) - (t[1] + t[3]) : (t[0] + t[2]) + (t[1] + t[3]);
}

}  // namespace

cplx dot_conj(const cplx* a, const cplx* b, std::size_t n) {
    // re = sum ar*br + ai*bi ; im = sum ar*bi - ai*br
    __m256d acc_re = _mm256_setzero_pd();
    __m256d acc_im = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d va = load2(a + i);
        const __m256d vb = load2(b + i);
        acc_re = _mm256_fmadd_pd(va, vb, acc_re);
        acc_im = _mm256_fmadd_pd(va, _mm256_permute_pd(vb, 0x5), acc_im);
    }
    double re = hsum_even_minus_odd(acc_re, false);
    double im = hsum_even_minus_odd(acc_im, true);
    for (; i < n; ++i) {
        re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
        im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
    }
    return {re, im};
}

void matvec(const cplx* a, std::size_t rows, std::size_t cols, const cplx* x, cplx* y) {
    // re = sum ar*xr - ai*xi ; im = sum ar*xi + ai*xr
    for (std::size_t r = 0; r < rows; ++r) {
        const cplx* row = a + r * cols;
        __m256d acc_re = _mm256_setzero_pd();
        __m256d acc_im = _mm256_setzero_pd();
        std::size_t c = 0;
        for (; c + 2 <= cols; c += 2) {
            const __m256d va = load2(row + c);
            const __m256d vx = load2(x + c);
            acc_re = _mm256_fmadd_pd(va, vx, acc_re);
            acc_im = _mm256_fmadd_pd(va, _mm256_permute_pd(vx, 0x5), acc_im);
        }
        double re = hsum_even_minus_odd(acc_re, true);
        double im = hsum_even_minus_odd(acc_im, false);
        for (; c < cols; ++c) {
            re += row[c].real() * x[c].real() - row[c].imag() * x[c].imag();
            im += row[c].real() * x[c].imag() + row[c].imag() * x[c].real();
        }
        y[r] = {re, im};
    }
}

void rank1_update(cplx* a, std::size_t rows, std::size_t cols, cplx g, const cplx* u, const cplx* b) {
    // row += s * conj(b): [sr*br + si*bi, si*br - sr*bi]
    for (std::size_t r = 0; r < rows; ++r) {
        const double sr = g.real() * u[r].real() - g.imag() * u[r].imag();
        const double si = g.real() * u[r].imag() + g.imag() * u[r].real();
        const __m256d c1 = _mm256_setr_pd(sr, -sr, sr, -sr);
        const __m256d c2 = _mm256_set1_pd(si);
        cplx* row = a + r * cols;
        std::size_t c = 0;
        for (; c + 2 <= cols; c += 2) {
            const __m256d vb = load2(b + c);
            __m256d acc = load2(row + c);
            acc = _mm256_fmadd_pd(vb, c1, acc);
            acc = _mm256_fmadd_pd(_mm256_permute_pd(vb, 0x5), c2, acc);
            store2(row + c, acc);
        }
        for (; c < cols; ++c) {
            const double br = b[c].real(), bi = b[c].imag();
            row[c] = {row[c].real() + sr * br + si * bi, row[c].imag() + si * br - sr * bi};
        }
    }
}

double norm2(const cplx* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d va = load2(a + i);
        acc = _mm256_fmadd_pd(va, va, acc);
    }
    double s = hsum_even_minus_odd(acc, false);
    for (; i < n; ++i) s += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
    return s;
}

}  // namespace mmsched::kernels::avx2
