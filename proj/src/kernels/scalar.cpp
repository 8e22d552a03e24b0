#include "mmsched/kernels.hpp"

namespace mmsched::kernels::scalar {

// Plain real arithmetic; std::complex operator* carries NaN-recovery branches
// that are not wanted here.

cplx dot_conj(const cplx* a, const cplx* b, std::size_t n) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        re += ar * br + ai * bi;
        im += ar * bi - ai * br;
    }
    return {re, im};
}

void matvec(const cplx* a, std::size_t rows, std::size_t cols, const cplx* x, cplx* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        const cplx* row = a + r * cols;
        double re = 0.0;
        double im = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double ar = row[c].real(), ai = row[c].imag();
            const double xr = x[c].real(), xi = x[c].imag();
            re += ar * xr - ai * xi;
            im += ar * xi + ai * xr;
        }
        y[r] = {re, im};
    }
}

void rank1_update(cplx* a, std::size_t rows, std::size_t cols, cplx g, const cplx* u, const cplx* b) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double sr = g.real() * u[r].real() - g.imag() * u[r].imag();
        const double si = g.real() * u[r].imag() + g.imag() * u[r].real();
        cplx* row = a + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            const double br = b[c].real(), bi = b[c].imag();
            row[c] = {row[c].real() + sr * br + si * bi, row[c].imag() + si * br - sr * bi};
        }
    }
}

double norm2(const cplx* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
    return s;
}

}  // namespace mmsched::kernels::scalar
