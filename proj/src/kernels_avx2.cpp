// AVX2 kernel variants. Compiled with -mavx2 in its own translation unit;
// only reached after the runtime cpuid check in kernels.cpp.
//
// Accumulation order matches the scalar reference exactly (4 independent
// lane accumulators combined as (l0+l1)+(l2+l3), sequential tail), and no
// FMA is used, so results are bit-identical to the scalar kernels.

#include "cfxcert/kernels.hpp"

#include <cmath>
#include <immintrin.h>

namespace cfxcert::kernels {

namespace {

inline double vmax(double a, double b) { return a > b ? a : b; }

inline double combine_lanes(__m256d acc) {
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                               _mm256_loadu_pd(b + i)));
    }
    double s = combine_lanes(acc);
    for (; i < n; ++i)
        s += a[i] * b[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_add_pd(yv, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i)
        y[i] += alpha * x[i];
}

void interval_dot_avx2(const double* wlo, const double* whi, const double* xlo,
                       const double* xhi, std::size_t n, double& lo, double& hi) {
    __m256d lo_acc = _mm256_setzero_pd();
    __m256d hi_acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d wl = _mm256_loadu_pd(wlo + i);
        const __m256d wh = _mm256_loadu_pd(whi + i);
        const __m256d xl = _mm256_loadu_pd(xlo + i);
        const __m256d xh = _mm256_loadu_pd(xhi + i);
        const __m256d pll = _mm256_mul_pd(wl, xl);
        const __m256d plh = _mm256_mul_pd(wl, xh);
        const __m256d phl = _mm256_mul_pd(wh, xl);
        const __m256d phh = _mm256_mul_pd(wh, xh);
        lo_acc = _mm256_add_pd(
            lo_acc, _mm256_min_pd(_mm256_min_pd(pll, plh), _mm256_min_pd(phl, phh)));
        hi_acc = _mm256_add_pd(
            hi_acc, _mm256_max_pd(_mm256_max_pd(pll, plh), _mm256_max_pd(phl, phh)));
    }
    double lo_s = combine_lanes(lo_acc);
    double hi_s = combine_lanes(hi_acc);
    for (; i < n; ++i) {
        const double pll = wlo[i] * xlo[i];
        const double plh = wlo[i] * xhi[i];
        const double phl = whi[i] * xlo[i];
        const double phh = whi[i] * xhi[i];
        const double l = (pll < plh ? pll : plh);
        const double r = (phl < phh ? phl : phh);
        lo_s += (l < r ? l : r);
        const double lu = (pll > plh ? pll : plh);
        const double ru = (phl > phh ? phl : phh);
        hi_s += (lu > ru ? lu : ru);
    }
    lo = lo_s;
    hi = hi_s;
}

double sum_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d =
            _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, d));
    }
    double s = combine_lanes(acc);
    for (; i < n; ++i)
        s += std::fabs(a[i] - b[i]);
    return s;
}

double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d =
            _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double s = combine_lanes(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d =
            _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_max_pd(acc, _mm256_andnot_pd(sign_mask, d));
    }
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    double m = vmax(vmax(lane[0], lane[1]), vmax(lane[2], lane[3]));
    for (; i < n; ++i)
        m = vmax(m, std::fabs(a[i] - b[i]));
    return m;
}

const Table avx2_impl = {
    dot_avx2,     axpy_avx2,        interval_dot_avx2,
    sum_abs_diff_avx2, sum_sq_diff_avx2, max_abs_diff_avx2,
};

} // namespace

const Table& avx2_table() { return avx2_impl; }

} // namespace cfxcert::kernels
