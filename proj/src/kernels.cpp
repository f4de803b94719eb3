#include "cfxcert/kernels.hpp"

#include "cfxcert/common.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace cfxcert::kernels {

namespace {

// Mirrors the semantics of _mm256_min_pd / _mm256_max_pd so the scalar and
// AVX2 paths agree bitwise.
inline double vmin(double a, double b) { return a < b ? a : b; }
inline double vmax(double a, double b) { return a > b ? a : b; }

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 += a[i] * b[i];
        acc1 += a[i + 1] * b[i + 1];
        acc2 += a[i + 2] * b[i + 2];
        acc3 += a[i + 3] * b[i + 3];
    }
    double s = (acc0 + acc1) + (acc2 + acc3);
    for (; i < n; ++i)
        s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        y[i] += alpha * x[i];
}

void interval_dot_scalar(const double* wlo, const double* whi, const double* xlo,
                         const double* xhi, std::size_t n, double& lo, double& hi) {
    double lo_acc[4] = {0, 0, 0, 0};
    double hi_acc[4] = {0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (std::size_t j = 0; j < 4; ++j) {
            const double pll = wlo[i + j] * xlo[i + j];
            const double plh = wlo[i + j] * xhi[i + j];
            const double phl = whi[i + j] * xlo[i + j];
            const double phh = whi[i + j] * xhi[i + j];
            lo_acc[j] += vmin(vmin(pll, plh), vmin(phl, phh));
            hi_acc[j] += vmax(vmax(pll, plh), vmax(phl, phh));
        }
    }
    double lo_s = (lo_acc[0] + lo_acc[1]) + (lo_acc[2] + lo_acc[3]);
    double hi_s = (hi_acc[0] + hi_acc[1]) + (hi_acc[2] + hi_acc[3]);
    for (; i < n; ++i) {
        const double pll = wlo[i] * xlo[i];
        const double plh = wlo[i] * xhi[i];
        const double phl = whi[i] * xlo[i];
        const double phh = whi[i] * xhi[i];
        lo_s += vmin(vmin(pll, plh), vmin(phl, phh));
        hi_s += vmax(vmax(pll, plh), vmax(phl, phh));
    }
    lo = lo_s;
    hi = hi_s;
}

double sum_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 += std::fabs(a[i] - b[i]);
        acc1 += std::fabs(a[i + 1] - b[i + 1]);
        acc2 += std::fabs(a[i + 2] - b[i + 2]);
        acc3 += std::fabs(a[i + 3] - b[i + 3]);
    }
    double s = (acc0 + acc1) + (acc2 + acc3);
    for (; i < n; ++i)
        s += std::fabs(a[i] - b[i]);
    return s;
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double d0 = a[i] - b[i];
        const double d1 = a[i + 1] - b[i + 1];
        const double d2 = a[i + 2] - b[i + 2];
        const double d3 = a[i + 3] - b[i + 3];
        acc0 += d0 * d0;
        acc1 += d1 * d1;
        acc2 += d2 * d2;
        acc3 += d3 * d3;
    }
    double s = (acc0 + acc1) + (acc2 + acc3);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
    double m0 = 0.0, m1 = 0.0, m2 = 0.0, m3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        m0 = vmax(m0, std::fabs(a[i] - b[i]));
        m1 = vmax(m1, std::fabs(a[i + 1] - b[i + 1]));
        m2 = vmax(m2, std::fabs(a[i + 2] - b[i + 2]));
        m3 = vmax(m3, std::fabs(a[i + 3] - b[i + 3]));
    }
    double m = vmax(vmax(m0, m1), vmax(m2, m3));
    for (; i < n; ++i)
        m = vmax(m, std::fabs(a[i] - b[i]));
    return m;
}

const Table scalar_impl = {
    dot_scalar,     axpy_scalar,        interval_dot_scalar,
    sum_abs_diff_scalar, sum_sq_diff_scalar, max_abs_diff_scalar,
};

bool avx2_supported() {
#if defined(CFXCERT_HAVE_AVX2_TU)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Backend detect_backend() {
    if (const char* env = std::getenv("CFX_CERTIFY_SIMD")) {
        std::string_view v(env);
        if (v == "scalar")
            return Backend::scalar;
        if (v == "avx2" && avx2_supported())
            return Backend::avx2;
    }
    return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

Backend g_backend = detect_backend();

} // namespace

const Table& scalar_table() { return scalar_impl; }

bool backend_available(Backend b) {
    switch (b) {
    case Backend::scalar:
        return true;
    case Backend::avx2:
        return avx2_supported();
    }
    return false;
}

void set_backend(Backend b) {
    if (!backend_available(b))
        throw ConfigError("kernel backend not available on this machine: " +
                          std::string(backend_name(b)));
    g_backend = b;
}

Backend active_backend() { return g_backend; }

std::string_view backend_name(Backend b) {
    switch (b) {
    case Backend::scalar:
        return "scalar";
    case Backend::avx2:
        return "avx2";
    }
    return "?";
}

const Table& active() {
#if defined(CFXCERT_HAVE_AVX2_TU)
    if (g_backend == Backend::avx2)
        return avx2_table();
#endif
    return scalar_impl;
}

} // namespace cfxcert::kernels
