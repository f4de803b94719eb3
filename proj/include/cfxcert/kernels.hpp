#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops shared by the whole project: dense dot/axpy for
// network inference, training and simplex pivots, interval dot products for
// propagation through interval-weighted layers, and elementwise-difference
// reductions for parameter distances and nearest-neighbour queries.
//
// Every kernel has a scalar reference implementation and (on x86-64) an AVX2
// variant selected at runtime. Both variants use the same 4-lane blocked
// accumulation order and avoid FMA, so their results are bit-identical; the
// equivalence tests assert exact equality, and seeded runs do not depend on
// which backend happens to be active.

namespace cfxcert::kernels {

enum class Backend { scalar, avx2 };

struct Table {
    // sum_i a[i]*b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // Accumulates the exact interval dot product of weights [wlo,whi] with
    // values [xlo,xhi]: per element the min/max over the four endpoint
    // products, summed into (lo, hi).
    void (*interval_dot)(const double* wlo, const double* whi,
                         const double* xlo, const double* xhi, std::size_t n,
                         double& lo, double& hi);
    // sum_i |a[i]-b[i]|
    double (*sum_abs_diff)(const double* a, const double* b, std::size_t n);
    // sum_i (a[i]-b[i])^2
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
    // max_i |a[i]-b[i]|
    double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
};

// Table for the currently selected backend.
const Table& active();
Backend active_backend();

bool backend_available(Backend b);
// Throws ConfigError if the backend is not available on this machine.
void set_backend(Backend b);
std::string_view backend_name(Backend b);

// Always-available reference implementations.
const Table& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const Table& avx2_table();
#endif

inline double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    active().axpy(alpha, x, y, n);
}
inline void interval_dot(const double* wlo, const double* whi, const double* xlo,
                         const double* xhi, std::size_t n, double& lo, double& hi) {
    active().interval_dot(wlo, whi, xlo, xhi, n, lo, hi);
}
inline double sum_abs_diff(const double* a, const double* b, std::size_t n) {
    return active().sum_abs_diff(a, b, n);
}
inline double sum_sq_diff(const double* a, const double* b, std::size_t n) {
    return active().sum_sq_diff(a, b, n);
}
inline double max_abs_diff(const double* a, const double* b, std::size_t n) {
    return active().max_abs_diff(a, b, n);
}

} // namespace cfxcert::kernels
