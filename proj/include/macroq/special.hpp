#ifndef MACROQ_SPECIAL_HPP
#define MACROQ_SPECIAL_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "macroq/linalg.hpp"

namespace macroq {

inline double log_factorial(long n) { return std::lgamma(double(n) + 1.0); }

inline double log_binomial(long n, long k) {
    if (k < 0 || k > n) throw std::invalid_argument("log_binomial: k out of range");
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

/// Normalized harmonic-oscillator wavefunction psi_k(x) =
/// H_k(x) e^{-x^2/2} / sqrt(2^k k! sqrt(pi)), evaluated through the
/// three-term recurrence on the normalized functions themselves. Stable for
/// k well beyond 200, unlike H_k times the Gaussian.
inline double ho_wavefunction(int k, double x) {
    if (k < 0) throw std::invalid_argument("ho_wavefunction: negative index");
    double p0 = std::exp(-0.5 * x * x) / std::pow(pi, 0.25);
    if (k == 0) return p0;
    double p1 = std::sqrt(2.0) * x * p0;
    for (int n = 2; n <= k; ++n) {
        double p2 = std::sqrt(2.0 / n) * x * p1 - std::sqrt((n - 1.0) / n) * p0;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

/// Table psi_0..psi_kmax at one point, sharing the recurrence.
inline void ho_wavefunction_table(int kmax, double x, std::vector<double>& out) {
    out.resize(kmax + 1);
    out[0] = std::exp(-0.5 * x * x) / std::pow(pi, 0.25);
    if (kmax == 0) return;
    out[1] = std::sqrt(2.0) * x * out[0];
    for (int n = 2; n <= kmax; ++n)
        out[n] = std::sqrt(2.0 / n) * x * out[n - 1] - std::sqrt((n - 1.0) / n) * out[n - 2];
}

/// Physicists' Hermite polynomial H_n(x) by recurrence.
inline double hermite(int n, double x) {
    if (n < 0) throw std::invalid_argument("hermite: negative order");
    double h0 = 1.0;
    if (n == 0) return h0;
    double h1 = 2.0 * x;
    for (int k = 2; k <= n; ++k) {
        double h2 = 2.0 * x * h1 - 2.0 * (k - 1) * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

/// Generalized Laguerre polynomial L_n^m. Three-term recurrence for real
/// arguments; the defining sum for complex arguments (orders here are small).
/// Callers rely on the convention L_n^m = 0 for n < 0.
inline double laguerre(int n, int m, double x) {
    if (n < 0) return 0.0;
    double l0 = 1.0;
    if (n == 0) return l0;
    double l1 = 1.0 + m - x;
    for (int k = 2; k <= n; ++k) {
        double l2 = ((2.0 * k - 1.0 + m - x) * l1 - (k - 1.0 + m) * l0) / k;
        l0 = l1;
        l1 = l2;
    }
    return l1;
}

inline cplx laguerre(int n, int m, cplx x) {
    if (n < 0) return 0.0;
    // L_n^m(x) = sum_q C(n+m, n-q) (-x)^q / q!
    KahanSum s;
    cplx xq = 1.0;
    for (int q = 0; q <= n; ++q) {
        s.add(std::exp(log_binomial(n + m, n - q) - log_factorial(q)) * xq);
        xq *= -x;
    }
    return s.value();
}

/// z^n for integer n >= 0 with the zero-base convention 0^0 = 1.
inline cplx ipow(cplx z, long n) {
    if (n < 0) throw std::invalid_argument("ipow: negative exponent");
    cplx r = 1.0;
    cplx base = z;
    for (long e = n; e > 0; e >>= 1) {
        if (e & 1) r *= base;
        base *= base;
    }
    return r;
}

inline double normal_pdf(double x, double mean, double sd) {
    double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * pi));
}

}  // namespace macroq

#endif
