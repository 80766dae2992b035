// Test-only oracles, deliberately independent of the library's evaluation
// paths: polynomial Rodrigues derivatives, literal tensor contractions, and
// textbook channel forms.
#ifndef MACROQ_TESTS_ORACLES_HPP
#define MACROQ_TESTS_ORACLES_HPP

#include <random>
#include <vector>

#include "macroq/linalg.hpp"
#include "macroq/qubit.hpp"
#include "macroq/special.hpp"

namespace oracles {

using macroq::cplx;
using macroq::CMatrix;
using macroq::Mat2;

/// Hermite polynomial via the Rodrigues derivative chain:
/// d^n/dx^n e^{-x^2} = P_n(x) e^{-x^2}, P_{n+1} = P_n' - 2x P_n,
/// H_n = (-1)^n P_n.
inline double hermite_rodrigues(int n, double x) {
    std::vector<double> p = {1.0};  // P_0
    for (int k = 0; k < n; ++k) {
        std::vector<double> next(p.size() + 1, 0.0);
        for (size_t i = 0; i < p.size(); ++i) {
            if (i >= 1) next[i - 1] += double(i) * p[i];  // derivative
            next[i + 1] -= 2.0 * p[i];                    // -2x P_n
        }
        p = std::move(next);
    }
    double v = 0.0;
    for (size_t i = p.size(); i-- > 0;) v = v * x + p[i];
    return (n % 2 == 0 ? 1.0 : -1.0) * v;
}

/// Laguerre L_n^m by the defining sum with exact small factorials.
inline double laguerre_sum(int n, int m, double x) {
    double acc = 0.0;
    for (int q = 0; q <= n; ++q)
        acc += std::exp(macroq::log_binomial(n + m, n - q) - macroq::log_factorial(q)) *
               std::pow(-x, q);
    return acc;
}

/// Tensor power G^{xN} as a dense 2^N matrix.
inline CMatrix tensor_power(const Mat2& g, int n) {
    CMatrix m(1, 1);
    m(0, 0) = 1.0;
    for (int q = 0; q < n; ++q) {
        CMatrix next(m.rows() * 2, m.cols() * 2);
        for (int r = 0; r < m.rows(); ++r)
            for (int c = 0; c < m.cols(); ++c)
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        next(r * 2 + a, c * 2 + b) = m(r, c) * g(a, b);
        m = std::move(next);
    }
    return m;
}

/// Dicke vector |N,k> in the computational basis.
inline std::vector<cplx> dicke_vector(int n, int k) {
    std::vector<cplx> v(size_t(1) << n, 0.0);
    double amp = std::exp(-0.5 * macroq::log_binomial(n, k));
    for (size_t s = 0; s < v.size(); ++s)
        if (__builtin_popcount(unsigned(s)) == k) v[s] = amp;
    return v;
}

/// <N,k| G^{xN} |N,l> by literal contraction.
inline cplx dicke_element_contraction(const Mat2& g, int n, int k, int l) {
    CMatrix gp = tensor_power(g, n);
    std::vector<cplx> bra = dicke_vector(n, k), ket = dicke_vector(n, l);
    cplx acc = 0.0;
    for (int r = 0; r < gp.rows(); ++r) {
        if (bra[r] == cplx(0.0)) continue;
        for (int c = 0; c < gp.cols(); ++c)
            acc += std::conj(bra[r]) * gp(r, c) * ket[c];
    }
    return acc;
}

inline Mat2 random_hermitian(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double d0 = u(rng), d1 = u(rng), re = u(rng), im = u(rng);
    return Mat2{d0, cplx(re, im), cplx(re, -im), d1};
}

inline Mat2 random_complex_mat2(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return Mat2{cplx(u(rng), u(rng)), cplx(u(rng), u(rng)), cplx(u(rng), u(rng)),
                cplx(u(rng), u(rng))};
}

/// Random density matrix of dimension d (Hermitian, PSD, trace 1).
inline CMatrix random_density(std::mt19937& rng, int d) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    CMatrix g(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) g(r, c) = cplx(u(rng), u(rng));
    CMatrix rho = g * g.adjoint();
    cplx tr = rho.trace();
    return (1.0 / tr) * rho;
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace oracles

#endif
