#ifndef MACROQ_DICKE_HPP
#define MACROQ_DICKE_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "macroq/linalg.hpp"
#include "macroq/special.hpp"

namespace macroq {

/// State on the span of the first d Dicke states |N,k>, k = 0..d-1, stored
/// as the density matrix rho(k,l) = <N,k|rho|N,l>.
struct DickeCoefficients {
    long n_particles = 0;
    int d = 0;
    CMatrix rho;

    static DickeCoefficients pure(long n_particles, const std::vector<cplx>& c) {
        DickeCoefficients s;
        s.n_particles = n_particles;
        s.d = int(c.size());
        s.rho = CMatrix(s.d, s.d);
        double norm2 = 0.0;
        for (const cplx& v : c) norm2 += std::norm(v);
        if (std::abs(norm2 - 1.0) > 1e-10)
            throw std::invalid_argument("DickeCoefficients: pure state is not normalized");
        for (int k = 0; k < s.d; ++k)
            for (int l = 0; l < s.d; ++l) s.rho(k, l) = c[k] * std::conj(c[l]);
        s.validate();
        return s;
    }

    static DickeCoefficients density(long n_particles, CMatrix rho) {
        DickeCoefficients s;
        s.n_particles = n_particles;
        s.d = rho.rows();
        s.rho = std::move(rho);
        s.validate();
        return s;
    }

    void validate() const {
        if (d < 1) throw std::invalid_argument("DickeCoefficients: d must be >= 1");
        if (n_particles > 0 && d > n_particles)
            throw std::invalid_argument("DickeCoefficients: d must not exceed N");
        if (rho.rows() != d || rho.cols() != d)
            throw std::invalid_argument("DickeCoefficients: coefficient matrix shape mismatch");
        if (!rho.is_hermitian(1e-10))
            throw std::invalid_argument("DickeCoefficients: density matrix not Hermitian");
        if (std::abs(rho.trace() - cplx(1.0)) > 1e-10)
            throw std::invalid_argument("DickeCoefficients: trace must be 1");
        std::vector<double> ev = hermitian_eigenvalues(rho);
        if (ev.front() < -1e-10)
            throw std::invalid_argument("DickeCoefficients: density matrix not positive semidefinite");
    }
};

namespace detail {

// log z on the principal branch; exact powers z^n = exp(n log z) are branch
// independent for integer n.
inline cplx clog(cplx z) { return std::log(z); }

}  // namespace detail

/// Exact matrix element <N,k| G^{xN} |N,l> of a one-particle operator's
/// N-fold tensor power between Dicke states, for an arbitrary complex 2x2 G.
/// Uses the exact binomial-coefficient sum over excitation overlaps,
/// evaluated in the log domain so that N in the thousands is routine.
inline cplx dicke_matrix_element(const Mat2& g, long n, long k, long l) {
    if (k < 0 || l < 0 || k > n || l > n)
        throw std::invalid_argument("dicke_matrix_element: Dicke index out of range");
    if (l > k) {
        // <N,k|G^N|N,l> for l > k: exchange k <-> l along with G10 <-> G01
        Mat2 gt{g(0, 0), g(1, 0), g(0, 1), g(1, 1)};
        return dicke_matrix_element(gt, n, l, k);
    }
    // k >= l:
    //   sqrt(C(N,k)/C(N,l)) sum_m C(k,m) C(N-k,l-m)
    //     G11^m G10^{k-m} G01^{l-m} G00^{N-k-l+m}
    const cplx g00 = g(0, 0), g01 = g(0, 1), g10 = g(1, 0), g11 = g(1, 1);
    const double log_pref = 0.5 * (log_binomial(n, k) - log_binomial(n, l));
    KahanSum sum;
    for (long m = std::max(0L, k + l - n); m <= l; ++m) {
        long e11 = m, e10 = k - m, e01 = l - m, e00 = n - k - l + m;
        auto vanishing = [](cplx base, long e) { return e > 0 && base == cplx(0.0, 0.0); };
        if (vanishing(g11, e11) || vanishing(g10, e10) || vanishing(g01, e01) ||
            vanishing(g00, e00))
            continue;
        cplx log_term = log_pref + log_binomial(k, m) + log_binomial(n - k, l - m);
        if (e11 > 0) log_term += double(e11) * detail::clog(g11);
        if (e10 > 0) log_term += double(e10) * detail::clog(g10);
        if (e01 > 0) log_term += double(e01) * detail::clog(g01);
        if (e00 > 0) log_term += double(e00) * detail::clog(g00);
        sum.add(std::exp(log_term));
    }
    return sum.value();
}

}  // namespace macroq

#endif
