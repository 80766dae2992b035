#ifndef MACROQ_WIGNER_HPP
#define MACROQ_WIGNER_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "macroq/limit_theory.hpp"
#include "macroq/special.hpp"

namespace macroq {

/// Wigner function of a number-basis state at one phase-space point, by the
/// closed Laguerre form (branches k >= l and k < l over the matrix
/// elements).
inline double wigner_fock(const FockState& state, double x, double p) {
    const double r2 = 2.0 * (x * x + p * p);
    const cplx zp = cplx(x, p), zm = cplx(-x, p);
    KahanSum s;
    for (int k = 0; k < state.dim; ++k)
        for (int l = 0; l < state.dim; ++l) {
            // coefficient of |l><k| is rho(l, k)
            cplx c = state.rho(l, k);
            if (c == cplx(0.0, 0.0)) continue;
            double sign = (l % 2 == 0) ? 1.0 : -1.0;
            if (k >= l) {
                double w = std::exp(0.5 * ((k - l) * std::log(2.0) + log_factorial(l) -
                                           log_factorial(k)));
                s.add(c * sign * w * ipow(zp, k - l) * laguerre(l, k - l, r2));
            } else {
                double w = std::exp(0.5 * ((l - k) * std::log(2.0) + log_factorial(k) -
                                           log_factorial(l)));
                s.add(c * sign * w * ipow(zm, l - k) * laguerre(k, l - k, r2));
            }
        }
    cplx v = s.value();
    if (std::abs(v.imag()) > 1e-10 * std::max(1.0, std::abs(v.real())))
        throw std::runtime_error("wigner_fock: nonreal Wigner value (state not Hermitian?)");
    return std::exp(-x * x - p * p) / pi * v.real();
}

/// Phase-space sample of the Wigner function on a rectangular grid.
struct WignerGrid {
    std::vector<double> xs;
    std::vector<double> ps;
    std::vector<double> values;  // row-major, values[i * ps.size() + j]

    double value(size_t i, size_t j) const { return values[i * ps.size() + j]; }

    double mass() const {
        if (xs.size() < 2 || ps.size() < 2) return 0.0;
        double dx = xs[1] - xs[0], dp = ps[1] - ps[0];
        double s = 0.0;
        for (double v : values) s += v;
        return s * dx * dp;
    }
};

inline WignerGrid wigner_grid(const FockState& state, const GridSpec& x_spec,
                              const GridSpec& p_spec) {
    x_spec.validate();
    p_spec.validate();
    WignerGrid g;
    g.xs.resize(x_spec.n);
    g.ps.resize(p_spec.n);
    for (int i = 0; i < x_spec.n; ++i) g.xs[i] = x_spec.x(i);
    for (int j = 0; j < p_spec.n; ++j) g.ps[j] = p_spec.x(j);
    g.values.resize(size_t(x_spec.n) * p_spec.n);
    for (int i = 0; i < x_spec.n; ++i)
        for (int j = 0; j < p_spec.n; ++j)
            g.values[size_t(i) * p_spec.n + j] = wigner_fock(state, g.xs[i], g.ps[j]);
    return g;
}

namespace detail {

/// Real polynomial in (x, p), dense coefficient square c[i][j] x^i p^j.
struct Poly2 {
    int deg = 0;
    std::vector<cplx> c;

    explicit Poly2(int deg_) : deg(deg_), c(size_t(deg_ + 1) * (deg_ + 1)) {}
    cplx& at(int i, int j) { return c[size_t(i) * (deg + 1) + j]; }
    cplx at(int i, int j) const { return c[size_t(i) * (deg + 1) + j]; }
};

/// Monomial coefficients w_ij of W(x,p) * pi * e^{x^2+p^2}, i.e. the
/// polynomial part of the Wigner function. Exact for any truncation.
inline Poly2 wigner_polynomial(const FockState& state) {
    const int deg = 2 * (state.dim - 1);
    Poly2 out(deg);
    for (int k = 0; k < state.dim; ++k)
        for (int l = 0; l < state.dim; ++l) {
            cplx coeff = state.rho(l, k);
            if (coeff == cplx(0.0, 0.0)) continue;
            double sign = (l % 2 == 0) ? 1.0 : -1.0;
            int mn = std::min(k, l), d = std::abs(k - l);
            double w = std::exp(0.5 * (d * std::log(2.0) + log_factorial(mn) -
                                       log_factorial(mn + d)));
            coeff *= sign * w;
            // (x + ip)^d for k >= l, (-x + ip)^d for k < l, times L_mn^d(2x^2 + 2p^2)
            cplx xc = (k >= l) ? cplx(1.0) : cplx(-1.0);
            for (int t = 0; t <= d; ++t) {
                // binomial expansion of (xc*x + i p)^d
                cplx bt = std::exp(log_binomial(d, t)) * ipow(xc, d - t) * ipow(cplx(0.0, 1.0), t);
                // times Laguerre expansion: L_mn^d(y) = sum_q C(mn+d, mn-q) (-y)^q / q!, y = 2(x^2+p^2)
                for (int q = 0; q <= mn; ++q) {
                    cplx lq = std::exp(log_binomial(mn + d, mn - q) - log_factorial(q)) *
                              ipow(cplx(-2.0), q);
                    // (x^2 + p^2)^q expansion
                    for (int s = 0; s <= q; ++s) {
                        cplx binom = std::exp(log_binomial(q, s));
                        int xi = (d - t) + 2 * s;
                        int pj = t + 2 * (q - s);
                        out.at(xi, pj) += coeff * bt * lq * binom;
                    }
                }
            }
        }
    return out;
}

}  // namespace detail

}  // namespace macroq

#endif
