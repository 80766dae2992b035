#ifndef MACROQ_BELL_HPP
#define MACROQ_BELL_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "macroq/leggett_garg.hpp"
#include "macroq/limit_theory.hpp"
#include "macroq/quadrature.hpp"

namespace macroq {

/// Schmidt-diagonal bipartite state sum_k c_k |k>|k> shared between the two
/// measurement apparatuses.
struct BipartiteSchmidtState {
    std::vector<cplx> c;

    void validate() const {
        double n2 = 0.0;
        for (const cplx& v : c) n2 += std::norm(v);
        if (std::abs(n2 - 1.0) > 1e-10)
            throw std::invalid_argument("BipartiteSchmidtState: not normalized");
    }
    int dim() const { return int(c.size()); }
};

namespace detail {

/// Sign operator of one party in the number basis, phi = 0 kernel:
/// S0_{kk'} = Int psi_k(u) psi_k'(u) erf(u / beta) du. The full sign
/// operator carries the quadrature phases e^{i(k'-k) phi} on top.
inline CMatrix sign_operator_phi0(double beta, int dim) {
    double extent = std::sqrt(2.0 * dim + 1.0) + 6.0;
    // panels resolve both the wavefunctions and the erf transition width
    double panel = std::min(0.5, 2.0 * beta);
    int panels = std::max(24, int(std::ceil(2.0 * extent / panel)));
    QuadGrid g = composite_gl(-extent, extent, panels, 16);
    std::vector<std::vector<double>> psi(g.x.size());
    for (size_t i = 0; i < g.x.size(); ++i) ho_wavefunction_table(dim - 1, g.x[i], psi[i]);
    CMatrix s(dim, dim);
    for (int k = 0; k < dim; ++k)
        for (int kp = k; kp < dim; ++kp) {
            double acc = 0.0;
            for (size_t i = 0; i < g.x.size(); ++i)
                acc += g.w[i] * psi[i][k] * psi[i][kp] * std::erf(g.x[i] / beta);
            s(k, kp) = acc;
            s(kp, k) = acc;
        }
    return s;
}

inline void apply_povm_phase(CMatrix& e, double phi) {
    if (phi == 0.0) return;
    for (int k = 0; k < e.rows(); ++k)
        for (int kp = 0; kp < e.cols(); ++kp) e(k, kp) *= std::polar(1.0, (kp - k) * phi);
}

/// Lower d x d block of the POVM element E(x) = K(x)^dag K(x), composed in
/// the continuum (the kernels multiply to a single Gaussian of squared
/// amplitude, so no basis truncation enters). Used as the independent
/// reference for truncation checks.
inline CMatrix povm_block_exact(const LimitMeasurement& meas, double x, int d) {
    double extent = std::sqrt(2.0 * d + 1.0) + 2.0;
    double lo = std::min(-extent, x - 8.0 * meas.beta), hi = std::max(extent, x + 8.0 * meas.beta);
    double panel = std::min({0.5, 2.0 * meas.beta});
    int panels = std::max(16, int(std::ceil((hi - lo) / panel)));
    QuadGrid g = composite_gl(lo, hi, panels, 16);
    const double inv_b2 = 1.0 / (meas.beta * meas.beta);
    const double amp = 1.0 / std::sqrt(pi * meas.beta * meas.beta);
    std::vector<std::vector<double>> psi(g.x.size());
    for (size_t i = 0; i < g.x.size(); ++i) ho_wavefunction_table(d - 1, g.x[i], psi[i]);
    CMatrix e(d, d);
    for (int k = 0; k < d; ++k)
        for (int kp = k; kp < d; ++kp) {
            double acc = 0.0;
            for (size_t i = 0; i < g.x.size(); ++i) {
                double du = g.x[i] - x;
                double w = -du * du * inv_b2;
                if (w < -745.0) continue;
                acc += g.w[i] * amp * std::exp(w) * psi[i][k] * psi[i][kp];
            }
            e(k, kp) = acc;
            e(kp, k) = acc;
        }
    apply_povm_phase(e, meas.phi);
    return e;
}

/// Correlator <psi| S_A x S_B |psi> on a Schmidt-diagonal state; the phase
/// structure contracts to the angle sum.
inline double bell_sign_correlator(const BipartiteSchmidtState& state, const CMatrix& s0_a,
                                   const CMatrix& s0_b, double phi_a, double phi_b) {
    const int d = state.dim();
    cplx acc = 0.0;
    for (int k = 0; k < d; ++k)
        for (int kp = 0; kp < d; ++kp) {
            cplx v = std::conj(state.c[k]) * state.c[kp];
            if (v == cplx(0.0, 0.0)) continue;
            acc += v * std::polar(1.0, (kp - k) * (phi_a + phi_b)) * s0_a(k, kp) * s0_b(k, kp);
        }
    if (std::abs(acc.imag()) > 1e-9)
        throw std::runtime_error("bell_sign_correlator: nonreal correlator");
    return acc.real();
}

}  // namespace detail

/// Joint outcome density P(x, y | A, B) = <psi| E(x|A) x E(y|B) |psi> with
/// the POVM elements assembled from limit Kraus matrices on truncation dim.
/// Errors out when the truncation visibly distorts the needed block (strong
/// measurements spread occupation far above the state's own support).
inline double bell_joint_density(const BipartiteSchmidtState& state, const LimitMeasurement& meas_a,
                                 const LimitMeasurement& meas_b, double x, double y,
                                 int dim = -1) {
    state.validate();
    if (dim < 0) dim = default_truncation(state.dim());
    CMatrix ea = povm_element(meas_a, x, dim);
    CMatrix eb = povm_element(meas_b, y, dim);
    const int d = state.dim();
    CMatrix ea_ref = detail::povm_block_exact(meas_a, x, d);
    CMatrix eb_ref = detail::povm_block_exact(meas_b, y, d);
    double leak = 0.0;
    for (int k = 0; k < d; ++k)
        for (int kp = 0; kp < d; ++kp) {
            leak = std::max(leak, std::abs(ea(k, kp) - ea_ref(k, kp)));
            leak = std::max(leak, std::abs(eb(k, kp) - eb_ref(k, kp)));
        }
    if (leak > 1e-6)
        throw std::runtime_error(
            "bell_joint_density: truncation leak " + format_double(leak) +
            ", increase the truncation dim");
    cplx acc = 0.0;
    for (int k = 0; k < d; ++k)
        for (int kp = 0; kp < d; ++kp)
            acc += std::conj(state.c[k]) * state.c[kp] * ea(k, kp) * eb(k, kp);
    if (std::abs(acc.imag()) > 1e-9)
        throw std::runtime_error("bell_joint_density: nonreal density");
    return acc.real();
}

/// Bipartite CHSH from sgn-binned correlators of the joint density:
/// S = c11 + c12 + c21 - c22 over the settings (A1, A2) x (B1, B2).
/// All four settings share the pointer width through their own beta.
///
/// The certified error bound compares the sign-operator route against a
/// direct double quadrature of sgn(x) sgn(y) P(x, y) and adds the
/// normalization defect of the joint density.
inline CHSHResult bell_chsh(const BipartiteSchmidtState& state,
                            const std::array<LimitMeasurement, 4>& settings,
                            bool certify = true) {
    state.validate();
    const int d = state.dim();
    const LimitMeasurement& a1 = settings[0];
    const LimitMeasurement& a2 = settings[1];
    const LimitMeasurement& b1 = settings[2];
    const LimitMeasurement& b2 = settings[3];

    auto s0 = [&](const LimitMeasurement& m) { return detail::sign_operator_phi0(m.beta, d); };
    CMatrix s_a1 = s0(a1), s_a2 = s0(a2), s_b1 = s0(b1), s_b2 = s0(b2);

    CHSHResult res;
    res.kind = CHSHResult::Kind::bell;
    res.angles = {a1.phi, a2.phi, b1.phi, b2.phi};
    res.width = a1.beta;
    res.state = FockState::pure(state.c);
    res.correlators = {
        detail::bell_sign_correlator(state, s_a1, s_b1, a1.phi, b1.phi),
        detail::bell_sign_correlator(state, s_a1, s_b2, a1.phi, b2.phi),
        detail::bell_sign_correlator(state, s_a2, s_b1, a2.phi, b1.phi),
        detail::bell_sign_correlator(state, s_a2, s_b2, a2.phi, b2.phi),
    };
    res.value =
        res.correlators[0] + res.correlators[1] + res.correlators[2] - res.correlators[3];

    if (certify) {
        // independent route: POVM blocks by continuum kernel composition,
        // integrated with half-line Gauss-Legendre panels on each side of
        // the sgn discontinuity
        double beta_max = 0.0, beta_min = 1e300;
        for (const auto& m : settings) {
            beta_max = std::max(beta_max, m.beta);
            beta_min = std::min(beta_min, m.beta);
        }
        const double extent = std::sqrt(2.0 * d + 1.0) + 6.0 * beta_max + 3.0;
        const int panels =
            std::max(18, int(std::ceil(extent / (0.4 * std::min(1.0, beta_min)))));
        QuadGrid half = composite_gl(0.0, extent, panels, 12);
        const size_t nh = half.x.size();
        std::vector<double> xs(2 * nh), ws(2 * nh);
        for (size_t i = 0; i < nh; ++i) {
            xs[i] = -half.x[nh - 1 - i];
            ws[i] = half.w[nh - 1 - i];
            xs[nh + i] = half.x[i];
            ws[nh + i] = half.w[i];
        }
        const size_t n = xs.size();

        auto e_table = [&](const LimitMeasurement& m) {
            std::vector<CMatrix> t;
            t.reserve(n);
            for (size_t i = 0; i < n; ++i) t.push_back(detail::povm_block_exact(m, xs[i], d));
            return t;
        };
        std::array<std::vector<CMatrix>, 4> tables = {e_table(a1), e_table(a2), e_table(b1),
                                                      e_table(b2)};
        auto grid_corr = [&](int ia, int ib, double& mass_out) {
            double corr = 0.0, mass = 0.0;
            for (size_t i = 0; i < n; ++i)
                for (size_t j = 0; j < n; ++j) {
                    cplx p = 0.0;
                    for (int k = 0; k < d; ++k)
                        for (int kp = 0; kp < d; ++kp)
                            p += std::conj(state.c[k]) * state.c[kp] * tables[ia][i](k, kp) *
                                 tables[ib][j](k, kp);
                    double pv = p.real() * ws[i] * ws[j];
                    mass += pv;
                    corr += (xs[i] > 0 ? 1.0 : -1.0) * (xs[j] > 0 ? 1.0 : -1.0) * pv;
                }
            mass_out = mass;
            return corr;
        };
        double worst = 0.0, mass = 1.0;
        const std::array<std::pair<int, int>, 4> pairs = {{{0, 2}, {0, 3}, {1, 2}, {1, 3}}};
        for (int i = 0; i < 4; ++i) {
            double m = 1.0;
            double g = grid_corr(pairs[i].first, pairs[i].second, m);
            worst = std::max(worst, std::abs(g - res.correlators[i]));
            mass = m;
        }
        res.error_bound = 4.0 * worst + 4.0 * std::abs(1.0 - mass);
    } else {
        res.error_bound = 1e-9;  // sign-operator quadrature scale
    }
    return res;
}

/// Marginal of one party from the joint density, used by the no-signalling
/// checks. POVM blocks come from the continuum kernel composition, so the
/// y integral is exact up to quadrature.
inline double bell_marginal_alice(const BipartiteSchmidtState& state,
                                  const LimitMeasurement& meas_a, const LimitMeasurement& meas_b,
                                  double x, double y_extent, int n_y, int /*dim*/ = -1) {
    state.validate();
    const int d = state.dim();
    CMatrix ea = detail::povm_block_exact(meas_a, x, d);
    double h = 2.0 * y_extent / n_y;
    cplx acc = 0.0;
    for (int j = 0; j < n_y; ++j) {
        double y = -y_extent + (j + 0.5) * h;
        CMatrix eb = detail::povm_block_exact(meas_b, y, d);
        for (int k = 0; k < d; ++k)
            for (int kp = 0; kp < d; ++kp)
                acc += std::conj(state.c[k]) * state.c[kp] * ea(k, kp) * eb(k, kp) * h;
    }
    return acc.real();
}

}  // namespace macroq

#endif
