#ifndef MACROQ_LEGGETT_GARG_HPP
#define MACROQ_LEGGETT_GARG_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "macroq/limit_theory.hpp"
#include "macroq/quadrature.hpp"
#include "macroq/wigner.hpp"

namespace macroq {

/// Outcome of a CHSH evaluation (spatial Bell or temporal Leggett-Garg).
struct CHSHResult {
    enum class Kind { bell, leggett_garg };
    Kind kind = Kind::leggett_garg;
    double value = 0.0;
    std::array<double, 4> angles{};       // (a1, a2, b1, b2), radians
    std::array<double, 4> correlators{};  // (c11, c12, c21, c22)
    FockState state;
    double width = 1.0;       // sigma (Leggett-Garg) or beta (Bell)
    double error_bound = 0.0;  // certified quadrature error on `value`
};

inline std::string to_string(CHSHResult::Kind k) {
    return k == CHSHResult::Kind::bell ? "bell" : "leggett-garg";
}

/// Exact closed form of the maximal Leggett-Garg CHSH violation for the
/// two-mode reference state.
inline double lg_reference_value() {
    return 2.0 / (675.0 * pi) *
           (577.0 + std::sqrt(1244179.0) + 2700.0 * std::atan(1.0 / 3.0));
}

/// The reference state sqrt(1/2 - 577/(2 sqrt(1244179))) |0> +
/// sqrt(1/2 + 577/(2 sqrt(1244179))) |2> that attains it.
inline FockState lg_reference_state() {
    double shift = 577.0 / (2.0 * std::sqrt(1244179.0));
    return FockState::pure({std::sqrt(0.5 - shift), 0.0, std::sqrt(0.5 + shift)});
}

inline std::array<double, 4> lg_reference_angles() {
    return {pi / 4.0, 3.0 * pi / 4.0, pi / 2.0, 0.0};
}

namespace detail {

/// Width of the second-measurement error-function kernel at relative angle
/// phi. Regular for all phi including sin(phi) = 0, where the printed
/// intermediate kernel degenerates but the integrated form does not.
inline double lg_kernel_width(double phi, double sigma) {
    double s2 = std::sin(phi) * std::sin(phi);
    return std::sqrt((sigma * sigma * sigma * sigma + s2) / (sigma * sigma));
}

// --- closed-form erf moment integrals -------------------------------------

/// Int x^{2m} e^{-x^2} erf(bx) erf(cx) dx for m = 0, 1, 2 via derivatives of
/// a^{-1/2} arctan(bc / sqrt(a^2 + a(b^2+c^2))) at a = 1.
inline double erf_pair_moment(int m, double b, double c) {
    const double B = b * b + c * c, bc = b * c;
    const double a = 1.0;
    const double Q = a * a + a * B;
    const double R = Q + bc * bc;
    const double sq = std::sqrt(Q);
    const double G = std::atan(bc / sq);
    const double Qp = 2.0 * a + B;  // dQ/da = dR/da
    const double Gp = -bc * Qp / (2.0 * sq * R);
    const double Gpp =
        -0.5 * bc * (2.0 / (sq * R) - Qp * Qp / (2.0 * Q * sq * R) - Qp * Qp / (sq * R * R));
    const double F = G;                     // a^{-1/2} G at a = 1
    const double Fp = -0.5 * G + Gp;        // d/da [a^{-1/2} G] at a = 1
    const double Fpp = 0.75 * G - Gp + Gpp;
    switch (m) {
        case 0: return 2.0 / std::sqrt(pi) * F;
        case 1: return -2.0 / std::sqrt(pi) * Fp;
        case 2: return 2.0 / std::sqrt(pi) * Fpp;
        default: throw std::invalid_argument("erf_pair_moment: m must be 0, 1 or 2");
    }
}

/// Int x e^{-lambda x^2} erf(g x) dx over the half-moment identities.
inline double erf_moment_1(double lambda, double g) {
    return g / (lambda * std::sqrt(lambda + g * g));
}

/// Int x^3 e^{-lambda x^2} erf(g x) dx.
inline double erf_moment_3(double lambda, double g) {
    double at = g / std::sqrt(lambda);
    double s = at / std::sqrt(1.0 + at * at);
    return (s * (1.0 + 0.5 / (1.0 + at * at))) / (lambda * lambda);
}

/// Closed-form correlator <sgn(xi) sgn(eta)>_phi for states on the first
/// three excitations: the Wigner polynomial is expanded in monomials and
/// every integral is reduced to the erf moment identities above.
inline double lg_correlator_closed(const FockState& state, double phi, double sigma) {
    if (state.dim > 3)
        throw std::invalid_argument("lg_correlator_closed: supported on span{|0>,|1>,|2>} only");
    Poly2 w = wigner_polynomial(state);

    const double st = lg_kernel_width(phi, sigma);
    const double u = std::cos(phi) / st;
    const double v = std::sin(phi) / st;
    const double sv = 1.0 + v * v;
    const double cprime = u / std::sqrt(sv);
    const double kappa = u * u / sv;
    const double lambda = 1.0 + kappa;
    const double b = 1.0 / sigma;

    // J_j(c) = A_j erf(c / sqrt(sv)) + B_j(c) exp(-c^2 / sv)
    const std::array<double, 5> A = {std::sqrt(pi), 0.0, 0.5 * std::sqrt(pi), 0.0,
                                     0.75 * std::sqrt(pi)};
    std::array<std::array<double, 4>, 5> B{};  // B[j][power of c]
    B[1][0] = v / std::sqrt(sv);
    B[2][1] = -v * v / std::pow(sv, 1.5);
    B[3][0] = (v / std::sqrt(sv)) * (1.0 + 0.5 / sv);
    B[3][2] = v * v * v / std::pow(sv, 2.5);
    B[4][1] = -1.5 * (v * v / std::pow(sv, 1.5)) * (1.0 + 1.0 / sv);
    B[4][3] = -std::pow(v, 4) / std::pow(sv, 3.5);

    double acc = 0.0;
    for (int i = 0; i <= w.deg; ++i)
        for (int j = 0; j <= w.deg; ++j) {
            cplx wc = w.at(i, j);
            if (wc == cplx(0.0, 0.0)) continue;
            if (std::abs(wc.imag()) > 1e-10)
                throw std::runtime_error("lg_correlator_closed: nonreal Wigner coefficient");
            if (j > 4) throw std::logic_error("lg_correlator_closed: monomial degree overflow");
            double iv = 0.0;
            if (i % 2 == 0 && A[j] != 0.0) iv += A[j] * erf_pair_moment(i / 2, b, cprime);
            for (int s = 0; s <= 3; ++s) {
                if (B[j][s] == 0.0) continue;
                int tot = i + s;
                if (tot % 2 == 0) continue;  // vanishes by parity
                double mom = (tot == 1) ? erf_moment_1(lambda, b)
                                        : (tot == 3 ? erf_moment_3(lambda, b)
                                                    : throw std::logic_error(
                                                          "lg_correlator_closed: moment order"));
                iv += B[j][s] * std::pow(u, s) * mom;
            }
            acc += wc.real() * iv;
        }
    return acc / pi;
}

/// Cached quadrature evaluator for the temporal correlator: the Wigner
/// function is sampled once on a tensor Gauss-Legendre grid, then each
/// (relative angle, sigma) pair costs one pass of erf products. The x-axis
/// panels resolve the steepest erf transition that will be requested, so
/// one evaluator serves a whole sigma scan.
class LgQuadratureEvaluator {
  public:
    LgQuadratureEvaluator(const FockState& state, double sigma_min, double extent = 7.5) {
        double panel_x = std::min(0.75, 3.0 * sigma_min);
        main_ = build(state, extent, panel_x, 12, 0.75, 12);
        check_ = build(state, extent, panel_x / 1.4, 9, 0.55, 9);
    }

    /// Correlator with a residual estimate from the two grids; throws when
    /// the quadrature residual exceeds `tol`.
    double correlator(double phi, double sigma, double tol = 1e-6,
                      double* residual_out = nullptr) const {
        double a = eval(main_, phi, sigma);
        double bv = eval(check_, phi, sigma);
        double resid = std::abs(a - bv);
        if (residual_out) *residual_out = resid;
        if (resid > tol)
            throw std::runtime_error("lg_correlator: quadrature residual " + format_double(resid) +
                                     " above tolerance");
        return a;
    }

  private:
    struct Cache {
        std::vector<double> x, wx;  // x-axis nodes/weights
        std::vector<double> p, wp;  // p-axis nodes/weights
        std::vector<double> w_vals; // Wigner values, row-major x * p
    };

    static Cache build(const FockState& state, double extent, double panel_x, int order_x,
                       double panel_p, int order_p) {
        Cache c;
        QuadGrid gx =
            composite_gl(-extent, extent, int(std::ceil(2.0 * extent / panel_x)), order_x);
        QuadGrid gp =
            composite_gl(-extent, extent, int(std::ceil(2.0 * extent / panel_p)), order_p);
        c.x = gx.x;
        c.wx = gx.w;
        c.p = gp.x;
        c.wp = gp.w;
        c.w_vals.resize(c.x.size() * c.p.size());
        for (size_t i = 0; i < c.x.size(); ++i)
            for (size_t j = 0; j < c.p.size(); ++j)
                c.w_vals[i * c.p.size() + j] = wigner_fock(state, c.x[i], c.p[j]);
        return c;
    }

    static double eval(const Cache& c, double phi, double sigma) {
        const double st = lg_kernel_width(phi, sigma);
        const double cp = std::cos(phi), sp = std::sin(phi);
        const size_t np = c.p.size();
        double acc = 0.0;
        for (size_t i = 0; i < c.x.size(); ++i) {
            double xi = c.x[i];
            double row = 0.0;
            for (size_t j = 0; j < np; ++j)
                row += c.wp[j] * c.w_vals[i * np + j] * std::erf((xi * cp + c.p[j] * sp) / st);
            acc += c.wx[i] * std::erf(xi / sigma) * row;
        }
        return acc;
    }

    Cache main_, check_;
};

}  // namespace detail

enum class LgRoute { quadrature, closed_form };

/// Temporal correlator <sgn(xi) sgn(eta)> at relative measurement angle phi
/// with pointer width sigma. The quadrature route integrates the Wigner
/// function against the two erf kernels; the closed-form route (states on
/// span{|0>,|1>,|2>}) evaluates the same integral through erf moment
/// identities and serves as an independent cross-check.
inline double lg_correlator(const FockState& state, double phi, double sigma,
                            LgRoute route = LgRoute::quadrature) {
    if (!(sigma > 0.0)) throw std::invalid_argument("lg_correlator: sigma must be positive");
    if (route == LgRoute::closed_form) return detail::lg_correlator_closed(state, phi, sigma);
    detail::LgQuadratureEvaluator ev(state, sigma);
    return ev.correlator(phi, sigma);
}

/// Leggett-Garg CHSH value at the four measurement angles (a1, a2, b1, b2):
/// C = <..>_{a1-b1} + <..>_{a1-b2} + <..>_{a2-b1} - <..>_{a2-b2}.
inline CHSHResult lg_chsh(const FockState& state, const std::array<double, 4>& angles,
                          double sigma, LgRoute route = LgRoute::quadrature) {
    CHSHResult res;
    res.kind = CHSHResult::Kind::leggett_garg;
    res.angles = angles;
    res.state = state;
    res.width = sigma;
    const std::array<double, 4> diffs = {angles[0] - angles[2], angles[0] - angles[3],
                                         angles[1] - angles[2], angles[1] - angles[3]};
    double err = 0.0;
    if (route == LgRoute::quadrature) {
        detail::LgQuadratureEvaluator ev(state, sigma);
        for (int i = 0; i < 4; ++i) {
            double r = 0.0;
            res.correlators[i] = ev.correlator(diffs[i], sigma, 1e-6, &r);
            err += r;
        }
    } else {
        for (int i = 0; i < 4; ++i)
            res.correlators[i] = detail::lg_correlator_closed(state, diffs[i], sigma);
        err = 4e-14;
    }
    res.error_bound = err;
    res.value = res.correlators[0] + res.correlators[1] + res.correlators[2] - res.correlators[3];
    return res;
}

/// Scan record for the sigma maximization.
struct SigmaScanPoint {
    double sigma;
    double value;
};

/// Maximize the Leggett-Garg CHSH value over the pointer width sigma:
/// log-spaced grid scan followed by golden-section refinement around the
/// best bracket.
struct SigmaScanResult {
    double sigma_star = 0.0;
    double value = 0.0;
    CHSHResult best;
    std::vector<SigmaScanPoint> trace;
};

inline SigmaScanResult maximize_lg_over_sigma(const FockState& state,
                                              const std::array<double, 4>& angles,
                                              double sigma_min = 0.05, double sigma_max = 2.0,
                                              int n_grid = 40,
                                              LgRoute route = LgRoute::quadrature) {
    if (!(sigma_min > 0.0 && sigma_max > sigma_min))
        throw std::invalid_argument("maximize_lg_over_sigma: bad sigma range");
    SigmaScanResult out;
    const std::array<double, 4> diffs = {angles[0] - angles[2], angles[0] - angles[3],
                                         angles[1] - angles[2], angles[1] - angles[3]};
    // one Wigner cache serves the whole scan
    detail::LgQuadratureEvaluator ev(state, sigma_min);
    auto value_at = [&](double s) {
        if (route == LgRoute::closed_form)
            return detail::lg_correlator_closed(state, diffs[0], s) +
                   detail::lg_correlator_closed(state, diffs[1], s) +
                   detail::lg_correlator_closed(state, diffs[2], s) -
                   detail::lg_correlator_closed(state, diffs[3], s);
        return ev.correlator(diffs[0], s) + ev.correlator(diffs[1], s) +
               ev.correlator(diffs[2], s) - ev.correlator(diffs[3], s);
    };

    std::vector<double> grid(n_grid);
    double log_lo = std::log(sigma_min), log_hi = std::log(sigma_max);
    for (int i = 0; i < n_grid; ++i)
        grid[i] = std::exp(log_lo + (log_hi - log_lo) * i / double(n_grid - 1));
    int best_i = 0;
    std::vector<double> vals(n_grid);
    for (int i = 0; i < n_grid; ++i) {
        vals[i] = value_at(grid[i]);
        out.trace.push_back({grid[i], vals[i]});
        if (vals[i] > vals[best_i]) best_i = i;
    }
    double lo = grid[std::max(0, best_i - 1)];
    double hi = grid[std::min(n_grid - 1, best_i + 1)];

    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = value_at(c), fd = value_at(d);
    for (int it = 0; it < 60 && (hi - lo) > 1e-10; ++it) {
        if (fc > fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = value_at(c);
            out.trace.push_back({c, fc});
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = value_at(d);
            out.trace.push_back({d, fd});
        }
    }
    out.sigma_star = 0.5 * (lo + hi);
    out.best = lg_chsh(state, angles, out.sigma_star, route);
    out.value = out.best.value;
    return out;
}

/// Result of locating the pointer widths at which C(sigma) attains a
/// published value: every scan-bracketed crossing, bisection refined.
struct SigmaRecoveryResult {
    std::vector<double> crossings;  // ascending sigma
    double sigma_star = 0.0;        // crossing with the smallest |C - target|
    double value = 0.0;             // C(sigma_star)
    CHSHResult best;
    std::vector<SigmaScanPoint> trace;
};

/// Recover the operating width of a CHSH value published without its sigma:
/// log-spaced scan of C(sigma), then bisection on every bracketed crossing
/// of the target level. C(sigma) need not be monotone, so several crossings
/// can exist; all are reported.
inline SigmaRecoveryResult recover_sigma_for_value(const FockState& state,
                                                   const std::array<double, 4>& angles,
                                                   double target, double sigma_min = 0.05,
                                                   double sigma_max = 2.0, int n_grid = 40,
                                                   LgRoute route = LgRoute::quadrature) {
    SigmaRecoveryResult out;
    const std::array<double, 4> diffs = {angles[0] - angles[2], angles[0] - angles[3],
                                         angles[1] - angles[2], angles[1] - angles[3]};
    detail::LgQuadratureEvaluator ev(state, sigma_min);
    auto value_at = [&](double s) {
        if (route == LgRoute::closed_form)
            return detail::lg_correlator_closed(state, diffs[0], s) +
                   detail::lg_correlator_closed(state, diffs[1], s) +
                   detail::lg_correlator_closed(state, diffs[2], s) -
                   detail::lg_correlator_closed(state, diffs[3], s);
        return ev.correlator(diffs[0], s) + ev.correlator(diffs[1], s) +
               ev.correlator(diffs[2], s) - ev.correlator(diffs[3], s);
    };

    std::vector<double> grid(n_grid), vals(n_grid);
    double log_lo = std::log(sigma_min), log_hi = std::log(sigma_max);
    for (int i = 0; i < n_grid; ++i) {
        grid[i] = std::exp(log_lo + (log_hi - log_lo) * i / double(n_grid - 1));
        vals[i] = value_at(grid[i]);
        out.trace.push_back({grid[i], vals[i]});
    }
    for (int i = 0; i + 1 < n_grid; ++i) {
        double fa = vals[i] - target, fb = vals[i + 1] - target;
        if (fa == 0.0) {
            out.crossings.push_back(grid[i]);
            continue;
        }
        if (fa * fb > 0.0) continue;
        double lo = grid[i], hi = grid[i + 1];
        for (int it = 0; it < 80 && (hi - lo) > 1e-13; ++it) {
            double mid = 0.5 * (lo + hi);
            double fm = value_at(mid) - target;
            if (fa * fm <= 0.0)
                hi = mid;
            else {
                lo = mid;
                fa = fm;
            }
        }
        out.crossings.push_back(0.5 * (lo + hi));
    }
    if (out.crossings.empty()) {
        // no bracketed crossing: fall back to the closest scan point
        int best_i = 0;
        for (int i = 1; i < n_grid; ++i)
            if (std::abs(vals[i] - target) < std::abs(vals[best_i] - target)) best_i = i;
        out.crossings.push_back(grid[best_i]);
    }
    out.sigma_star = out.crossings.front();
    double best_miss = 1e300;
    for (double s : out.crossings) {
        double miss = std::abs(value_at(s) - target);
        if (miss < best_miss) {
            best_miss = miss;
            out.sigma_star = s;
        }
    }
    out.best = lg_chsh(state, angles, out.sigma_star, route);
    out.value = out.best.value;
    return out;
}

}  // namespace macroq

#endif
