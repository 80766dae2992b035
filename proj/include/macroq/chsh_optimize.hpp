#ifndef MACROQ_CHSH_OPTIMIZE_HPP
#define MACROQ_CHSH_OPTIMIZE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "macroq/bell.hpp"
#include "macroq/leggett_garg.hpp"

namespace macroq {

/// One evaluation record of the optimizer trace.
struct OptTracePoint {
    int start_index = 0;
    int iteration = 0;
    std::vector<double> params;
    double value = 0.0;
};

namespace detail {

/// Nelder-Mead simplex minimization with fixed coefficients. Deterministic
/// for a fixed start simplex.
inline std::pair<std::vector<double>, double> nelder_mead(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
    double step, int max_iter, double tol,
    const std::function<void(int, const std::vector<double>&, double)>& on_improve = {}) {
    const int n = int(x0.size());
    std::vector<std::vector<double>> xs(n + 1, x0);
    for (int i = 0; i < n; ++i) xs[i + 1][i] += step;
    std::vector<double> fs(n + 1);
    for (int i = 0; i <= n; ++i) fs[i] = f(xs[i]);

    const double alpha = 1.0, gamma = 2.0, rho = 0.5, shrink = 0.5;
    std::vector<int> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    for (int it = 0; it < max_iter; ++it) {
        for (int i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        int best = order[0], worst = order[n], second = order[n - 1];
        if (on_improve) on_improve(it, xs[best], fs[best]);
        if (std::abs(fs[worst] - fs[best]) < tol) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) centroid[j] += xs[order[i]][j] / n;

        for (int j = 0; j < n; ++j) xr[j] = centroid[j] + alpha * (centroid[j] - xs[worst][j]);
        double fr = f(xr);
        if (fr < fs[best]) {
            for (int j = 0; j < n; ++j) xe[j] = centroid[j] + gamma * (xr[j] - centroid[j]);
            double fe = f(xe);
            if (fe < fr) {
                xs[worst] = xe;
                fs[worst] = fe;
            } else {
                xs[worst] = xr;
                fs[worst] = fr;
            }
            continue;
        }
        if (fr < fs[second]) {
            xs[worst] = xr;
            fs[worst] = fr;
            continue;
        }
        bool outside = fr < fs[worst];
        const std::vector<double>& base = outside ? xr : xs[worst];
        for (int j = 0; j < n; ++j) xc[j] = centroid[j] + rho * (base[j] - centroid[j]);
        double fcv = f(xc);
        if (fcv < std::min(fr, fs[worst])) {
            xs[worst] = xc;
            fs[worst] = fcv;
            continue;
        }
        for (int i = 1; i <= n; ++i) {
            int idx = order[i];
            for (int j = 0; j < n; ++j)
                xs[idx][j] = xs[best][j] + shrink * (xs[idx][j] - xs[best][j]);
            fs[idx] = f(xs[idx]);
        }
    }
    int best = 0;
    for (int i = 1; i <= n; ++i)
        if (fs[i] < fs[best]) best = i;
    return {xs[best], fs[best]};
}

/// Real nonnegative hyperspherical coefficients from d-1 angles.
inline std::vector<cplx> spherical_coeffs(const std::vector<double>& thetas, int d) {
    std::vector<cplx> c(d, 0.0);
    double rem = 1.0;
    for (int k = 0; k < d - 1; ++k) {
        c[k] = std::abs(rem * std::cos(thetas[k]));
        rem *= std::sin(thetas[k]);
    }
    c[d - 1] = std::abs(rem);
    double n2 = 0.0;
    for (auto& v : c) n2 += std::norm(v);
    double inv = 1.0 / std::sqrt(n2);
    for (auto& v : c) v *= inv;
    return c;
}

}  // namespace detail

/// Converged endpoint of one optimizer start.
struct SeedOutcome {
    std::uint64_t seed = 0;
    double value = 0.0;
    std::array<double, 4> angles{};
    std::vector<cplx> coefficients;
    double width = 0.0;
};

struct OptimizeOptions {
    int d = 3;                      // state dimension (number of excitations kept)
    double width_min = 0.05;        // sigma (LG) or beta (Bell) search range
    double width_max = 2.0;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
    int max_iter = 800;
    std::vector<OptTracePoint>* trace = nullptr;       // optional scan record
    std::vector<SeedOutcome>* seed_outcomes = nullptr;  // optional per-start endpoints
};

/// Derivative-free multi-start maximization of the CHSH value over the four
/// angles, the (real, nonnegative) state coefficients and the measurement
/// width. Deterministic for a fixed seed list; the best start wins, ties
/// resolved by seed order.
inline CHSHResult optimize_chsh(CHSHResult::Kind kind, const OptimizeOptions& opts = {}) {
    if (opts.d < 1 || opts.d > 3)
        throw std::invalid_argument("optimize_chsh: d must lie in [1, 3]");
    const int n_theta = opts.d - 1;
    const int n_par = 4 + n_theta + 1;

    auto decode_width = [&](double w) { return std::clamp(w, opts.width_min, opts.width_max); };
    auto penalty = [&](double w) {
        double over = std::max({0.0, w - opts.width_max, opts.width_min - w});
        return 1e3 * over * over;
    };

    auto objective = [&](const std::vector<double>& par) {
        std::array<double, 4> angles = {par[0], par[1], par[2], par[3]};
        std::vector<double> thetas(par.begin() + 4, par.begin() + 4 + n_theta);
        double width = decode_width(par[4 + n_theta]);
        std::vector<cplx> c = detail::spherical_coeffs(thetas, opts.d);
        double value;
        if (kind == CHSHResult::Kind::leggett_garg) {
            FockState st = FockState::pure(c);
            const std::array<double, 4> diffs = {angles[0] - angles[2], angles[0] - angles[3],
                                                 angles[1] - angles[2], angles[1] - angles[3]};
            value = detail::lg_correlator_closed(st, diffs[0], width) +
                    detail::lg_correlator_closed(st, diffs[1], width) +
                    detail::lg_correlator_closed(st, diffs[2], width) -
                    detail::lg_correlator_closed(st, diffs[3], width);
        } else {
            BipartiteSchmidtState st{c};
            CMatrix s0 = detail::sign_operator_phi0(width, opts.d);
            value = detail::bell_sign_correlator(st, s0, s0, angles[0], angles[2]) +
                    detail::bell_sign_correlator(st, s0, s0, angles[0], angles[3]) +
                    detail::bell_sign_correlator(st, s0, s0, angles[1], angles[2]) -
                    detail::bell_sign_correlator(st, s0, s0, angles[1], angles[3]);
        }
        return -value + penalty(par[4 + n_theta]);
    };

    std::vector<double> best_par;
    double best_val = 1e300;
    for (size_t s = 0; s < opts.seeds.size(); ++s) {
        std::mt19937_64 rng(opts.seeds[s]);
        std::uniform_real_distribution<double> uang(0.0, 2.0 * pi);
        std::uniform_real_distribution<double> uth(0.0, 0.5 * pi);
        std::uniform_real_distribution<double> uw(opts.width_min, opts.width_max);
        std::vector<double> start(n_par);
        for (int i = 0; i < 4; ++i) start[i] = uang(rng);
        for (int i = 0; i < n_theta; ++i) start[4 + i] = uth(rng);
        start[4 + n_theta] = uw(rng);

        auto record = [&](int it, const std::vector<double>& p, double v) {
            if (opts.trace) opts.trace->push_back({int(s), it, p, -v});
        };
        auto [par, val] = detail::nelder_mead(objective, start, 0.35, opts.max_iter, 1e-12, record);
        if (opts.seed_outcomes) {
            SeedOutcome outcome;
            outcome.seed = opts.seeds[s];
            outcome.value = -val;
            outcome.angles = {par[0], par[1], par[2], par[3]};
            outcome.coefficients = detail::spherical_coeffs(
                std::vector<double>(par.begin() + 4, par.begin() + 4 + n_theta), opts.d);
            outcome.width = decode_width(par[4 + n_theta]);
            opts.seed_outcomes->push_back(std::move(outcome));
        }
        if (val < best_val - 1e-15) {
            best_val = val;
            best_par = par;
        }
    }

    std::array<double, 4> angles = {best_par[0], best_par[1], best_par[2], best_par[3]};
    std::vector<double> thetas(best_par.begin() + 4, best_par.begin() + 4 + n_theta);
    double width = decode_width(best_par[4 + n_theta]);
    std::vector<cplx> c = detail::spherical_coeffs(thetas, opts.d);

    // final evaluation through the primary routes
    if (kind == CHSHResult::Kind::leggett_garg) {
        CHSHResult res = lg_chsh(FockState::pure(c), angles, width, LgRoute::quadrature);
        return res;
    }
    std::array<LimitMeasurement, 4> settings;
    for (int i = 0; i < 4; ++i) settings[i] = LimitMeasurement{width, angles[i], width};
    return bell_chsh(BipartiteSchmidtState{c}, settings, true);
}

namespace detail {

inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * pi);
    if (a > pi) a -= 2.0 * pi;
    if (a <= -pi) a += 2.0 * pi;
    return a;
}

}  // namespace detail

/// Test whether `found` coincides with `target` up to the invariances of
/// the CHSH functional: a common shift of all four angles, global
/// reflection, the simultaneous label swaps, and pi shifts of individual
/// angles. A candidate transform counts only if it provably preserves the
/// CHSH value for the given state and width (checked numerically), so no
/// symmetry is assumed that the objective does not actually have.
inline bool angles_match_modulo_orbit(CHSHResult::Kind kind, const std::array<double, 4>& found,
                                      const std::array<double, 4>& target,
                                      const std::vector<cplx>& coefficients, double width,
                                      double tol) {
    auto value_of = [&](const std::array<double, 4>& ang) {
        if (kind == CHSHResult::Kind::leggett_garg) {
            FockState st = FockState::pure(coefficients);
            return detail::lg_correlator_closed(st, ang[0] - ang[2], width) +
                   detail::lg_correlator_closed(st, ang[0] - ang[3], width) +
                   detail::lg_correlator_closed(st, ang[1] - ang[2], width) -
                   detail::lg_correlator_closed(st, ang[1] - ang[3], width);
        }
        BipartiteSchmidtState st{coefficients};
        CMatrix s0 = detail::sign_operator_phi0(width, int(coefficients.size()));
        return detail::bell_sign_correlator(st, s0, s0, ang[0], ang[2]) +
               detail::bell_sign_correlator(st, s0, s0, ang[0], ang[3]) +
               detail::bell_sign_correlator(st, s0, s0, ang[1], ang[2]) -
               detail::bell_sign_correlator(st, s0, s0, ang[1], ang[3]);
    };
    const double base_value = value_of(found);

    for (int swap_a = 0; swap_a < 2; ++swap_a)
        for (int swap_b = 0; swap_b < 2; ++swap_b)
            for (int reflect = 0; reflect < 2; ++reflect)
                for (int pi_mask = 0; pi_mask < 16; ++pi_mask) {
                    std::array<double, 4> cand = found;
                    if (swap_a) std::swap(cand[0], cand[1]);
                    if (swap_b) std::swap(cand[2], cand[3]);
                    for (int i = 0; i < 4; ++i) {
                        if (reflect) cand[i] = -cand[i];
                        if ((pi_mask >> i) & 1) cand[i] += pi;
                    }
                    // align the free common shift against the target
                    double sx = 0.0, sy = 0.0;
                    for (int i = 0; i < 4; ++i) {
                        double delta = target[i] - cand[i];
                        sx += std::cos(delta);
                        sy += std::sin(delta);
                    }
                    double theta = std::atan2(sy, sx);
                    double worst = 0.0;
                    for (int i = 0; i < 4; ++i)
                        worst = std::max(
                            worst, std::abs(detail::wrap_angle(target[i] - cand[i] - theta)));
                    if (worst > tol) continue;
                    for (int i = 0; i < 4; ++i) cand[i] += theta;
                    if (std::abs(value_of(cand) - base_value) <= 1e-9 * std::max(1.0, std::abs(base_value)))
                        return true;
                }
    return false;
}

}  // namespace macroq

#endif
