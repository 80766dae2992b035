#ifndef MACROQ_QUADRATURE_HPP
#define MACROQ_QUADRATURE_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "macroq/linalg.hpp"

namespace macroq {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes by Newton iteration on the Legendre recurrence.
inline const GaussLegendreRule& gauss_legendre(int n) {
    static thread_local int cached_n = -1;
    static thread_local GaussLegendreRule cached;
    if (cached_n == n) return cached;
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    cached = rule;
    cached_n = n;
    return cached;
}

/// Composite Gauss-Legendre grid over [a, b] with `panels` equal panels of
/// `order` points each. Integrate f by sum(w_i * f(x_i)).
struct QuadGrid {
    std::vector<double> x;
    std::vector<double> w;

    template <typename F>
    double integrate(F&& f) const {
        double acc = 0.0, comp = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            double v = w[i] * f(x[i]);
            double y = v - comp;
            double t = acc + y;
            comp = (t - acc) - y;
            acc = t;
        }
        return acc;
    }

    template <typename F>
    cplx integrate_complex(F&& f) const {
        KahanSum s;
        for (size_t i = 0; i < x.size(); ++i) s.add(w[i] * f(x[i]));
        return s.value();
    }
};

inline QuadGrid composite_gl(double a, double b, int panels, int order = 20) {
    if (!(b > a)) throw std::invalid_argument("composite_gl: empty interval");
    const GaussLegendreRule& rule = gauss_legendre(order);
    QuadGrid g;
    g.x.reserve(size_t(panels) * order);
    g.w.reserve(size_t(panels) * order);
    double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        double lo = a + p * h;
        double mid = lo + 0.5 * h, half = 0.5 * h;
        for (int i = 0; i < order; ++i) {
            g.x.push_back(mid + half * rule.nodes[i]);
            g.w.push_back(half * rule.weights[i]);
        }
    }
    return g;
}

/// Integrate a smooth function over [a, b], refining panels until two
/// successive levels agree to `tol` (absolute). Throws if `max_panels` is
/// reached without convergence.
template <typename F>
double integrate_adaptive(F&& f, double a, double b, double tol = 1e-11,
                          int initial_panels = 8, int max_panels = 512) {
    double prev = composite_gl(a, b, initial_panels).integrate(f);
    for (int panels = 2 * initial_panels; panels <= max_panels; panels *= 2) {
        double cur = composite_gl(a, b, panels).integrate(f);
        if (std::abs(cur - prev) <= tol) return cur;
        prev = cur;
    }
    throw std::runtime_error("integrate_adaptive: quadrature did not converge");
}

}  // namespace macroq

#endif
