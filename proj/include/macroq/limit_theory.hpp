#ifndef MACROQ_LIMIT_THEORY_HPP
#define MACROQ_LIMIT_THEORY_HPP

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "macroq/dicke.hpp"
#include "macroq/grid.hpp"
#include "macroq/quadrature.hpp"
#include "macroq/qubit.hpp"
#include "macroq/special.hpp"

namespace macroq {

/// State on the truncated harmonic-oscillator number basis |0>..|dim-1>,
/// stored as rho(k,l) = <k|rho|l>.
struct FockState {
    int dim = 0;
    CMatrix rho;

    static FockState pure(const std::vector<cplx>& c) {
        FockState s;
        s.dim = int(c.size());
        s.rho = CMatrix(s.dim, s.dim);
        double norm2 = 0.0;
        for (const cplx& v : c) norm2 += std::norm(v);
        if (std::abs(norm2 - 1.0) > 1e-10)
            throw std::invalid_argument("FockState: pure state is not normalized");
        for (int k = 0; k < s.dim; ++k)
            for (int l = 0; l < s.dim; ++l) s.rho(k, l) = c[k] * std::conj(c[l]);
        return s;
    }

    static FockState density(CMatrix rho) {
        FockState s;
        s.dim = rho.rows();
        s.rho = std::move(rho);
        s.validate();
        return s;
    }

    static FockState number_state(int k, int dim = -1) {
        if (dim < 0) dim = k + 1;
        std::vector<cplx> c(dim, 0.0);
        c[k] = 1.0;
        return pure(c);
    }

    /// Macroscopic-limit image of a Dicke-subspace state: |N,k> -> |k>.
    static FockState from_dicke(const DickeCoefficients& d) {
        FockState s;
        s.dim = d.d;
        s.rho = d.rho;
        return s;
    }

    void validate() const {
        if (dim < 1 || rho.rows() != dim || rho.cols() != dim)
            throw std::invalid_argument("FockState: bad shape");
        if (!rho.is_hermitian(1e-10)) throw std::invalid_argument("FockState: not Hermitian");
        if (std::abs(rho.trace() - cplx(1.0)) > 1e-10)
            throw std::invalid_argument("FockState: trace must be 1");
        std::vector<double> ev = hermitian_eigenvalues(rho);
        if (ev.front() < -1e-10) throw std::invalid_argument("FockState: not positive semidefinite");
    }
};

/// Matrix of the limit Kraus operator K(x|A) on a number-basis truncation:
/// a Gaussian of width beta in the quadrature rotated by phi.
struct KrausMatrix {
    double x = 0.0;
    LimitMeasurement meas;
    CMatrix m;
};

namespace detail {

/// Shared quadrature table for Kraus-matrix construction at fixed
/// truncation: wavefunction values on a composite Gauss-Legendre grid
/// covering the classically allowed region plus Gaussian padding.
struct KrausQuadTable {
    QuadGrid grid;
    std::vector<std::vector<double>> psi;  // psi[node][k]

    KrausQuadTable(int dim, double beta, double x_extent, double refine = 1.0) {
        double turning = std::sqrt(2.0 * dim + 1.0);
        double lo = -(turning + 2.0) - std::min(8.0 * beta + 2.0, 40.0) - x_extent;
        double hi = -lo;
        // panel width tracks the shortest wavefunction oscillation and the
        // Gaussian window width
        double panel_w = std::min({0.8, 4.0 / turning, 3.0 * beta}) / refine;
        int panels = int(std::ceil((hi - lo) / panel_w));
        grid = composite_gl(lo, hi, panels, 16);
        psi.resize(grid.x.size());
        for (size_t i = 0; i < grid.x.size(); ++i)
            ho_wavefunction_table(dim - 1, grid.x[i], psi[i]);
    }
};

/// phi = 0 kernel <j|K0(x)|k> = Int g_beta(x - u) psi_j(u) psi_k(u) du for
/// all j, k < dim at once.
inline CMatrix kraus_kernel_phi0(const KrausQuadTable& table, double beta, double x, int dim) {
    const double amp = std::pow(pi * beta * beta, -0.25);
    const double inv2b2 = 1.0 / (2.0 * beta * beta);
    CMatrix out(dim, dim);
    std::vector<double> wg(table.grid.x.size());
    for (size_t i = 0; i < wg.size(); ++i) {
        double dxu = table.grid.x[i] - x;
        double e = -dxu * dxu * inv2b2;
        wg[i] = (e < -745.0) ? 0.0 : table.grid.w[i] * amp * std::exp(e);
    }
    for (int j = 0; j < dim; ++j)
        for (int k = j; k < dim; ++k) {
            double acc = 0.0;
            for (size_t i = 0; i < wg.size(); ++i) {
                if (wg[i] == 0.0) continue;
                acc += wg[i] * table.psi[i][j] * table.psi[i][k];
            }
            out(j, k) = acc;
            out(k, j) = acc;
        }
    return out;
}

/// Rectangular slice of the phi = 0 kernel: rows m < dim, columns j < cols.
inline std::vector<std::vector<double>> kraus_kernel_columns(const KrausQuadTable& table,
                                                             double beta, double x, int dim,
                                                             int cols) {
    const double amp = std::pow(pi * beta * beta, -0.25);
    const double inv2b2 = 1.0 / (2.0 * beta * beta);
    std::vector<std::vector<double>> out(dim, std::vector<double>(cols, 0.0));
    const size_t n = table.grid.x.size();
    std::vector<double> wg(n);
    size_t lo = n, hi = 0;
    for (size_t i = 0; i < n; ++i) {
        double dxu = table.grid.x[i] - x;
        double e = -dxu * dxu * inv2b2;
        wg[i] = (e < -745.0) ? 0.0 : table.grid.w[i] * amp * std::exp(e);
        if (wg[i] != 0.0) {
            lo = std::min(lo, i);
            hi = std::max(hi, i + 1);
        }
    }
    for (int m = 0; m < dim; ++m)
        for (int j = 0; j < cols; ++j) {
            double acc = 0.0;
            for (size_t i = lo; i < hi; ++i) acc += wg[i] * table.psi[i][m] * table.psi[i][j];
            out[m][j] = acc;
        }
    return out;
}

inline void apply_quadrature_phase(CMatrix& m, double phi) {
    if (phi == 0.0) return;
    const int dim = m.rows();
    for (int j = 0; j < dim; ++j)
        for (int k = 0; k < dim; ++k) m(j, k) *= std::polar(1.0, (k - j) * phi);
}

}  // namespace detail

/// Default Fock truncation for a source state of dimension d.
inline int default_truncation(int d) { return 4 * d + 20; }

/// Truncation for Kraus-matrix work at measurement width beta: strong
/// measurements (small beta) position-squeeze the post-measurement states
/// and spread occupation well above the source dimension; the spread grows
/// with the source's own extent.
inline int route_truncation(int d, double beta) {
    int base = default_truncation(d);
    int excess = std::max(0, d - 3);
    if (beta >= 0.8) return base;
    if (beta >= 0.45) return std::max(base, 64 + 6 * excess);
    return std::max(base, 96 + 8 * excess);
}

/// Kraus matrix by quadrature: <j|K(x)|k> = e^{i(k-j)phi} (phi = 0 kernel).
/// Checks quadrature convergence by panel refinement.
inline KrausMatrix limit_kraus(const LimitMeasurement& meas, double x, int dim) {
    if (dim < 1) throw std::invalid_argument("limit_kraus: dim must be >= 1");
    if (!(meas.beta > 0.0)) throw std::invalid_argument("limit_kraus: beta must be positive");
    detail::KrausQuadTable coarse(dim, meas.beta, std::abs(x));
    CMatrix k0 = detail::kraus_kernel_phi0(coarse, meas.beta, x, dim);
    {
        detail::KrausQuadTable fine_table(dim, meas.beta, std::abs(x), 1.5);
        CMatrix k0_fine = detail::kraus_kernel_phi0(fine_table, meas.beta, x, dim);
        double resid = k0.max_abs_diff(k0_fine);
        if (resid > 1e-9)
            throw std::runtime_error("limit_kraus: quadrature did not converge, residual " +
                                     format_double(resid));
        k0 = std::move(k0_fine);
    }
    detail::apply_quadrature_phase(k0, meas.phi);
    return KrausMatrix{x, meas, std::move(k0)};
}

/// POVM element E(x|A) = K(x)^dag K(x) as the product of Kraus matrices on
/// the truncation.
inline CMatrix povm_element(const LimitMeasurement& meas, double x, int dim) {
    KrausMatrix k = limit_kraus(meas, x, dim);
    return k.m.adjoint() * k.m;
}

/// Residual max |(sum_x E(x) dx - I)_{jk}| over the protected lower block
/// j, k < dim/2, with the POVM elements assembled from truncated
/// Kraus-matrix products on an x grid.
inline double povm_completeness_residual(const LimitMeasurement& meas, int dim,
                                         int protected_dim = -1) {
    if (protected_dim < 0) protected_dim = dim / 2;
    const int pd = protected_dim;
    // the protected-block elements die off beyond the block's classically
    // allowed region plus the measurement width
    double x_lim = std::sqrt(2.0 * pd + 1.0) + 8.0 * meas.beta + 3.0;
    // trapezoid on an analytic decaying integrand: spectral accuracy
    double dx = std::min(meas.beta, 1.0) / 4.0;
    int half = int(std::ceil(x_lim / dx));
    detail::KrausQuadTable table(dim, meas.beta, 0.0);
    std::vector<std::vector<double>> acc(pd, std::vector<double>(pd, 0.0));
    for (int i = -half; i <= half; ++i) {
        double x = i * dx;
        // the phase factors of phi drop out against the identity target,
        // so the phi = 0 kernel suffices
        auto cols = detail::kraus_kernel_columns(table, meas.beta, x, dim, pd);
        double w = ((std::abs(i) == half) ? 0.5 : 1.0) * dx;
        for (int j = 0; j < pd; ++j)
            for (int k = j; k < pd; ++k) {
                double e = 0.0;
                for (int m = 0; m < dim; ++m) e += cols[m][j] * cols[m][k];
                acc[j][k] += w * e;
            }
    }
    double worst = 0.0;
    for (int j = 0; j < pd; ++j)
        for (int k = j; k < pd; ++k) {
            double want = (j == k) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(acc[j][k] - want));
        }
    return worst;
}

/// Outcome grid wide enough for a limit density of a dim-d state at
/// measurement width beta.
inline GridSpec recommended_limit_grid(const LimitMeasurement& meas, int d, int n_points = 2001) {
    double alpha = std::sqrt(1.0 + meas.beta * meas.beta);
    double half = 4.0 + alpha * (4.5 + 1.5 * std::sqrt(double(d)));
    return GridSpec{-half, half, n_points};
}

/// Single-measurement density through the Kraus-matrix quadrature route,
/// tr[K(x) rho K(x)^dag] on a truncation, sharing one wavefunction table
/// across the whole grid. This is the partner of single_meas_density in the
/// two-route cross-check.
inline DensityGrid kraus_route_density(const FockState& state, const LimitMeasurement& meas,
                                       const GridSpec& grid_spec, int dim = -1) {
    grid_spec.validate();
    if (dim < 0) dim = route_truncation(state.dim, meas.beta);
    const int d = state.dim;
    double x_extent = std::max(std::abs(grid_spec.x_min), std::abs(grid_spec.x_max));
    detail::KrausQuadTable table(dim, meas.beta, x_extent);
    detail::KrausQuadTable fine(dim, meas.beta, x_extent, 1.5);
    DensityGrid out = make_density(grid_spec);
    double worst_resid = 0.0;
    for (size_t i = 0; i < out.xs.size(); ++i) {
        double x = out.xs[i];
        auto density_from = [&](const detail::KrausQuadTable& t) {
            auto cols = detail::kraus_kernel_columns(t, meas.beta, x, dim, d);
            // tr[K rho K^dag] = sum_{k,l} rho(k,l) (K^dag K)(l,k); the phi
            // phases cancel against the Hermitian rho as e^{i(k-l)phi}
            cplx acc = 0.0;
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) {
                    cplx r = state.rho(k, l);
                    if (r == cplx(0.0, 0.0)) continue;
                    double e_lk = 0.0;
                    for (int m = 0; m < dim; ++m) e_lk += cols[m][l] * cols[m][k];
                    acc += r * std::polar(1.0, (k - l) * meas.phi) * e_lk;
                }
            return std::real(acc);
        };
        double coarse_v = density_from(table);
        double fine_v = density_from(fine);
        worst_resid = std::max(worst_resid, std::abs(coarse_v - fine_v));
        out.values[i] = fine_v;
    }
    if (worst_resid > 1e-9)
        throw std::runtime_error("kraus_route_density: quadrature residual " +
                                 format_double(worst_resid));
    out.finalize();
    return out;
}

/// Single-measurement outcome density by the closed Hermite-sum form
/// (independent of the Kraus-matrix quadrature route).
inline DensityGrid single_meas_density(const FockState& state, const LimitMeasurement& meas,
                                       const GridSpec& grid_spec) {
    grid_spec.validate();
    const double alpha2 = 1.0 + meas.beta * meas.beta;
    const double alpha = std::sqrt(alpha2);
    const int dim = state.dim;

    // coefficient of psi_n(x/alpha) e^{-x^2/(2 alpha^2)} for each (k, l, m)
    struct Term {
        int n;
        cplx coeff;
    };
    std::vector<Term> terms;
    const double log_alpha = std::log(alpha);
    for (int k = 0; k < dim; ++k)
        for (int l = 0; l < dim; ++l) {
            cplx r = state.rho(k, l);
            if (r == cplx(0.0, 0.0)) continue;
            cplx phase = std::polar(1.0, (k - l) * meas.phi);
            for (int m = 0; m <= std::min(k, l); ++m) {
                int n = k + l - 2 * m;
                double lc = 0.5 * (log_factorial(k) + log_factorial(l)) - log_factorial(m) +
                            0.5 * log_factorial(n) - log_factorial(l - m) - log_factorial(k - m) -
                            n * log_alpha;
                terms.push_back({n, r * phase * std::exp(lc) * std::pow(pi, 0.25)});
            }
        }

    int n_max = 2 * (dim - 1);
    std::vector<double> psi;
    DensityGrid out = make_density(grid_spec);
    const double norm = 1.0 / std::sqrt(pi * alpha2);
    for (size_t i = 0; i < out.xs.size(); ++i) {
        double y = out.xs[i] / alpha;
        ho_wavefunction_table(std::max(n_max, 0), y, psi);
        double envelope = std::exp(-0.5 * y * y);
        KahanSum s;
        for (const Term& t : terms) s.add(t.coeff * psi[t.n] * envelope);
        cplx v = s.value();
        if (std::abs(v.imag()) > 1e-9)
            throw std::runtime_error("single_meas_density: nonreal density value");
        out.values[i] = norm * v.real();
    }
    out.finalize();
    return out;
}

/// Joint density of n sequential measurements at outcomes xs, evaluated by
/// chained Kraus-matrix products on the truncation. Reports the population
/// leaked into the top quarter of the basis as the truncation error.
struct SequentialResult {
    double density = 0.0;
    double truncation_leak = 0.0;
};

inline SequentialResult sequential_density_checked(const FockState& state,
                                                   const std::vector<LimitMeasurement>& settings,
                                                   const std::vector<double>& xs, int dim) {
    if (settings.empty() || settings.size() != xs.size())
        throw std::invalid_argument("sequential_density: settings and outcomes must match");
    if (dim < state.dim) throw std::invalid_argument("sequential_density: truncation below state");
    CMatrix rho(dim, dim);
    for (int k = 0; k < state.dim; ++k)
        for (int l = 0; l < state.dim; ++l) rho(k, l) = state.rho(k, l);
    for (size_t j = 0; j < settings.size(); ++j) {
        KrausMatrix k = limit_kraus(settings[j], xs[j], dim);
        rho = k.m * rho * k.m.adjoint();
    }
    double tr = std::real(rho.trace());
    double leak = 0.0;
    for (int j = (3 * dim) / 4; j < dim; ++j) leak += std::real(rho(j, j));
    SequentialResult res;
    res.density = tr;
    res.truncation_leak = leak;
    // relative criterion with an absolute floor: a leak below 1e-8 cannot
    // move any normalized density value at the tolerances used here
    if (leak > 1e-6 * tr && leak > 1e-8)
        throw std::runtime_error(
            "sequential_density: truncation leak above 1e-6, increase the truncation dim");
    return res;
}

inline double sequential_density(const FockState& state,
                                 const std::vector<LimitMeasurement>& settings,
                                 const std::vector<double>& xs, int dim) {
    return sequential_density_checked(state, settings, xs, dim).density;
}

/// One evaluated point of a joint n-measurement density.
struct JointDensityPoint {
    std::vector<double> xs;
    double density = 0.0;
};

/// CSV with one outcome column per measurement plus the density column.
inline void write_joint_csv(const std::vector<JointDensityPoint>& points,
                            const std::string& path) {
    if (points.empty()) throw std::invalid_argument("write_joint_csv: no points");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_joint_csv: cannot open " + path);
    const size_t n = points.front().xs.size();
    for (size_t j = 0; j < n; ++j) out << 'x' << (j + 1) << ',';
    out << "pdf\n";
    for (const JointDensityPoint& p : points) {
        if (p.xs.size() != n) throw std::invalid_argument("write_joint_csv: ragged points");
        for (double x : p.xs) out << format_double(x) << ',';
        out << format_double(p.density) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Laguerre-side identities certifying the sequential factorization
// ---------------------------------------------------------------------------

/// laguerre_poly: see special.hpp (real recurrence / complex defining sum);
/// re-exported here under the interface name.
inline cplx laguerre_poly(int n, int m, cplx x) { return laguerre(n, m, x); }
inline double laguerre_poly(int n, int m, double x) { return laguerre(n, m, x); }

/// Closed form f_{kl}(a, b, a', b') =
///   e^{a b'} (a+a')^{l-min} (b+b')^{k-min} / max! * L_min^{|k-l|}(-(a+a')(b+b'))
inline cplx lemma_f(int k, int l, cplx a, cplx b, cplx ap, cplx bp) {
    if (k < 0 || l < 0) throw std::invalid_argument("lemma_f: negative index");
    int mn = std::min(k, l), mx = std::max(k, l);
    cplx s = a + ap, t = b + bp;
    cplx lag = laguerre(mn, mx - mn, -s * t);
    return std::exp(a * bp) * ipow(s, l - mn) * ipow(t, k - mn) *
           std::exp(-log_factorial(mx)) * lag;
}

/// Series form g_{kl}; truncated when the terms fall below 1e-16 of the
/// partial sum (three consecutive times), capped at j = max_terms. The
/// series as written carries negative powers of a*b and a'*b', so those
/// products must be nonzero unless k = 0 (resp. l = 0).
inline cplx lemma_g(int k, int l, cplx a, cplx b, cplx ap, cplx bp, int max_terms = 500) {
    if (k < 0 || l < 0) throw std::invalid_argument("lemma_g: negative index");
    if ((k > 0 && a * b == cplx(0.0)) || (l > 0 && ap * bp == cplx(0.0)))
        throw std::invalid_argument("lemma_g: series needs nonzero a*b and a'*b'");
    cplx pref = ipow(ap, l) * ipow(b, k);
    cplx ab = a * b, apbp = ap * bp, abp = a * bp;
    KahanSum sum;
    int quiet = 0;
    for (int j = 0; j <= max_terms; ++j) {
        int mnk = std::min(k, j), mxk = std::max(k, j);
        int mnl = std::min(l, j), mxl = std::max(l, j);
        cplx v = pref * std::exp(log_factorial(j) - log_factorial(mxk) - log_factorial(mxl));
        v *= ipow(abp, j);
        if (mnk > 0) v /= ipow(ab, mnk);
        v *= laguerre(mnk, mxk - mnk, -ab);
        if (mnl > 0) v /= ipow(apbp, mnl);
        v *= laguerre(mnl, mxl - mnl, -apbp);
        sum.add(v);
        double mag = std::abs(v), tot = std::abs(sum.value());
        if (j >= std::max(k, l) && mag <= 1e-16 * std::max(tot, 1e-300)) {
            if (++quiet >= 3) return sum.value();
        } else {
            quiet = 0;
        }
    }
    throw std::runtime_error("lemma_g: series tail above tolerance, increase max_terms");
}

/// Max residual of the Hermite product identity over an x grid: the single
/// Hermite sum (left side) against the Gaussian convolution of a Hermite
/// pair (right side, by quadrature). Requires alpha^2 = beta^2 + gamma^2 and
/// k >= l.
inline double hermite_product_lemma_check(double alpha, double beta, double gamma, int k, int l,
                                          const std::vector<double>& x_grid) {
    if (k < l || l < 0) throw std::invalid_argument("hermite_product_lemma_check: need k >= l >= 0");
    if (std::abs(alpha * alpha - beta * beta - gamma * gamma) > 1e-12)
        throw std::invalid_argument("hermite_product_lemma_check: alpha^2 != beta^2 + gamma^2");
    const double ck = std::exp(-0.5 * k * std::log(2.0) - log_factorial(k));
    const double cl = std::exp(-0.5 * l * std::log(2.0) - log_factorial(l));
    double worst = 0.0;
    for (double x : x_grid) {
        double lhs = 0.0;
        for (int m = 0; m <= l; ++m) {
            int n = k + l - 2 * m;
            double c = std::exp(-log_factorial(m) + log_binomial(n, l - m) -
                                0.5 * n * std::log(2.0) - log_factorial(n)) *
                       std::pow(gamma / alpha, n);
            lhs += c * hermite(n, x / alpha);
        }
        lhs *= std::exp(-x * x / (alpha * alpha)) / std::sqrt(pi * alpha * alpha);

        double span = std::abs(x) + 8.0 * (beta + gamma) + 4.0;
        auto integrand = [&](double xp) {
            double w = std::exp(-(x - xp) * (x - xp) / (beta * beta)) /
                       std::sqrt(pi * beta * beta) *
                       std::exp(-xp * xp / (gamma * gamma)) / std::sqrt(pi * gamma * gamma);
            return w * ck * hermite(k, xp / gamma) * cl * hermite(l, xp / gamma);
        };
        double rhs = integrate_adaptive(integrand, -span, span, 1e-12, 16, 1024);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

}  // namespace macroq

#endif
