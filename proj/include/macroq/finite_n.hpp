#ifndef MACROQ_FINITE_N_HPP
#define MACROQ_FINITE_N_HPP

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "macroq/dicke.hpp"
#include "macroq/grid.hpp"
#include "macroq/qubit.hpp"
#include "macroq/special.hpp"

namespace macroq {

/// Pointer resolution scale: the pointer reads the intensity through a
/// Gaussian of standard deviation sigma * sqrt(N).
struct PointerSpec {
    double sigma = 1.0;

    void validate() const {
        if (!(sigma > 0.0)) throw std::invalid_argument("PointerSpec: sigma must be positive");
    }
};

inline constexpr long char_fn_max_particles = 1000000;  // documented support bound

/// Characteristic function of the coarse-grained intensity outcome,
///   chi_N(t) = e^{-N sigma^2 t^2 / 2} tr[rho_N Gdag(1 - p + p e^{itA})^{xN}],
/// computed through the exact Dicke matrix elements. With `rescaled` set it
/// is the characteristic function of lambda_N X_N + mu_N instead.
inline cplx char_fn(const DickeCoefficients& state, const QubitObservable& a,
                    const ChannelSpec& chan, const PointerSpec& pointer, double t,
                    bool rescaled) {
    chan.validate();
    pointer.validate();
    const long n = state.n_particles;
    if (n < 1) throw std::invalid_argument("char_fn: finite-mode state required");
    if (n > char_fn_max_particles)
        throw std::invalid_argument("char_fn: N beyond supported range (1e6)");

    double teff = t;
    cplx shift_phase = 1.0;
    if (rescaled) {
        RescaleParams rp = rescale_params(chan, a, n);
        teff = rp.lambda * t;
        shift_phase = std::polar(1.0, t * rp.mu);
    }

    // e^{i t_eff A} from the eigendecomposition
    Mat2 exp_ita = std::polar(1.0, teff * a.eigenvalues[0]) * a.projectors[0] +
                   std::polar(1.0, teff * a.eigenvalues[1]) * a.projectors[1];
    const double p = chan.loss_p;
    Mat2 arg = cplx(1.0 - p) * Mat2::identity() + cplx(p) * exp_ita;
    Mat2 gm = chan.apply_adjoint(arg);

    KahanSum tr;
    for (int k = 0; k < state.d; ++k)
        for (int l = 0; l < state.d; ++l) {
            cplx r = state.rho(k, l);
            if (r == cplx(0.0, 0.0)) continue;
            tr.add(r * dicke_matrix_element(gm, n, l, k));
        }

    double gauss_exp = -0.5 * n * pointer.sigma * pointer.sigma * teff * teff;
    if (gauss_exp < -745.0) return 0.0;  // below double underflow, envelope wins
    return shift_phase * std::exp(gauss_exp) * tr.value();
}

namespace detail {

struct InversionWindow {
    double t_max;   // characteristic function support half width
    double dt;      // spacing satisfying the aliasing bound for the x grid
};

inline InversionWindow inversion_window(const ChannelSpec& chan, const QubitObservable& a,
                                        const PointerSpec& pointer, const GridSpec& grid) {
    ChannelAdjointObservable g = adjoint_channel(chan, a);
    double p_abs = chan.loss_p * std::abs(g.G01);
    if (p_abs <= 0.0) throw std::invalid_argument("inversion_window: diagonal observable");
    // rescaled envelope |chi| <= exp(-sigma^2 t^2 / (4 p^2 |G01|^2));
    // cut where the envelope reaches 1e-13
    double t_max = 2.0 * p_abs * std::sqrt(std::log(1e13)) / pointer.sigma;
    // alias period 2 pi / dt exceeds the grid span plus decay padding scaled
    // to the limit width, so the aliased images carry negligible mass
    LimitMeasurement m = limit_params(chan, a, pointer.sigma);
    double alpha = std::sqrt(1.0 + m.beta * m.beta);
    double span = (grid.x_max - grid.x_min) + 8.0 + 7.0 * alpha;
    return {t_max, 2.0 * pi / span};
}

}  // namespace detail

/// Outcome grid wide enough to hold the rescaled density to ~1e-10 mass:
/// the limit width is alpha = sqrt(1 + beta^2) and excited Dicke components
/// broaden the support by sqrt of the index.
inline GridSpec recommended_grid(const ChannelSpec& chan, const QubitObservable& a, double sigma,
                                 int d, int n_points = 2001) {
    LimitMeasurement m = limit_params(chan, a, sigma);
    double alpha = std::sqrt(1.0 + m.beta * m.beta);
    double half = 4.0 + alpha * (4.5 + 1.5 * std::sqrt(double(d)));
    return GridSpec{-half, half, n_points};
}

/// Density of the rescaled outcome lambda_N X_N + mu_N by numerical Fourier
/// inversion of the exact characteristic function.
inline DensityGrid finite_distribution(const DickeCoefficients& state, const QubitObservable& a,
                                       const ChannelSpec& chan, const PointerSpec& pointer,
                                       const GridSpec& grid_spec) {
    grid_spec.validate();
    detail::InversionWindow win = detail::inversion_window(chan, a, pointer, grid_spec);
    const int half = int(std::ceil(win.t_max / win.dt));
    std::vector<cplx> chi(half + 1);
    for (int j = 0; j <= half; ++j)
        chi[j] = char_fn(state, a, chan, pointer, j * win.dt, true);

    DensityGrid out = make_density(grid_spec);
    // P(x) = (1/2pi) Int e^{-itx} chi(t) dt; Hermitian symmetry halves the work.
    for (size_t i = 0; i < out.xs.size(); ++i) {
        double x = out.xs[i];
        double acc = 0.5 * std::real(chi[0]);
        for (int j = 1; j <= half; ++j) {
            double w = (j == half) ? 0.5 : 1.0;  // trapezoid ends
            acc += w * std::real(std::polar(1.0, -x * j * win.dt) * chi[j]);
        }
        out.values[i] = acc * win.dt / pi;
    }

    double m = out.mass();
    if (std::abs(m - 1.0) > 1e-4)
        throw std::runtime_error("finite_distribution: inversion failed, achieved normalization " +
                                 format_double(m));
    out.finalize();
    return out;
}

namespace detail {

/// Dense operator on (C^2)^{xN} with qubit-local helpers for the literal
/// small-N construction.
class QubitRegisterMatrix {
  public:
    QubitRegisterMatrix(int n_qubits) : n_(n_qubits), dim_(1 << n_qubits), m_(dim_, dim_) {}

    int dim() const { return dim_; }
    CMatrix& mat() { return m_; }
    const CMatrix& mat() const { return m_; }

    /// Apply a single-qubit channel (by process matrix) to qubit q.
    void apply_channel(const ProcessMatrix& s, int q) {
        const int bit = 1 << q;
        CMatrix next(dim_, dim_);
        for (int r = 0; r < dim_; ++r)
            for (int c = 0; c < dim_; ++c) {
                cplx v = m_(r, c);
                if (v == cplx(0.0, 0.0)) continue;
                int cbit = (r >> q) & 1, dbit = (c >> q) & 1;
                int rbase = r & ~bit, cbase = c & ~bit;
                for (int ab = 0; ab < 4; ++ab) {
                    cplx sv = s[ab * 4 + 2 * cbit + dbit];
                    if (sv == cplx(0.0, 0.0)) continue;
                    int anew = ab >> 1, bnew = ab & 1;
                    next(rbase | (anew * bit), cbase | (bnew * bit)) += sv * v;
                }
            }
        m_ = std::move(next);
    }

    /// Conjugate qubit q by a 2x2 unitary: rho -> (U^dag)_q rho U_q.
    void conjugate_qubit(const Mat2& u, int q) {
        const int bit = 1 << q;
        Mat2 ud = u.adjoint();
        CMatrix next(dim_, dim_);
        for (int r = 0; r < dim_; ++r)
            for (int c = 0; c < dim_; ++c) {
                cplx v = m_(r, c);
                if (v == cplx(0.0, 0.0)) continue;
                int rb = (r >> q) & 1, cb = (c >> q) & 1;
                int rbase = r & ~bit, cbase = c & ~bit;
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        next(rbase | (a * bit), cbase | (b * bit)) += ud(a, rb) * v * u(cb, b);
            }
        m_ = std::move(next);
    }

  private:
    int n_;
    int dim_;
    CMatrix m_;
};

/// Partial trace over the qubits in `mask`; remaining qubits keep order.
inline CMatrix partial_trace(const CMatrix& m, int n_qubits, int mask) {
    int kept_bits[32];
    int n_kept = 0;
    for (int q = 0; q < n_qubits; ++q)
        if (!((mask >> q) & 1)) kept_bits[n_kept++] = q;
    const int dim_out = 1 << n_kept;
    CMatrix out(dim_out, dim_out);
    auto expand = [&](int idx) {
        int full = 0;
        for (int i = 0; i < n_kept; ++i)
            if ((idx >> i) & 1) full |= 1 << kept_bits[i];
        return full;
    };
    for (int r = 0; r < dim_out; ++r) {
        int rfull = expand(r);
        for (int c = 0; c < dim_out; ++c) {
            int cfull = expand(c);
            cplx v = 0.0;
            for (int t = mask;; t = (t - 1) & mask) {
                v += m(rfull | t, cfull | t);
                if (t == 0) break;
            }
            out(r, c) = v;
        }
    }
    return out;
}

}  // namespace detail

/// One Gaussian component of the literal outcome mixture: total intensity
/// value and its probability weight.
struct IntensityComponent {
    double intensity;
    double weight;
};

/// Literal small-N construction: apply the decoherence channel particle by
/// particle, form the loss mixture of symmetrized partial traces over the
/// Fock-like blocks, and evaluate the Kraus-operator sum outcome string by
/// outcome string. The outcome density is an exact finite mixture of
/// pointer Gaussians grouped by intensity value; this returns the mixture.
inline std::vector<IntensityComponent> brute_force_components(const DickeCoefficients& state,
                                                              const QubitObservable& a,
                                                              const ChannelSpec& chan) {
    chan.validate();
    const long n = state.n_particles;
    if (n < 1 || n > 10)
        throw std::invalid_argument("brute_force_components: N must lie in [1, 10]");
    const int nq = int(n);
    const int dim = 1 << nq;

    // Dicke basis vectors in the computational basis
    std::vector<std::vector<cplx>> dicke(state.d, std::vector<cplx>(dim, 0.0));
    for (int k = 0; k < state.d; ++k) {
        double amp = std::exp(-0.5 * log_binomial(n, k));
        for (int s = 0; s < dim; ++s)
            if (__builtin_popcount(unsigned(s)) == k) dicke[k][s] = amp;
    }

    detail::QubitRegisterMatrix reg(nq);
    for (int k = 0; k < state.d; ++k)
        for (int l = 0; l < state.d; ++l) {
            cplx v = state.rho(k, l);
            if (v == cplx(0.0, 0.0)) continue;
            for (int r = 0; r < dim; ++r) {
                if (dicke[k][r] == cplx(0.0, 0.0)) continue;
                for (int c = 0; c < dim; ++c)
                    reg.mat()(r, c) += v * dicke[k][r] * std::conj(dicke[l][c]);
            }
        }

    ProcessMatrix proc = chan.process_matrix();
    for (int q = 0; q < nq; ++q) reg.apply_channel(proc, q);

    // eigenbasis rotation matrix: columns are eigenvectors of A
    Mat2 v_basis{};
    for (int i = 0; i < 2; ++i) {
        // column i from the projector (take the dominant column and normalize)
        const Mat2& proj = a.projectors[i];
        cplx c0 = proj(0, 0), c1 = proj(1, 0);
        double nn = std::sqrt(std::norm(c0) + std::norm(c1));
        if (nn < 1e-12) {
            c0 = proj(0, 1);
            c1 = proj(1, 1);
            nn = std::sqrt(std::norm(c0) + std::norm(c1));
        }
        v_basis(0, i) = c0 / nn;
        v_basis(1, i) = c1 / nn;
    }

    const double p = chan.loss_p;
    std::vector<IntensityComponent> components;
    for (int m_kept = 0; m_kept <= nq; ++m_kept) {
        double f_nm = std::exp(log_binomial(n, m_kept) + m_kept * std::log(p) +
                               (p < 1.0 ? (n - m_kept) * std::log(1.0 - p) : 0.0));
        if (p >= 1.0 && m_kept < nq) continue;
        if (f_nm <= 0.0) continue;

        // average over all traced-out subsets of size N - M (equals the
        // symmetrized permutation average term by term)
        const int n_traced = nq - m_kept;
        CMatrix rho_m(1 << m_kept, 1 << m_kept);
        long n_subsets = 0;
        for (int mask = 0; mask < dim; ++mask) {
            if (__builtin_popcount(unsigned(mask)) != n_traced) continue;
            rho_m = rho_m + detail::partial_trace(reg.mat(), nq, mask);
            ++n_subsets;
        }
        rho_m = cplx(1.0 / double(n_subsets)) * rho_m;

        if (m_kept == 0) {
            components.push_back({0.0, f_nm * std::real(rho_m(0, 0))});
            continue;
        }
        detail::QubitRegisterMatrix block(m_kept);
        block.mat() = rho_m;
        for (int q = 0; q < m_kept; ++q) block.conjugate_qubit(v_basis, q);
        // diagonal in the A eigenbasis: group outcome strings by excitation count
        std::vector<double> weight_by_count(m_kept + 1, 0.0);
        for (int s = 0; s < (1 << m_kept); ++s)
            weight_by_count[__builtin_popcount(unsigned(s))] += std::real(block.mat()(s, s));
        for (int c = 0; c <= m_kept; ++c) {
            double intensity = (m_kept - c) * a.eigenvalues[0] + c * a.eigenvalues[1];
            components.push_back({intensity, f_nm * weight_by_count[c]});
        }
    }
    return components;
}

/// Rescaled density of the literal construction; the independent
/// cross-check of the characteristic-function pipeline.
inline DensityGrid brute_force_distribution(const DickeCoefficients& state,
                                            const QubitObservable& a, const ChannelSpec& chan,
                                            const PointerSpec& pointer,
                                            const GridSpec& grid_spec) {
    pointer.validate();
    grid_spec.validate();
    std::vector<IntensityComponent> components = brute_force_components(state, a, chan);
    RescaleParams rp = rescale_params(chan, a, state.n_particles);
    const double pointer_sd = pointer.sigma * std::sqrt(double(state.n_particles));
    DensityGrid out = make_density(grid_spec);
    for (size_t i = 0; i < out.xs.size(); ++i) {
        double acc = 0.0;
        for (const IntensityComponent& comp : components)
            acc += comp.weight *
                   normal_pdf(out.xs[i], rp.lambda * comp.intensity + rp.mu, rp.lambda * pointer_sd);
        out.values[i] = acc;
    }
    out.finalize();
    return out;
}

}  // namespace macroq

#endif
