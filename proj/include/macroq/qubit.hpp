#ifndef MACROQ_QUBIT_HPP
#define MACROQ_QUBIT_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "macroq/linalg.hpp"

namespace macroq {

inline constexpr double hermiticity_tol = 1e-12;

/// Single-particle measurement setting: a Hermitian 2x2 observable with its
/// eigendecomposition. Eigenvalues are stored ascending and the projectors
/// satisfy Pi_- + Pi_+ = I, Pi_a Pi_b = delta_ab Pi_a.
struct QubitObservable {
    Mat2 matrix;
    std::array<double, 2> eigenvalues{};
    std::array<Mat2, 2> projectors{};

    /// True when <0|A|1> != 0, the class of observables for which the
    /// coarse-grained limit measurement is defined.
    bool non_diagonal(double tol = hermiticity_tol) const {
        return std::abs(matrix(0, 1)) > tol;
    }
};

inline QubitObservable eig_decompose(const Mat2& a) {
    if (!a.is_hermitian(hermiticity_tol))
        throw std::invalid_argument("eig_decompose: matrix is not Hermitian to 1e-12");
    QubitObservable obs;
    obs.matrix = a;
    double m00 = std::real(a(0, 0));
    double m11 = std::real(a(1, 1));
    cplx c = a(0, 1);
    double mean = 0.5 * (m00 + m11);
    double rad = std::hypot(0.5 * (m00 - m11), std::abs(c));
    obs.eigenvalues = {mean - rad, mean + rad};
    if (rad < 1e-300 || std::abs(c) < 1e-300) {
        // already diagonal (or fully degenerate): computational basis works
        if (m00 <= m11) {
            obs.projectors[0] = {1.0, 0.0, 0.0, 0.0};
            obs.projectors[1] = {0.0, 0.0, 0.0, 1.0};
        } else {
            obs.projectors[0] = {0.0, 0.0, 0.0, 1.0};
            obs.projectors[1] = {1.0, 0.0, 0.0, 0.0};
        }
        return obs;
    }
    for (int i = 0; i < 2; ++i) {
        double lam = obs.eigenvalues[i];
        // eigenvector (c, lam - m00), nonzero because |c| > 0
        cplx v0 = c, v1 = lam - m00;
        double n2 = std::norm(v0) + std::norm(v1);
        obs.projectors[i] = {v0 * std::conj(v0) / n2, v0 * std::conj(v1) / n2,
                             v1 * std::conj(v0) / n2, v1 * std::conj(v1) / n2};
    }
    return obs;
}

enum class ChannelKind { identity, dephasing, depolarizing, custom };

inline std::string to_string(ChannelKind k) {
    switch (k) {
        case ChannelKind::identity: return "identity";
        case ChannelKind::dephasing: return "dephasing";
        case ChannelKind::depolarizing: return "depolarizing";
        case ChannelKind::custom: return "custom";
    }
    return "?";
}

/// 4x4 process matrix of a single-qubit linear map:
/// Gamma(rho)_{ab} = sum_{cd} S[(a,b),(c,d)] rho_{cd}, flat index
/// (2a+b)*4 + (2c+d).
using ProcessMatrix = std::array<cplx, 16>;

/// Per-particle decoherence channel plus the probability of a particle
/// reaching the apparatus. Built-in kinds:
///   dephasing(eta):    off-diagonals scaled by (1 - eta)
///   depolarizing(eta): rho -> (1 - eta) rho + eta tr(rho) I/2
/// A custom channel is supplied through its 4x4 process matrix.
struct ChannelSpec {
    ChannelKind kind = ChannelKind::identity;
    double strength = 0.0;
    double loss_p = 1.0;
    ProcessMatrix process{};  // custom kind only

    void validate() const {
        if (!(loss_p > 0.0 && loss_p <= 1.0))
            throw std::invalid_argument("ChannelSpec: loss_p must lie in (0, 1]");
        if (kind != ChannelKind::custom && (strength < 0.0 || strength > 1.0))
            throw std::invalid_argument("ChannelSpec: strength must lie in [0, 1]");
        if (kind == ChannelKind::custom) {
            // trace preservation: sum_a S[(a,a),(c,d)] = delta_cd
            for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d) {
                    cplx s = process[(0 * 2 + 0) * 4 + (2 * c + d)] +
                             process[(1 * 2 + 1) * 4 + (2 * c + d)];
                    cplx want = (c == d) ? 1.0 : 0.0;
                    if (std::abs(s - want) > 1e-10)
                        throw std::invalid_argument("ChannelSpec: process matrix is not trace preserving");
                }
            // Hermiticity preservation: S[(a,b),(c,d)] = conj(S[(b,a),(d,c)])
            for (int i = 0; i < 16; ++i) {
                int ab = i >> 2, cd = i & 3;
                int j = ((ab & 1) * 2 + (ab >> 1)) * 4 + ((cd & 1) * 2 + (cd >> 1));
                if (std::abs(process[i] - std::conj(process[j])) > 1e-10)
                    throw std::invalid_argument("ChannelSpec: process matrix does not preserve Hermiticity");
            }
        }
    }

    /// Process matrix of this channel (for any kind).
    ProcessMatrix process_matrix() const {
        if (kind == ChannelKind::custom) return process;
        ProcessMatrix s{};
        auto at = [&s](int a, int b, int c, int d) -> cplx& { return s[(2 * a + b) * 4 + 2 * c + d]; };
        switch (kind) {
            case ChannelKind::identity:
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) at(a, b, a, b) = 1.0;
                break;
            case ChannelKind::dephasing:
                at(0, 0, 0, 0) = 1.0;
                at(1, 1, 1, 1) = 1.0;
                at(0, 1, 0, 1) = 1.0 - strength;
                at(1, 0, 1, 0) = 1.0 - strength;
                break;
            case ChannelKind::depolarizing:
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) at(a, b, a, b) = 1.0 - strength;
                for (int a = 0; a < 2; ++a)
                    for (int c = 0; c < 2; ++c) at(a, a, c, c) += 0.5 * strength;
                break;
            case ChannelKind::custom: break;
        }
        return s;
    }

    /// Schroedinger-picture action on a single-qubit operator.
    Mat2 apply(const Mat2& rho) const {
        switch (kind) {
            case ChannelKind::identity: return rho;
            case ChannelKind::dephasing: {
                cplx f = 1.0 - strength;
                return {rho(0, 0), f * rho(0, 1), f * rho(1, 0), rho(1, 1)};
            }
            case ChannelKind::depolarizing: {
                cplx f = 1.0 - strength;
                cplx half_tr = 0.5 * strength * rho.trace();
                Mat2 out = f * rho;
                out(0, 0) += half_tr;
                out(1, 1) += half_tr;
                return out;
            }
            case ChannelKind::custom: {
                Mat2 out{};
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) {
                        cplx v = 0.0;
                        for (int c = 0; c < 2; ++c)
                            for (int d = 0; d < 2; ++d)
                                v += process[(2 * a + b) * 4 + 2 * c + d] * rho(c, d);
                        out(a, b) = v;
                    }
                return out;
            }
        }
        return rho;
    }

    /// Heisenberg-picture (adjoint) action, extended complex-linearly to
    /// arbitrary 2x2 arguments. Unital for all built-in kinds.
    Mat2 apply_adjoint(const Mat2& op) const {
        switch (kind) {
            case ChannelKind::identity: return op;
            case ChannelKind::dephasing: {
                cplx f = 1.0 - strength;
                return {op(0, 0), f * op(0, 1), f * op(1, 0), op(1, 1)};
            }
            case ChannelKind::depolarizing: {
                cplx f = 1.0 - strength;
                cplx half_tr = 0.5 * strength * op.trace();
                Mat2 out = f * op;
                out(0, 0) += half_tr;
                out(1, 1) += half_tr;
                return out;
            }
            case ChannelKind::custom: {
                // tr[Gamma(rho) X] = tr[rho Gamma^dag(X)]
                Mat2 out{};
                for (int c = 0; c < 2; ++c)
                    for (int d = 0; d < 2; ++d) {
                        cplx v = 0.0;
                        for (int a = 0; a < 2; ++a)
                            for (int b = 0; b < 2; ++b)
                                v += process[(2 * a + b) * 4 + 2 * c + d] * op(b, a);
                        out(d, c) = v;
                    }
                return out;
            }
        }
        return op;
    }
};

/// The channel-adjoint observable and the scalar matrix elements that drive
/// every limit formula: G = Gamma^dag(A), G2 = Gamma^dag(A^2),
/// Gij = <i|Gamma^dag(A)|j>.
struct ChannelAdjointObservable {
    Mat2 G;
    Mat2 G2;
    cplx G00, G01, G10;
};

inline ChannelAdjointObservable adjoint_channel(const ChannelSpec& spec,
                                                const QubitObservable& a) {
    spec.validate();
    ChannelAdjointObservable out;
    out.G = spec.apply_adjoint(a.matrix);
    out.G2 = spec.apply_adjoint(a.matrix * a.matrix);
    if (!out.G.is_hermitian(hermiticity_tol) || !out.G2.is_hermitian(hermiticity_tol))
        throw std::runtime_error("adjoint_channel: adjoint action lost Hermiticity");
    out.G00 = out.G(0, 0);
    out.G01 = out.G(0, 1);
    out.G10 = out.G(1, 0);
    return out;
}

/// Parameters of the limit Kraus operator: a Gaussian of width beta in the
/// quadrature rotated by phi, with the underlying pointer width sigma kept
/// for reference.
struct LimitMeasurement {
    double beta = 1.0;
    double phi = 0.0;
    double sigma = 1.0;
};

inline LimitMeasurement limit_params(const ChannelSpec& spec, const QubitObservable& a,
                                     double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("limit_params: sigma must be positive");
    ChannelAdjointObservable g = adjoint_channel(spec, a);
    double abs01 = std::abs(g.G01);
    if (abs01 <= hermiticity_tol)
        throw std::invalid_argument(
            "limit_params: diagonal observable after decoherence (<0|G|1> = 0)");
    double p = spec.loss_p;
    double g00 = std::real(g.G00);
    double g2_00 = std::real(g.G2(0, 0));
    double beta2 =
        (sigma * sigma + p * g2_00 - p * p * g00 * g00) / (p * p * abs01 * abs01) - 1.0;
    if (!(beta2 > 0.0))
        throw std::runtime_error("limit_params: nonpositive beta^2 (degenerate measurement)");
    double phi = std::arg(g.G01);
    if (phi < 0.0) phi += 2.0 * pi;
    return LimitMeasurement{std::sqrt(beta2), phi, sigma};
}

/// Affine rescaling lambda_N X_N + mu_N that makes the coarse-grained
/// intensity converge in distribution.
struct RescaleParams {
    double lambda = 1.0;
    double mu = 0.0;
};

inline RescaleParams rescale_params(const ChannelSpec& spec, const QubitObservable& a,
                                    long n_particles) {
    if (n_particles < 1) throw std::invalid_argument("rescale_params: N must be >= 1");
    ChannelAdjointObservable g = adjoint_channel(spec, a);
    double abs01 = std::abs(g.G01);
    if (abs01 <= hermiticity_tol)
        throw std::invalid_argument(
            "rescale_params: diagonal observable after decoherence (<0|G|1> = 0)");
    double p = spec.loss_p;
    double g00 = std::real(g.G00);
    RescaleParams r;
    r.lambda = 1.0 / std::sqrt(2.0 * n_particles * p * p * abs01 * abs01);
    r.mu = -g00 * std::sqrt(double(n_particles)) / std::sqrt(2.0 * abs01 * abs01);
    return r;
}

}  // namespace macroq

#endif
