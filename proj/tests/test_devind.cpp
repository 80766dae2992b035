#include <random>

#include "doctest.h"
#include "macroq/bell.hpp"
#include "macroq/leggett_garg.hpp"
#include "macroq/wigner.hpp"
#include "oracles.hpp"

using namespace macroq;

TEST_CASE("wigner_fock ground state is the Gaussian") {
    FockState st = FockState::number_state(0);
    for (double x : {-1.0, 0.0, 0.7})
        for (double p : {-0.5, 0.0, 1.3}) {
            double want = std::exp(-x * x - p * p) / pi;
            CHECK(wigner_fock(st, x, p) == doctest::Approx(want).epsilon(1e-13));
        }
}

TEST_CASE("wigner_fock first excited state is negative at the origin") {
    FockState st = FockState::number_state(1);
    for (double x : {-0.8, 0.0, 0.5})
        for (double p : {0.0, 0.9}) {
            double r2 = x * x + p * p;
            double want = std::exp(-r2) * (2.0 * r2 - 1.0) / pi;
            CHECK(wigner_fock(st, x, p) == doctest::Approx(want).epsilon(1e-12));
        }
    CHECK(wigner_fock(st, 0.0, 0.0) < 0.0);
}

TEST_CASE("wigner_fock against the integral definition") {
    // W(x,p) = (1/pi) Int ds e^{2ips} <x-s|rho|x+s>
    std::mt19937 rng(131);
    FockState st = FockState::density(oracles::random_density(rng, 3));
    for (double x : {-0.6, 0.4})
        for (double p : {-1.1, 0.8}) {
            auto integrand_re = [&](double s) {
                cplx bra_ket = 0.0;
                for (int k = 0; k < st.dim; ++k)
                    for (int l = 0; l < st.dim; ++l)
                        bra_ket += ho_wavefunction(k, x - s) * st.rho(k, l) *
                                   ho_wavefunction(l, x + s);
                return std::real(std::polar(1.0, 2.0 * p * s) * bra_ket);
            };
            double want = integrate_adaptive(integrand_re, -9.0, 9.0, 1e-12) / pi;
            CHECK(wigner_fock(st, x, p) == doctest::Approx(want).epsilon(1e-9));
        }
}

TEST_CASE("wigner grid is real and normalized for a random density matrix") {
    std::mt19937 rng(137);
    FockState st = FockState::density(oracles::random_density(rng, 4));
    GridSpec spec{-7, 7, 141};
    WignerGrid w = wigner_grid(st, spec, spec);
    CHECK(w.mass() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("wigner polynomial expansion reproduces pointwise values") {
    std::mt19937 rng(139);
    FockState st = FockState::density(oracles::random_density(rng, 3));
    detail::Poly2 poly = detail::wigner_polynomial(st);
    for (double x : {-1.4, 0.3, 0.9})
        for (double p : {-0.7, 0.0, 1.6}) {
            cplx acc = 0.0;
            for (int i = 0; i <= poly.deg; ++i)
                for (int j = 0; j <= poly.deg; ++j)
                    acc += poly.at(i, j) * std::pow(x, i) * std::pow(p, j);
            double want = std::exp(-x * x - p * p) / pi * acc.real();
            CHECK(std::abs(acc.imag()) < 1e-12);
            CHECK(wigner_fock(st, x, p) == doctest::Approx(want).epsilon(1e-11));
        }
}

TEST_CASE("lg_correlator stays within [-1, 1] and the two routes agree") {
    std::mt19937 rng(149);
    for (int trial = 0; trial < 6; ++trial) {
        FockState st = FockState::density(oracles::random_density(rng, 3));
        double sigma = 0.4 + 0.45 * trial;
        for (double phi : {0.0, 0.6, pi / 2.0, 2.4, pi}) {
            double quad = lg_correlator(st, phi, sigma, LgRoute::quadrature);
            double closed = lg_correlator(st, phi, sigma, LgRoute::closed_form);
            CHECK(std::abs(quad) <= 1.0 + 1e-9);
            CHECK(std::abs(quad - closed) < 1e-6);
        }
    }
}

TEST_CASE("lg_correlator of the ground state is positive at aligned settings") {
    FockState st = FockState::number_state(0);
    double v = lg_correlator(st, 0.0, 1.0);
    CHECK(v > 0.3);  // repeated quadrature measurement correlates strongly
    CHECK(v <= 1.0);
}

TEST_CASE("lg_reference_value closed form") {
    double v = lg_reference_value();
    double want =
        2.0 / (675.0 * pi) * (577.0 + std::sqrt(1244179.0) + 2700.0 * std::atan(1.0 / 3.0));
    CHECK(v == doctest::Approx(want).epsilon(1e-15));
    CHECK(v > 2.0);
    CHECK(v < 2.0 * std::sqrt(2.0));
}

TEST_CASE("lg_chsh at the reference point reaches the closed-form violation near sigma = 1") {
    CHSHResult res = lg_chsh(lg_reference_state(), lg_reference_angles(), 1.0);
    CHECK(res.value == doctest::Approx(lg_reference_value()).epsilon(5e-6));
    for (double c : res.correlators) CHECK(std::abs(c) <= 1.0 + 1e-9);
    CHECK(res.value ==
          doctest::Approx(res.correlators[0] + res.correlators[1] + res.correlators[2] -
                          res.correlators[3]));
}

TEST_CASE("lg_chsh with all angles equal cannot exceed 2") {
    std::mt19937 rng(151);
    for (int trial = 0; trial < 4; ++trial) {
        FockState st = FockState::density(oracles::random_density(rng, 3));
        double ang = 0.3 + trial;
        CHSHResult res = lg_chsh(st, {ang, ang, ang, ang}, 0.9);
        // c11 = c12 = c21 = c22: C = 2 c <= 2
        CHECK(res.value <= 2.0 + 1e-6);
        CHECK(res.value >= -2.0 - 1e-6);
    }
}

TEST_CASE("lg_chsh of the ground state stays classical") {
    FockState st = FockState::number_state(0);
    CHSHResult res = lg_chsh(st, lg_reference_angles(), 1.0);
    CHECK(res.value <= 2.0 + 1e-6);
}

TEST_CASE("sigma scan: the curve peaks above the reference point, which sits at sigma = 1") {
    // C(sigma) at the reference state/angles is maximal near sigma = 0.77
    // and passes through the closed-form reference value at sigma = 1
    SigmaScanResult peak =
        maximize_lg_over_sigma(lg_reference_state(), lg_reference_angles(), 0.05, 2.0, 25);
    CHECK(peak.value > lg_reference_value());
    CHECK(peak.value < 2.0 * std::sqrt(2.0));
    CHECK(peak.sigma_star == doctest::Approx(0.7685).epsilon(0.02));

    SigmaRecoveryResult rec = recover_sigma_for_value(lg_reference_state(), lg_reference_angles(),
                                                      lg_reference_value(), 0.05, 2.0, 25);
    CHECK(std::abs(rec.value - lg_reference_value()) < 5e-4);
    // C(sigma) crosses the reference twice; the descending crossing is the
    // exact operating point sigma = 1
    REQUIRE(rec.crossings.size() >= 2);
    CHECK(rec.crossings.back() == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("bell joint density: product state factorizes") {
    BipartiteSchmidtState st{{cplx(1.0)}};
    LimitMeasurement ma{0.7, 0.4, 0.7}, mb{1.1, 2.0, 1.1};
    int dim = 28;
    for (double x : {-0.8, 0.5})
        for (double y : {-0.3, 1.0}) {
            double joint = bell_joint_density(st, ma, mb, x, y, dim);
            double px = std::real(povm_element(ma, x, dim)(0, 0));
            double py = std::real(povm_element(mb, y, dim)(0, 0));
            CHECK(std::abs(joint - px * py) < 1e-8);
        }
}

TEST_CASE("bell joint density: exchange symmetry and normalization") {
    BipartiteSchmidtState st{{cplx(std::sqrt(0.5)), cplx(0.0), cplx(std::sqrt(0.5))}};
    st.validate();
    LimitMeasurement m{0.8, 0.9, 0.8};
    int dim = 32;
    for (double x : {-1.2, 0.4})
        for (double y : {-0.5, 1.5}) {
            double a = bell_joint_density(st, m, m, x, y, dim);
            double b = bell_joint_density(st, m, m, y, x, dim);
            CHECK(a == doctest::Approx(b).epsilon(1e-8));
        }
    // normalization over a midpoint grid, POVM blocks cached per axis
    int n = 101;
    double lim = 8.0, h = 2.0 * lim / n;
    std::vector<CMatrix> e(n);
    for (int i = 0; i < n; ++i) {
        CMatrix full = povm_element(m, -lim + (i + 0.5) * h, dim);
        CMatrix block(st.dim(), st.dim());
        for (int k = 0; k < st.dim(); ++k)
            for (int kp = 0; kp < st.dim(); ++kp) block(k, kp) = full(k, kp);
        e[i] = std::move(block);
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cplx p = 0.0;
            for (int k = 0; k < st.dim(); ++k)
                for (int kp = 0; kp < st.dim(); ++kp)
                    p += std::conj(st.c[k]) * st.c[kp] * e[i](k, kp) * e[j](k, kp);
            acc += p.real() * h * h;
        }
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("bell no-signalling: Alice's marginal ignores Bob's setting") {
    BipartiteSchmidtState st{{cplx(0.6), cplx(0.64), cplx(std::sqrt(1.0 - 0.36 - 0.4096))}};
    st.validate();
    LimitMeasurement ma{0.9, 0.3, 0.9};
    std::mt19937 rng(157);
    std::uniform_real_distribution<double> uang(0.0, 2.0 * pi);
    std::uniform_real_distribution<double> ub(0.4, 1.6);
    double x = 0.7;
    // y window wide enough for the largest beta in play
    double y_extent = std::sqrt(7.0) + 8.0 * 1.6 + 3.0;
    double reference =
        bell_marginal_alice(st, ma, LimitMeasurement{1.0, 0.0, 1.0}, x, y_extent, 481);
    for (int trial = 0; trial < 5; ++trial) {
        LimitMeasurement mb{ub(rng), uang(rng), 1.0};
        double v = bell_marginal_alice(st, ma, mb, x, y_extent, 481);
        CHECK(std::abs(v - reference) < 1e-7);
    }
}

TEST_CASE("bell product state admits no violation") {
    BipartiteSchmidtState st{{cplx(1.0)}};
    std::array<LimitMeasurement, 4> settings = {
        LimitMeasurement{0.3, 0.0, 0.3}, LimitMeasurement{0.3, pi / 2.0, 0.3},
        LimitMeasurement{0.3, pi / 4.0, 0.3}, LimitMeasurement{0.3, -pi / 4.0, 0.3}};
    CHSHResult res = bell_chsh(st, settings, false);
    CHECK(std::abs(res.value) <= 2.0 + 1e-6);
}

TEST_CASE("bell sign correlator matches the joint-density double integral") {
    BipartiteSchmidtState st{{cplx(0.5), cplx(std::sqrt(0.5)), cplx(0.5)}};
    st.validate();
    std::array<LimitMeasurement, 4> settings = {
        LimitMeasurement{0.25, 0.0, 0.25}, LimitMeasurement{0.25, pi / 2.0, 0.25},
        LimitMeasurement{0.25, 5.0 * pi / 4.0, 0.25}, LimitMeasurement{0.25, 7.0 * pi / 4.0, 0.25}};
    CHSHResult res = bell_chsh(st, settings, true);
    CHECK(res.error_bound < 1e-4);
    CHECK(res.value <= 2.0 * std::sqrt(2.0) + 1e-6);
}
