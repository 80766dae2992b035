#include <random>

#include "doctest.h"
#include "macroq/limit_theory.hpp"
#include "oracles.hpp"

using namespace macroq;

namespace {

cplx random_unit_disk(std::mt19937& rng, double min_mod = 0.15) {
    std::uniform_real_distribution<double> umod(min_mod, 1.0);
    std::uniform_real_distribution<double> uarg(0.0, 2.0 * pi);
    return std::polar(umod(rng), uarg(rng));
}

}  // namespace

TEST_CASE("lemma f and g both reduce to exp(a b') at k = l = 0") {
    std::mt19937 rng(101);
    for (int trial = 0; trial < 10; ++trial) {
        cplx a = random_unit_disk(rng), b = random_unit_disk(rng);
        cplx ap = random_unit_disk(rng), bp = random_unit_disk(rng);
        cplx want = std::exp(a * bp);
        CHECK(std::abs(lemma_f(0, 0, a, b, ap, bp) - want) < 1e-13);
        CHECK(std::abs(lemma_g(0, 0, a, b, ap, bp) - want) < 1e-12);
    }
}

TEST_CASE("lemma f = g at k = 1, l = 0") {
    std::mt19937 rng(103);
    for (int trial = 0; trial < 20; ++trial) {
        cplx a = random_unit_disk(rng), b = random_unit_disk(rng);
        cplx ap = random_unit_disk(rng), bp = random_unit_disk(rng);
        cplx f = lemma_f(1, 0, a, b, ap, bp);
        cplx g = lemma_g(1, 0, a, b, ap, bp, 60);
        CHECK(std::abs(f - g) < 1e-10);
    }
}

TEST_CASE("lemma f = g across all orders up to 6") {
    std::mt19937 rng(107);
    for (int trial = 0; trial < 100; ++trial) {
        cplx a = random_unit_disk(rng), b = random_unit_disk(rng);
        cplx ap = random_unit_disk(rng), bp = random_unit_disk(rng);
        int k = trial % 7, l = (trial / 7) % 7;
        cplx f = lemma_f(k, l, a, b, ap, bp);
        cplx g = lemma_g(k, l, a, b, ap, bp);
        CHECK(std::abs(f - g) < 1e-8);
    }
}

TEST_CASE("first recurrence: f_{k+1,0} = (b+b')/(k+1) f_{k0}, same for g") {
    std::mt19937 rng(109);
    for (int trial = 0; trial < 12; ++trial) {
        cplx a = random_unit_disk(rng), b = random_unit_disk(rng);
        cplx ap = random_unit_disk(rng), bp = random_unit_disk(rng);
        for (int k = 0; k <= 10; ++k) {
            cplx lhs_f = lemma_f(k + 1, 0, a, b, ap, bp);
            cplx rhs_f = (b + bp) / double(k + 1) * lemma_f(k, 0, a, b, ap, bp);
            CHECK(std::abs(lhs_f - rhs_f) < 1e-8);
            cplx lhs_g = lemma_g(k + 1, 0, a, b, ap, bp);
            cplx rhs_g = (b + bp) / double(k + 1) * lemma_g(k, 0, a, b, ap, bp);
            CHECK(std::abs(lhs_g - rhs_g) < 1e-8);
        }
    }
}

TEST_CASE("second recurrence: f_{k,l+1} = (a+a')/(l+1) f_{kl} + f_{k-1,l}/(l+1), same for g") {
    std::mt19937 rng(113);
    for (int trial = 0; trial < 8; ++trial) {
        cplx a = random_unit_disk(rng), b = random_unit_disk(rng);
        cplx ap = random_unit_disk(rng), bp = random_unit_disk(rng);
        for (int k = 1; k <= 8; ++k)
            for (int l = 0; l <= k - 1; ++l) {
                cplx lhs = lemma_f(k, l + 1, a, b, ap, bp);
                cplx rhs = (a + ap) / double(l + 1) * lemma_f(k, l, a, b, ap, bp) +
                           lemma_f(k - 1, l, a, b, ap, bp) / double(l + 1);
                CHECK(std::abs(lhs - rhs) < 1e-8);
                cplx lhs_g = lemma_g(k, l + 1, a, b, ap, bp);
                cplx rhs_g = (a + ap) / double(l + 1) * lemma_g(k, l, a, b, ap, bp) +
                             lemma_g(k - 1, l, a, b, ap, bp) / double(l + 1);
                CHECK(std::abs(lhs_g - rhs_g) < 1e-8);
            }
    }
}

TEST_CASE("lemma_g guards its singular arguments") {
    CHECK_THROWS_AS(lemma_g(2, 1, cplx(0.0), cplx(0.5), cplx(0.5), cplx(0.5)),
                    std::invalid_argument);
}

TEST_CASE("lemma_g reports an unconverged tail instead of returning it") {
    CHECK_THROWS_AS(lemma_g(3, 2, cplx(0.9, 0.1), cplx(0.8), cplx(0.7), cplx(0.9, -0.2), 4),
                    std::runtime_error);
}

TEST_CASE("Hermite product identity at k = l = 0: Gaussian convolution") {
    std::vector<double> grid;
    for (double x = -4.0; x <= 4.0; x += 0.8) grid.push_back(x);
    double resid = hermite_product_lemma_check(std::sqrt(2.0), 1.0, 1.0, 0, 0, grid);
    CHECK(resid < 1e-10);
}

TEST_CASE("Hermite product identity at k = 2, l = 1") {
    std::vector<double> grid;
    for (double x = -5.0; x <= 5.0; x += 0.5) grid.push_back(x);
    double resid = hermite_product_lemma_check(std::sqrt(2.0), 1.0, 1.0, 2, 1, grid);
    CHECK(resid < 1e-8);
}

TEST_CASE("Hermite product identity at k = l = 4 over random admissible triples") {
    std::mt19937 rng(127);
    std::uniform_real_distribution<double> u(0.4, 2.0);
    std::vector<double> grid;
    for (double x = -5.0; x <= 5.0; x += 0.7) grid.push_back(x);
    for (int trial = 0; trial < 5; ++trial) {
        double beta = u(rng), gamma = u(rng);
        double alpha = std::hypot(beta, gamma);
        CHECK(hermite_product_lemma_check(alpha, beta, gamma, 4, 4, grid) < 1e-8);
    }
}

TEST_CASE("Hermite product identity validates its preconditions") {
    std::vector<double> grid = {0.0};
    CHECK_THROWS_AS(hermite_product_lemma_check(1.0, 1.0, 1.0, 2, 1, grid), std::invalid_argument);
    CHECK_THROWS_AS(hermite_product_lemma_check(std::sqrt(2.0), 1.0, 1.0, 1, 2, grid),
                    std::invalid_argument);
}
