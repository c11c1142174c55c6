#include <doctest.h>

#include <cmath>
#include <random>

#include "tpg/penalty.hpp"

using namespace tpg;

namespace {

PrimalVector random_primal(GridShape shape, double weight, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    PrimalVector v(shape, weight);
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = 2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53) - 1.0;
    return v;
}

}  // namespace

TEST_CASE("penalty configuration rejects out-of-range values") {
    PenaltyConfig cfg;
    CHECK_NOTHROW(cfg.validate());

    cfg.beta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = PenaltyConfig{};
    cfg.tv_weight = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = PenaltyConfig{};
    cfg.pdhg_iters = 0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = PenaltyConfig{};
    cfg.pdhg_step_primal = 0.5;
    cfg.pdhg_step_dual = 0.5;  // product 0.25 > 1/8
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

TEST_CASE("penalty value composes quadratic and total variation parts") {
    PenaltyConfig cfg;  // beta = 1, tv_weight = 1
    PrimalVector x = PrimalVector::from({2, 1}, {0.0, 1.0});
    // ||x||^2/2 = 0.5 and one unit jump: total 1.5
    CHECK(theta_value(x, cfg) == doctest::Approx(1.5).epsilon(1e-15));

    cfg.tv_weight = 0.0;
    CHECK(theta_value(x, cfg) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("total variation is scaled by the grid spacing") {
    // a unit jump across the vertical midline of [0,1]^2 has TV 1 regardless
    // of the resolution
    PrimalVector coarse = PrimalVector::from({2, 2}, {0.0, 1.0, 0.0, 1.0}, 0.25);
    CHECK(total_variation(coarse) == doctest::Approx(1.0).epsilon(1e-14));

    const std::size_t m = 8;
    PrimalVector fine({m, m}, 1.0 / (m * m));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = m / 2; j < m; ++j) fine.at(i, j) = 1.0;
    CHECK(total_variation(fine) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("quadratic-only conjugate gradient is beta xi exactly") {
    PenaltyConfig cfg;
    cfg.beta = 2.5;
    cfg.tv_weight = 0.0;
    DualVector xi = DualVector::from({2, 3}, {1.0, -0.125, 3.0, 0.0, 7.5, -2.0});
    const PrimalVector x = grad_theta_star(xi, cfg);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i] == cfg.beta * xi[i]);
}

TEST_CASE("Bregman distance: closed form, nonnegativity, three-point identity") {
    PenaltyConfig cfg;
    cfg.beta = 2.0;
    cfg.tv_weight = 0.0;

    const GridShape shape{3, 3};
    const PrimalVector x1 = random_primal(shape, 1.0, 11);
    const PrimalVector x2 = random_primal(shape, 1.0, 22);
    const PrimalVector xb = random_primal(shape, 1.0, 33);

    // with the quadratic penalty, xi = x / beta is the (unique) subgradient
    auto pair_at = [&](const PrimalVector& x) {
        return SubgradientPair{x, as_dual(scaled(x, 1.0 / cfg.beta))};
    };
    const SubgradientPair p1 = pair_at(x1);
    const SubgradientPair p2 = pair_at(x2);

    const double d1 = bregman_distance(xb, p1, cfg);
    const double nd = norm(diff(xb, x1));
    CHECK(d1 == doctest::Approx(nd * nd / (2.0 * cfg.beta)).epsilon(1e-10));
    CHECK(d1 >= 0.0);
    CHECK(bregman_distance(x1, p1, cfg) == doctest::Approx(0.0).epsilon(1e-14));

    // D_xi2(x, x2) - D_xi1(x, x1) = D_xi2(x1, x2) + <xi2 - xi1, x1 - x>
    const double lhs = bregman_distance(xb, p2, cfg) - bregman_distance(xb, p1, cfg);
    const double rhs = bregman_distance(x1, p2, cfg) +
                       pairing(diff(p2.xi, p1.xi), diff(x1, xb));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

    // 2-convexity lower bound D >= c0 ||xbar - x||^2 (equality here)
    CHECK(d1 >= cfg.c0() * nd * nd - 1e-12);
}

TEST_CASE("two-pixel denoising matches the closed form") {
    PenaltyConfig cfg;
    cfg.beta = 1.0;
    cfg.tv_weight = 0.3;
    cfg.pdhg_iters = 20000;

    SUBCASE("large contrast shrinks both values by the weight") {
        DualVector xi = DualVector::from({1, 2}, {2.0, 0.4});
        const PrimalVector z = grad_theta_star(xi, cfg);
        CHECK(z[0] == doctest::Approx(1.7).epsilon(1e-6));
        CHECK(z[1] == doctest::Approx(0.7).epsilon(1e-6));
    }
    SUBCASE("small contrast merges to the mean") {
        DualVector xi = DualVector::from({1, 2}, {1.0, 1.4});
        const PrimalVector z = grad_theta_star(xi, cfg);
        CHECK(z[0] == doctest::Approx(1.2).epsilon(1e-6));
        CHECK(z[1] == doctest::Approx(1.2).epsilon(1e-6));
    }
}

TEST_CASE("warm-started evaluation stays at the fixed point") {
    PenaltyConfig cfg;
    cfg.pdhg_iters = 8000;
    DualVector xi = as_dual(random_primal({6, 6}, 1.0, 44));

    PdhgState warm;
    const PrimalVector converged = grad_theta_star(xi, cfg, &warm);

    PenaltyConfig quick = cfg;
    quick.pdhg_iters = 10;
    const PrimalVector resumed = grad_theta_star(xi, quick, &warm);
    CHECK(norm(diff(resumed, converged)) < 1e-6);
}

TEST_CASE("conjugate gradient is 1/(2 c0)-Lipschitz") {
    PenaltyConfig cfg;
    cfg.beta = 1.5;
    cfg.pdhg_iters = 400;
    const DualVector xi1 = as_dual(random_primal({16, 16}, 1.0, 55));
    const DualVector xi2 = as_dual(random_primal({16, 16}, 1.0, 66));
    CHECK(conjugate_gradient_lipschitz_check(xi1, xi2, cfg));
}

TEST_CASE("inexactness tolerance scales with the objective") {
    CHECK(inexactness_tolerance(0.0) == 1e-6);
    CHECK(inexactness_tolerance(-9.0) == doctest::Approx(1e-5).epsilon(1e-12));
}
