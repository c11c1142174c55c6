#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "tpg/elliptic.hpp"

using namespace tpg;
using namespace tpg::elliptic;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("linear exact states are reproduced to solver accuracy") {
    const auto prob = make_inclusion_problem(32);
    const auto& g = prob.grid;
    const std::size_t m = g.interior_per_side();

    SUBCASE("true coefficient with matched source") {
        std::vector<double> rhs(m * m);
        for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = prob.f_interior[k] + prob.boundary_lift[k];
        const DataVector u = solve_state(prob.c_true, g, rhs);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                CHECK(u.at(i, j) == doctest::Approx(g.node_x(j) + g.node_y(i)).epsilon(1e-8));
    }
    SUBCASE("zero coefficient, boundary data only") {
        const PrimalVector c0(g.interior_shape(), g.node_weight());
        const DataVector u = solve_state(c0, g, prob.boundary_lift);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                CHECK(u.at(i, j) == doctest::Approx(g.node_x(j) + g.node_y(i)).epsilon(1e-8));
    }
}

TEST_CASE("discretization error halves twice when the mesh halves") {
    // u = sin(pi x) sin(pi y), c = 1, f = (2 pi^2 + 1) u; boundary values vanish
    auto solve_error = [](std::size_t n_cells) {
        const EllipticGrid g{n_cells};
        const std::size_t m = g.interior_per_side();
        PrimalVector c(g.interior_shape(), g.node_weight());
        std::vector<double> rhs(m * m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                c[i * m + j] = 1.0;
                rhs[i * m + j] = (2.0 * kPi * kPi + 1.0) * std::sin(kPi * g.node_x(j)) *
                                 std::sin(kPi * g.node_y(i));
            }
        const DataVector u = solve_state(c, g, rhs, 1e-12);
        DataVector exact(g.interior_shape(), g.node_weight());
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                exact.at(i, j) = std::sin(kPi * g.node_x(j)) * std::sin(kPi * g.node_y(i));
        return norm(diff(u, exact));
    };

    const double ratio = solve_error(16) / solve_error(32);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
}

TEST_CASE("state solver input validation and failure modes") {
    const EllipticGrid g{8};
    const PrimalVector c(g.interior_shape(), g.node_weight());
    std::vector<double> rhs(g.interior_shape().size(), 1.0);

    CHECK_THROWS_AS(solve_state(c, g, rhs, 0.0), ParameterError);
    CHECK_THROWS_AS(solve_state(c, g, std::span<const double>(rhs.data(), 3)), DimensionError);
    CHECK_THROWS_AS(solve_state(PrimalVector({2, 2}), g, rhs), DimensionError);
    // a non-finite coefficient poisons every residual, so the tolerance is
    // never reached and the iteration cap reports the failure
    PrimalVector poisoned = c;
    poisoned[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(solve_state(poisoned, g, rhs), SolverError);

    SUBCASE("zero right-hand side short-circuits to zero") {
        std::vector<double> zero(g.interior_shape().size(), 0.0);
        SolveStats stats;
        const DataVector u = solve_state(c, g, zero, 1e-10, &stats);
        CHECK(norm(u) == 0.0);
        CHECK(stats.cg_iterations == 0);
    }
}

TEST_CASE("coefficients below the stability floor are clamped and counted") {
    const EllipticGrid g{8};
    PrimalVector c(g.interior_shape(), g.node_weight());
    c[0] = -3.0;
    c[5] = -0.75;
    c[6] = -0.4;  // above the floor, untouched
    std::vector<double> rhs(g.interior_shape().size(), 1.0);

    SolveStats stats;
    const DataVector u = solve_state(c, g, rhs, 1e-10, &stats);
    CHECK(stats.clamped_nodes == 2);
    CHECK(u.all_finite());

    const auto prob = make_inclusion_problem(8);
    EllipticOperator op(prob.grid, prob.f_interior, prob.boundary_lift, 1e-10, 1.0);
    PrimalVector bad = prob.c_true;
    bad[0] = -2.0;
    (void)op.apply(bad);
    (void)op.apply(bad);
    CHECK(op.clamped_nodes() == 2);
}

TEST_CASE("two-inclusion problem encodes the coefficient and exact state") {
    const auto prob = make_inclusion_problem(64);
    const auto& g = prob.grid;
    const std::size_t m = g.interior_per_side();

    auto at_xy = [&](double x, double y) {
        const auto j = static_cast<std::size_t>(std::lround(x / g.h())) - 1;
        const auto i = static_cast<std::size_t>(std::lround(y / g.h())) - 1;
        return prob.c_true[i * m + j];
    };
    CHECK(at_xy(0.65625, 0.359375) == 1.0);   // disk center
    CHECK(at_xy(0.34375, 0.750000) == 0.5);   // ellipse center
    CHECK(at_xy(0.078125, 0.078125) == 0.0);  // background

    for (std::size_t i = 0; i < m; i += 13)
        for (std::size_t j = 0; j < m; j += 13)
            CHECK(prob.exact_data.at(i, j) == doctest::Approx(g.node_x(j) + g.node_y(i)).epsilon(1e-15));
}

TEST_CASE("derivative and adjoint pass the dot-product test") {
    const auto prob = make_inclusion_problem(32);
    const EllipticOperator op(prob.grid, prob.f_interior, prob.boundary_lift, 1e-12, 1.0);
    CHECK_FALSE(op.is_linear());
    CHECK(adjoint_test(op, prob.c_true) < 1e-9);

    const PrimalVector zero_dir(op.domain_shape(), op.domain_weight());
    CHECK(norm(op.deriv_apply(prob.c_true, zero_dir)) == 0.0);
}

TEST_CASE("Taylor remainder at the true coefficient decays almost quadratically") {
    const auto prob = make_inclusion_problem(32);
    const EllipticOperator op(prob.grid, prob.f_interior, prob.boundary_lift, 1e-12, 1.0);

    const std::size_t m = prob.grid.interior_per_side();
    PrimalVector h(op.domain_shape(), op.domain_weight());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            h.at(i, j) = std::sin(kPi * prob.grid.node_x(j)) * std::sin(2.0 * kPi * prob.grid.node_y(i));
    h = scaled(h, 1.0 / norm(h));

    const FrechetResult res = frechet_test(op, prob.c_true, h);
    CHECK(res.slope >= 1.8);
}

TEST_CASE("norm probe returns a positive finite derivative bound") {
    const auto prob = make_inclusion_problem(32);
    const double bound = probe_norm_bound(prob, 1e-10);
    CHECK(bound > 0.0);
    CHECK(bound < 1.0);

    const EllipticOperator op = make_operator(prob, 1e-10, bound);
    CHECK(op.operator_norm_bound() == bound);
}
