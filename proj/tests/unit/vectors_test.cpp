#include <doctest.h>

#include <cmath>
#include <limits>

#include "tpg/vectors.hpp"

using namespace tpg;

TEST_CASE("vectors start zero filled and reject degenerate construction") {
    PrimalVector v({3, 4});
    CHECK(v.size() == 12);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == 0.0);

    CHECK_THROWS_AS(PrimalVector({0, 4}), DimensionError);
    CHECK_THROWS_AS(PrimalVector({2, 2}, 0.0), ParameterError);
    CHECK_THROWS_AS(PrimalVector({2, 2}, -1.0), ParameterError);
    CHECK_THROWS_AS(PrimalVector::from({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
}

TEST_CASE("weighted norm integrates a constant over the tiled domain") {
    // 4x4 cells of side 1/2 tile [0,2]^2; the constant 1 has L2 norm 2 there
    PrimalVector ones = PrimalVector::from({4, 4}, std::vector<double>(16, 1.0), 0.25);
    CHECK(norm(ones) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(inner(ones, ones) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("pairing at unit weight is the plain dot product") {
    DualVector xi = DualVector::from({1, 2}, {1.0, 2.0});
    PrimalVector x = PrimalVector::from({1, 2}, {3.0, -1.0});
    CHECK(pairing(xi, x) == 1.0);
}

TEST_CASE("mixed shapes or weights are rejected") {
    PrimalVector a({2, 3});
    PrimalVector b({3, 2});
    PrimalVector c({2, 3}, 0.5);
    CHECK_THROWS_AS(inner(a, b), DimensionError);
    CHECK_THROWS_AS(inner(a, c), DimensionError);
    CHECK_THROWS_AS(lin(1.0, a, 1.0, b), DimensionError);
}

TEST_CASE("linear combinations and in-place update agree") {
    PrimalVector x = PrimalVector::from({2, 2}, {1.0, -2.0, 0.5, 4.0});
    PrimalVector y = PrimalVector::from({2, 2}, {0.0, 1.0, -1.0, 2.0});

    PrimalVector z = lin(2.0, x, -3.0, y);
    CHECK(z[0] == 2.0);
    CHECK(z[1] == -7.0);
    CHECK(z[2] == 4.0);
    CHECK(z[3] == 2.0);

    PrimalVector d = diff(x, y);
    CHECK(d[1] == -3.0);

    PrimalVector w = y;
    axpy(w, 2.0, x);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i] == y[i] + 2.0 * x[i]);
}

TEST_CASE("duality map satisfies its defining identities") {
    // <J_s r, r> = ||r||^s and ||J_s r|| = ||r||^(s-1), on both unit and
    // weighted grids
    auto check_identities = [](const DataVector& r, double s) {
        const DataVector j = duality_map(r, s);
        const double nrm = norm(r);
        double dot = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) dot += j[i] * r[i];
        dot *= r.cell_weight();
        CHECK(dot == doctest::Approx(std::pow(nrm, s)).epsilon(1e-10));
        CHECK(norm(j) == doctest::Approx(std::pow(nrm, s - 1.0)).epsilon(1e-10));
    };

    DataVector r = DataVector::from({2, 3}, {0.3, -1.7, 2.2, 0.0, -0.4, 1.1});
    DataVector rw = DataVector::from({2, 3}, {0.3, -1.7, 2.2, 0.0, -0.4, 1.1}, 0.01);
    for (double s : {1.5, 2.0, 3.0}) {
        check_identities(r, s);
        check_identities(rw, s);
    }

    SUBCASE("s = 2 is the identity") {
        const DataVector j = duality_map(r, 2.0);
        for (std::size_t i = 0; i < r.size(); ++i) CHECK(j[i] == r[i]);
    }
    SUBCASE("zero maps to zero") {
        const DataVector j = duality_map(DataVector({2, 2}), 1.5);
        for (std::size_t i = 0; i < j.size(); ++i) CHECK(j[i] == 0.0);
    }
    SUBCASE("exponent at or below 1 is rejected") {
        CHECK_THROWS_AS(duality_map(r, 1.0), ParameterError);
        CHECK_THROWS_AS(duality_map(r, 0.5), ParameterError);
    }
}

TEST_CASE("all_finite flags nan and infinity") {
    PrimalVector v({1, 3});
    CHECK(v.all_finite());
    v[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(v.all_finite());
    v[1] = 0.0;
    v[2] = std::numeric_limits<double>::infinity();
    CHECK_FALSE(v.all_finite());
}
