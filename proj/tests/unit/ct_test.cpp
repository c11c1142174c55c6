#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "tpg/ct.hpp"

using namespace tpg;
using namespace tpg::ct;

TEST_CASE("standard geometry sweeps half a turn starting off-axis") {
    const auto g = ParallelBeamGeometry::standard(64, 30, 95);
    REQUIRE(g.angles_deg.size() == 30);
    CHECK(g.angles_deg[0] == 1.0);
    CHECK(g.angles_deg[1] == 7.0);
    CHECK(g.angles_deg[29] == doctest::Approx(1.0 + 29.0 * 6.0));
    CHECK(g.data_size() == 2850);

    // offsets are integer spaced and centered
    CHECK(g.ray_offset(0) == -47.0);
    CHECK(g.ray_offset(94) == 47.0);
    CHECK(g.ray_offset(47) == 0.0);

    // the full-scale configuration reported in the experiments
    const auto full = ParallelBeamGeometry::standard(256, 45, 367);
    CHECK(full.data_size() == 16515);
    CHECK(full.image_rows * full.image_cols == 65536);
}

TEST_CASE("geometry validation") {
    CHECK_THROWS_AS(ParallelBeamGeometry::standard(1, 10, 5), ParameterError);
    ParallelBeamGeometry g;
    g.image_rows = g.image_cols = 8;
    g.rays_per_angle = 0;
    g.angles_deg = {10.0};
    CHECK_THROWS_AS(g.validate(), ParameterError);
}

TEST_CASE("a horizontal center ray crosses every pixel of its row once") {
    ParallelBeamGeometry g;
    g.image_rows = g.image_cols = 5;
    g.angles_deg = {90.0};
    g.rays_per_angle = 1;  // single ray at offset 0, the middle-row center

    const auto m = assemble_matrix(g);
    REQUIRE(m.rows == 1);
    REQUIRE(m.nnz() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(m.values[k] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(m.col_idx[k] / 5 == 2);  // middle row
    }
}

TEST_CASE("a diagonal ray deposits sqrt(2) in each diagonal pixel") {
    ParallelBeamGeometry g;
    g.image_rows = g.image_cols = 4;
    g.angles_deg = {135.0};
    g.rays_per_angle = 1;  // offset 0: the line y = x through pixel corners

    const auto m = assemble_matrix(g);
    REQUIRE(m.rows == 1);
    REQUIRE(m.nnz() == 4);
    const double rt2 = std::sqrt(2.0);
    std::vector<std::uint32_t> expected_cols = {0 * 4 + 3, 1 * 4 + 2, 2 * 4 + 1, 3 * 4 + 0};
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(m.values[k] == doctest::Approx(rt2).epsilon(1e-12));
        CHECK(m.col_idx[k] == expected_cols[k]);
    }
}

TEST_CASE("row sums equal the geometric chord lengths") {
    const auto g = ParallelBeamGeometry::standard(16, 7, 23);
    const auto m = assemble_matrix(g);
    REQUIRE(m.rows == g.data_size());

    std::size_t r = 0;
    for (double angle : g.angles_deg) {
        for (std::size_t k = 0; k < g.rays_per_angle; ++k, ++r) {
            double sum = 0.0;
            for (std::uint64_t idx = m.row_ptr[r]; idx < m.row_ptr[r + 1]; ++idx) sum += m.values[idx];
            CHECK(sum == doctest::Approx(chord_length(g, angle, g.ray_offset(k))).epsilon(1e-9));
        }
    }
}

TEST_CASE("transpose matvec agrees with an explicit dense transpose") {
    const auto g = ParallelBeamGeometry::standard(16, 5, 23);
    const auto m = assemble_matrix(g);

    std::vector<double> dense(m.rows * m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::uint64_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k)
            dense[r * m.cols + m.col_idx[k]] = m.values[k];

    std::vector<double> w(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) w[r] = std::sin(0.37 * static_cast<double>(r)) + 0.2;

    std::vector<double> got(m.cols), want(m.cols, 0.0);
    m.matvec_transpose(w, got);
    for (std::size_t c = 0; c < m.cols; ++c)
        for (std::size_t r = 0; r < m.rows; ++r) want[c] += dense[r * m.cols + c] * w[r];
    for (std::size_t c = 0; c < m.cols; ++c)
        CHECK(got[c] == doctest::Approx(want[c]).epsilon(1e-12));
}

TEST_CASE("projection operator is linear with an exact adjoint") {
    const auto g = ParallelBeamGeometry::standard(16, 5, 23);
    auto matrix = std::make_shared<SparseMatrixCsr>(assemble_matrix(g));
    const CtOperator op = make_ct_operator(matrix, {16, 16});

    CHECK(op.is_linear());
    CHECK(norm(op.apply(op.zero_domain())) == 0.0);
    CHECK(adjoint_test(op, op.zero_domain()) < 1e-12);

    // the probed norm bound dominates a concrete Rayleigh quotient
    const PrimalVector x = shepp_logan(16, 16);
    CHECK(norm(op.apply(x)) <= op.operator_norm_bound() * norm(x) * (1.0 + 1e-9));
    CHECK(op.operator_norm_bound() > 0.0);
}

TEST_CASE("phantom values, support, and rasterization consistency") {
    const auto img = shepp_logan(256, 256);
    double lo = 1.0, hi = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        lo = std::min(lo, img[i]);
        hi = std::max(hi, img[i]);
    }
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0);
    CHECK(hi > 0.9);

    // corners lie outside the head ellipse
    CHECK(img.at(0, 0) == 0.0);
    CHECK(img.at(0, 255) == 0.0);
    CHECK(img.at(255, 0) == 0.0);
    CHECK(img.at(255, 255) == 0.0);

    // support size vs a double-resolution rasterization, block-averaged down
    const auto fine = shepp_logan(512, 512);
    std::size_t support = 0, support_fine = 0;
    for (std::size_t i = 0; i < 256; ++i) {
        for (std::size_t j = 0; j < 256; ++j) {
            if (img.at(i, j) > 0.0) ++support;
            const double avg = 0.25 * (fine.at(2 * i, 2 * j) + fine.at(2 * i + 1, 2 * j) +
                                       fine.at(2 * i, 2 * j + 1) + fine.at(2 * i + 1, 2 * j + 1));
            if (avg > 0.0) ++support_fine;
        }
    }
    CHECK(std::abs(static_cast<double>(support) - static_cast<double>(support_fine)) <
          0.02 * static_cast<double>(support_fine));
}

TEST_CASE("sparse container round-trips through its binary format") {
    const auto g = ParallelBeamGeometry::standard(16, 3, 23);
    const auto m = assemble_matrix(g);

    const auto path = std::filesystem::path("csr_roundtrip_test.bin");
    write_csr(m, path);
    const auto back = read_csr(path);

    CHECK(back.rows == m.rows);
    CHECK(back.cols == m.cols);
    REQUIRE(back.nnz() == m.nnz());
    CHECK(back.row_ptr == m.row_ptr);
    CHECK(back.col_idx == m.col_idx);
    for (std::size_t k = 0; k < m.nnz(); ++k) CHECK(back.values[k] == m.values[k]);
    std::filesystem::remove(path);
}

TEST_CASE("malformed matrix files are rejected") {
    const auto path = std::filesystem::path("csr_bad_test.bin");
    {
        std::ofstream out(path, std::ios::binary);
        out << "not a matrix";
    }
    CHECK_THROWS_AS(read_csr(path), IoError);

    // valid magic, truncated body
    {
        std::ofstream out(path, std::ios::binary);
        out << "CSR1";
        const std::uint64_t dims[3] = {4, 4, 100};
        out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    }
    CHECK_THROWS_AS(read_csr(path), IoError);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(read_csr("no_such_file.bin"), IoError);
}
