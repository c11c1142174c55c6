#include <benchmark/benchmark.h>

#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "tpg/ct.hpp"
#include "tpg/elliptic.hpp"
#include "tpg/penalty.hpp"
#include "tpg/vectors.hpp"

using namespace tpg;

namespace {

DualVector smooth_dual(std::size_t n) {
    DualVector xi({n, n}, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            xi.at(i, j) = std::sin(0.1 * static_cast<double>(i)) +
                          0.5 * std::cos(0.07 * static_cast<double>(j));
    return xi;
}

void BM_TvProx(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    PenaltyConfig cfg;
    cfg.pdhg_iters = 100;
    const DualVector xi = smooth_dual(n);
    PdhgState warm;
    for (auto _ : state) {
        PrimalVector x = grad_theta_star(xi, cfg, &warm);
        benchmark::DoNotOptimize(x.values().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n) * cfg.pdhg_iters);
}

void BM_CtMatvec(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto geom = ct::ParallelBeamGeometry::standard(n, 30, static_cast<std::size_t>(1.5 * n));
    const auto matrix = ct::assemble_matrix(geom);
    std::vector<double> x(matrix.cols, 1.0), y(matrix.rows, 0.0);
    for (auto _ : state) {
        matrix.matvec(x, y);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(matrix.nnz()));
}

void BM_CtMatvecTranspose(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto geom = ct::ParallelBeamGeometry::standard(n, 30, static_cast<std::size_t>(1.5 * n));
    const auto matrix = ct::assemble_matrix(geom);
    std::vector<double> w(matrix.rows, 1.0), z(matrix.cols, 0.0);
    for (auto _ : state) {
        matrix.matvec_transpose(w, z);
        benchmark::DoNotOptimize(z.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(matrix.nnz()));
}

void BM_CtAssembly(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto geom = ct::ParallelBeamGeometry::standard(n, 30, static_cast<std::size_t>(1.5 * n));
    for (auto _ : state) {
        auto matrix = ct::assemble_matrix(geom);
        benchmark::DoNotOptimize(matrix.values.data());
    }
}

void BM_EllipticSolve(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto prob = elliptic::make_inclusion_problem(n);
    const std::size_t m = prob.grid.interior_per_side();
    std::vector<double> rhs(m * m);
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = prob.f_interior[k] + prob.boundary_lift[k];
    for (auto _ : state) {
        DataVector u = elliptic::solve_state(prob.c_true, prob.grid, rhs, 1e-10);
        benchmark::DoNotOptimize(u.values().data());
    }
}

}  // namespace

BENCHMARK(BM_TvProx)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CtMatvec)->Arg(64)->Arg(128);
BENCHMARK(BM_CtMatvecTranspose)->Arg(64)->Arg(128);
BENCHMARK(BM_CtAssembly)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EllipticSolve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
