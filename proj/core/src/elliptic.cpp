#include "tpg/elliptic.hpp"

#include <cmath>
#include <random>

namespace tpg::elliptic {

void EllipticGrid::validate() const {
    if (n_cells < 2) throw ParameterError("elliptic grid: need at least 2 cells per side");
}

namespace {

// v = (-Lap_h + diag(c)) u on the interior grid, homogeneous Dirichlet
void apply_system(std::span<const double> c, std::span<const double> u, std::span<double> v,
                  std::size_t m, double inv_h2) {
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t row = i * m;
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t k = row + j;
            double lap = 4.0 * u[k];
            if (i > 0) lap -= u[k - m];
            if (i + 1 < m) lap -= u[k + m];
            if (j > 0) lap -= u[k - 1];
            if (j + 1 < m) lap -= u[k + 1];
            v[k] = inv_h2 * lap + c[k] * u[k];
        }
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

DataVector solve_state(const PrimalVector& c, const EllipticGrid& grid, std::span<const double> rhs,
                       double tol, SolveStats* stats) {
    grid.validate();
    const std::size_t m = grid.interior_per_side();
    const std::size_t n = m * m;
    if (!(c.shape() == grid.interior_shape()))
        throw DimensionError("solve_state: coefficient shape does not match the grid");
    if (rhs.size() != n) throw DimensionError("solve_state: right-hand side length mismatch");
    if (!(tol > 0.0)) throw ParameterError("solve_state: tolerance must be positive");

    // clamp only what the solve sees; keeps the system positive definite
    std::vector<double> ceff(n);
    std::size_t clamped = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double v = c[k];
        if (v < -0.5) {
            ceff[k] = -0.5;
            ++clamped;
        } else {
            ceff[k] = v;
        }
    }
    if (stats != nullptr) {
        stats->clamped_nodes = clamped;
        stats->cg_iterations = 0;
    }

    DataVector u(grid.interior_shape(), grid.node_weight());
    const double rhs_norm = std::sqrt(dot(rhs, rhs));
    if (rhs_norm == 0.0) return u;

    const double inv_h2 = 1.0 / (grid.h() * grid.h());
    std::vector<double> diag(n);
    for (std::size_t k = 0; k < n; ++k) diag[k] = 4.0 * inv_h2 + ceff[k];

    // Jacobi-preconditioned conjugate gradients on the symmetric system
    std::vector<double> r(rhs.begin(), rhs.end()), z(n), p(n), ap(n);
    for (std::size_t k = 0; k < n; ++k) z[k] = r[k] / diag[k];
    p = z;
    double rz = dot(r, z);
    const std::size_t max_iter = 10 * n;
    for (std::size_t it = 0; it < max_iter; ++it) {
        apply_system(ceff, p, ap, m, inv_h2);
        const double alpha = rz / dot(p, ap);
        for (std::size_t k = 0; k < n; ++k) {
            u[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if (stats != nullptr) stats->cg_iterations = static_cast<int>(it + 1);
        if (std::sqrt(dot(r, r)) <= tol * rhs_norm) return u;
        for (std::size_t k = 0; k < n; ++k) z[k] = r[k] / diag[k];
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    }
    throw SolverError("solve_state: conjugate gradients did not reach tolerance " + std::to_string(tol));
}

EllipticOperator::EllipticOperator(EllipticGrid grid, std::vector<double> f_interior,
                                   std::vector<double> boundary_lift, double cg_tol,
                                   std::optional<double> norm_bound)
    : grid_(grid), f_interior_(std::move(f_interior)), boundary_lift_(std::move(boundary_lift)),
      cg_tol_(cg_tol), norm_bound_(norm_bound.value_or(0.0)) {
    grid_.validate();
    const std::size_t n = grid_.interior_shape().size();
    if (f_interior_.size() != n || boundary_lift_.size() != n)
        throw DimensionError("elliptic operator: source or boundary data length mismatch");
}

DataVector EllipticOperator::state(const PrimalVector& c) const {
    std::vector<double> rhs(f_interior_.size());
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = f_interior_[k] + boundary_lift_[k];
    SolveStats stats;
    DataVector u = solve_state(c, grid_, rhs, cg_tol_, &stats);
    clamped_total_ += static_cast<long long>(stats.clamped_nodes);
    return u;
}

DataVector EllipticOperator::apply(const PrimalVector& c) const { return state(c); }

DataVector EllipticOperator::deriv_apply(const PrimalVector& c, const PrimalVector& h) const {
    check_compatible(c, h);
    const DataVector u = state(c);
    std::vector<double> rhs(u.size());
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = -h[k] * u[k];
    return solve_state(c, grid_, rhs, cg_tol_);
}

DualVector EllipticOperator::deriv_adjoint(const PrimalVector& c, const DataVector& w) const {
    if (!(w.shape() == data_shape())) throw DimensionError("elliptic operator: data shape mismatch");
    const DataVector u = state(c);
    const DataVector sol = solve_state(c, grid_, w.values(), cg_tol_);
    DualVector out(domain_shape(), domain_weight());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = -u[k] * sol[k];
    return out;
}

namespace {

double coefficient_true(double x, double y) {
    const double dx1 = x - 0.65, dy1 = y - 0.36;
    if (dx1 * dx1 + dy1 * dy1 <= 0.18 * 0.18) return 1.0;
    const double dx2 = x - 0.35, dy2 = y - 0.75;
    if (dx2 * dx2 + 4.0 * dy2 * dy2 <= 0.2 * 0.2) return 0.5;
    return 0.0;
}

}  // namespace

InclusionProblem make_inclusion_problem(std::size_t n_cells) {
    InclusionProblem prob;
    prob.grid = EllipticGrid{n_cells};
    prob.grid.validate();
    const EllipticGrid& g = prob.grid;
    const std::size_t m = g.interior_per_side();
    const double inv_h2 = 1.0 / (g.h() * g.h());

    prob.c_true = PrimalVector(g.interior_shape(), g.node_weight());
    prob.exact_data = DataVector(g.interior_shape(), g.node_weight());
    prob.f_interior.assign(m * m, 0.0);
    prob.boundary_lift.assign(m * m, 0.0);

    // exact state u = x + y; harmonic, so f = c_true * u and the data is known
    // at the nodes without a forward solve
    for (std::size_t i = 0; i < m; ++i) {
        const double y = g.node_y(i);
        for (std::size_t j = 0; j < m; ++j) {
            const double x = g.node_x(j);
            const std::size_t k = i * m + j;
            const double c = coefficient_true(x, y);
            prob.c_true[k] = c;
            prob.exact_data[k] = x + y;
            prob.f_interior[k] = c * (x + y);
            double lift = 0.0;
            if (i == 0) lift += x + 0.0;          // g on y = 0
            if (i == m - 1) lift += x + 1.0;      // y = 1
            if (j == 0) lift += 0.0 + y;          // x = 0
            if (j == m - 1) lift += 1.0 + y;      // x = 1
            prob.boundary_lift[k] = lift * inv_h2;
        }
    }
    return prob;
}

double probe_norm_bound(const InclusionProblem& prob, double cg_tol) {
    // power iteration on F'(0)* F'(0) with the base state solved once;
    // moderate tolerances suffice for a norm estimate
    const EllipticGrid& g = prob.grid;
    const double probe_tol = std::max(cg_tol, 1e-8);
    std::vector<double> rhs(prob.f_interior.size());
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = prob.f_interior[k] + prob.boundary_lift[k];
    const PrimalVector c0(g.interior_shape(), g.node_weight());
    const DataVector u0 = solve_state(c0, g, rhs, probe_tol);

    std::mt19937_64 gen(0x90e77175u);
    PrimalVector v(g.interior_shape(), g.node_weight());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = 2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53) - 1.0;

    double sigma = 0.0;
    std::vector<double> tmp(v.size());
    for (int it = 0; it < 50; ++it) {
        const double nv = norm(v);
        if (nv == 0.0) break;
        for (std::size_t k = 0; k < v.size(); ++k) tmp[k] = -(v[k] / nv) * u0[k];
        const DataVector w = solve_state(c0, g, tmp, probe_tol);
        sigma = norm(w);
        const DataVector back = solve_state(c0, g, w.values(), probe_tol);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = -u0[k] * back[k];
    }
    return sigma;
}

EllipticOperator make_operator(const InclusionProblem& prob, double cg_tol,
                               std::optional<double> norm_bound) {
    const double bound = norm_bound ? *norm_bound : probe_norm_bound(prob, cg_tol);
    return EllipticOperator(prob.grid, prob.f_interior, prob.boundary_lift, cg_tol, bound);
}

}  // namespace tpg::elliptic
