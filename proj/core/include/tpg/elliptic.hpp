#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <vector>

#include "tpg/operators.hpp"
#include "tpg/vectors.hpp"

namespace tpg::elliptic {

/**
 * Uniform grid on the unit square with n_cells cells per side. Unknowns of
 * the Dirichlet problem live on the (n_cells - 1)^2 interior nodes; the
 * coefficient c is collocated with the state there, and both carry the cell
 * area h^2 as quadrature weight.
 */
struct EllipticGrid {
    std::size_t n_cells = 128;

    double h() const { return 1.0 / static_cast<double>(n_cells); }
    std::size_t interior_per_side() const { return n_cells - 1; }
    GridShape interior_shape() const { return {interior_per_side(), interior_per_side()}; }
    double node_weight() const { return h() * h(); }
    // Coordinates of interior node (i, j), i.e. ((j+1) h, (i+1) h) with row
    // index i increasing in y.
    double node_x(std::size_t j) const { return static_cast<double>(j + 1) * h(); }
    double node_y(std::size_t i) const { return static_cast<double>(i + 1) * h(); }

    void validate() const;
};

struct SolveStats {
    int cg_iterations = 0;
    std::size_t clamped_nodes = 0;
};

/**
 * Solves the 5-point finite difference system (-Lap_h + c) u = rhs with
 * homogeneous Dirichlet values, by Jacobi-preconditioned conjugate gradients
 * to relative residual `tol`. rhs must already include any boundary lift.
 * Entries of c below -0.5 are clamped for the solve only (counted in stats);
 * the clamp keeps the system positive definite.
 */
DataVector solve_state(const PrimalVector& c, const EllipticGrid& grid, std::span<const double> rhs,
                       double tol = 1e-10, SolveStats* stats = nullptr);

/**
 * Parameter-to-state map c -> u(c) of  -Lap u + c u = f,  u = g on the
 * boundary, observed at the interior nodes. The derivative and its adjoint
 * are realized by one additional Dirichlet solve each:
 *
 *     F'(c) h    = -(-Lap + c)^{-1} (h u(c))
 *     F'(c)* w   = -u(c) .* (-Lap + c)^{-1} w
 */
class EllipticOperator final : public ForwardOperator {
public:
    EllipticOperator(EllipticGrid grid, std::vector<double> f_interior, std::vector<double> boundary_lift,
                     double cg_tol = 1e-10, std::optional<double> norm_bound = std::nullopt);

    DataVector apply(const PrimalVector& c) const override;
    DataVector deriv_apply(const PrimalVector& c, const PrimalVector& h) const override;
    DualVector deriv_adjoint(const PrimalVector& c, const DataVector& w) const override;

    bool is_linear() const override { return false; }
    double operator_norm_bound() const override { return norm_bound_; }
    GridShape domain_shape() const override { return grid_.interior_shape(); }
    double domain_weight() const override { return grid_.node_weight(); }
    GridShape data_shape() const override { return grid_.interior_shape(); }
    double data_weight() const override { return grid_.node_weight(); }

    const EllipticGrid& grid() const { return grid_; }
    double cg_tol() const { return cg_tol_; }
    // Total interior nodes clamped at -0.5 across all solves so far.
    long long clamped_nodes() const { return clamped_total_.load(); }

private:
    DataVector state(const PrimalVector& c) const;

    EllipticGrid grid_;
    std::vector<double> f_interior_;
    std::vector<double> boundary_lift_;
    double cg_tol_;
    double norm_bound_;
    mutable std::atomic<long long> clamped_total_{0};
};

/**
 * The two-inclusion identification problem: c is 1 on a disk, 0.5 on an
 * ellipse, 0 elsewhere; the exact state is u = x + y, so f = c (x + y) and
 * g = x + y, and the exact data is known in closed form at the nodes.
 */
struct InclusionProblem {
    EllipticGrid grid;
    PrimalVector c_true;
    DataVector exact_data;
    std::vector<double> f_interior;
    std::vector<double> boundary_lift;
};

InclusionProblem make_inclusion_problem(std::size_t n_cells);

// Power-iteration estimate of ||F'(0)|| for a problem instance.
double probe_norm_bound(const InclusionProblem& prob, double cg_tol = 1e-10);

// Builds the operator for a problem instance (norm bound probed at c = 0
// unless supplied).
EllipticOperator make_operator(const InclusionProblem& prob, double cg_tol = 1e-10,
                               std::optional<double> norm_bound = std::nullopt);

}  // namespace tpg::elliptic
