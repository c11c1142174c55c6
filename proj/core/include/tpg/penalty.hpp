#pragma once

#include <vector>

#include "tpg/vectors.hpp"

namespace tpg {

/**
 * Parameters of the uniformly convex penalty
 *
 *     Theta(x) = ||x||^2 / (2 beta) + tv_weight * TV(x),
 *
 * where TV is the isotropic discrete total variation (forward differences,
 * replicate boundary, scaled by the grid spacing so it approximates the
 * continuum total variation). Theta is 2-convex with constant
 * c0 = 1 / (2 beta); both exponents are derived, never stored.
 *
 * The gradient of the convex conjugate, grad Theta*, is evaluated by a
 * primal-dual (PDHG) loop with pdhg_iters iterations and the given step
 * sizes, which must satisfy step_primal * step_dual * 8 <= 1 because the
 * discrete gradient has squared norm at most 8.
 */
struct PenaltyConfig {
    double beta = 1.0;
    double tv_weight = 1.0;
    int pdhg_iters = 100;
    double pdhg_step_primal = 0.3535533905932738;  // 1/sqrt(8)
    double pdhg_step_dual = 0.3535533905932738;

    double c0() const { return 1.0 / (2.0 * beta); }
    double p() const { return 2.0; }
    double p_star() const { return 2.0; }

    void validate() const;
};

// An iterate together with a subgradient of Theta at that iterate. The solver
// advances these in tandem; it never recovers xi from x.
struct SubgradientPair {
    PrimalVector x;
    DualVector xi;
};

// Warm-start buffers for the PDHG loop, owned by the caller and reused across
// evaluations at nearby arguments. Zero-initialized on first use.
struct PdhgState {
    std::vector<double> primal;
    std::vector<double> dual_row;
    std::vector<double> dual_col;
    bool valid = false;
};

// Length-scaled isotropic total variation of a grid function.
double total_variation(const PrimalVector& x);

double theta_value(const PrimalVector& x, const PenaltyConfig& cfg);

// Bregman distance D_xi Theta(xbar, x) = Theta(xbar) - Theta(x) - <xi, xbar - x>.
double bregman_distance(const PrimalVector& xbar, const SubgradientPair& at, const PenaltyConfig& cfg);

/**
 * grad Theta*(xi) = argmin_z { Theta(z) - <xi, z> }, realized as total
 * variation denoising of beta*xi. With tv_weight = 0 the minimizer beta*xi is
 * returned exactly; otherwise a fixed budget of PDHG iterations is run,
 * warm-started from `warm` when provided.
 */
PrimalVector grad_theta_star(const DualVector& xi, const PenaltyConfig& cfg, PdhgState* warm = nullptr);

// Verifies || grad Theta*(xi1) - grad Theta*(xi2) || <= beta ||xi1 - xi2|| + slack,
// evaluating both sides with a high iteration budget.
bool conjugate_gradient_lipschitz_check(const DualVector& xi1, const DualVector& xi2,
                                        const PenaltyConfig& cfg, double slack = 1e-4);

// Comparison slack used wherever inexact prox evaluations enter a monotonicity
// or identity check.
inline double inexactness_tolerance(double theta_reference) {
    return 1e-6 * (1.0 + std::abs(theta_reference));
}

}  // namespace tpg
