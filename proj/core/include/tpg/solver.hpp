#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tpg/dbts.hpp"
#include "tpg/operators.hpp"
#include "tpg/penalty.hpp"
#include "tpg/vectors.hpp"

namespace tpg {

// Combination parameter strategies. Zero reduces the method to the Landweber
// iteration in dual coordinates; Nesterov uses n / (n + alpha); DeltaFormula
// is the closed noise-level rule min{ gamma0 delta^p / ||dxi||^p*, n/(n+alpha) };
// DeltaFormulaRoot is its quadratic-root variant (p = 2 only); Dbts runs the
// discrete backtracking search.
struct ZeroStrategy {};
struct NesterovStrategy {
    double alpha = 5.0;
};
struct DeltaFormulaStrategy {
    double gamma0 = 0.1;
    double alpha = 5.0;
};
struct DeltaFormulaRootStrategy {
    double alpha = 5.0;
};
struct DbtsStrategy {
    DbtsConfig config;
};

using LambdaStrategy =
    std::variant<ZeroStrategy, NesterovStrategy, DeltaFormulaStrategy, DeltaFormulaRootStrategy, DbtsStrategy>;

struct SolverConfig {
    double tau = 1.05;        // discrepancy factor, > 1
    double mu0_bar = 0.0857;  // step size cap factors
    double mu1_bar = 20000.0;
    double s = 2.0;           // duality map exponent of the data space, > 1
    double eta = 0.0;         // tangential cone constant, in [0, 1)
    double nu = 2.0;          // slack split in the feasibility constant, > 1
    std::size_t n_max = 50000;
    double noise_level_delta = 0.0;
    // factor converting the Euclidean coefficient norm of a dual step into
    // the norm the lambda formulas and the backtracking inequality reason
    // about. Set it to the domain's L2 cell weight (cell side^{d/2} on a
    // d-dimensional grid) so those caps are resolution independent; with the
    // raw coefficient norm the same continuum problem produces a dual step
    // norm growing with the grid size, and the caps tighten as the mesh is
    // refined.
    double dual_norm_weight = 1.0;
    LambdaStrategy strategy = ZeroStrategy{};

    void validate() const;
};

struct IterationState {
    DualVector xi_curr;
    DualVector xi_prev;
    PrimalVector x_curr;
    std::size_t n = 0;
    long long i_counter = 0;
};

struct IterationRecord {
    std::size_t n = 0;
    double lambda = 0.0;
    double mu = 0.0;
    double residual_norm = 0.0;
    // dual_norm_weight * ||xi_n - zeta_{n-1}||, the dual step length of the
    // previous iteration measured from its extrapolated point; equals the
    // weighted ||xi_n - xi_{n-1}|| when that step used lambda = 0. This is
    // the magnitude the lambda formulas and the backtracking inequality
    // consume.
    double xi_diff_norm = 0.0;
    std::optional<double> bregman_to_reference;
    std::optional<double> error_to_reference;
    std::optional<double> delta_n;  // change of the Bregman distance, D_n - D_{n-1}
    long long i_n = 0;
    DbtsBranch branch = DbtsBranch::None;
};

enum class StopReason { Discrepancy, Budget };

struct TpgResult {
    PrimalVector solution;
    std::vector<IterationRecord> records;
    StopReason stop = StopReason::Budget;
    double c1 = 0.0;
    std::vector<std::string> warnings;
};

// Reference element used for per-iteration diagnostics; error_scale multiplies
// the norm distance recorded per step (e.g. 1/||x_true|| for relative errors).
struct ReferenceInfo {
    PrimalVector x_ref;
    double error_scale = 1.0;
};

// A diverged iterate (non-finite entries). Carries the last complete record.
class NumericalDivergence : public Error {
public:
    NumericalDivergence(const std::string& what, IterationRecord last)
        : Error(what), last_record(std::move(last)) {}
    IterationRecord last_record;
};

/**
 * Step size of the gradient step,
 *
 *     mu_n = min{ mu0 ||r||^{p(s-1)} / ||L* J_s r||^p, mu1 } ||r||^{p-s}
 *
 * when ||r|| exceeds tau * delta, and 0 otherwise. A vanishing gradient norm
 * selects the mu1 branch.
 */
double step_size(double residual_norm, double scaled_gradient_norm, const SolverConfig& cfg, double p);

// Closed combination parameter formula min{ gamma0 delta^p / ||dxi||^p*, n/(n+alpha) }.
double lambda_delta_formula(double xi_diff_norm, std::size_t n, double gamma0, double alpha,
                            double delta, double p, double p_star);

// Feasibility constant c1 = 1 - eta - (1+eta)/tau - (1/p*) (mu0 / (2 c0))^{p*-1}.
double feasibility_constant(const SolverConfig& cfg, const PenaltyConfig& penalty);

/**
 * Two-point gradient iteration in dual coordinates:
 *
 *     zeta_n  = xi_n + lambda_n (xi_n - xi_{n-1})
 *     z_n     = grad Theta*(zeta_n)
 *     xi_{n+1} = zeta_n - mu_n L(z_n)* J_s(F(z_n) - y)
 *     x_{n+1} = grad Theta*(xi_{n+1})
 *
 * started from x0_pair (xi must be a subgradient of Theta at x), stopped by
 * the discrepancy principle ||F(z_n) - y|| <= tau * delta or by the iteration
 * budget. The returned solution is grad Theta*(xi) at the stopping index.
 * lambda_0 is always 0.
 */
TpgResult tpg_run(const ForwardOperator& op, const DataVector& y_delta, const SubgradientPair& x0_pair,
                  const PenaltyConfig& penalty, const SolverConfig& cfg,
                  const ReferenceInfo* reference = nullptr);

// Indices n >= 1 whose Bregman distance to the reference increased by more
// than tol over the previous record. Records without the diagnostic are skipped.
std::vector<std::size_t> monitor_monotonicity(const std::vector<IterationRecord>& records, double tol);

struct SummabilityReport {
    double weighted_residual_sum = 0.0;  // sum of mu_m ||r_m||^s
    double bound = 0.0;                  // nu / ((nu - 1) c1) * D_0
    double ratio = 0.0;
};

SummabilityReport summability_report(const std::vector<IterationRecord>& records, double bregman0,
                                     double c1, double nu, double s);

// Steps accepted by the backtracking inequality that violate
// (lambda + lambda^2) ||dxi||^2 <= gamma1 mu ||r||^s (with slack for roundoff).
std::vector<std::size_t> check_dbts_condition(const std::vector<IterationRecord>& records, double gamma1,
                                              double s, double slack = 1e-12);

}  // namespace tpg
