#pragma once

#include <functional>
#include <limits>
#include <optional>

#include "tpg/penalty.hpp"
#include "tpg/vectors.hpp"

namespace tpg {

/**
 * Parameters of the discrete backtracking search that picks the combination
 * parameter lambda_n. q(i) = i^(-q_exponent) with q_exponent > 1 forms the
 * summable trial sequence; gamma1 weights the acceptance inequality; gamma0
 * enters the noise-level fallback formula; rho bounds the candidate via the
 * radius of the convexity ball and defaults to infinity (bound disabled).
 */
struct DbtsConfig {
    long long j_max = 1;
    double alpha = 5.0;
    double gamma0 = 0.1;
    double gamma1 = 0.4;
    double q_exponent = 1.1;
    double rho = std::numeric_limits<double>::infinity();

    void validate() const;
};

enum class DbtsBranch { None, DiscrepancyHit, ConditionAccepted, Fallback };

// zeta = xi + lambda (xi - xi_prev), shared by the solver and the search so
// both form bitwise identical extrapolation points.
inline DualVector extrapolate(const DualVector& xi, const DualVector& xi_diff, double lambda) {
    return lin(1.0, xi, lambda, xi_diff);
}

// What the solver hands back for a candidate point z: the residual F(z) - y,
// its norm, and the step size at z. The scaled gradient L(z)* J_s(residual)
// is only formed when the residual fails the stopping test, so a probe that
// hits the discrepancy level costs no adjoint application.
struct ProbeEval {
    DataVector residual;
    double residual_norm = 0.0;
    double mu = 0.0;
    std::optional<DualVector> scaled_gradient;
};

using ResidualProbe = std::function<ProbeEval(const PrimalVector& z)>;

struct DbtsOutcome {
    double lambda = 0.0;
    long long i_n = 0;
    DbtsBranch branch = DbtsBranch::None;
    // Candidate accepted by the inequality test, returned so the solver can
    // finish the step without re-evaluating prox, forward map, or adjoint.
    std::optional<PrimalVector> z;
    std::optional<ProbeEval> eval;
};

/**
 * Candidate value beta_n(i) = min{ q(i) / ||dxi||,
 *                                  p* (2 c0)^p* rho^p / (4 ||dxi||^p*),
 *                                  n / (n + alpha) },
 * where dxi = xi_n - xi_{n-1}. Requires i >= 1; a vanishing ||dxi|| yields
 * n / (n + alpha).
 */
double beta_n(long long i, double xi_diff_norm, std::size_t n, const DbtsConfig& cfg, double c0,
              double p, double p_star);

/**
 * One round of the backtracking search at iteration n >= 1. Probes
 * lambda = beta_n(j) for j = 1, ..., j_max and returns the first candidate
 * whose residual meets the discrepancy level (DiscrepancyHit, lambda reset
 * to 0) or satisfies
 *
 *     (lambda + lambda^p*) step_norm^p*  <=  gamma1 * mu * ||F(z) - y||^s
 *
 * (ConditionAccepted). If all j_max probes fail, lambda falls back to the
 * noise-level formula min{ gamma0 delta^p / step_norm^p*, n/(n+alpha) } and
 * the trial counter advances by j_max (Fallback). i_prev only seeds the
 * counter bookkeeping: i_n = i_prev + j records how many probes the run has
 * spent, while the ladder itself restarts from the top each iteration.
 *
 * The search direction is the full difference xi_curr - xi_prev, but the
 * magnitude entering beta_n, the inequality, and the fallback formula is
 * step_norm, the length of the dual step the solver took at the previous
 * iteration measured from its extrapolated point. The two coincide whenever
 * the previous step used lambda = 0; keeping the momentum history out of the
 * magnitude is what lets the Nesterov cap stay active over a whole run.
 */
DbtsOutcome dbts_select(const DualVector& xi_curr, const DualVector& xi_prev, double step_norm,
                        std::size_t n, long long i_prev, double tau_delta, double noise_delta,
                        double s, const PenaltyConfig& penalty, const DbtsConfig& cfg,
                        const ResidualProbe& probe, PdhgState* warm = nullptr);

}  // namespace tpg
