#include "tpg/dbts.hpp"

#include <cmath>

#include "tpg/solver.hpp"

namespace tpg {

void DbtsConfig::validate() const {
    if (j_max < 1) throw ParameterError("dbts: j_max must be at least 1");
    if (!(alpha >= 3.0)) throw ParameterError("dbts: alpha must be at least 3");
    if (!(gamma0 > 0.0)) throw ParameterError("dbts: gamma0 must be positive");
    if (!(gamma1 > 0.0)) throw ParameterError("dbts: gamma1 must be positive");
    if (!(q_exponent > 1.0)) throw ParameterError("dbts: q_exponent must exceed 1");
    if (!(rho > 0.0)) throw ParameterError("dbts: rho must be positive");
}

double beta_n(long long i, double xi_diff_norm, std::size_t n, const DbtsConfig& cfg, double c0,
              double p, double p_star) {
    if (i < 1) throw ParameterError("beta_n: trial index must be at least 1");
    const double nesterov = static_cast<double>(n) / (static_cast<double>(n) + cfg.alpha);
    if (xi_diff_norm == 0.0) return nesterov;

    double value = std::min(std::pow(static_cast<double>(i), -cfg.q_exponent) / xi_diff_norm, nesterov);
    if (std::isfinite(cfg.rho)) {
        const double ball = p_star * std::pow(2.0 * c0, p_star) * std::pow(cfg.rho, p) /
                            (4.0 * std::pow(xi_diff_norm, p_star));
        value = std::min(value, ball);
    }
    return value;
}

DbtsOutcome dbts_select(const DualVector& xi_curr, const DualVector& xi_prev, double step_norm,
                        std::size_t n, long long i_prev, double tau_delta, double noise_delta,
                        double s, const PenaltyConfig& penalty, const DbtsConfig& cfg,
                        const ResidualProbe& probe, PdhgState* warm) {
    cfg.validate();
    if (n < 1) throw ParameterError("dbts_select: defined for n >= 1 only");
    if (i_prev < 0) throw ParameterError("dbts_select: negative trial counter");
    if (!(step_norm >= 0.0)) throw ParameterError("dbts_select: step norm must be non-negative");

    const DualVector xi_diff = diff(xi_curr, xi_prev);
    const double dxi = step_norm;
    const double p = penalty.p();
    const double pst = penalty.p_star();

    DbtsOutcome out;
    for (long long j = 1; j <= cfg.j_max; ++j) {
        // the trial ladder restarts at q(1) every iteration; i_n only keeps
        // the cumulative probe count for the run log. Reusing that count as
        // the ladder depth would cap lambda by q(n)/||dxi|| no matter how the
        // inequality test comes out, which silently removes the momentum term
        // from the whole tail of a run.
        const double lambda = beta_n(j, dxi, n, cfg, penalty.c0(), p, pst);
        PrimalVector z = grad_theta_star(extrapolate(xi_curr, xi_diff, lambda), penalty, warm);
        ProbeEval ev = probe(z);

        if (ev.residual_norm <= tau_delta) {
            // candidate already meets the stopping level; hand control back
            // with lambda = 0 so the stop rule is re-tested at the plain iterate
            out.lambda = 0.0;
            out.i_n = i_prev + j;
            out.branch = DbtsBranch::DiscrepancyHit;
            return out;
        }
        const double lhs = (lambda + std::pow(lambda, pst)) * std::pow(dxi, pst);
        if (lhs <= cfg.gamma1 * ev.mu * std::pow(ev.residual_norm, s)) {
            out.lambda = lambda;
            out.i_n = i_prev + j;
            out.branch = DbtsBranch::ConditionAccepted;
            out.z = std::move(z);
            out.eval = std::move(ev);
            return out;
        }
    }

    // every trial failed the inequality: fall back to the closed noise-level
    // formula and advance the counter by the full window
    out.lambda = lambda_delta_formula(dxi, n, cfg.gamma0, cfg.alpha, noise_delta, p, pst);
    out.i_n = i_prev + cfg.j_max;
    out.branch = DbtsBranch::Fallback;
    return out;
}

}  // namespace tpg
