#include "tpg/solver.hpp"

#include <cmath>

namespace tpg {

void SolverConfig::validate() const {
    if (!(tau > 1.0)) throw ParameterError("solver: tau must exceed 1");
    if (!(mu0_bar > 0.0)) throw ParameterError("solver: mu0_bar must be positive");
    if (!(mu1_bar > 0.0)) throw ParameterError("solver: mu1_bar must be positive");
    if (!(s > 1.0)) throw ParameterError("solver: s must exceed 1");
    if (!(eta >= 0.0 && eta < 1.0)) throw ParameterError("solver: eta must lie in [0, 1)");
    if (!(nu > 1.0)) throw ParameterError("solver: nu must exceed 1");
    if (n_max == 0) throw ParameterError("solver: n_max must be positive");
    if (!(noise_level_delta >= 0.0)) throw ParameterError("solver: negative noise level");
    if (!(dual_norm_weight > 0.0)) throw ParameterError("solver: dual norm weight must be positive");

    struct {
        void operator()(const ZeroStrategy&) const {}
        void operator()(const NesterovStrategy& st) const {
            if (!(st.alpha > 0.0)) throw ParameterError("solver: Nesterov alpha must be positive");
        }
        void operator()(const DeltaFormulaStrategy& st) const {
            if (!(st.gamma0 > 0.0)) throw ParameterError("solver: gamma0 must be positive");
            if (!(st.alpha > 0.0)) throw ParameterError("solver: alpha must be positive");
        }
        void operator()(const DeltaFormulaRootStrategy& st) const {
            if (!(st.alpha > 0.0)) throw ParameterError("solver: alpha must be positive");
        }
        void operator()(const DbtsStrategy& st) const { st.config.validate(); }
    } check;
    std::visit(check, strategy);
}

double step_size(double residual_norm, double scaled_gradient_norm, const SolverConfig& cfg, double p) {
    if (!(p > 1.0)) throw ParameterError("step_size: p must exceed 1");
    if (residual_norm <= cfg.tau * cfg.noise_level_delta) return 0.0;

    double capped;
    if (scaled_gradient_norm == 0.0) {
        // ratio is +infinity, the cap takes over
        capped = cfg.mu1_bar;
    } else {
        const double ratio = cfg.mu0_bar * std::pow(residual_norm, p * (cfg.s - 1.0)) /
                             std::pow(scaled_gradient_norm, p);
        capped = std::min(ratio, cfg.mu1_bar);
    }
    return capped * std::pow(residual_norm, p - cfg.s);
}

double lambda_delta_formula(double xi_diff_norm, std::size_t n, double gamma0, double alpha,
                            double delta, double p, double p_star) {
    if (n == 0) return 0.0;
    const double nesterov = static_cast<double>(n) / (static_cast<double>(n) + alpha);
    if (xi_diff_norm == 0.0) return nesterov;
    return std::min(gamma0 * std::pow(delta, p) / std::pow(xi_diff_norm, p_star), nesterov);
}

double feasibility_constant(const SolverConfig& cfg, const PenaltyConfig& penalty) {
    const double pst = penalty.p_star();
    return 1.0 - cfg.eta - (1.0 + cfg.eta) / cfg.tau -
           (1.0 / pst) * std::pow(cfg.mu0_bar / (2.0 * penalty.c0()), pst - 1.0);
}

namespace {

double nesterov_lambda(std::size_t n, double alpha) {
    return static_cast<double>(n) / (static_cast<double>(n) + alpha);
}

double root_formula_lambda(double xi_diff_norm, std::size_t n, double alpha, double c0, double c1,
                           const SolverConfig& cfg, double p, double norm_bound) {
    if (n == 0) return 0.0;
    const double nesterov = nesterov_lambda(n, alpha);
    if (xi_diff_norm == 0.0) return nesterov;
    const double cap = (norm_bound > 0.0) ? cfg.mu0_bar / std::pow(norm_bound, p) : cfg.mu1_bar;
    const double big_m = (c1 / cfg.nu) * std::min(cap, cfg.mu1_bar);
    const double td = cfg.tau * cfg.noise_level_delta;
    const double arg = 0.25 + 4.0 * c0 * std::max(big_m, 0.0) * td * td / (xi_diff_norm * xi_diff_norm);
    return std::min(-0.5 + std::sqrt(arg), nesterov);
}

}  // namespace

TpgResult tpg_run(const ForwardOperator& op, const DataVector& y_delta, const SubgradientPair& x0_pair,
                  const PenaltyConfig& penalty, const SolverConfig& cfg, const ReferenceInfo* reference) {
    penalty.validate();
    cfg.validate();
    if (!(y_delta.shape() == op.data_shape()) || y_delta.cell_weight() != op.data_weight())
        throw DimensionError("tpg_run: data vector does not match the operator's data space");
    if (!(x0_pair.x.shape() == op.domain_shape()) || x0_pair.x.cell_weight() != op.domain_weight())
        throw DimensionError("tpg_run: start pair does not match the operator's domain");
    check_compatible(x0_pair.xi, x0_pair.x);

    const double p = penalty.p();
    const double tau_delta = cfg.tau * cfg.noise_level_delta;

    TpgResult out;
    out.c1 = feasibility_constant(cfg, penalty);
    if (out.c1 <= 0.0)
        out.warnings.push_back("feasibility constant c1 is not positive; convergence guarantees void");

    DualVector xi_prev = x0_pair.xi;
    DualVector xi_curr = x0_pair.xi;
    PrimalVector x_curr = x0_pair.x;
    PdhgState warm;
    long long i_counter = 0;

    double theta_ref = 0.0;
    if (reference != nullptr) theta_ref = theta_value(reference->x_ref, penalty);

    const auto probe = [&](const PrimalVector& z) {
        ProbeEval ev;
        ev.residual = diff(op.apply(z), y_delta);
        ev.residual_norm = norm(ev.residual);
        if (ev.residual_norm > tau_delta) {
            DualVector grad = op.deriv_adjoint(z, duality_map(ev.residual, cfg.s));
            ev.mu = step_size(ev.residual_norm, norm(grad), cfg, p);
            ev.scaled_gradient = std::move(grad);
        }
        return ev;
    };

    double bregman_prev = 0.0;
    // length of the dual step taken at the previous iteration, measured from
    // its extrapolated point: ||xi_n - zeta_{n-1}|| = mu ||L* J_s r||, scaled
    // by the configured dual norm weight. This is the magnitude every lambda
    // formula consumes; the extrapolation direction stays the full difference
    // xi_n - xi_{n-1}. Feeding the full difference into the formulas instead
    // would let the momentum history inflate the norm by roughly
    // 1/(1 - lambda), which shuts the acceleration off at the point where it
    // matters most.
    double step_norm = 0.0;
    for (std::size_t n = 0; n < cfg.n_max; ++n) {
        const DualVector xi_diff = diff(xi_curr, xi_prev);

        // combination parameter for this step
        double lambda = 0.0;
        DbtsBranch branch = DbtsBranch::None;
        std::optional<PrimalVector> z_ready;
        std::optional<ProbeEval> ev_ready;
        if (n > 0) {
            if (const auto* st = std::get_if<NesterovStrategy>(&cfg.strategy)) {
                lambda = nesterov_lambda(n, st->alpha);
            } else if (const auto* st = std::get_if<DeltaFormulaStrategy>(&cfg.strategy)) {
                lambda = lambda_delta_formula(step_norm, n, st->gamma0, st->alpha,
                                              cfg.noise_level_delta, p, penalty.p_star());
            } else if (const auto* st = std::get_if<DeltaFormulaRootStrategy>(&cfg.strategy)) {
                lambda = root_formula_lambda(step_norm, n, st->alpha, penalty.c0(), out.c1, cfg, p,
                                             op.operator_norm_bound());
            } else if (const auto* st = std::get_if<DbtsStrategy>(&cfg.strategy)) {
                DbtsOutcome sel = dbts_select(xi_curr, xi_prev, step_norm, n, i_counter, tau_delta,
                                              cfg.noise_level_delta, cfg.s, penalty, st->config, probe,
                                              &warm);
                lambda = sel.lambda;
                i_counter = sel.i_n;
                branch = sel.branch;
                if (sel.branch == DbtsBranch::ConditionAccepted) {
                    z_ready = std::move(sel.z);
                    ev_ready = std::move(sel.eval);
                }
            }
        }

        // z_n = grad Theta*(zeta_n); lambda = 0 collapses zeta to xi_n, whose
        // conjugate gradient is the current iterate
        PrimalVector z = z_ready ? std::move(*z_ready)
                                 : (lambda == 0.0 ? x_curr
                                                  : grad_theta_star(extrapolate(xi_curr, xi_diff, lambda),
                                                                    penalty, &warm));
        ProbeEval ev = ev_ready ? std::move(*ev_ready) : probe(z);

        IterationRecord rec;
        rec.n = n;
        rec.lambda = lambda;
        rec.mu = ev.mu;
        rec.residual_norm = ev.residual_norm;
        rec.xi_diff_norm = step_norm;
        rec.i_n = i_counter;
        rec.branch = branch;
        if (reference != nullptr) {
            const double breg =
                theta_ref - theta_value(x_curr, penalty) - pairing(xi_curr, diff(reference->x_ref, x_curr));
            rec.bregman_to_reference = breg;
            rec.error_to_reference = reference->error_scale * norm(diff(x_curr, reference->x_ref));
            rec.delta_n = (n == 0) ? 0.0 : breg - bregman_prev;
            bregman_prev = breg;
        }
        out.records.push_back(rec);

        if (ev.residual_norm <= tau_delta) {
            out.stop = StopReason::Discrepancy;
            out.solution = std::move(x_curr);
            return out;
        }

        const DualVector zeta = (lambda == 0.0) ? xi_curr : extrapolate(xi_curr, xi_diff, lambda);
        DualVector xi_next = lin(1.0, zeta, -ev.mu, *ev.scaled_gradient);
        PrimalVector x_next = grad_theta_star(xi_next, penalty, &warm);
        if (!xi_next.all_finite() || !x_next.all_finite())
            throw NumericalDivergence("iterate diverged at step " + std::to_string(n), rec);

        step_norm = cfg.dual_norm_weight * ev.mu * norm(*ev.scaled_gradient);
        xi_prev = std::move(xi_curr);
        xi_curr = std::move(xi_next);
        x_curr = std::move(x_next);
    }

    out.stop = StopReason::Budget;
    out.solution = std::move(x_curr);
    return out;
}

std::vector<std::size_t> monitor_monotonicity(const std::vector<IterationRecord>& records, double tol) {
    std::vector<std::size_t> violations;
    for (std::size_t k = 1; k < records.size(); ++k) {
        const auto& prev = records[k - 1].bregman_to_reference;
        const auto& curr = records[k].bregman_to_reference;
        if (prev && curr && *curr > *prev + tol) violations.push_back(records[k].n);
    }
    return violations;
}

SummabilityReport summability_report(const std::vector<IterationRecord>& records, double bregman0,
                                     double c1, double nu, double s) {
    SummabilityReport rep;
    for (const auto& r : records) rep.weighted_residual_sum += r.mu * std::pow(r.residual_norm, s);
    if (c1 > 0.0 && nu > 1.0) {
        rep.bound = nu / ((nu - 1.0) * c1) * bregman0;
        rep.ratio = (rep.bound > 0.0) ? rep.weighted_residual_sum / rep.bound : 0.0;
    }
    return rep;
}

std::vector<std::size_t> check_dbts_condition(const std::vector<IterationRecord>& records, double gamma1,
                                              double s, double slack) {
    std::vector<std::size_t> violations;
    for (const auto& r : records) {
        if (r.branch != DbtsBranch::ConditionAccepted) continue;
        const double lhs = (r.lambda + r.lambda * r.lambda) * r.xi_diff_norm * r.xi_diff_norm;
        const double rhs = gamma1 * r.mu * std::pow(r.residual_norm, s);
        if (lhs > rhs + slack * (1.0 + rhs)) violations.push_back(r.n);
    }
    return violations;
}

}  // namespace tpg
