#include "tpg/penalty.hpp"

#include <algorithm>
#include <cmath>

namespace tpg {

void PenaltyConfig::validate() const {
    if (!(beta > 0.0)) throw ParameterError("penalty: beta must be positive");
    if (!(tv_weight >= 0.0)) throw ParameterError("penalty: tv_weight must be non-negative");
    if (pdhg_iters < 1) throw ParameterError("penalty: pdhg_iters must be at least 1");
    if (!(pdhg_step_primal > 0.0) || !(pdhg_step_dual > 0.0))
        throw ParameterError("penalty: PDHG step sizes must be positive");
    if (pdhg_step_primal * pdhg_step_dual * 8.0 > 1.0 + 1e-9)
        throw ParameterError("penalty: PDHG steps violate step_primal * step_dual * 8 <= 1");
}

double total_variation(const PrimalVector& x) {
    const std::size_t R = x.shape().rows, C = x.shape().cols;
    double sum = 0.0;
    for (std::size_t i = 0; i < R; ++i) {
        for (std::size_t j = 0; j < C; ++j) {
            const double v = x.at(i, j);
            const double dr = (i + 1 < R) ? x.at(i + 1, j) - v : 0.0;
            const double dc = (j + 1 < C) ? x.at(i, j + 1) - v : 0.0;
            sum += std::sqrt(dr * dr + dc * dc);
        }
    }
    return std::sqrt(x.cell_weight()) * sum;
}

double theta_value(const PrimalVector& x, const PenaltyConfig& cfg) {
    cfg.validate();
    const double nrm = norm(x);
    double value = nrm * nrm / (2.0 * cfg.beta);
    if (cfg.tv_weight > 0.0) value += cfg.tv_weight * total_variation(x);
    return value;
}

double bregman_distance(const PrimalVector& xbar, const SubgradientPair& at, const PenaltyConfig& cfg) {
    check_compatible(at.xi, at.x);
    return theta_value(xbar, cfg) - theta_value(at.x, cfg) - pairing(at.xi, diff(xbar, at.x));
}

namespace {

// Chambolle-Pock loop for min_z 1/2 ||z - v||^2 + weight * sum |grad z|,
// with the forward-difference gradient (replicate boundary) as the coupling
// operator and over-relaxation 1. All loops are fixed-order.
void denoise_pdhg(std::vector<double>& z, std::vector<double>& pr, std::vector<double>& pc,
                  const std::vector<double>& v, std::size_t R, std::size_t C, double weight,
                  double tau, double sigma, int iters) {
    std::vector<double> zbar = z;
    for (int it = 0; it < iters; ++it) {
        // dual ascent on the gradient field, then pixelwise projection onto
        // the ball of radius `weight`
        for (std::size_t i = 0; i < R; ++i) {
            const std::size_t row = i * C;
            for (std::size_t j = 0; j < C; ++j) {
                const std::size_t k = row + j;
                double a = pr[k];
                double b = pc[k];
                if (i + 1 < R) a += sigma * (zbar[k + C] - zbar[k]);
                if (j + 1 < C) b += sigma * (zbar[k + 1] - zbar[k]);
                const double mag = std::sqrt(a * a + b * b);
                if (mag > weight) {
                    const double scale = weight / mag;
                    a *= scale;
                    b *= scale;
                }
                pr[k] = a;
                pc[k] = b;
            }
        }
        // proximal step of 1/2 ||z - v||^2 at z + tau * div p, fused with the
        // over-relaxation zbar = 2 z_new - z
        const double inv = 1.0 / (1.0 + tau);
        for (std::size_t i = 0; i < R; ++i) {
            const std::size_t row = i * C;
            for (std::size_t j = 0; j < C; ++j) {
                const std::size_t k = row + j;
                double div = 0.0;
                if (i + 1 < R) div += pr[k];
                if (i > 0) div -= pr[k - C];
                if (j + 1 < C) div += pc[k];
                if (j > 0) div -= pc[k - 1];
                const double znew = (z[k] + tau * div + tau * v[k]) * inv;
                zbar[k] = 2.0 * znew - z[k];
                z[k] = znew;
            }
        }
    }
}

}  // namespace

PrimalVector grad_theta_star(const DualVector& xi, const PenaltyConfig& cfg, PdhgState* warm) {
    cfg.validate();
    const GridShape shape = xi.shape();
    const std::size_t n = shape.size();

    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = cfg.beta * xi[i];

    if (cfg.tv_weight == 0.0)
        return PrimalVector::from(shape, std::move(v), xi.cell_weight());

    // In the unweighted pixel objective the total variation enters with
    // weight beta * tv_weight / spacing, since the quadratic term carries the
    // cell area and the p=1 term only one factor of the spacing.
    const double spacing = std::sqrt(xi.cell_weight());
    const double weight = cfg.beta * cfg.tv_weight / spacing;

    std::vector<double> z(n, 0.0), pr(n, 0.0), pc(n, 0.0);
    if (warm != nullptr && warm->valid && warm->primal.size() == n) {
        z = warm->primal;
        pr = warm->dual_row;
        pc = warm->dual_col;
    }

    denoise_pdhg(z, pr, pc, v, shape.rows, shape.cols, weight, cfg.pdhg_step_primal,
                 cfg.pdhg_step_dual, cfg.pdhg_iters);

    if (warm != nullptr) {
        warm->primal = z;
        warm->dual_row = pr;
        warm->dual_col = pc;
        warm->valid = true;
    }
    return PrimalVector::from(shape, std::move(z), xi.cell_weight());
}

bool conjugate_gradient_lipschitz_check(const DualVector& xi1, const DualVector& xi2,
                                        const PenaltyConfig& cfg, double slack) {
    check_compatible(xi1, xi2);
    PenaltyConfig accurate = cfg;
    accurate.pdhg_iters = std::max(cfg.pdhg_iters, 4000);
    const PrimalVector x1 = grad_theta_star(xi1, accurate);
    const PrimalVector x2 = grad_theta_star(xi2, accurate);
    return norm(diff(x1, x2)) <= cfg.beta * norm(diff(xi1, xi2)) + slack;
}

}  // namespace tpg
