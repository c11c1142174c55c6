#pragma once

#include <array>
#include <cstdint>

#include "tpg/vectors.hpp"

namespace tpg {

/**
 * A (possibly nonlinear) forward map F between the penalty's primal space and
 * the data space, with its Frechet derivative L(x) = F'(x) and adjoint.
 * Implementations are immutable and safe to share between threads.
 */
class ForwardOperator {
public:
    virtual ~ForwardOperator() = default;

    virtual DataVector apply(const PrimalVector& x) const = 0;
    virtual DataVector deriv_apply(const PrimalVector& x, const PrimalVector& h) const = 0;
    virtual DualVector deriv_adjoint(const PrimalVector& x, const DataVector& w) const = 0;

    virtual bool is_linear() const = 0;

    // Bound C0 >= ||F'(x)|| used by diagnostics and by the root form of the
    // combination parameter formula.
    virtual double operator_norm_bound() const = 0;

    virtual GridShape domain_shape() const = 0;
    virtual double domain_weight() const = 0;
    virtual GridShape data_shape() const = 0;
    virtual double data_weight() const = 0;

    PrimalVector zero_domain() const { return PrimalVector(domain_shape(), domain_weight()); }
    DualVector zero_dual() const { return DualVector(domain_shape(), domain_weight()); }
    DataVector zero_data() const { return DataVector(data_shape(), data_weight()); }
};

/**
 * Largest relative adjoint defect
 *
 *     |<L(x)h, w> - <L(x)* w, h>| / (||L(x)h|| ||w|| + eps)
 *
 * over `trials` pairs (h, w) with seeded uniform entries in [-1, 1].
 */
double adjoint_test(const ForwardOperator& op, const PrimalVector& x, int trials = 10,
                    std::uint64_t seed = 0x5eed0ad10u);

struct FrechetResult {
    std::array<double, 4> t;          // probe scales, 1e-1 .. 1e-4
    std::array<double, 4> remainder;  // ||F(x + t h) - F(x) - t L(x) h||
    double slope;                     // least-squares log-log slope
};

// Taylor remainder decay of F at x in direction h. For a linear operator the
// remainders are zero to rounding and the fitted slope is meaningless.
FrechetResult frechet_test(const ForwardOperator& op, const PrimalVector& x, const PrimalVector& h);

// Power-iteration estimate of ||L(x)|| in the weighted norms.
double power_iteration_norm(const ForwardOperator& op, const PrimalVector& x, int iters = 50,
                            std::uint64_t seed = 0x90e77175u);

}  // namespace tpg
