#include "tpg/operators.hpp"

#include <cmath>
#include <random>

namespace tpg {

namespace {

// uniform [-1, 1] fill, mt19937_64 driven so results are platform independent
template <class Tag>
void fill_uniform(Vec<Tag>& v, std::mt19937_64& gen) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;  // [0, 1)
        v[i] = 2.0 * u - 1.0;
    }
}

}  // namespace

double adjoint_test(const ForwardOperator& op, const PrimalVector& x, int trials, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        PrimalVector h(op.domain_shape(), op.domain_weight());
        DataVector w(op.data_shape(), op.data_weight());
        fill_uniform(h, gen);
        fill_uniform(w, gen);

        const DataVector lh = op.deriv_apply(x, h);
        const DualVector lstar_w = op.deriv_adjoint(x, w);

        const double lhs = inner(lh, w);
        const double rhs = pairing(lstar_w, h);
        const double scale = norm(lh) * norm(w) + 1e-300;
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    return worst;
}

FrechetResult frechet_test(const ForwardOperator& op, const PrimalVector& x, const PrimalVector& h) {
    FrechetResult out{};
    out.t = {1e-1, 1e-2, 1e-3, 1e-4};

    const DataVector fx = op.apply(x);
    const DataVector lh = op.deriv_apply(x, h);
    for (std::size_t k = 0; k < out.t.size(); ++k) {
        const double t = out.t[k];
        const DataVector fxt = op.apply(lin(1.0, x, t, h));
        DataVector rem = diff(fxt, fx);
        axpy(rem, -t, lh);
        out.remainder[k] = norm(rem);
    }

    // least-squares slope of log remainder against log t
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double floor_val = 1e-300;
    for (std::size_t k = 0; k < out.t.size(); ++k) {
        const double lx = std::log(out.t[k]);
        const double ly = std::log(std::max(out.remainder[k], floor_val));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double m = static_cast<double>(out.t.size());
    out.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return out;
}

double power_iteration_norm(const ForwardOperator& op, const PrimalVector& x, int iters,
                            std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    PrimalVector v(op.domain_shape(), op.domain_weight());
    fill_uniform(v, gen);
    double sigma = 0.0;
    for (int k = 0; k < iters; ++k) {
        const double nv = norm(v);
        if (nv == 0.0) return 0.0;
        v = scaled(v, 1.0 / nv);
        const DataVector lv = op.deriv_apply(x, v);
        sigma = norm(lv);
        v = as_primal(op.deriv_adjoint(x, lv));
    }
    return sigma;
}

}  // namespace tpg
