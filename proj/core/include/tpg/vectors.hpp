#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "tpg/errors.hpp"

namespace tpg {

struct GridShape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const { return rows * cols; }
    bool operator==(const GridShape&) const = default;
};

/**
 * Dense grid function together with its quadrature weight.
 *
 * A vector models an element of a discretized L2 space: entries are nodal
 * (or pixel) values and cell_weight is the area of one cell, so that
 *
 *     <u, v> = cell_weight * sum_i u_i v_i,      ||u|| = sqrt(<u, u>).
 *
 * Cells are square; sqrt(cell_weight) is the grid spacing used by
 * length-scaled quantities such as the discrete total variation.
 *
 * The three roles (primal element, dual element, data element) share this
 * representation but are distinct types, so they cannot be mixed in
 * arithmetic by accident. Dual vectors are stored as Riesz representatives
 * with respect to the weighted inner product of their primal space, which
 * keeps subgradient formulas weight-free and makes the plain transpose of a
 * matrix its adjoint whenever domain and range carry the same weight.
 */
template <class Tag>
class Vec {
public:
    Vec() = default;

    Vec(GridShape shape, double cell_weight = 1.0)
        : shape_(shape), weight_(cell_weight), data_(shape.size(), 0.0) {
        if (shape.size() == 0) throw DimensionError("vector shape must be non-empty");
        if (!(cell_weight > 0.0)) throw ParameterError("cell weight must be positive");
    }

    static Vec from(GridShape shape, std::vector<double> data, double cell_weight = 1.0) {
        Vec v(shape, cell_weight);
        if (data.size() != shape.size())
            throw DimensionError("data length does not match grid shape");
        v.data_ = std::move(data);
        return v;
    }

    GridShape shape() const { return shape_; }
    double cell_weight() const { return weight_; }
    std::size_t size() const { return data_.size(); }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    // row-major access
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_.cols + c]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * shape_.cols + c]; }

    std::span<const double> values() const { return data_; }
    std::span<double> values() { return data_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    GridShape shape_{};
    double weight_ = 1.0;
    std::vector<double> data_;
};

namespace detail {
struct primal_tag {};
struct dual_tag {};
struct data_tag {};
}  // namespace detail

using PrimalVector = Vec<detail::primal_tag>;
using DualVector = Vec<detail::dual_tag>;
using DataVector = Vec<detail::data_tag>;

template <class TagA, class TagB>
void check_compatible(const Vec<TagA>& a, const Vec<TagB>& b) {
    if (!(a.shape() == b.shape()))
        throw DimensionError("vector shapes do not match");
    if (a.cell_weight() != b.cell_weight())
        throw DimensionError("vector quadrature weights do not match");
}

template <class Tag>
double inner(const Vec<Tag>& a, const Vec<Tag>& b) {
    check_compatible(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return a.cell_weight() * s;
}

template <class Tag>
double norm(const Vec<Tag>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * v[i];
    return std::sqrt(v.cell_weight() * s);
}

// Action of a dual element on a primal element. With unit weights this is the
// plain Euclidean dot product.
inline double pairing(const DualVector& xi, const PrimalVector& x) {
    check_compatible(xi, x);
    double s = 0.0;
    for (std::size_t i = 0; i < xi.size(); ++i) s += xi[i] * x[i];
    return xi.cell_weight() * s;
}

template <class Tag>
Vec<Tag> scaled(const Vec<Tag>& v, double a) {
    Vec<Tag> out(v.shape(), v.cell_weight());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = a * v[i];
    return out;
}

// out = a*x + b*y
template <class Tag>
Vec<Tag> lin(double a, const Vec<Tag>& x, double b, const Vec<Tag>& y) {
    check_compatible(x, y);
    Vec<Tag> out(x.shape(), x.cell_weight());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
    return out;
}

template <class Tag>
Vec<Tag> diff(const Vec<Tag>& x, const Vec<Tag>& y) {
    return lin(1.0, x, -1.0, y);
}

// y += a*x
template <class Tag>
void axpy(Vec<Tag>& y, double a, const Vec<Tag>& x) {
    check_compatible(y, x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

/**
 * Duality mapping J_s of the (Hilbert) data space,
 *
 *     J_s(r) = ||r||^(s-2) r,   J_s(0) = 0,
 *
 * which satisfies <J_s(r), r> = ||r||^s and ||J_s(r)|| = ||r||^(s-1).
 * Requires s > 1.
 */
inline DataVector duality_map(const DataVector& r, double s) {
    if (!(s > 1.0)) throw ParameterError("duality map exponent must satisfy s > 1");
    const double nrm = norm(r);
    if (nrm == 0.0) return DataVector(r.shape(), r.cell_weight());
    return scaled(r, std::pow(nrm, s - 2.0));
}

// Riesz identification between roles of the same weighted space. Used by the
// power-iteration norm probe and by tests; the iteration itself never needs it.
inline PrimalVector as_primal(const DualVector& xi) {
    return PrimalVector::from(xi.shape(), std::vector<double>(xi.values().begin(), xi.values().end()),
                              xi.cell_weight());
}

inline DualVector as_dual(const PrimalVector& x) {
    return DualVector::from(x.shape(), std::vector<double>(x.values().begin(), x.values().end()),
                            x.cell_weight());
}

}  // namespace tpg
