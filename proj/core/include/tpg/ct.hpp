#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "tpg/operators.hpp"
#include "tpg/vectors.hpp"

namespace tpg::ct {

/**
 * Parallel-beam geometry over a square image of unit pixels centered at the
 * origin. For each angle theta (degrees), rays_per_angle rays run parallel to
 * (-sin theta, cos theta) at integer-spaced signed offsets centered on zero,
 * so they span the image diagonal when rays_per_angle is at least
 * sqrt(2) * image side. Rows of the system matrix follow angle-major order.
 */
struct ParallelBeamGeometry {
    std::size_t image_rows = 0;
    std::size_t image_cols = 0;
    std::vector<double> angles_deg;
    std::size_t rays_per_angle = 0;

    // Angles 1 + k * 180 / n_angles for k = 0, ..., n_angles - 1; starting at
    // 1 degree keeps the axis-aligned directions (whose rays would ride pixel
    // edges on even-sized images) out of the sweep.
    static ParallelBeamGeometry standard(std::size_t image_size, std::size_t n_angles,
                                         std::size_t rays_per_angle);

    std::size_t data_size() const { return angles_deg.size() * rays_per_angle; }
    double ray_offset(std::size_t k) const {
        return static_cast<double>(k) - 0.5 * static_cast<double>(rays_per_angle - 1);
    }

    void validate() const;
};

struct SparseMatrixCsr {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint64_t> row_ptr;  // size rows + 1
    std::vector<std::uint32_t> col_idx;
    std::vector<double> values;

    std::size_t nnz() const { return values.size(); }

    // y = A x and y = A^T x; both run in fixed order, so results are
    // reproducible bit for bit.
    void matvec(std::span<const double> x, std::span<double> y) const;
    void matvec_transpose(std::span<const double> x, std::span<double> y) const;
};

// Modified Shepp-Logan head phantom sampled at pixel centers; values in [0, 1].
PrimalVector shepp_logan(std::size_t rows, std::size_t cols);

// Length of the intersection of one ray with the image square.
double chord_length(const ParallelBeamGeometry& geom, double angle_deg, double offset);

// Exact ray-pixel intersection lengths via Siddon traversal, one row per ray.
SparseMatrixCsr assemble_matrix(const ParallelBeamGeometry& geom);

// Binary container: magic "CSR1", then rows, cols, nnz as little-endian
// 64-bit words, then row_ptr (u64), col_idx (u64), values (f64).
void write_csr(const SparseMatrixCsr& m, const std::filesystem::path& path);
SparseMatrixCsr read_csr(const std::filesystem::path& path);

class CtOperator final : public ForwardOperator {
public:
    CtOperator(std::shared_ptr<const SparseMatrixCsr> matrix, GridShape image_shape, double norm_bound);

    DataVector apply(const PrimalVector& x) const override;
    DataVector deriv_apply(const PrimalVector& x, const PrimalVector& h) const override;
    DualVector deriv_adjoint(const PrimalVector& x, const DataVector& w) const override;

    bool is_linear() const override { return true; }
    double operator_norm_bound() const override { return norm_bound_; }
    GridShape domain_shape() const override { return image_shape_; }
    double domain_weight() const override { return 1.0; }
    GridShape data_shape() const override { return {matrix_->rows, 1}; }
    double data_weight() const override { return 1.0; }

private:
    std::shared_ptr<const SparseMatrixCsr> matrix_;
    GridShape image_shape_;
    double norm_bound_;
};

// Bundles assembly with a power-iteration estimate of the operator norm.
CtOperator make_ct_operator(std::shared_ptr<const SparseMatrixCsr> matrix, GridShape image_shape);

}  // namespace tpg::ct
