#include "tpg/ct.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace tpg::ct {

static_assert(std::endian::native == std::endian::little,
              "CSR container and raw float sidecars assume a little-endian host");

void ParallelBeamGeometry::validate() const {
    if (image_rows < 2 || image_cols < 2) throw ParameterError("geometry: image must be at least 2x2");
    if (angles_deg.empty()) throw ParameterError("geometry: no projection angles");
    if (rays_per_angle == 0) throw ParameterError("geometry: rays_per_angle must be positive");
}

ParallelBeamGeometry ParallelBeamGeometry::standard(std::size_t image_size, std::size_t n_angles,
                                                    std::size_t rays_per_angle) {
    ParallelBeamGeometry g;
    g.image_rows = image_size;
    g.image_cols = image_size;
    g.rays_per_angle = rays_per_angle;
    g.angles_deg.resize(n_angles);
    for (std::size_t k = 0; k < n_angles; ++k)
        g.angles_deg[k] = 1.0 + static_cast<double>(k) * 180.0 / static_cast<double>(n_angles);
    g.validate();
    return g;
}

namespace {

constexpr double kDegree = 3.14159265358979323846 / 180.0;

struct Ray {
    double px, py;  // a point on the ray
    double vx, vy;  // unit direction
};

Ray make_ray(double angle_deg, double offset) {
    const double a = angle_deg * kDegree;
    const double ux = std::cos(a), uy = std::sin(a);
    return Ray{offset * ux, offset * uy, -uy, ux};
}

// Intersection of the ray with the centered image square, as a parameter
// interval along the unit direction. Returns false when the ray misses.
bool clip_to_square(const Ray& ray, double half_w, double half_h, double& s_min, double& s_max) {
    s_min = -std::numeric_limits<double>::infinity();
    s_max = std::numeric_limits<double>::infinity();
    const double pos[2] = {ray.px, ray.py};
    const double dir[2] = {ray.vx, ray.vy};
    const double half[2] = {half_w, half_h};
    for (int axis = 0; axis < 2; ++axis) {
        if (std::abs(dir[axis]) < 1e-14) {
            if (pos[axis] < -half[axis] || pos[axis] > half[axis]) return false;
            continue;
        }
        const double s1 = (-half[axis] - pos[axis]) / dir[axis];
        const double s2 = (half[axis] - pos[axis]) / dir[axis];
        s_min = std::max(s_min, std::min(s1, s2));
        s_max = std::min(s_max, std::max(s1, s2));
    }
    return s_max - s_min > 1e-12;
}

// Crossing parameters of the grid lines orthogonal to one axis, in increasing
// order along the ray.
void axis_crossings(double pos, double dir, double half, std::size_t cells, double s_min, double s_max,
                    std::vector<double>& out) {
    out.clear();
    if (std::abs(dir) < 1e-14) return;
    for (std::size_t g = 0; g <= cells; ++g) {
        const double line = -half + static_cast<double>(g);
        const double s = (line - pos) / dir;
        if (s > s_min + 1e-12 && s < s_max - 1e-12) out.push_back(s);
    }
    if (dir < 0.0) std::reverse(out.begin(), out.end());
}

}  // namespace

double chord_length(const ParallelBeamGeometry& geom, double angle_deg, double offset) {
    const Ray ray = make_ray(angle_deg, offset);
    double s0, s1;
    if (!clip_to_square(ray, 0.5 * static_cast<double>(geom.image_cols),
                        0.5 * static_cast<double>(geom.image_rows), s0, s1))
        return 0.0;
    return s1 - s0;
}

SparseMatrixCsr assemble_matrix(const ParallelBeamGeometry& geom) {
    geom.validate();
    const std::size_t rows_img = geom.image_rows, cols_img = geom.image_cols;
    const double half_w = 0.5 * static_cast<double>(cols_img);
    const double half_h = 0.5 * static_cast<double>(rows_img);

    SparseMatrixCsr m;
    m.rows = geom.data_size();
    m.cols = rows_img * cols_img;
    m.row_ptr.reserve(m.rows + 1);
    m.row_ptr.push_back(0);

    std::vector<double> cross_x, cross_y;
    for (double angle : geom.angles_deg) {
        for (std::size_t k = 0; k < geom.rays_per_angle; ++k) {
            const Ray ray = make_ray(angle, geom.ray_offset(k));
            double s_min, s_max;
            if (clip_to_square(ray, half_w, half_h, s_min, s_max)) {
                axis_crossings(ray.px, ray.vx, half_w, cols_img, s_min, s_max, cross_x);
                axis_crossings(ray.py, ray.vy, half_h, rows_img, s_min, s_max, cross_y);

                // walk the merged crossings; each segment lies in one pixel,
                // identified by its midpoint
                double s_prev = s_min;
                std::size_t ix = 0, iy = 0;
                while (true) {
                    double s_next;
                    if (ix < cross_x.size() && iy < cross_y.size())
                        s_next = std::min(cross_x[ix], cross_y[iy]);
                    else if (ix < cross_x.size())
                        s_next = cross_x[ix];
                    else if (iy < cross_y.size())
                        s_next = cross_y[iy];
                    else
                        s_next = s_max;

                    const double len = s_next - s_prev;
                    if (len > 1e-12) {
                        const double sm = 0.5 * (s_prev + s_next);
                        const double mx = ray.px + sm * ray.vx;
                        const double my = ray.py + sm * ray.vy;
                        auto clamp_idx = [](double v, std::size_t hi) {
                            if (v < 0.0) return std::size_t{0};
                            const auto idx = static_cast<std::size_t>(v);
                            return idx >= hi ? hi - 1 : idx;
                        };
                        const std::size_t j = clamp_idx(mx + half_w, cols_img);
                        const std::size_t i = clamp_idx(half_h - my, rows_img);
                        m.col_idx.push_back(static_cast<std::uint32_t>(i * cols_img + j));
                        m.values.push_back(len);
                    }
                    if (s_next >= s_max) break;
                    s_prev = s_next;
                    if (ix < cross_x.size() && cross_x[ix] == s_next)
                        ++ix;
                    else
                        ++iy;
                }
            }
            m.row_ptr.push_back(static_cast<std::uint64_t>(m.values.size()));
        }
    }
    return m;
}

void SparseMatrixCsr::matvec(std::span<const double> x, std::span<double> y) const {
    if (x.size() != cols || y.size() != rows) throw DimensionError("csr matvec: size mismatch");
    for (std::size_t r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (std::uint64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) sum += values[k] * x[col_idx[k]];
        y[r] = sum;
    }
}

void SparseMatrixCsr::matvec_transpose(std::span<const double> x, std::span<double> y) const {
    if (x.size() != rows || y.size() != cols) throw DimensionError("csr matvec: size mismatch");
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        for (std::uint64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) y[col_idx[k]] += values[k] * xr;
    }
}

namespace {

struct Ellipse {
    double intensity, a, b, x0, y0, phi_deg;
};

// modified Shepp-Logan intensities
constexpr Ellipse kPhantom[] = {
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
    {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
    {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
    {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
    {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
    {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
    {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
    {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
    {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
};

}  // namespace

PrimalVector shepp_logan(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw ParameterError("phantom: empty image");
    PrimalVector img({rows, cols}, 1.0);
    for (std::size_t i = 0; i < rows; ++i) {
        const double y = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(rows);
        for (std::size_t j = 0; j < cols; ++j) {
            const double x = -1.0 + 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(cols);
            double value = 0.0;
            for (const Ellipse& e : kPhantom) {
                const double phi = e.phi_deg * kDegree;
                const double c = std::cos(phi), s = std::sin(phi);
                const double dx = x - e.x0, dy = y - e.y0;
                const double xr = c * dx + s * dy;
                const double yr = -s * dx + c * dy;
                if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) value += e.intensity;
            }
            // the signed ellipse sum cancels exactly to 0 outside the head;
            // keep rounding residue out of the documented [0, 1] range
            img.at(i, j) = std::clamp(value, 0.0, 1.0);
        }
    }
    return img;
}

namespace {

constexpr char kMagic[4] = {'C', 'S', 'R', '1'};

void write_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

}  // namespace

void write_csr(const SparseMatrixCsr& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kMagic, sizeof(kMagic));
    write_u64(out, m.rows);
    write_u64(out, m.cols);
    write_u64(out, m.nnz());
    out.write(reinterpret_cast<const char*>(m.row_ptr.data()),
              static_cast<std::streamsize>(m.row_ptr.size() * sizeof(std::uint64_t)));
    // column indices widen to 64 bits on disk
    constexpr std::size_t kChunk = 1 << 16;
    std::vector<std::uint64_t> buf;
    for (std::size_t start = 0; start < m.col_idx.size(); start += kChunk) {
        const std::size_t count = std::min(kChunk, m.col_idx.size() - start);
        buf.assign(m.col_idx.begin() + start, m.col_idx.begin() + start + count);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(count * sizeof(std::uint64_t)));
    }
    out.write(reinterpret_cast<const char*>(m.values.data()),
              static_cast<std::streamsize>(m.values.size() * sizeof(double)));
    if (!out) throw IoError("failed while writing " + path.string());
}

SparseMatrixCsr read_csr(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError(path.string() + " is not a CSR1 file");

    SparseMatrixCsr m;
    m.rows = read_u64(in);
    m.cols = read_u64(in);
    const std::uint64_t nnz = read_u64(in);
    if (!in) throw IoError(path.string() + ": truncated header");
    if (m.cols > std::numeric_limits<std::uint32_t>::max())
        throw IoError(path.string() + ": column count exceeds the in-memory index width");

    m.row_ptr.resize(m.rows + 1);
    in.read(reinterpret_cast<char*>(m.row_ptr.data()),
            static_cast<std::streamsize>(m.row_ptr.size() * sizeof(std::uint64_t)));

    std::vector<std::uint64_t> wide(nnz);
    in.read(reinterpret_cast<char*>(wide.data()), static_cast<std::streamsize>(nnz * sizeof(std::uint64_t)));
    m.values.resize(nnz);
    in.read(reinterpret_cast<char*>(m.values.data()), static_cast<std::streamsize>(nnz * sizeof(double)));
    if (!in) throw IoError(path.string() + ": truncated payload");

    if (m.row_ptr.front() != 0 || m.row_ptr.back() != nnz)
        throw IoError(path.string() + ": inconsistent row pointers");
    m.col_idx.resize(nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
        if (wide[k] >= m.cols) throw IoError(path.string() + ": column index out of range");
        m.col_idx[k] = static_cast<std::uint32_t>(wide[k]);
    }
    for (std::size_t r = 0; r < m.rows; ++r)
        if (m.row_ptr[r] > m.row_ptr[r + 1]) throw IoError(path.string() + ": inconsistent row pointers");
    return m;
}

CtOperator::CtOperator(std::shared_ptr<const SparseMatrixCsr> matrix, GridShape image_shape,
                       double norm_bound)
    : matrix_(std::move(matrix)), image_shape_(image_shape), norm_bound_(norm_bound) {
    if (!matrix_) throw ParameterError("ct operator: missing system matrix");
    if (matrix_->cols != image_shape_.size())
        throw DimensionError("ct operator: matrix columns do not match the image size");
}

DataVector CtOperator::apply(const PrimalVector& x) const {
    if (!(x.shape() == image_shape_)) throw DimensionError("ct operator: image shape mismatch");
    DataVector y(data_shape(), 1.0);
    matrix_->matvec(x.values(), y.values());
    return y;
}

DataVector CtOperator::deriv_apply(const PrimalVector&, const PrimalVector& h) const {
    return apply(h);
}

DualVector CtOperator::deriv_adjoint(const PrimalVector&, const DataVector& w) const {
    if (!(w.shape() == data_shape())) throw DimensionError("ct operator: data shape mismatch");
    DualVector out(image_shape_, 1.0);
    matrix_->matvec_transpose(w.values(), out.values());
    return out;
}

CtOperator make_ct_operator(std::shared_ptr<const SparseMatrixCsr> matrix, GridShape image_shape) {
    CtOperator probe(matrix, image_shape, 0.0);
    const double bound = power_iteration_norm(probe, probe.zero_domain());
    return CtOperator(std::move(matrix), image_shape, bound);
}

}  // namespace tpg::ct
