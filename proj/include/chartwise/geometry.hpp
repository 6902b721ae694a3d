#pragma once

// Seeded samplers for the test manifolds and the point-cloud container.

#include <chartwise/error.hpp>
#include <chartwise/random.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace chartwise {

using Index = std::ptrdiff_t;

/// Ambient samples, one column per point. `intrinsic`, when present, holds
/// the generating parameters column-aligned with `points`; it is carried for
/// plotting and ground-truth checks and never read by training.
struct PointCloud {
    Eigen::MatrixXd points;
    std::optional<Eigen::MatrixXd> intrinsic;
    std::string label;

    Index size() const { return points.cols(); }
    Index ambient_dim() const { return points.rows(); }
    auto point(Index i) const { return points.col(i); }

    /// Columns `indices` gathered into a dense ambient_dim x |indices| matrix.
    Eigen::MatrixXd gather(const std::vector<Index>& indices) const {
        Eigen::MatrixXd out(points.rows(), static_cast<Index>(indices.size()));
        for (std::size_t k = 0; k < indices.size(); ++k) out.col(static_cast<Index>(k)) = points.col(indices[k]);
        return out;
    }

    void validate() const {
        detail::require(points.rows() > 0, ErrorKind::dimension, "point cloud has zero ambient dimension");
        if (intrinsic) {
            detail::require(intrinsic->cols() == points.cols(), ErrorKind::dimension,
                            "intrinsic parameters not aligned with points");
        }
    }
};

namespace detail {

inline void require_points(std::size_t n) {
    require(n >= 1, ErrorKind::empty_input, "sampler asked for zero points");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Parameterizations
// ---------------------------------------------------------------------------

inline Eigen::Vector3d mobius_point(double u, double v) {
    const double r = 1.0 + 0.5 * v * std::cos(0.5 * u);
    return {r * std::cos(u), r * std::sin(u), 0.5 * v * std::sin(0.5 * u)};
}

/// Immersion of the Klein bottle in R^4; injective on the quotient for m > 1.
inline Eigen::Vector4d klein_point(double u, double v, double m) {
    const double r = m + std::cos(v);
    return {r * std::cos(u), r * std::sin(u), std::sin(v) * std::cos(0.5 * u), std::sin(v) * std::sin(0.5 * u)};
}

constexpr int kPatchSide = 10;

/**
 * A 10x10 patch holding the line {p : <p, (cos t, sin t)> = offset}, with
 * pixel value exp(-dist^2 / (2 blur^2)) and the result scaled to unit norm.
 * Coordinates are in patch widths with the origin at the patch center, so
 * pixel centers sit at (k + 0.5)/10 - 0.5.
 */
inline Eigen::VectorXd line_patch(double theta, double offset, double blur) {
    Eigen::VectorXd img(kPatchSide * kPatchSide);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (int row = 0; row < kPatchSide; ++row) {
        const double py = (row + 0.5) / kPatchSide - 0.5;
        for (int col = 0; col < kPatchSide; ++col) {
            const double px = (col + 0.5) / kPatchSide - 0.5;
            const double dist = px * c + py * s - offset;
            img(row * kPatchSide + col) = std::exp(-dist * dist / (2.0 * blur * blur));
        }
    }
    const double norm = img.norm();
    detail::require(norm > 0.0 && std::isfinite(norm), ErrorKind::numerical, "blank line patch");
    return img / norm;
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// Uniform on S^2: Gaussian draw, then normalize.
inline PointCloud sample_sphere(std::size_t n, std::uint64_t seed) {
    detail::require_points(n);
    Rng rng(seed);
    PointCloud cloud;
    cloud.label = "sphere";
    cloud.points.resize(3, static_cast<Index>(n));
    for (Index i = 0; i < cloud.size(); ++i) {
        Eigen::Vector3d x;
        do {
            x = {rng.normal(), rng.normal(), rng.normal()};
        } while (x.norm() == 0.0);
        cloud.points.col(i) = x / x.norm();
    }
    return cloud;
}

/// Uniform in (u, v) on [0, 2pi) x [-1, 1].
inline PointCloud sample_mobius(std::size_t n, std::uint64_t seed) {
    detail::require_points(n);
    Rng rng(seed);
    PointCloud cloud;
    cloud.label = "mobius";
    cloud.points.resize(3, static_cast<Index>(n));
    Eigen::MatrixXd params(2, static_cast<Index>(n));
    for (Index i = 0; i < cloud.size(); ++i) {
        const double u = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double v = rng.uniform(-1.0, 1.0);
        params.col(i) << u, v;
        cloud.points.col(i) = mobius_point(u, v);
    }
    cloud.intrinsic = std::move(params);
    return cloud;
}

/// Uniform in (u, v) on [0, 2pi)^2 pushed through klein_point.
inline PointCloud sample_klein(std::size_t n, double m, std::uint64_t seed) {
    detail::require_points(n);
    detail::require(m > 1.0, ErrorKind::parameter, "klein immersion needs m > 1 to be injective");
    Rng rng(seed);
    PointCloud cloud;
    cloud.label = "klein";
    cloud.points.resize(4, static_cast<Index>(n));
    Eigen::MatrixXd params(2, static_cast<Index>(n));
    for (Index i = 0; i < cloud.size(); ++i) {
        const double u = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double v = rng.uniform(0.0, 2.0 * std::numbers::pi);
        params.col(i) << u, v;
        cloud.points.col(i) = klein_point(u, v, m);
    }
    cloud.intrinsic = std::move(params);
    return cloud;
}

/// Angle x offset grid of line patches. Angles are pi*a/n_angles, so theta
/// and theta + pi never both appear; offsets run evenly over [-0.5, 0.5].
inline PointCloud sample_line_patches(std::size_t n_angles, std::size_t n_offsets, double blur) {
    detail::require(n_angles * n_offsets >= 1, ErrorKind::empty_input, "empty line-patch grid");
    detail::require(blur > 0.0, ErrorKind::parameter, "blur must be positive");
    PointCloud cloud;
    cloud.label = "rp2_patches";
    const auto n = static_cast<Index>(n_angles * n_offsets);
    cloud.points.resize(kPatchSide * kPatchSide, n);
    Eigen::MatrixXd params(2, n);
    Index col = 0;
    for (std::size_t a = 0; a < n_angles; ++a) {
        const double theta = std::numbers::pi * static_cast<double>(a) / static_cast<double>(n_angles);
        for (std::size_t o = 0; o < n_offsets; ++o) {
            const double offset =
                n_offsets == 1 ? 0.0 : -0.5 + static_cast<double>(o) / static_cast<double>(n_offsets - 1);
            params.col(col) << theta, offset;
            cloud.points.col(col) = line_patch(theta, offset, blur);
            ++col;
        }
    }
    cloud.intrinsic = std::move(params);
    return cloud;
}

// ---------------------------------------------------------------------------
// CSV: one row per point, ambient coordinates then intrinsic columns.
// ---------------------------------------------------------------------------

inline void write_csv(const PointCloud& cloud, std::ostream& out) {
    const Index p = cloud.intrinsic ? cloud.intrinsic->rows() : 0;
    for (Index c = 0; c < cloud.ambient_dim(); ++c) out << (c ? "," : "") << "x" << c;
    for (Index c = 0; c < p; ++c) out << ",t" << c;
    out << '\n';
    out << std::setprecision(17);
    for (Index i = 0; i < cloud.size(); ++i) {
        for (Index c = 0; c < cloud.ambient_dim(); ++c) out << (c ? "," : "") << cloud.points(c, i);
        for (Index c = 0; c < p; ++c) out << ',' << (*cloud.intrinsic)(c, i);
        out << '\n';
    }
}

inline void write_csv(const PointCloud& cloud, const std::string& path) {
    std::ofstream out(path);
    detail::require(static_cast<bool>(out), ErrorKind::io, "cannot open " + path);
    write_csv(cloud, out);
}

inline PointCloud read_csv(std::istream& in, std::string label = {}) {
    std::string line;
    detail::require(static_cast<bool>(std::getline(in, line)), ErrorKind::empty_input, "csv has no header");
    Index n_ambient = 0;
    Index n_intrinsic = 0;
    {
        std::stringstream header(line);
        std::string cell;
        while (std::getline(header, cell, ',')) {
            if (!cell.empty() && cell[0] == 't') ++n_intrinsic;
            else ++n_ambient;
        }
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
        detail::require(static_cast<Index>(values.size()) == n_ambient + n_intrinsic, ErrorKind::dimension,
                        "csv row width does not match header");
        rows.push_back(std::move(values));
    }
    detail::require(!rows.empty(), ErrorKind::empty_input, "csv has no rows");
    PointCloud cloud;
    cloud.label = std::move(label);
    cloud.points.resize(n_ambient, static_cast<Index>(rows.size()));
    if (n_intrinsic > 0) cloud.intrinsic = Eigen::MatrixXd(n_intrinsic, static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (Index c = 0; c < n_ambient; ++c) cloud.points(c, static_cast<Index>(i)) = rows[i][static_cast<std::size_t>(c)];
        for (Index c = 0; c < n_intrinsic; ++c)
            (*cloud.intrinsic)(c, static_cast<Index>(i)) = rows[i][static_cast<std::size_t>(n_ambient + c)];
    }
    return cloud;
}

} // namespace chartwise
