#pragma once

// Boundary geometry: outward normal estimation (secant rule on well-sampled
// clouds, kernel-weighted SVD regression on random clouds), ghost-point
// construction along the normal rays, and the bookkeeping that maps ghost
// points to columns of the augmented cloud.

#include "core.hpp"
#include "pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace gpdm {

enum class SamplingMode { well_sampled, random };

struct BoundaryData {
    std::vector<index_t> ids;   // boundary point indices into the cloud
    mat normals;                // J x n outward unit normals
    vec spacing;                // J ghost step sizes h_j
    SamplingMode mode = SamplingMode::well_sampled;
    // well_sampled only: index of the interior sample that doubles as the
    // first interior ghost point (empty in random mode, where that point is
    // appended to the cloud instead).
    std::vector<index_t> g0_ids;

    index_t J() const { return static_cast<index_t>(ids.size()); }
};

struct GhostSet {
    mat interior;    // J x n points x^B_j - h_j nu_j (first interior ghost)
    mat layers;      // (J*K) x n ghost points x^B_j + k h_j nu_j, j-major, k = 1..K
    index_t K = 0;   // layers per boundary point
    BoundaryData boundary;
    index_t n_cloud = 0;     // original manifold sample count N
    bool collar_overlap = false;  // two ghost rays nearly intersect (warning only)

    index_t J() const { return boundary.J(); }
    // manifold-side count of the augmented cloud: N, plus the appended
    // interior ghosts in random mode
    index_t n_manifold() const {
        return n_cloud + (boundary.mode == SamplingMode::random ? J() : 0);
    }
    index_t n_aug() const { return n_manifold() + J() * K; }

    // column of ghost layer k (1-based) of boundary point j in the augmented cloud
    index_t ghost_col(index_t j, index_t k) const {
        require(j >= 0 && j < J() && k >= 1 && k <= K, errc::invalid_argument,
                "ghost (j,k) out of range");
        return n_manifold() + j * K + (k - 1);
    }
    // manifold-side column of the first interior ghost of boundary point j
    index_t g0_col(index_t j) const {
        if (boundary.mode == SamplingMode::random) return n_cloud + j;
        return boundary.g0_ids[static_cast<std::size_t>(j)];
    }

    // full augmented point list: manifold samples, then (random mode) the
    // appended interior ghosts, then ghost layers
    mat augmented_points(const mat& cloud_points) const {
        const index_t n = cloud_points.cols();
        mat aug(n_aug(), n);
        aug.topRows(n_cloud) = cloud_points;
        if (boundary.mode == SamplingMode::random)
            aug.middleRows(n_cloud, J()) = interior;
        aug.bottomRows(J() * K) = layers;
        return aug;
    }
};

// Secant estimate of the outward normal at a boundary sample: the unit vector
// from the nearest interior sample toward the boundary point. First-order
// accurate in the sample spacing, with constant (h/2)|gamma''| set by the
// local curvature. Also reports that neighbor and its distance, which
// well-sampled ghost construction reuses as (x^G0, h).
struct SecantNormal {
    vec normal;
    index_t interior_id;
    double h;
};

inline SecantNormal secant_normal(const PointCloud& cloud, const NeighborIndex& index,
                                  index_t boundary_id) {
    require(cloud.is_boundary(boundary_id), errc::invalid_argument,
            "secant_normal expects a boundary point");
    for (index_t m = 0; m < index.k(); ++m) {
        const index_t j = index.indices(boundary_id, m);
        if (cloud.is_boundary(j)) continue;
        const double dist = index.dists(boundary_id, m);
        require(dist > 0, errc::degenerate_geometry, "interior neighbor coincides with boundary point");
        vec nu = (cloud.points.row(boundary_id) - cloud.points.row(j)).transpose() / dist;
        return {std::move(nu), j, dist};
    }
    throw gpdm_error(errc::degenerate_geometry,
                     "no interior sample among the k nearest neighbors of a boundary point");
}

namespace detail {

// Bandwidth for the local SVD regression, tuned on the small neighbor subset
// with the global tuner. The subset has only K_n+1 points, so if the kernel
// sum is too flat to tune we fall back to the mean squared neighbor distance,
// which keeps the weights O(1) on the subset.
inline double local_svd_bandwidth(const mat& subset, int d) {
    const index_t m = subset.rows();
    double mean_sq = 0;
    for (index_t j = 1; j < m; ++j) {
        double s = 0;
        for (index_t l = 0; l < subset.cols(); ++l) {
            const double t = subset(0, l) - subset(j, l);
            s += t * t;
        }
        mean_sq += s;
    }
    mean_sq /= static_cast<double>(m - 1);
    try {
        const auto idx = build_index(subset, m - 1);
        return tune_bandwidth(subset, idx, d).eps_star;
    } catch (const gpdm_error&) {
        return 0.25 * mean_sq;
    }
}

}  // namespace detail

// Tangent space at one point by kernel-weighted SVD regression: columns
// X_j = D(x)^{-1/2} exp(-|x-x_j|^2/(4 eps')) (x_j - x) with
// D(x) = sum_j exp(-|x-x_j|^2/(2 eps')); the leading d_out left singular
// vectors span the tangent estimate (error O(sqrt(eps'))).
inline mat svd_tangent_basis(const mat& points, index_t point_id,
                             const std::vector<index_t>& neighbor_ids, int d_out,
                             double eps1_fixed = 0) {
    const index_t kn = static_cast<index_t>(neighbor_ids.size());
    require(d_out >= 1 && kn > d_out, errc::invalid_argument,
            "svd_tangent_basis needs more neighbors than output directions");
    const index_t n = points.cols();

    mat subset(kn + 1, n);
    subset.row(0) = points.row(point_id);
    for (index_t j = 0; j < kn; ++j) subset.row(j + 1) = points.row(neighbor_ids[static_cast<std::size_t>(j)]);
    const double eps1 = eps1_fixed > 0 ? eps1_fixed : detail::local_svd_bandwidth(subset, d_out);

    double D = 0;
    vec sq(kn);
    for (index_t j = 0; j < kn; ++j) {
        double s = 0;
        for (index_t l = 0; l < n; ++l) {
            const double t = subset(j + 1, l) - subset(0, l);
            s += t * t;
        }
        sq[j] = s;
        D += std::exp(-s / (2.0 * eps1));
    }
    require(D > 0, errc::degenerate_geometry, "all SVD regression weights underflowed");

    mat X(n, kn);
    const double dinv = 1.0 / std::sqrt(D);
    for (index_t j = 0; j < kn; ++j)
        X.col(j) = dinv * std::exp(-sq[j] / (4.0 * eps1)) *
                   (subset.row(j + 1) - subset.row(0)).transpose();

    Eigen::JacobiSVD<mat> svd(X, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    require(sv.size() >= d_out && sv[d_out - 1] > 1e-12 * sv[0], errc::degenerate_geometry,
            "rank-deficient neighborhood in svd_tangent_basis");
    return svd.matrixU().leftCols(d_out);
}

// Gram-Schmidt step: remove the boundary-curve tangent component from a
// surface tangent vector to expose the conormal direction. Falls back to the
// second tangent vector when the first is nearly parallel to the boundary
// tangent (residual < 0.1).
inline vec normal_from_projection(const vec& t1, const vec& t2, const vec& t_boundary) {
    auto residual = [&](const vec& t) -> vec { return t - t.dot(t_boundary) * t_boundary; };
    vec r = residual(t1);
    if (r.norm() < 0.1) r = residual(t2);
    require(r.norm() >= 0.1, errc::degenerate_geometry,
            "both tangent vectors are parallel to the boundary tangent");
    return r / r.norm();
}

// Fix the sign of a normal so it points away from the manifold mass: the
// centroid of the k nearest neighbors lies inward, so require
// <nu, centroid - x^B> < 0.
inline vec orient_normal(vec nu, const PointCloud& cloud, const NeighborIndex& index,
                         index_t boundary_id, index_t k) {
    require(k >= 3 && k <= index.k(), errc::invalid_argument,
            "orient_normal needs 3 <= k <= index.k()");
    vec centroid = vec::Zero(cloud.ambient_dim());
    for (index_t m = 0; m < k; ++m)
        centroid += cloud.points.row(index.indices(boundary_id, m)).transpose();
    centroid /= static_cast<double>(k);
    const double s = nu.dot(centroid - cloud.points.row(boundary_id).transpose());
    require(std::abs(s) >= 1e-10, errc::orientation_ambiguous,
            "neighbor centroid gives no orientation signal");
    if (s > 0) nu = -nu;
    return nu;
}

struct BoundaryOptions {
    SamplingMode mode = SamplingMode::well_sampled;
    index_t kn_surface = 20;  // neighbors for surface tangent regression
    index_t kn_curve = 10;    // boundary-only neighbors for curve tangent
    index_t p_spacing = 10;   // neighbors averaged into the ghost step h
    index_t k_orient = 20;    // neighbors for the orientation centroid
    double eps1 = 0;          // fixed SVD regression bandwidth; 0 tunes per point
};

// Estimate outward normals and ghost spacing for every boundary point.
// Well-sampled clouds use the secant rule (h = distance to the adjacent
// interior sample). Random clouds estimate the surface tangent space and the
// boundary-curve tangent by SVD regression, project out the curve tangent,
// orient by the neighbor centroid, and take h as the mean distance to the
// p_spacing nearest neighbors.
inline BoundaryData estimate_boundary(const PointCloud& cloud, const NeighborIndex& index,
                                      const BoundaryOptions& opt = {}) {
    cloud.validate();
    require(!cloud.boundary_ids.empty(), errc::invalid_argument,
            "cloud has no boundary points");
    const index_t J = static_cast<index_t>(cloud.boundary_ids.size());
    const index_t n = cloud.ambient_dim();

    BoundaryData bd;
    bd.ids = cloud.boundary_ids;
    bd.normals.resize(J, n);
    bd.spacing.resize(J);
    bd.mode = opt.mode;

    if (opt.mode == SamplingMode::well_sampled) {
        bd.g0_ids.resize(static_cast<std::size_t>(J));
        for (index_t j = 0; j < J; ++j) {
            const auto sn = secant_normal(cloud, index, bd.ids[static_cast<std::size_t>(j)]);
            bd.normals.row(j) = sn.normal.transpose();
            bd.spacing[j] = sn.h;
            bd.g0_ids[static_cast<std::size_t>(j)] = sn.interior_id;
        }
        return bd;
    }

    require(cloud.d >= 1, errc::invalid_argument,
            "random-mode boundary estimation needs the intrinsic dimension");
    require(opt.p_spacing <= index.k() && opt.kn_surface <= index.k(),
            errc::invalid_argument, "neighbor index too small for boundary options");
    const vec h_all = local_spacing(index, opt.p_spacing);

    for (index_t j = 0; j < J; ++j) {
        const index_t b = bd.ids[static_cast<std::size_t>(j)];
        vec nu;
        if (cloud.d == 1) {
            // boundary of a curve is a point; the conormal is the tangent itself
            std::vector<index_t> nbrs;
            for (index_t m = 0; m < opt.kn_surface; ++m) nbrs.push_back(index.indices(b, m));
            nu = svd_tangent_basis(cloud.points, b, nbrs, 1, opt.eps1).col(0);
        } else {
            require(cloud.d == 2, errc::invalid_argument,
                    "random-mode boundary estimation ships for d = 1, 2 only");
            std::vector<index_t> nbrs;
            for (index_t m = 0; m < opt.kn_surface; ++m) nbrs.push_back(index.indices(b, m));
            const mat T = svd_tangent_basis(cloud.points, b, nbrs, 2, opt.eps1);

            // boundary-curve tangent from the nearest boundary-only neighbors
            std::vector<std::pair<double, index_t>> cand;
            for (index_t other : cloud.boundary_ids) {
                if (other == b) continue;
                cand.emplace_back(detail::sqdist(cloud.points, b, other), other);
            }
            require(static_cast<index_t>(cand.size()) >= opt.kn_curve, errc::invalid_argument,
                    "not enough boundary points for the curve-tangent regression");
            std::partial_sort(cand.begin(), cand.begin() + opt.kn_curve, cand.end());
            std::vector<index_t> bnbrs;
            for (index_t m = 0; m < opt.kn_curve; ++m)
                bnbrs.push_back(cand[static_cast<std::size_t>(m)].second);
            const vec tb = svd_tangent_basis(cloud.points, b, bnbrs, 1, opt.eps1).col(0);

            nu = normal_from_projection(T.col(0), T.col(1), tb);
        }
        nu = orient_normal(std::move(nu), cloud, index, b, opt.k_orient);
        bd.normals.row(j) = nu.transpose();
        bd.spacing[j] = h_all[b];
    }
    return bd;
}

namespace detail {

// Minimum distance between segments p0-p1 and q0-q1 (Eberly's clamped
// quadratic); used only by the collar-overlap heuristic.
inline double segment_distance(const vec& p0, const vec& p1, const vec& q0, const vec& q1) {
    const vec d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
    const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
    double s = 0, t = 0;
    if (a <= 1e-30 && e <= 1e-30) return r.norm();
    if (a <= 1e-30) {
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (e <= 1e-30) {
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2), denom = a * e - b * b;
            if (denom > 1e-30) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
            t = (b * s + f) / e;
            if (t < 0) { t = 0; s = std::clamp(-c / a, 0.0, 1.0); }
            else if (t > 1) { t = 1; s = std::clamp((b - c) / a, 0.0, 1.0); }
        }
    }
    return (p0 + s * d1 - (q0 + t * d2)).norm();
}

}  // namespace detail

// Place K ghost layers x^B + k h nu outside the boundary and the first
// interior ghost x^B - h nu inside. In well-sampled mode the interior ghost
// coincides with the adjacent sample recorded by the secant rule; in random
// mode it is a new point that joins the manifold side of the augmented cloud.
inline GhostSet build_ghosts(const PointCloud& cloud, const BoundaryData& boundary, index_t K) {
    require(K >= 1 && K <= 10, errc::invalid_argument, "ghost layer count must be in [1, 10]");
    const index_t J = boundary.J(), n = cloud.ambient_dim();
    require(boundary.normals.rows() == J && boundary.spacing.size() == J,
            errc::invalid_argument, "inconsistent boundary data");
    if (boundary.mode == SamplingMode::well_sampled)
        require(static_cast<index_t>(boundary.g0_ids.size()) == J, errc::invalid_argument,
                "well-sampled boundary data must carry interior-ghost sample ids");

    GhostSet gs;
    gs.K = K;
    gs.boundary = boundary;
    gs.n_cloud = cloud.size();
    gs.interior.resize(J, n);
    gs.layers.resize(J * K, n);
    for (index_t j = 0; j < J; ++j) {
        const vec xb = cloud.points.row(boundary.ids[static_cast<std::size_t>(j)]).transpose();
        const vec nu = boundary.normals.row(j).transpose();
        const double h = boundary.spacing[j];
        require(h > 0, errc::invalid_argument, "ghost spacing must be positive");
        gs.interior.row(j) = (xb - h * nu).transpose();
        for (index_t k = 1; k <= K; ++k)
            gs.layers.row(j * K + (k - 1)) = (xb + static_cast<double>(k) * h * nu).transpose();
    }

    // Collar self-intersection heuristic: warn when two ghost rays pass
    // within half a step of each other.
    for (index_t j = 0; j < J && !gs.collar_overlap; ++j) {
        const vec p0 = cloud.points.row(boundary.ids[static_cast<std::size_t>(j)]).transpose();
        const vec p1 = gs.layers.row(j * K + (K - 1)).transpose();
        for (index_t i = j + 1; i < J; ++i) {
            const vec q0 = cloud.points.row(boundary.ids[static_cast<std::size_t>(i)]).transpose();
            const vec q1 = gs.layers.row(i * K + (K - 1)).transpose();
            const double lim = 0.5 * std::min(boundary.spacing[j], boundary.spacing[i]);
            if (detail::segment_distance(p0, p1, q0, q1) < lim) {
                gs.collar_overlap = true;
                break;
            }
        }
    }
    return gs;
}

}  // namespace gpdm
