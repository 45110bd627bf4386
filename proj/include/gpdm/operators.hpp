#pragma once

// Sparse kernel estimators of second-order operators on point clouds:
//   laplace_beltrami   (1/eps) (D^-1 K_hat - I), Gaussian kernel, right-
//                      normalized by the kernel density to kill sampling bias
//   weighted_laplacian (1/eps) S (D^-1 W - I) with W_ij = K_ij sqrt(kappa_j)/q_j,
//                      S_ii = kappa(x_i); estimates div(kappa grad)/kappa-style
//                      weighted operators
//   kolmogorov         local anisotropic kernel exp(-(x+eps B - y)^T C^+ (x+eps B - y)/(2 eps))
//                      for drift-diffusion generators; density taken from the
//                      symmetric Gaussian kernel so the kernel's own
//                      normalization constant never needs to be formed
//
// All estimators share the symmetrized k-NN sparsity pattern and keep only
// the manifold-side rows of the augmented (manifold + ghost) cloud. The
// eps^{d/2} density prefactors cancel in every normalization and are never
// materialized.

#include "core.hpp"
#include "pointcloud.hpp"
#include "boundary.hpp"

#include <functional>

namespace gpdm {

enum class OperatorKind { laplace_beltrami, weighted_laplacian, kolmogorov };

inline const char* operator_name(OperatorKind k) {
    switch (k) {
        case OperatorKind::laplace_beltrami:   return "laplace_beltrami";
        case OperatorKind::weighted_laplacian: return "weighted_laplacian";
        case OperatorKind::kolmogorov:         return "kolmogorov";
    }
    return "unknown";
}

struct OperatorSpec {
    OperatorKind kind = OperatorKind::laplace_beltrami;
    double eps = 0;   // kernel bandwidth
    index_t k = 50;   // neighbors defining the sparsity pattern
    std::function<double(const vec&)> kappa;   // weighted_laplacian: scalar field, > 0
    std::function<vec(const vec&)> drift;      // kolmogorov: ambient drift B(x)
    std::function<mat(const vec&)> diffusion;  // kolmogorov: ambient covariance C(x), PSD

    void validate() const {
        require(eps > 0, errc::invalid_argument, "operator bandwidth must be positive");
        require(k >= 1, errc::invalid_argument, "operator neighbor count must be >= 1");
        if (kind == OperatorKind::weighted_laplacian)
            require(static_cast<bool>(kappa), errc::invalid_argument,
                    "weighted_laplacian needs a kappa callback");
        if (kind == OperatorKind::kolmogorov)
            require(static_cast<bool>(drift) && static_cast<bool>(diffusion),
                    errc::invalid_argument, "kolmogorov needs drift and diffusion callbacks");
    }
};

// Estimator rows over the first n_rows (manifold-side) points of a possibly
// augmented cloud. eps * L + I restricted to its pattern is entrywise
// nonnegative off the diagonal and has unit row sums.
struct DmMatrix {
    spmat L;                    // n_rows x n_cols
    std::vector<index_t> rows;  // evaluation point ids, = 0..n_rows-1
    index_t n_cols = 0;
    double eps = 0;
    OperatorKind kind = OperatorKind::laplace_beltrami;
};

namespace detail {

// Moore-Penrose inverse of a symmetric PSD matrix. Eigenvalues below
// 1e-14 * lambda_max count as the lifted null space; a retained spread worse
// than 1e12 means the diffusion coefficient itself is numerically singular.
inline mat psd_pinv(const mat& C) {
    Eigen::SelfAdjointEigenSolver<mat> es(C);
    require(es.info() == Eigen::Success, errc::ill_conditioned_diffusion,
            "eigendecomposition of diffusion coefficient failed");
    const vec& lam = es.eigenvalues();  // ascending
    const double lmax = lam[lam.size() - 1];
    require(lmax > 0, errc::invalid_coefficient, "diffusion coefficient is zero");
    double lmin_kept = lmax;
    vec inv = vec::Zero(lam.size());
    for (index_t i = 0; i < lam.size(); ++i) {
        require(lam[i] > -1e-10 * lmax, errc::invalid_coefficient,
                "diffusion coefficient has a negative eigenvalue");
        if (lam[i] >= 1e-14 * lmax) {
            inv[i] = 1.0 / lam[i];
            lmin_kept = std::min(lmin_kept, lam[i]);
        }
    }
    require(lmax / lmin_kept <= 1e12, errc::ill_conditioned_diffusion,
            "diffusion coefficient condition number exceeds 1e12");
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

// Core assembly shared by the three estimators. `points` is the full
// (augmented) cloud; rows are retained for the first n_rows points only,
// columns span everything.
inline DmMatrix assemble(const mat& points, index_t n_rows, const OperatorSpec& spec) {
    spec.validate();
    const index_t n = points.rows();
    require(n_rows >= 1 && n_rows <= n, errc::invalid_argument, "invalid row count");
    require(spec.k <= n - 1, errc::invalid_argument, "neighbor count k must be < point count");

    const auto index = build_index(points, spec.k);
    const auto pattern = symmetrized_pattern(index);
    const double eps = spec.eps;
    const double ginv = 1.0 / (4.0 * eps);

    // density from the symmetric Gaussian kernel at every augmented point
    vec q = vec::Ones(n);
    for (index_t i = 0; i < n; ++i)
        for (index_t j : pattern[static_cast<std::size_t>(i)])
            q[i] += std::exp(-detail::sqdist(points, i, j) * ginv);

    vec kappa_all;
    if (spec.kind == OperatorKind::weighted_laplacian) {
        kappa_all.resize(n);
        for (index_t i = 0; i < n; ++i) {
            kappa_all[i] = spec.kappa(points.row(i).transpose());
            // zero is allowed at isolated points (degenerate-weight problems
            // replace those rows); negative weights are meaningless
            require(kappa_all[i] >= 0, errc::invalid_coefficient,
                    "kappa must be nonnegative wherever evaluated");
        }
    }

    DmMatrix out;
    out.n_cols = n;
    out.eps = eps;
    out.kind = spec.kind;
    out.rows.resize(static_cast<std::size_t>(n_rows));
    for (index_t i = 0; i < n_rows; ++i) out.rows[static_cast<std::size_t>(i)] = i;

    std::vector<triplet> trip;
    trip.reserve(static_cast<std::size_t>(n_rows) * (static_cast<std::size_t>(spec.k) + 1) * 2);

    std::vector<double> w;  // kernel row values, aligned with pattern[i] + self
    for (index_t i = 0; i < n_rows; ++i) {
        const auto& adj = pattern[static_cast<std::size_t>(i)];
        w.assign(adj.size() + 1, 0.0);

        if (spec.kind == OperatorKind::kolmogorov) {
            const vec xi = points.row(i).transpose();
            const vec shift = xi + eps * spec.drift(xi);
            const mat cinv = detail::psd_pinv(spec.diffusion(xi));
            for (std::size_t m = 0; m < adj.size(); ++m) {
                const vec diff = shift - points.row(adj[m]).transpose();
                w[m] = std::exp(-diff.dot(cinv * diff) / (2.0 * eps));
            }
            const vec diag_diff = shift - xi;  // = eps * drift
            w[adj.size()] = std::exp(-diag_diff.dot(cinv * diag_diff) / (2.0 * eps));
        } else {
            for (std::size_t m = 0; m < adj.size(); ++m)
                w[m] = std::exp(-detail::sqdist(points, i, adj[m]) * ginv);
            w[adj.size()] = 1.0;
        }

        double offdiag = 0;
        for (std::size_t m = 0; m < adj.size(); ++m) offdiag += w[m];
        require(offdiag > 0, errc::disconnected_point,
                "kernel row underflowed to the diagonal only; point is disconnected");

        // right-normalize by the density, then row-normalize
        double dsum = 0;
        if (spec.kind == OperatorKind::weighted_laplacian) {
            for (std::size_t m = 0; m < adj.size(); ++m) {
                w[m] *= std::sqrt(kappa_all[adj[m]]) / q[adj[m]];
                dsum += w[m];
            }
            w[adj.size()] *= std::sqrt(kappa_all[i]) / q[i];
            dsum += w[adj.size()];
        } else {
            for (std::size_t m = 0; m < adj.size(); ++m) {
                w[m] /= q[adj[m]];
                dsum += w[m];
            }
            w[adj.size()] /= q[i];
            dsum += w[adj.size()];
        }

        require(dsum > 0, errc::disconnected_point,
                "right-normalized kernel row vanished; weight is zero on the whole stencil");
        const double scale = (spec.kind == OperatorKind::weighted_laplacian ? kappa_all[i] : 1.0);
        for (std::size_t m = 0; m < adj.size(); ++m)
            trip.emplace_back(static_cast<int>(i), static_cast<int>(adj[m]),
                              scale * w[m] / (dsum * eps));
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i),
                          scale * (w[adj.size()] / dsum - 1.0) / eps);
    }

    out.L.resize(n_rows, n);
    out.L.setFromTriplets(trip.begin(), trip.end());
    out.L.makeCompressed();
    return out;
}

inline DmMatrix assemble_l1(const mat& points, double eps, index_t k) {
    OperatorSpec spec;
    spec.kind = OperatorKind::laplace_beltrami;
    spec.eps = eps;
    spec.k = k;
    return assemble(points, points.rows(), spec);
}

inline DmMatrix assemble_l2(const mat& points, double eps, index_t k,
                            std::function<double(const vec&)> kappa) {
    OperatorSpec spec;
    spec.kind = OperatorKind::weighted_laplacian;
    spec.eps = eps;
    spec.k = k;
    spec.kappa = std::move(kappa);
    return assemble(points, points.rows(), spec);
}

inline DmMatrix assemble_l3(const mat& points, double eps, index_t k,
                            std::function<vec(const vec&)> drift,
                            std::function<mat(const vec&)> diffusion) {
    OperatorSpec spec;
    spec.kind = OperatorKind::kolmogorov;
    spec.eps = eps;
    spec.k = k;
    spec.drift = std::move(drift);
    spec.diffusion = std::move(diffusion);
    return assemble(points, points.rows(), spec);
}

// Assembly over the ghost-augmented cloud; rows are kept for the manifold
// side only (original samples plus, in random mode, the appended interior
// ghosts). Coefficient callbacks are evaluated at ghost coordinates directly.
inline DmMatrix assemble_augmented(const PointCloud& cloud, const GhostSet& ghosts,
                                   const OperatorSpec& spec) {
    require(ghosts.n_cloud == cloud.size(), errc::invalid_argument,
            "ghost set was built for a different cloud");
    const mat aug = ghosts.augmented_points(cloud.points);
    return assemble(aug, ghosts.n_manifold(), spec);
}

}  // namespace gpdm
