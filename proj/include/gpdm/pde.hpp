#pragma once

// Boundary-value solvers. Point ordering convention throughout: manifold
// unknowns keep their cloud order; solvers partition internally into interior
// and boundary index sets, eliminate the boundary unknowns through the
// boundary-condition rows, LU-factor the reduced interior system (one step of
// iterative refinement), and reassemble. The ghost-based path and the
// no-ghost baseline share all of that machinery and differ only in how the
// operator rows and boundary-condition rows are produced.

#include "core.hpp"
#include "pointcloud.hpp"
#include "boundary.hpp"
#include "operators.hpp"
#include "extrapolation.hpp"

#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <numbers>

namespace gpdm {

// Boundary-condition rows beta1 du/dnu + beta2 u over manifold unknowns,
// with the normal derivative differenced through the first interior ghost:
// row_j(u) = (beta1_j/h_j + beta2_j) u(x^B_j) - (beta1_j/h_j) u(x^G0_j).
struct BoundaryOperator {
    spmat rows;  // J x N_manifold, <= 2 nonzeros per row
    vec beta1, beta2;
};

inline BoundaryOperator discretize_bc(const GhostSet& ghosts, const vec& beta1, const vec& beta2) {
    const index_t J = ghosts.J(), nm = ghosts.n_manifold();
    require(beta1.size() == J && beta2.size() == J, errc::invalid_argument,
            "boundary coefficient vectors must have J entries");
    std::vector<triplet> trip;
    for (index_t j = 0; j < J; ++j) {
        require(beta1[j] != 0 || beta2[j] != 0, errc::invalid_bc,
                "beta1 = beta2 = 0 at a boundary point");
        const index_t bid = ghosts.boundary.ids[static_cast<std::size_t>(j)];
        const double h = ghosts.boundary.spacing[j];
        if (beta1[j] != 0) {
            trip.emplace_back(static_cast<int>(j), static_cast<int>(bid), beta1[j] / h + beta2[j]);
            trip.emplace_back(static_cast<int>(j), static_cast<int>(ghosts.g0_col(j)), -beta1[j] / h);
        } else {
            trip.emplace_back(static_cast<int>(j), static_cast<int>(bid), beta2[j]);
        }
    }
    BoundaryOperator bc;
    bc.rows.resize(J, nm);
    bc.rows.setFromTriplets(trip.begin(), trip.end());
    bc.rows.makeCompressed();
    bc.beta1 = beta1;
    bc.beta2 = beta2;
    return bc;
}

struct SolveReport {
    vec u_hat;                  // manifold-side solution
    double residual_inf = 0;    // recomputed over the assembled system
    double ie_inf = -1;         // sup error vs supplied truth, -1 if none
    double dominance_margin = 0;
    bool nonconvergent_warning = false;
    double eps_used = 0;
    index_t N = 0, J = 0, K = 0;
    double wall_time = 0;       // seconds
};

namespace detail {

// Solve the block system
//   interior rows:  (-a + L) u = f - offset
//   boundary rows:  B u = g
// by eliminating u^B = (B^B)^{-1}(g - B^I u^I). B^B must be invertible
// (guaranteed for the <=2-entry ghost rows and for stencil rows whose
// neighbors are interior).
inline SolveReport solve_reduced(const spmat& L, const vec& offset, const vec& a,
                                 const std::vector<index_t>& boundary_ids, const spmat& B,
                                 const vec& f, const vec& g) {
    const auto t0 = std::chrono::steady_clock::now();
    const index_t nm = L.rows(), J = static_cast<index_t>(boundary_ids.size());
    const index_t ni = nm - J;
    require(L.cols() == nm && B.rows() == J && B.cols() == nm, errc::invalid_argument,
            "system block shapes are inconsistent");
    require(f.size() == nm && g.size() == J, errc::invalid_argument, "rhs sizes inconsistent");
    require(offset.size() == nm, errc::invalid_argument, "offset size inconsistent");
    require(a.size() == 0 || a.size() == nm, errc::invalid_argument, "shift size inconsistent");

    // interior/boundary positions
    std::vector<index_t> pos(static_cast<std::size_t>(nm), -1);  // interior position
    std::vector<index_t> bpos(static_cast<std::size_t>(nm), -1);
    std::vector<index_t> interior;
    interior.reserve(static_cast<std::size_t>(ni));
    for (index_t j = 0; j < J; ++j)
        bpos[static_cast<std::size_t>(boundary_ids[static_cast<std::size_t>(j)])] = j;
    for (index_t i = 0; i < nm; ++i)
        if (bpos[static_cast<std::size_t>(i)] < 0) {
            pos[static_cast<std::size_t>(i)] = static_cast<index_t>(interior.size());
            interior.push_back(i);
        }
    require(static_cast<index_t>(interior.size()) == ni, errc::invalid_argument,
            "duplicate boundary ids");

    // split B into interior/boundary column blocks
    std::vector<triplet> tBB, tBI;
    for (index_t c = 0; c < B.outerSize(); ++c)
        for (spmat::InnerIterator it(B, c); it; ++it) {
            if (bpos[static_cast<std::size_t>(c)] >= 0)
                tBB.emplace_back(static_cast<int>(it.row()),
                                 static_cast<int>(bpos[static_cast<std::size_t>(c)]), it.value());
            else
                tBI.emplace_back(static_cast<int>(it.row()),
                                 static_cast<int>(pos[static_cast<std::size_t>(c)]), it.value());
        }
    spmat BB(J, J), BI(J, ni);
    BB.setFromTriplets(tBB.begin(), tBB.end());
    BI.setFromTriplets(tBI.begin(), tBI.end());

    Eigen::SparseLU<spmat> luB;
    luB.compute(BB);
    require(luB.info() == Eigen::Success, errc::solver_failure,
            "boundary-condition block B^B is singular");

    // T = (B^B)^{-1} B^I (sparse, few nonzero columns), y = (B^B)^{-1} g
    std::vector<triplet> tT;
    {
        vec col(J), x(J);
        for (index_t c = 0; c < BI.outerSize(); ++c) {
            bool any = false;
            col.setZero();
            for (spmat::InnerIterator it(BI, c); it; ++it) { col[it.row()] = it.value(); any = true; }
            if (!any) continue;
            x = luB.solve(col);
            for (index_t r = 0; r < J; ++r)
                if (x[r] != 0) tT.emplace_back(static_cast<int>(r), static_cast<int>(c), x[r]);
        }
    }
    spmat T(J, ni);
    T.setFromTriplets(tT.begin(), tT.end());
    const vec y = luB.solve(g);

    // split interior rows of L into column blocks
    std::vector<triplet> tLII, tLIB;
    for (index_t c = 0; c < L.outerSize(); ++c)
        for (spmat::InnerIterator it(L, c); it; ++it) {
            const index_t r = it.row();
            if (bpos[static_cast<std::size_t>(r)] >= 0) continue;  // boundary row unused
            const index_t ri = pos[static_cast<std::size_t>(r)];
            if (bpos[static_cast<std::size_t>(c)] >= 0)
                tLIB.emplace_back(static_cast<int>(ri),
                                  static_cast<int>(bpos[static_cast<std::size_t>(c)]), it.value());
            else
                tLII.emplace_back(static_cast<int>(ri),
                                  static_cast<int>(pos[static_cast<std::size_t>(c)]), it.value());
        }
    spmat LII(ni, ni), LIB(ni, J);
    LII.setFromTriplets(tLII.begin(), tLII.end());
    LIB.setFromTriplets(tLIB.begin(), tLIB.end());

    spmat M = LII - spmat(LIB * T);
    if (a.size()) {
        std::vector<triplet> ta;
        ta.reserve(static_cast<std::size_t>(ni));
        for (index_t i = 0; i < ni; ++i)
            ta.emplace_back(static_cast<int>(i), static_cast<int>(i),
                            -a[interior[static_cast<std::size_t>(i)]]);
        spmat Ashift(ni, ni);
        Ashift.setFromTriplets(ta.begin(), ta.end());
        M = M + Ashift;
    }
    M.makeCompressed();

    vec rhs(ni);
    for (index_t i = 0; i < ni; ++i) {
        const index_t ii = interior[static_cast<std::size_t>(i)];
        rhs[i] = f[ii] - offset[ii];
    }
    rhs -= LIB * y;

    Eigen::SparseLU<spmat> lu;
    lu.compute(M);
    require(lu.info() == Eigen::Success, errc::solver_failure,
            "reduced interior system is singular");
    vec uI = lu.solve(rhs);
    uI += lu.solve(vec(rhs - M * uI));  // one step of iterative refinement

    const vec uB = y - T * uI;
    SolveReport rep;
    rep.u_hat.resize(nm);
    for (index_t i = 0; i < ni; ++i) rep.u_hat[interior[static_cast<std::size_t>(i)]] = uI[i];
    for (index_t j = 0; j < J; ++j) rep.u_hat[boundary_ids[static_cast<std::size_t>(j)]] = uB[j];
    rep.N = nm;
    rep.J = J;

    // residual and diagonal-dominance margin of the full block system
    vec Lu = L * rep.u_hat;
    if (a.size()) Lu -= a.cwiseProduct(rep.u_hat);
    double res = 0;
    for (index_t i = 0; i < nm; ++i)
        if (bpos[static_cast<std::size_t>(i)] < 0)
            res = std::max(res, std::abs(Lu[i] + offset[i] - f[i]));
    const vec bres = B * rep.u_hat - g;
    res = std::max(res, bres.cwiseAbs().maxCoeff());
    rep.residual_inf = res;

    vec diag = vec::Zero(nm), offsum = vec::Zero(nm);
    for (index_t c = 0; c < L.outerSize(); ++c)
        for (spmat::InnerIterator it(L, c); it; ++it) {
            if (bpos[static_cast<std::size_t>(it.row())] >= 0) continue;
            if (it.row() == c) diag[it.row()] += it.value();
            else offsum[it.row()] += std::abs(it.value());
        }
    double margin = std::numeric_limits<double>::infinity();
    for (index_t i = 0; i < nm; ++i) {
        if (bpos[static_cast<std::size_t>(i)] >= 0) continue;
        const double d = diag[i] - (a.size() ? a[i] : 0.0);
        margin = std::min(margin, std::abs(d) - offsum[i]);
    }
    {
        vec bdiag = vec::Zero(J), boff = vec::Zero(J);
        for (index_t c = 0; c < B.outerSize(); ++c)
            for (spmat::InnerIterator it(B, c); it; ++it) {
                if (c == boundary_ids[static_cast<std::size_t>(it.row())])
                    bdiag[it.row()] += it.value();
                else
                    boff[it.row()] += std::abs(it.value());
            }
        for (index_t j = 0; j < J; ++j)
            margin = std::min(margin, std::abs(bdiag[j]) - boff[j]);
    }
    rep.dominance_margin = margin;
    rep.nonconvergent_warning = margin < -1e-12;

    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace detail

// Dirichlet problem (-a + L^g) u = f with u = g on the boundary: boundary
// unknowns substitute directly, leaving L^I u^I = f^I - L^B g with
// f^I = f - offset.
inline SolveReport solve_dirichlet(const GpdmOperator& op, const GhostSet& ghosts,
                                   const vec& f_manifold, const vec& g, const vec& a = vec()) {
    const index_t J = ghosts.J();
    std::vector<triplet> trip;
    for (index_t j = 0; j < J; ++j)
        trip.emplace_back(static_cast<int>(j),
                          static_cast<int>(ghosts.boundary.ids[static_cast<std::size_t>(j)]), 1.0);
    spmat B(J, ghosts.n_manifold());
    B.setFromTriplets(trip.begin(), trip.end());
    auto rep = detail::solve_reduced(op.L1part, op.offset, a, ghosts.boundary.ids, B, f_manifold, g);
    rep.eps_used = op.eps;
    rep.K = ghosts.K;
    return rep;
}

// Robin/Neumann (or per-point mixed) problem: interior rows carry
// (-a + L^g) u = f, boundary rows carry the differenced condition
// beta1 du/dnu + beta2 u = g. Pure Neumann points (beta2 = 0) require a
// strictly positive shift a for invertibility.
inline SolveReport solve_robin_neumann(const GpdmOperator& op, const GhostSet& ghosts,
                                       const BoundaryOperator& bc, const vec& f_manifold,
                                       const vec& g, const vec& a = vec()) {
    const index_t J = ghosts.J();
    bool has_neumann_point = false;
    for (index_t j = 0; j < J; ++j)
        if (bc.beta2[j] == 0) { require(bc.beta1[j] != 0, errc::invalid_bc, "empty bc row");
                                has_neumann_point = true; }
    if (has_neumann_point) {
        const double amin = a.size() ? a.minCoeff() : 0.0;
        require(amin > 0, errc::invalid_bc,
                "Neumann boundary points need a strictly positive zeroth-order shift a");
    }
    auto rep = detail::solve_reduced(op.L1part, op.offset, a, ghosts.boundary.ids, bc.rows,
                                     f_manifold, g);
    rep.eps_used = op.eps;
    rep.K = ghosts.K;
    return rep;
}

// Two-neighbor directional stencil for the outward normal derivative at a
// boundary point, used by the no-ghost baseline for derivative boundary
// conditions. Among neighbors within the angular window theta0 = pi/4 of the
// inward direction -nu, the nearest one and the nearest one on the opposite
// side of the -nu axis (projections w with <w_L, w_R> < 0) regress
// -nu = a_L nu_L + a_R nu_R; the normal derivative then combines the two
// directional differences. With no opposite-side partner the stencil falls
// back to a one-sided difference and reports it.
struct StencilRow {
    std::vector<index_t> ids;   // participating manifold points (boundary point first)
    std::vector<double> coef;   // coefficients producing du/dnu
    bool fallback = false;      // one-sided fallback was taken
};

inline StencilRow normal_derivative_row(const PointCloud& cloud, const NeighborIndex& index,
                                        index_t boundary_id, const vec& nu) {
    const vec xb = cloud.points.row(boundary_id).transpose();
    const double cos_window = std::cos(std::numbers::pi / 4.0);

    struct Cand { index_t id; vec dir; double dist; vec w; };
    std::vector<Cand> adm;
    for (index_t m = 0; m < index.k(); ++m) {
        const index_t j = index.indices(boundary_id, m);
        const double dist = index.dists(boundary_id, m);
        vec dir = (cloud.points.row(j).transpose() - xb) / dist;
        const double c = dir.dot(-nu);
        if (c >= cos_window) {
            vec w = dir - dir.dot(nu) * nu;
            adm.push_back({j, std::move(dir), dist, std::move(w)});
        }
    }

    StencilRow row;
    auto one_sided = [&](const Cand& cand) {
        // du/d(-nu) ~ (u(x_nbr) - u(x^B))/dist, so du/dnu flips the sign
        row.ids = {boundary_id, cand.id};
        row.coef = {1.0 / cand.dist, -1.0 / cand.dist};
        row.fallback = true;
    };

    if (adm.empty()) {
        // no aligned neighbor at all: take the best-aligned one regardless
        index_t best = index.indices(boundary_id, 0);
        double bestc = -2, bestd = index.dists(boundary_id, 0);
        for (index_t m = 0; m < index.k(); ++m) {
            const index_t j = index.indices(boundary_id, m);
            const double dist = index.dists(boundary_id, m);
            vec dir = (cloud.points.row(j).transpose() - xb) / dist;
            const double c = dir.dot(-nu);
            if (c > bestc) { bestc = c; best = j; bestd = dist; }
        }
        Cand cand{best, vec(), bestd, vec()};
        one_sided(cand);
        return row;
    }

    const Cand& left = adm.front();  // nearest admissible
    const Cand* right = nullptr;
    for (std::size_t m = 1; m < adm.size(); ++m)
        if (adm[m].w.dot(left.w) < 0) { right = &adm[m]; break; }
    if (!right) {
        one_sided(left);
        return row;
    }

    // least squares -nu = aL nuL + aR nuR
    const double g11 = left.dir.squaredNorm(), g22 = right->dir.squaredNorm();
    const double g12 = left.dir.dot(right->dir);
    const double r1 = left.dir.dot(-nu), r2 = right->dir.dot(-nu);
    const double det = g11 * g22 - g12 * g12;
    require(std::abs(det) > 1e-14, errc::degenerate_geometry,
            "stencil neighbors are collinear");
    const double aL = (g22 * r1 - g12 * r2) / det;
    const double aR = (g11 * r2 - g12 * r1) / det;

    // du/dnu = -[aL (u_L - u_B)/dL + aR (u_R - u_B)/dR]
    row.ids = {boundary_id, left.id, right->id};
    row.coef = {aL / left.dist + aR / right->dist, -aL / left.dist, -aR / right->dist};
    return row;
}

inline double normal_derivative_stencil(const PointCloud& cloud, const NeighborIndex& index,
                                        index_t boundary_id, const vec& nu, const vec& u,
                                        bool* fallback = nullptr) {
    const auto row = normal_derivative_row(cloud, index, boundary_id, nu);
    if (fallback) *fallback = row.fallback;
    double s = 0;
    for (std::size_t m = 0; m < row.ids.size(); ++m)
        s += row.coef[m] * u[row.ids[m]];
    return s;
}

// No-ghost baseline: plain estimator rows at interior points, boundary
// conditions through the directional stencil (derivative terms) plus beta2 on
// the diagonal. Same reduction/solve as the ghost path.
inline SolveReport solve_dm_baseline(const PointCloud& cloud, const NeighborIndex& index,
                                     const OperatorSpec& spec, const BoundaryData& boundary,
                                     const vec& beta1, const vec& beta2, const vec& f,
                                     const vec& g, const vec& a = vec()) {
    const index_t N = cloud.size(), J = boundary.J();
    const DmMatrix dm = assemble(cloud.points, N, spec);

    std::vector<triplet> trip;
    bool has_neumann_point = false;
    for (index_t j = 0; j < J; ++j) {
        require(beta1[j] != 0 || beta2[j] != 0, errc::invalid_bc,
                "beta1 = beta2 = 0 at a boundary point");
        const index_t bid = boundary.ids[static_cast<std::size_t>(j)];
        if (beta1[j] == 0) {
            trip.emplace_back(static_cast<int>(j), static_cast<int>(bid), beta2[j]);
            continue;
        }
        if (beta2[j] == 0) has_neumann_point = true;
        const auto row = normal_derivative_row(cloud, index, bid, boundary.normals.row(j).transpose());
        for (std::size_t m = 0; m < row.ids.size(); ++m) {
            double v = beta1[j] * row.coef[m];
            if (row.ids[m] == bid) v += beta2[j];
            trip.emplace_back(static_cast<int>(j), static_cast<int>(row.ids[m]), v);
        }
    }
    if (has_neumann_point)
        require(a.size() && a.minCoeff() > 0, errc::invalid_bc,
                "Neumann boundary points need a strictly positive zeroth-order shift a");

    spmat B(J, N);
    B.setFromTriplets(trip.begin(), trip.end());
    const vec offset = vec::Zero(N);
    auto rep = detail::solve_reduced(dm.L, offset, a, boundary.ids, B, f, g);
    rep.eps_used = spec.eps;
    rep.K = 0;
    return rep;
}

}  // namespace gpdm
