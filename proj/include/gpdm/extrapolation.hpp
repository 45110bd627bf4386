#pragma once

// Ghost-value extrapolation and the resulting affine operator.
//
// BVP form: for each boundary point j with ghost values u_{j,1..K} the
// system imposes
//   (1)    the estimator row at x^B_j equals f(x^B_j) (minus a zeroth-order
//          shift a(x^B_j) u(x^B_j) when the PDE carries one),
//   (2)    u_{j,2} - 2u_{j,1} + u_B = u_{j,1} - 2u_B + u_{G0},
//   (3)    u_{j,3} - 2u_{j,2} + u_{j,1} = u_{j,2} - 2u_{j,1} + u_B,
//   (k>3)  third differences along the ray repeat.
// Eliminating the JK ghost unknowns once yields u_G = A u_M + b, and the
// estimator restricted to manifold unknowns becomes the affine map
// L^g(u) = (L1 + L2 A) u + L2 b with L^g(u_M) = L^h u_aug by construction.
//
// Eigenvalue form: the homogeneous linear chain u_{j,1} = 2u_B - u_{G0},
// u_{j,k} = 2u_{j,k-1} - u_{j,k-2} closes with a homogeneous boundary
// condition to express (u_B, u_G) in terms of interior values alone.

#include "core.hpp"
#include "boundary.hpp"
#include "operators.hpp"

#include <Eigen/SparseLU>

namespace gpdm {

struct ExtrapolationSystem {
    // E u_G + G u_M = r with r = eps * f at each block's first row. The
    // first row of each block carries the kernel weights eps*L + I at the
    // ghost columns, the remaining rows the integer difference bands.
    spmat E;   // JK x JK
    spmat G;   // JK x N_manifold
    spmat A;   // JK x N_manifold, -E^{-1} G
    vec b;     // JK, E^{-1} r
    index_t J = 0, K = 0;
    double eps = 0;
    std::vector<index_t> boundary_rows;  // manifold row id of x^B_j per block

    // right-hand sides of the E-system for given manifold values and
    // boundary forcing
    vec rhs(const vec& u_manifold, const vec& f_boundary) const {
        vec r = -(G * u_manifold);
        for (index_t j = 0; j < J; ++j) r[j * K] += eps * f_boundary[j];
        return r;
    }
};

// Build and solve the extrapolation system from the augmented estimator.
// f_boundary holds f(x^B_j); a_boundary (optional) holds the zeroth-order
// coefficient a(x^B_j) of a shifted problem (-a + L)u = f, entering only the
// first equation of each block.
inline ExtrapolationSystem build_extrapolation(const DmMatrix& Lh, const GhostSet& ghosts,
                                               const vec& f_boundary,
                                               const vec& a_boundary = vec()) {
    const index_t J = ghosts.J(), K = ghosts.K;
    const index_t nm = ghosts.n_manifold();
    require(Lh.L.cols() == ghosts.n_aug() && Lh.L.rows() == nm, errc::invalid_argument,
            "estimator shape does not match the ghost set");
    require(f_boundary.size() == J, errc::invalid_argument, "f_boundary must have J entries");
    require(a_boundary.size() == 0 || a_boundary.size() == J, errc::invalid_argument,
            "a_boundary must be empty or have J entries");
    require(K >= 1, errc::invalid_argument, "extrapolation needs at least one ghost layer");

    ExtrapolationSystem sys;
    sys.J = J;
    sys.K = K;
    sys.eps = Lh.eps;
    const double eps = Lh.eps;

    std::vector<triplet> etrip, gtrip;
    sys.boundary_rows.resize(static_cast<std::size_t>(J));

    // Gather the boundary rows of the estimator in one column-major pass
    // (avoids materializing a row-major copy of the whole matrix).
    std::vector<index_t> block_of(static_cast<std::size_t>(nm), -1);
    for (index_t j = 0; j < J; ++j) {
        const index_t bid = ghosts.boundary.ids[static_cast<std::size_t>(j)];
        sys.boundary_rows[static_cast<std::size_t>(j)] = bid;
        block_of[static_cast<std::size_t>(bid)] = j;
    }
    std::vector<std::vector<std::pair<index_t, double>>> brow(static_cast<std::size_t>(J));
    for (index_t c = 0; c < Lh.L.outerSize(); ++c)
        for (spmat::InnerIterator it(Lh.L, c); it; ++it) {
            const index_t j = block_of[static_cast<std::size_t>(it.row())];
            if (j >= 0) brow[static_cast<std::size_t>(j)].emplace_back(c, it.value());
        }

    for (index_t j = 0; j < J; ++j) {
        const index_t bid = ghosts.boundary.ids[static_cast<std::size_t>(j)];
        const index_t r0 = j * K;
        const double a = a_boundary.size() ? a_boundary[j] : 0.0;

        // (1) estimator row at the boundary point, scaled to kernel form
        //     eps*L + I; ghost columns land in E, manifold columns in G.
        double ghost_weight = 0;  // singularity guard on the ghost coupling
        for (const auto& [c, val] : brow[static_cast<std::size_t>(j)]) {
            const double dtilde = eps * val + (c == bid ? 1.0 : 0.0);
            if (c >= nm) {
                const index_t g = c - nm;
                etrip.emplace_back(static_cast<int>(r0), static_cast<int>(g), dtilde);
                const index_t k = g % K + 1;
                ghost_weight += 0.5 * static_cast<double>(k * (k + 1)) * dtilde;
            } else {
                gtrip.emplace_back(static_cast<int>(r0), static_cast<int>(c), dtilde);
            }
        }
        // move u_B and the shift to the left-hand side
        gtrip.emplace_back(static_cast<int>(r0), static_cast<int>(bid), -1.0 - eps * a);
        require(ghost_weight > 1e-13, errc::extrapolation_singular,
                "boundary row " + std::to_string(j) +
                    " carries no kernel weight on its ghost columns (K=" + std::to_string(K) +
                    "); bandwidth too small for the ghost spacing");

        const index_t g0 = ghosts.g0_col(j);
        if (K >= 2) {
            // (2)  -3 u_{j,1} + u_{j,2} + 3 u_B - u_{G0} = 0
            etrip.emplace_back(static_cast<int>(r0 + 1), static_cast<int>(j * K + 0), -3.0);
            etrip.emplace_back(static_cast<int>(r0 + 1), static_cast<int>(j * K + 1), 1.0);
            gtrip.emplace_back(static_cast<int>(r0 + 1), static_cast<int>(bid), 3.0);
            gtrip.emplace_back(static_cast<int>(r0 + 1), static_cast<int>(g0), -1.0);
        }
        if (K >= 3) {
            // (3)  3 u_{j,1} - 3 u_{j,2} + u_{j,3} - u_B = 0
            etrip.emplace_back(static_cast<int>(r0 + 2), static_cast<int>(j * K + 0), 3.0);
            etrip.emplace_back(static_cast<int>(r0 + 2), static_cast<int>(j * K + 1), -3.0);
            etrip.emplace_back(static_cast<int>(r0 + 2), static_cast<int>(j * K + 2), 1.0);
            gtrip.emplace_back(static_cast<int>(r0 + 2), static_cast<int>(bid), -1.0);
        }
        for (index_t k = 4; k <= K; ++k) {
            // (k)  u_{j,k} - 3 u_{j,k-1} + 3 u_{j,k-2} - u_{j,k-3} = 0
            const index_t r = r0 + k - 1;
            etrip.emplace_back(static_cast<int>(r), static_cast<int>(j * K + k - 1), 1.0);
            etrip.emplace_back(static_cast<int>(r), static_cast<int>(j * K + k - 2), -3.0);
            etrip.emplace_back(static_cast<int>(r), static_cast<int>(j * K + k - 3), 3.0);
            etrip.emplace_back(static_cast<int>(r), static_cast<int>(j * K + k - 4), -1.0);
        }
    }

    sys.E.resize(J * K, J * K);
    sys.E.setFromTriplets(etrip.begin(), etrip.end());
    sys.E.makeCompressed();
    sys.G.resize(J * K, nm);
    sys.G.setFromTriplets(gtrip.begin(), gtrip.end());
    sys.G.makeCompressed();

    Eigen::SparseLU<spmat> lu(sys.E);
    require(lu.info() == Eigen::Success, errc::extrapolation_singular,
            "extrapolation system is singular to working precision (K=" + std::to_string(K) + ")");

    // b = E^{-1} (eps f at first rows)
    vec r = vec::Zero(J * K);
    for (index_t j = 0; j < J; ++j) r[j * K] = eps * f_boundary[j];
    sys.b = lu.solve(r);

    // A = -E^{-1} G, column by nonzero column. Entries below 1e-16 of the
    // column peak are discarded; they are solver fill far below the scheme's
    // own O(h^3) extrapolation error.
    std::vector<triplet> atrip;
    vec col(J * K), x(J * K);
    for (index_t c = 0; c < nm; ++c) {
        bool any = false;
        col.setZero();
        for (spmat::InnerIterator it(sys.G, c); it; ++it) {
            col[it.row()] = -it.value();
            any = true;
        }
        if (!any) continue;
        x = lu.solve(col);
        const double thresh = 1e-16 * x.cwiseAbs().maxCoeff();
        for (index_t i = 0; i < J * K; ++i)
            if (std::abs(x[i]) > thresh)
                atrip.emplace_back(static_cast<int>(i), static_cast<int>(c), x[i]);
    }
    sys.A.resize(J * K, nm);
    sys.A.setFromTriplets(atrip.begin(), atrip.end());
    sys.A.makeCompressed();
    return sys;
}

// Affine estimator acting on manifold values only.
struct GpdmOperator {
    spmat L1part;  // N x N: L1 + L2 A
    vec offset;    // N: L2 b
    spmat L1;      // N x N manifold block of the augmented estimator
    spmat L2;      // N x JK ghost block
    std::vector<index_t> boundary_rows;
    double eps = 0;

    vec apply(const vec& u) const { return L1part * u + offset; }
};

inline GpdmOperator build_gpdm(const DmMatrix& Lh, const ExtrapolationSystem& sys) {
    const index_t nm = Lh.L.rows();
    const index_t jk = Lh.L.cols() - nm;
    require(sys.A.rows() == jk && sys.A.cols() == nm, errc::invalid_argument,
            "extrapolation system does not match the estimator");

    GpdmOperator op;
    op.eps = Lh.eps;
    op.boundary_rows = sys.boundary_rows;
    op.L1 = Lh.L.leftCols(nm);
    op.L2 = Lh.L.rightCols(jk);
    if (jk == 0) {
        op.L1part = op.L1;
        op.offset = vec::Zero(nm);
    } else {
        op.L1part = op.L1 + spmat(op.L2 * sys.A);
        op.offset = op.L2 * sys.b;
    }
    op.L1part.makeCompressed();
    return op;
}

// Degenerate-augmentation convenience: no ghosts, plain estimator.
inline GpdmOperator build_gpdm(const DmMatrix& L) {
    GpdmOperator op;
    op.eps = L.eps;
    op.L1 = L.L;
    op.L1part = L.L;
    op.offset = vec::Zero(L.L.rows());
    return op;
}

// Homogeneous linear extrapolation for eigenvalue problems. The chain
// u_{j,1} = 2u_B - u_{G0}, u_{j,k} = 2u_{j,k-1} - u_{j,k-2} gives
// u_{j,k} = (k+1) u_B - k u_{G0} in closed form; a homogeneous boundary
// condition beta1 du/dnu + beta2 u = 0, discretized with the interior ghost
// as (beta1/h)(u_B - u_{G0}) + beta2 u_B = 0, eliminates u_B. The result maps
// interior values to (u_B; u_G), rows ordered boundary block then ghost
// blocks j-major.
struct LinearExtrapolation {
    spmat C;                            // (J + JK) x (N - J)
    std::vector<index_t> interior_ids;  // manifold ids of the columns
    index_t J = 0, K = 0;
};

inline LinearExtrapolation build_linear_extrapolation(const DmMatrix& Lh, const GhostSet& ghosts,
                                                      const vec& beta1, const vec& beta2) {
    const index_t J = ghosts.J(), K = ghosts.K, nm = ghosts.n_manifold();
    require(Lh.L.rows() == nm, errc::invalid_argument, "estimator rows must cover the manifold side");
    require(beta1.size() == J && beta2.size() == J, errc::invalid_argument,
            "boundary coefficient vectors must have J entries");

    // interior = manifold side minus boundary points
    std::vector<index_t> pos(static_cast<std::size_t>(nm), -1);
    LinearExtrapolation lx;
    lx.J = J;
    lx.K = K;
    {
        std::vector<char> is_b(static_cast<std::size_t>(nm), 0);
        for (index_t b : ghosts.boundary.ids) is_b[static_cast<std::size_t>(b)] = 1;
        for (index_t i = 0; i < nm; ++i)
            if (!is_b[static_cast<std::size_t>(i)]) {
                pos[static_cast<std::size_t>(i)] = static_cast<index_t>(lx.interior_ids.size());
                lx.interior_ids.push_back(i);
            }
    }

    std::vector<triplet> trip;
    for (index_t j = 0; j < J; ++j) {
        require(std::abs(beta1[j]) + std::abs(beta2[j]) > 0, errc::invalid_bc,
                "boundary condition with beta1 = beta2 = 0");
        const double h = ghosts.boundary.spacing[j];
        const double denom = beta1[j] / h + beta2[j];
        require(std::abs(denom) > 1e-14 * (std::abs(beta1[j]) / h + std::abs(beta2[j])),
                errc::invalid_bc, "boundary elimination singular at boundary point " +
                                      std::to_string(j));
        const index_t g0 = ghosts.g0_col(j);
        const index_t p = pos[static_cast<std::size_t>(g0)];
        require(p >= 0, errc::invalid_bc, "interior ghost of boundary point " + std::to_string(j) +
                                              " is itself a boundary point");
        const double c = (beta1[j] / h) / denom;  // u_B = c * u_{G0}
        trip.emplace_back(static_cast<int>(j), static_cast<int>(p), c);
        for (index_t k = 1; k <= K; ++k) {
            const double coef = static_cast<double>(k + 1) * c - static_cast<double>(k);
            trip.emplace_back(static_cast<int>(J + j * K + k - 1), static_cast<int>(p), coef);
        }
    }
    lx.C.resize(J + J * K, static_cast<index_t>(lx.interior_ids.size()));
    lx.C.setFromTriplets(trip.begin(), trip.end());
    lx.C.makeCompressed();
    return lx;
}

}  // namespace gpdm
