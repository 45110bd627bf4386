#pragma once

// Eigenvalue problems L psi = lambda psi with homogeneous boundary
// conditions. Boundary and ghost values are expressed as linear maps of the
// interior values (ghosts through the per-ray linear extrapolation, boundary
// through the condition itself), which turns the augmented estimator into a
// square matrix over the interior unknowns. Dense solves up to 4096 unknowns,
// shift-invert Arnoldi beyond that. The matrices are nonsymmetric, so
// everything runs in complex arithmetic internally; reports carry real parts
// plus a flag when an imaginary part is non-negligible.

#include "core.hpp"
#include "pointcloud.hpp"
#include "boundary.hpp"
#include "operators.hpp"
#include "extrapolation.hpp"
#include "pde.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

namespace gpdm {

using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;

struct EigReport {
    vec lambdas;                 // real parts, descending (closest to zero first
                                 // for the negative-definite operators here)
    vec lambdas_imag;            // imaginary parts, usually ~0
    std::vector<bool> complex_flag;  // |imag| > 1e-6 |lambda|
    mat psis;                    // unknowns x M, sign- and sup-normalized real parts
    vec residuals;               // ||(M - lambda I) psi||_inf per pair
    std::vector<index_t> ids;    // cloud ids of the rows of psis
    bool converged = true;       // false: fewer pairs converged than requested
    index_t n_converged = 0;
};

namespace detail {

// Sort eigenpairs by descending real part (ties: descending imaginary part,
// then original position, keeping conjugate pairs adjacent and the order
// deterministic), normalize each vector to sup-norm 1 with its first
// non-negligible component positive, and record residuals against M.
inline EigReport finalize_pairs(const spmat& M, const cvec& lam, const cmat& V, index_t m_req) {
    const index_t n_found = lam.size();
    std::vector<index_t> order(static_cast<std::size_t>(n_found));
    std::iota(order.begin(), order.end(), index_t{0});
    std::sort(order.begin(), order.end(), [&](index_t a, index_t b) {
        if (lam[a].real() != lam[b].real()) return lam[a].real() > lam[b].real();
        if (lam[a].imag() != lam[b].imag()) return lam[a].imag() > lam[b].imag();
        return a < b;
    });

    const index_t m = std::min(m_req, n_found);
    EigReport rep;
    rep.lambdas.resize(m);
    rep.lambdas_imag.resize(m);
    rep.complex_flag.assign(static_cast<std::size_t>(m), false);
    rep.psis.resize(V.rows(), m);
    rep.residuals.resize(m);

    for (index_t c = 0; c < m; ++c) {
        const index_t s = order[static_cast<std::size_t>(c)];
        const std::complex<double> l = lam[s];
        cvec v = V.col(s);

        const cvec Mv = (M * v.real()).cast<std::complex<double>>() +
                        std::complex<double>(0, 1) * (M * v.imag()).cast<std::complex<double>>();
        rep.residuals[c] = (Mv - l * v).cwiseAbs().maxCoeff() / v.cwiseAbs().maxCoeff();

        // scale so the largest-modulus entry becomes exactly 1
        index_t imax = 0;
        double amax = 0;
        for (index_t i = 0; i < v.size(); ++i) {
            const double a = std::abs(v[i]);
            if (a > amax) { amax = a; imax = i; }
        }
        require(amax > 0, errc::solver_failure, "eigensolver returned a zero vector");
        v /= v[imax];
        for (index_t i = 0; i < v.size(); ++i)
            if (std::abs(v[i]) > 1e-12) {
                if (v[i].real() < 0) v = -v;
                break;
            }

        rep.lambdas[c] = l.real();
        rep.lambdas_imag[c] = l.imag();
        rep.complex_flag[static_cast<std::size_t>(c)] = std::abs(l.imag()) > 1e-6 * std::abs(l);
        rep.psis.col(c) = v.real();
    }
    rep.n_converged = m;
    rep.converged = m == m_req;
    return rep;
}

inline EigReport eig_dense(const spmat& M, index_t m_req) {
    Eigen::MatrixXd D(M);
    Eigen::EigenSolver<Eigen::MatrixXd> es(D, true);
    require(es.info() == Eigen::Success, errc::solver_failure, "dense eigensolver failed");
    return finalize_pairs(M, es.eigenvalues(), es.eigenvectors(), m_req);
}

// Shift-invert Arnoldi around sigma: one Krylov sweep with (M - sigma I)^{-1},
// Ritz pairs from the Hessenberg matrix, kept only when the true residual
// passes the report invariant. sigma > 0 is safe for the operators here,
// whose spectra sit on the nonpositive half-axis.
inline EigReport eig_arnoldi(const spmat& M, index_t m_req, double sigma = 0.25) {
    const index_t n = M.rows();
    const index_t m = std::min<index_t>(n, std::max<index_t>(4 * m_req + 20, 80));

    spmat A = M;
    for (index_t i = 0; i < n; ++i) A.coeffRef(i, i) -= sigma;
    A.makeCompressed();
    Eigen::SparseLU<spmat> lu;
    lu.compute(A);
    require(lu.info() == Eigen::Success, errc::solver_failure,
            "shift-invert factorization failed; sigma hit an eigenvalue");

    mat V(n, m + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    // deterministic start vector spread over many modes
    for (index_t i = 0; i < n; ++i) V(i, 0) = 1.0 + 1e-3 * std::sin(static_cast<double>(i) + 1.0);
    V.col(0).normalize();

    index_t steps = m;
    for (index_t j = 0; j < m; ++j) {
        vec w = lu.solve(V.col(j));
        for (int pass = 0; pass < 2; ++pass)  // CGS with one re-orthogonalization
            for (index_t i = 0; i <= j; ++i) {
                const double hij = V.col(i).dot(w);
                H(i, j) += hij;
                w -= hij * V.col(i);
            }
        const double nw = w.norm();
        H(j + 1, j) = nw;
        if (nw < 1e-12) { steps = j + 1; break; }  // invariant subspace found
        V.col(j + 1) = w / nw;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> es(H.topLeftCorner(steps, steps), true);
    require(es.info() == Eigen::Success, errc::solver_failure, "Hessenberg eigensolver failed");
    const cvec theta = es.eigenvalues();
    const cmat Y = es.eigenvectors();

    // lift Ritz vectors, convert theta back to lambda, keep true convergers
    std::vector<std::pair<std::complex<double>, cvec>> kept;
    for (index_t s = 0; s < theta.size(); ++s) {
        if (std::abs(theta[s]) < 1e-14) continue;
        const std::complex<double> lambda = sigma + 1.0 / theta[s];
        cvec psi = V.leftCols(steps).cast<std::complex<double>>() * Y.col(s);
        const double scale = psi.cwiseAbs().maxCoeff();
        if (scale <= 0) continue;
        psi /= scale;
        const cvec Mp = (M * psi.real()).cast<std::complex<double>>() +
                        std::complex<double>(0, 1) * (M * psi.imag()).cast<std::complex<double>>();
        const double res = (Mp - lambda * psi).cwiseAbs().maxCoeff();
        if (res < 1e-6 * std::abs(lambda) + 1e-8) kept.emplace_back(lambda, std::move(psi));
    }

    cvec lam(static_cast<index_t>(kept.size()));
    cmat W(n, static_cast<index_t>(kept.size()));
    for (index_t s = 0; s < lam.size(); ++s) {
        lam[s] = kept[static_cast<std::size_t>(s)].first;
        W.col(s) = kept[static_cast<std::size_t>(s)].second;
    }
    return finalize_pairs(M, lam, W, m_req);
}

inline EigReport eig_matrix(const spmat& M, index_t m_req) {
    if (m_req == 0) {
        EigReport rep;
        rep.psis.resize(M.rows(), 0);
        rep.lambdas.resize(0);
        rep.lambdas_imag.resize(0);
        rep.residuals.resize(0);
        return rep;
    }
    if (M.rows() <= 4096) return eig_dense(M, m_req);
    require(m_req <= 30, errc::invalid_argument,
            "iterative path supports at most 30 requested modes");
    return eig_arnoldi(M, m_req);
}

// Compose interior rows of a manifold-block operator with a map C giving the
// eliminated values (boundary and/or ghost) as linear functions of the
// interior values: M = A[int, int] + A[int, elim] * C.
inline spmat compose_interior(const spmat& A, const std::vector<index_t>& boundary_ids,
                              index_t nm, const spmat& C,
                              const std::vector<index_t>& elim_cols) {
    const index_t J = static_cast<index_t>(boundary_ids.size());
    const index_t ni = nm - J;
    std::vector<index_t> ipos(static_cast<std::size_t>(A.cols()), -1);
    std::vector<index_t> rpos(static_cast<std::size_t>(nm), -1);
    for (index_t j = 0; j < J; ++j) rpos[static_cast<std::size_t>(boundary_ids[static_cast<std::size_t>(j)])] = j;
    index_t c = 0;
    for (index_t i = 0; i < nm; ++i)
        if (rpos[static_cast<std::size_t>(i)] < 0) ipos[static_cast<std::size_t>(i)] = c++;
    require(c == ni, errc::invalid_argument, "duplicate boundary ids");

    std::vector<index_t> epos(static_cast<std::size_t>(A.cols()), -1);
    for (std::size_t e = 0; e < elim_cols.size(); ++e)
        epos[static_cast<std::size_t>(elim_cols[e])] = static_cast<index_t>(e);

    std::vector<triplet> tII, tIE;
    for (index_t col = 0; col < A.outerSize(); ++col)
        for (spmat::InnerIterator it(A, col); it; ++it) {
            if (it.row() >= nm || rpos[static_cast<std::size_t>(it.row())] >= 0) continue;
            const index_t r = ipos[static_cast<std::size_t>(it.row())];
            if (epos[static_cast<std::size_t>(col)] >= 0)
                tIE.emplace_back(static_cast<int>(r),
                                 static_cast<int>(epos[static_cast<std::size_t>(col)]), it.value());
            else if (ipos[static_cast<std::size_t>(col)] >= 0)
                tII.emplace_back(static_cast<int>(r),
                                 static_cast<int>(ipos[static_cast<std::size_t>(col)]), it.value());
            else
                require(false, errc::invalid_argument, "column neither interior nor eliminated");
        }
    spmat AII(ni, ni), AIE(ni, static_cast<index_t>(elim_cols.size()));
    AII.setFromTriplets(tII.begin(), tII.end());
    AIE.setFromTriplets(tIE.begin(), tIE.end());
    spmat M = AII + spmat(AIE * C);
    M.makeCompressed();
    return M;
}

}  // namespace detail

// Ghost-augmented eigensolve: ghost values are linearly extrapolated along
// each ray and the homogeneous condition beta1 du/dnu + beta2 u = 0
// eliminates the boundary values, leaving a square operator on the interior
// points.
inline EigReport gpdm_eigs(const DmMatrix& Lh, const GhostSet& ghosts, const vec& beta1,
                           const vec& beta2, index_t m_req) {
    const index_t nm = ghosts.n_manifold(), J = ghosts.J(), jk = J * ghosts.K;
    const auto ext = build_linear_extrapolation(Lh, ghosts, beta1, beta2);

    // eliminated columns: boundary points first (matching C's row order), then ghosts
    std::vector<index_t> elim;
    elim.reserve(static_cast<std::size_t>(J + jk));
    for (index_t j = 0; j < J; ++j) elim.push_back(ghosts.boundary.ids[static_cast<std::size_t>(j)]);
    for (index_t g = 0; g < jk; ++g) elim.push_back(nm + g);

    const spmat M = detail::compose_interior(Lh.L, ghosts.boundary.ids, nm, ext.C, elim);
    auto rep = detail::eig_matrix(M, m_req);
    rep.ids = ext.interior_ids;
    return rep;
}

// No-ghost baseline: boundary values eliminated through the directional
// stencil rows of the boundary condition alone.
inline EigReport dm_eigs(const PointCloud& cloud, const NeighborIndex& index,
                         const OperatorSpec& spec, const BoundaryData& boundary,
                         const vec& beta1, const vec& beta2, index_t m_req) {
    const index_t N = cloud.size(), J = boundary.J();
    const DmMatrix dm = assemble(cloud.points, N, spec);

    // bc rows over all N columns
    std::vector<triplet> trip;
    for (index_t j = 0; j < J; ++j) {
        require(beta1[j] != 0 || beta2[j] != 0, errc::invalid_bc,
                "beta1 = beta2 = 0 at a boundary point");
        const index_t bid = boundary.ids[static_cast<std::size_t>(j)];
        if (beta1[j] == 0) {
            trip.emplace_back(static_cast<int>(j), static_cast<int>(bid), beta2[j]);
            continue;
        }
        const auto row = normal_derivative_row(cloud, index, bid,
                                               boundary.normals.row(j).transpose());
        for (std::size_t m = 0; m < row.ids.size(); ++m) {
            double v = beta1[j] * row.coef[m];
            if (row.ids[m] == bid) v += beta2[j];
            trip.emplace_back(static_cast<int>(j), static_cast<int>(row.ids[m]), v);
        }
    }
    spmat B(J, N);
    B.setFromTriplets(trip.begin(), trip.end());

    // split B by column blocks and solve B^B u^B = -B^I u^I for the map C
    std::vector<index_t> bpos(static_cast<std::size_t>(N), -1), ipos(static_cast<std::size_t>(N), -1);
    for (index_t j = 0; j < J; ++j) bpos[static_cast<std::size_t>(boundary.ids[static_cast<std::size_t>(j)])] = j;
    std::vector<index_t> interior_ids;
    for (index_t i = 0; i < N; ++i)
        if (bpos[static_cast<std::size_t>(i)] < 0) {
            ipos[static_cast<std::size_t>(i)] = static_cast<index_t>(interior_ids.size());
            interior_ids.push_back(i);
        }
    const index_t ni = static_cast<index_t>(interior_ids.size());

    std::vector<triplet> tBB, tBI;
    for (index_t c = 0; c < B.outerSize(); ++c)
        for (spmat::InnerIterator it(B, c); it; ++it) {
            if (bpos[static_cast<std::size_t>(c)] >= 0)
                tBB.emplace_back(static_cast<int>(it.row()),
                                 static_cast<int>(bpos[static_cast<std::size_t>(c)]), it.value());
            else
                tBI.emplace_back(static_cast<int>(it.row()),
                                 static_cast<int>(ipos[static_cast<std::size_t>(c)]), it.value());
        }
    spmat BB(J, J), BI(J, ni);
    BB.setFromTriplets(tBB.begin(), tBB.end());
    BI.setFromTriplets(tBI.begin(), tBI.end());
    Eigen::SparseLU<spmat> lu;
    lu.compute(BB);
    require(lu.info() == Eigen::Success, errc::solver_failure,
            "boundary-condition block is singular");

    std::vector<triplet> tC;
    {
        vec col(J), x(J);
        for (index_t c = 0; c < BI.outerSize(); ++c) {
            bool any = false;
            col.setZero();
            for (spmat::InnerIterator it(BI, c); it; ++it) { col[it.row()] = it.value(); any = true; }
            if (!any) continue;
            x = lu.solve(col);
            for (index_t r = 0; r < J; ++r)
                if (x[r] != 0) tC.emplace_back(static_cast<int>(r), static_cast<int>(c), -x[r]);
        }
    }
    spmat C(J, ni);
    C.setFromTriplets(tC.begin(), tC.end());

    const spmat M = detail::compose_interior(dm.L, boundary.ids, N, C, boundary.ids);
    auto rep = detail::eig_matrix(M, m_req);
    rep.ids = interior_ids;
    return rep;
}

// Degenerate-weight variant: no boundary condition eliminates the boundary
// values. All manifold points stay unknowns, ghosts extrapolate linearly from
// (boundary, first-interior) pairs, and the rows at boundary points are
// replaced by caller-supplied operator rows (for weights vanishing at the
// boundary, the operator itself degenerates to first order there).
inline EigReport gpdm_eigs_replaced_rows(const DmMatrix& Lh, const GhostSet& ghosts,
                                         const spmat& brows, index_t m_req) {
    const index_t nm = ghosts.n_manifold(), J = ghosts.J(), jk = J * ghosts.K;
    require(brows.rows() == J && brows.cols() == nm, errc::invalid_argument,
            "replacement rows must be J x N_manifold");
    require(!ghosts.boundary.g0_ids.empty(), errc::invalid_argument,
            "row-replacement mode needs well-sampled first-interior ids");

    // ghost values as linear functions of manifold values along each ray:
    // u(x^B + k h nu) = (k+1) u(x^B) - k u(x^G0)
    std::vector<triplet> tXi;
    for (index_t j = 0; j < J; ++j) {
        const index_t bid = ghosts.boundary.ids[static_cast<std::size_t>(j)];
        const index_t g0 = ghosts.boundary.g0_ids[static_cast<std::size_t>(j)];
        for (index_t k = 1; k <= ghosts.K; ++k) {
            const index_t r = j * ghosts.K + (k - 1);
            tXi.emplace_back(static_cast<int>(r), static_cast<int>(bid),
                             static_cast<double>(k + 1));
            tXi.emplace_back(static_cast<int>(r), static_cast<int>(g0),
                             -static_cast<double>(k));
        }
    }
    spmat Xi(jk, nm);
    Xi.setFromTriplets(tXi.begin(), tXi.end());

    // M = L_manifold + L_ghost * Xi, boundary rows replaced
    std::vector<index_t> bpos(static_cast<std::size_t>(nm), -1);
    for (index_t j = 0; j < J; ++j) bpos[static_cast<std::size_t>(ghosts.boundary.ids[static_cast<std::size_t>(j)])] = j;

    spmat LM = Lh.L.leftCols(nm);
    spmat LG = Lh.L.rightCols(jk);
    spmat M = LM + spmat(LG * Xi);

    std::vector<triplet> tM;
    for (index_t c = 0; c < M.outerSize(); ++c)
        for (spmat::InnerIterator it(M, c); it; ++it)
            if (bpos[static_cast<std::size_t>(it.row())] < 0)
                tM.emplace_back(static_cast<int>(it.row()), static_cast<int>(c), it.value());
    for (index_t c = 0; c < brows.outerSize(); ++c)
        for (spmat::InnerIterator it(brows, c); it; ++it)
            tM.emplace_back(static_cast<int>(ghosts.boundary.ids[static_cast<std::size_t>(it.row())]),
                            static_cast<int>(c), it.value());
    spmat Mr(nm, nm);
    Mr.setFromTriplets(tM.begin(), tM.end());
    Mr.makeCompressed();

    auto rep = detail::eig_matrix(Mr, m_req);
    rep.ids.resize(static_cast<std::size_t>(nm));
    std::iota(rep.ids.begin(), rep.ids.end(), index_t{0});
    return rep;
}

inline EigReport dm_eigs_replaced_rows(const PointCloud& cloud, const OperatorSpec& spec,
                                       const std::vector<index_t>& boundary_ids,
                                       const spmat& brows, index_t m_req) {
    const index_t N = cloud.size();
    const DmMatrix dm = assemble(cloud.points, N, spec);
    require(brows.rows() == static_cast<index_t>(boundary_ids.size()) && brows.cols() == N,
            errc::invalid_argument, "replacement rows must be J x N");

    std::vector<index_t> bpos(static_cast<std::size_t>(N), -1);
    for (std::size_t j = 0; j < boundary_ids.size(); ++j) bpos[static_cast<std::size_t>(boundary_ids[j])] = static_cast<index_t>(j);

    std::vector<triplet> tM;
    for (index_t c = 0; c < dm.L.outerSize(); ++c)
        for (spmat::InnerIterator it(dm.L, c); it; ++it)
            if (bpos[static_cast<std::size_t>(it.row())] < 0)
                tM.emplace_back(static_cast<int>(it.row()), static_cast<int>(c), it.value());
    for (index_t c = 0; c < brows.outerSize(); ++c)
        for (spmat::InnerIterator it(brows, c); it; ++it)
            tM.emplace_back(static_cast<int>(boundary_ids[static_cast<std::size_t>(it.row())]),
                            static_cast<int>(c), it.value());
    spmat M(N, N);
    M.setFromTriplets(tM.begin(), tM.end());
    M.makeCompressed();

    auto rep = detail::eig_matrix(M, m_req);
    rep.ids.resize(static_cast<std::size_t>(N));
    std::iota(rep.ids.begin(), rep.ids.end(), index_t{0});
    return rep;
}

// Reference spectrum for a surface of revolution with profile radius
// w(theta) = a + cos(theta): for each azimuthal wavenumber m the theta-factor
// solves the periodic problem
//   Theta'' - (sin(theta)/w) Theta' - (m^2/w^2) Theta = lambda Theta
// discretized by Fourier spectral collocation. Returns the per_m leading
// eigenvalues per wavenumber, merged and sorted by descending real part.
inline std::vector<double> surface_of_revolution_spectrum(double a, const std::vector<double>& ms,
                                                          index_t per_m, index_t n_theta = 512) {
    require(n_theta >= 16 && n_theta % 2 == 0, errc::invalid_argument,
            "n_theta must be even and reasonably large");
    const index_t n = n_theta;
    const double h = 2.0 * std::numbers::pi / static_cast<double>(n);

    // periodic spectral differentiation matrices (even n)
    Eigen::MatrixXd D1 = Eigen::MatrixXd::Zero(n, n), D2(n, n);
    for (index_t i = 0; i < n; ++i)
        for (index_t j = 0; j < n; ++j) {
            if (i == j) {
                D2(i, j) = -std::numbers::pi * std::numbers::pi / (3.0 * h * h) - 1.0 / 6.0;
                continue;
            }
            const double sgn = ((i - j) % 2 == 0) ? 1.0 : -1.0;
            const double s = std::sin(static_cast<double>(i - j) * h / 2.0);
            D1(i, j) = 0.5 * sgn / std::tan(static_cast<double>(i - j) * h / 2.0);
            D2(i, j) = -sgn / (2.0 * s * s);
        }

    vec w(n), drift(n);
    for (index_t i = 0; i < n; ++i) {
        const double th = h * static_cast<double>(i);
        w[i] = a + std::cos(th);
        require(w[i] > 0, errc::invalid_argument, "profile radius must stay positive");
        drift[i] = std::sin(th) / w[i];
    }

    std::vector<double> out;
    for (double m : ms) {
        Eigen::MatrixXd A = D2 - drift.asDiagonal() * D1;
        for (index_t i = 0; i < n; ++i) A(i, i) -= m * m / (w[i] * w[i]);
        Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
        require(es.info() == Eigen::Success, errc::solver_failure,
                "reference eigensolver failed");
        std::vector<double> re(static_cast<std::size_t>(n));
        for (index_t i = 0; i < n; ++i) re[static_cast<std::size_t>(i)] = es.eigenvalues()[i].real();
        std::sort(re.begin(), re.end(), std::greater<>());
        for (index_t i = 0; i < std::min(per_m, n); ++i) out.push_back(re[static_cast<std::size_t>(i)]);
    }
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

}  // namespace gpdm
