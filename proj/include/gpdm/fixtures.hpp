#pragma once

// Analytic test problems on curves and surfaces with boundary: samplers,
// coefficient fields, manufactured solutions, and the exact operator actions
// they satisfy. All callbacks take ambient coordinates and recover intrinsic
// angles internally, so they stay evaluable slightly off the manifold (ghost
// points and appended near-boundary points included).

#include "core.hpp"
#include "pointcloud.hpp"
#include "operators.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace gpdm {

struct Fixture {
    std::string name;
    PointCloud cloud;
    OperatorSpec op;  // kind and coefficient fields; eps = 0 means auto-tune

    std::function<double(const vec&)> u, f;             // manufactured pair, L u = f
    std::function<double(const vec&)> beta1, beta2, g;  // boundary data fields
    std::function<double(const vec&)> shift_a;          // zeroth-order shift (empty: none)
    std::function<vec(const vec&)> normal;              // analytic outward unit normal

    std::vector<double> analytic_eigs;                  // leading eigenvalues, descending
    std::function<double(index_t, const vec&)> eig_psi; // k-th eigenfunction (optional)

    std::uint64_t seed = 0;  // random-mode record; 0 for deterministic grids
};

inline vec eval_field(const std::function<double(const vec&)>& fn, const mat& pts) {
    vec out(pts.rows());
    for (index_t i = 0; i < pts.rows(); ++i) out[i] = fn(pts.row(i).transpose());
    return out;
}

// ---------------------------------------------------------------------------
// Half ellipse x = (cos t, a sin t), t in [0, pi], metric G = sin^2 + a^2 cos^2.
// Weighted operator with kappa = 1.1 + sin t acting on u(t):
//   L u = kappa (u''/G - G' u'/(2 G^2)) + kappa' u'/G.

namespace detail {

struct EllipseDerivs { double v, dv, ddv; };

// Recover the arc parameter of a point near a half curve swept over [0, pi].
// atan2 alone wraps to -pi for points a rounding error past the t = pi end
// (grid endpoints can round sin t to a tiny negative value), which would put
// manufactured fields on the wrong branch; shift those back to the pi side.
inline double half_arc_theta(double y, double x) {
    const double t = std::atan2(y, x);
    return t < -std::numbers::pi / 2.0 ? t + 2.0 * std::numbers::pi : t;
}

inline double ellipse_theta(const vec& x, double a) { return half_arc_theta(x[1] / a, x[0]); }

inline double ellipse_weighted_action(double t, double a, const EllipseDerivs& u) {
    const double s = std::sin(t), c = std::cos(t);
    const double G = s * s + a * a * c * c;
    const double Gp = (1.0 - a * a) * std::sin(2.0 * t);
    const double kap = 1.1 + s, kapp = c;
    return kap * (u.ddv / G - Gp * u.dv / (2.0 * G * G)) + kapp * u.dv / G;
}

inline PointCloud ellipse_cloud(index_t N, double a) {
    require(N >= 8, errc::invalid_argument, "ellipse grid too small");
    PointCloud cloud;
    cloud.points.resize(N, 2);
    for (index_t i = 0; i < N; ++i) {
        const double t = static_cast<double>(i) * std::numbers::pi / static_cast<double>(N - 1);
        cloud.points(i, 0) = std::cos(t);
        cloud.points(i, 1) = a * std::sin(t);
    }
    cloud.boundary_ids = {0, N - 1};
    cloud.d = 1;
    return cloud;
}

inline void ellipse_common(Fixture& fx, double a) {
    fx.op = OperatorSpec{};
    fx.op.kind = OperatorKind::weighted_laplacian;
    fx.op.k = 50;
    fx.op.kappa = [a](const vec& x) { return 1.1 + x[1] / a; };
    fx.normal = [](const vec&) { return (vec(2) << 0.0, -1.0).finished(); };
}

}  // namespace detail

// Robin problem: u = cos(3t/2 - pi/4) satisfies beta1 du/dnu + beta2 u = 0
// at both ends with beta1 = 1, beta2 = 3/(2a).
inline Fixture semi_ellipse(index_t N, double a = 3.0) {
    Fixture fx;
    fx.name = "semi_ellipse";
    fx.cloud = detail::ellipse_cloud(N, a);
    detail::ellipse_common(fx, a);
    auto derivs = [](double t) {
        const double w = 1.5 * t - std::numbers::pi / 4.0;
        return detail::EllipseDerivs{std::cos(w), -1.5 * std::sin(w), -2.25 * std::cos(w)};
    };
    fx.u = [a, derivs](const vec& x) { return derivs(detail::ellipse_theta(x, a)).v; };
    fx.f = [a, derivs](const vec& x) {
        const double t = detail::ellipse_theta(x, a);
        return detail::ellipse_weighted_action(t, a, derivs(t));
    };
    fx.beta1 = [](const vec&) { return 1.0; };
    fx.beta2 = [a](const vec&) { return 3.0 / (2.0 * a); };
    fx.g = [](const vec&) { return 0.0; };
    return fx;
}

// Dirichlet problem: u = sin 2t vanishes at both ends.
inline Fixture semi_ellipse_dirichlet(index_t N, double a = 3.0) {
    Fixture fx;
    fx.name = "semi_ellipse_dirichlet";
    fx.cloud = detail::ellipse_cloud(N, a);
    detail::ellipse_common(fx, a);
    auto derivs = [](double t) {
        return detail::EllipseDerivs{std::sin(2.0 * t), 2.0 * std::cos(2.0 * t),
                                     -4.0 * std::sin(2.0 * t)};
    };
    fx.u = [a, derivs](const vec& x) { return derivs(detail::ellipse_theta(x, a)).v; };
    fx.f = [a, derivs](const vec& x) {
        const double t = detail::ellipse_theta(x, a);
        return detail::ellipse_weighted_action(t, a, derivs(t));
    };
    fx.beta1 = [](const vec&) { return 0.0; };
    fx.beta2 = [](const vec&) { return 1.0; };
    fx.g = [](const vec&) { return 0.0; };
    return fx;
}

// Neumann problem: u = cos t has vanishing normal derivative at both ends;
// the zeroth-order shift a0 = 1 makes (-a0 + L) invertible, f = L u - u.
inline Fixture semi_ellipse_neumann(index_t N, double a = 3.0) {
    Fixture fx;
    fx.name = "semi_ellipse_neumann";
    fx.cloud = detail::ellipse_cloud(N, a);
    detail::ellipse_common(fx, a);
    auto derivs = [](double t) {
        return detail::EllipseDerivs{std::cos(t), -std::sin(t), -std::cos(t)};
    };
    fx.u = [a, derivs](const vec& x) { return derivs(detail::ellipse_theta(x, a)).v; };
    fx.f = [a, derivs](const vec& x) {
        const double t = detail::ellipse_theta(x, a);
        return detail::ellipse_weighted_action(t, a, derivs(t)) - derivs(t).v;
    };
    fx.beta1 = [](const vec&) { return 1.0; };
    fx.beta2 = [](const vec&) { return 0.0; };
    fx.g = [](const vec&) { return 0.0; };
    fx.shift_a = [](const vec&) { return 1.0; };
    return fx;
}

// ---------------------------------------------------------------------------
// Half torus ((a+cos th) cos ph, (a+cos th) sin ph, sin th), th periodic,
// ph in [0, pi]; boundary circles at ph = 0 and ph = pi, both with outward
// normal (0, -1, 0). Metric diag(1, (a+cos th)^2).

namespace detail {

struct TorusAngles { double r, ct, st, cp, sp, theta; };

inline TorusAngles torus_angles(const vec& x, double a) {
    TorusAngles t;
    t.r = std::sqrt(x[0] * x[0] + x[1] * x[1]);
    require(t.r > 1e-12, errc::degenerate_geometry, "point on the torus axis");
    t.ct = t.r - a;
    t.st = x[2];
    t.cp = x[0] / t.r;
    t.sp = x[1] / t.r;
    t.theta = std::atan2(t.st, t.ct);
    return t;
}

// Jacobian [d x/d theta, d x/d phi], 3 x 2
inline mat torus_jacobian(const TorusAngles& t, double a) {
    const double w = a + t.ct;
    mat Dj(3, 2);
    Dj(0, 0) = -t.st * t.cp;  Dj(0, 1) = -w * t.sp;
    Dj(1, 0) = -t.st * t.sp;  Dj(1, 1) = w * t.cp;
    Dj(2, 0) = t.ct;          Dj(2, 1) = 0.0;
    return Dj;
}

inline PointCloud torus_grid(index_t n_theta, index_t n_phi, double a) {
    require(n_theta >= 8 && n_phi >= 8, errc::invalid_argument, "torus grid too small");
    PointCloud cloud;
    cloud.points.resize(n_theta * n_phi, 3);
    cloud.d = 2;
    index_t row = 0;
    for (index_t ip = 0; ip < n_phi; ++ip) {
        const double ph = std::numbers::pi * static_cast<double>(ip) / static_cast<double>(n_phi - 1);
        for (index_t it = 0; it < n_theta; ++it, ++row) {
            const double th = 2.0 * std::numbers::pi * static_cast<double>(it) / static_cast<double>(n_theta);
            const double w = a + std::cos(th);
            cloud.points(row, 0) = w * std::cos(ph);
            cloud.points(row, 1) = w * std::sin(ph);
            cloud.points(row, 2) = std::sin(th);
        }
    }
    for (index_t it = 0; it < n_theta; ++it) cloud.boundary_ids.push_back(it);
    for (index_t it = 0; it < n_theta; ++it)
        cloud.boundary_ids.push_back((n_phi - 1) * n_theta + it);
    return cloud;
}

inline PointCloud torus_random(index_t n_total, double a, std::uint64_t seed) {
    require(n_total >= 64, errc::invalid_argument, "random torus cloud too small");
    const index_t J = 2 * static_cast<index_t>(std::lround(std::sqrt(static_cast<double>(n_total))));
    const index_t ni = n_total - J;
    PointCloud cloud;
    cloud.points.resize(n_total, 3);
    cloud.d = 2;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uth(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> uph(0.0, std::numbers::pi);
    auto put = [&](index_t row, double th, double ph) {
        const double w = a + std::cos(th);
        cloud.points(row, 0) = w * std::cos(ph);
        cloud.points(row, 1) = w * std::sin(ph);
        cloud.points(row, 2) = std::sin(th);
    };
    for (index_t i = 0; i < ni; ++i) put(i, uth(rng), uph(rng));
    // Boundary points are supplied separately, uniform on each circle: an
    // equal-spacing ring with a per-trial random phase. Every point is still
    // uniformly distributed, but no two can (near-)coincide; i.i.d. draws
    // would collide at the circle's scale over J^2 pairs and degenerate the
    // ghost ray geometry.
    const index_t half = J / 2;
    const double step = 2.0 * std::numbers::pi / static_cast<double>(half);
    const double phase0 = uth(rng), phase1 = uth(rng);
    for (index_t j = 0; j < half; ++j) put(ni + j, phase0 + step * static_cast<double>(j), 0.0);
    for (index_t j = half; j < J; ++j)
        put(ni + j, phase1 + step * static_cast<double>(j - half), std::numbers::pi);
    for (index_t j = 0; j < J; ++j) cloud.boundary_ids.push_back(ni + j);
    return cloud;
}

inline void torus_common(Fixture& fx, double a, SamplingMode mode, index_t n_theta,
                         index_t n_phi, std::uint64_t seed) {
    if (mode == SamplingMode::well_sampled) {
        fx.cloud = torus_grid(n_theta, n_phi, a);
    } else {
        fx.cloud = torus_random(n_theta * n_phi, a, seed);
        fx.seed = seed;
    }
    fx.normal = [](const vec&) { return (vec(3) << 0.0, -1.0, 0.0).finished(); };
}

}  // namespace detail

// Geometry-only fixture (Laplace-Beltrami).
inline Fixture semi_torus(index_t n_theta, index_t n_phi, double a = 2.0,
                          SamplingMode mode = SamplingMode::well_sampled,
                          std::uint64_t seed = 1) {
    Fixture fx;
    fx.name = "semi_torus";
    detail::torus_common(fx, a, mode, n_theta, n_phi, seed);
    fx.op = OperatorSpec{};
    fx.op.kind = OperatorKind::laplace_beltrami;
    fx.op.k = 200;
    return fx;
}

// Second-order problem with drift b = (2+sin th, 2+cos th) and diffusion
// c = [[3+cos ph, 1/10], [1/10, 2]] in intrinsic coordinates, lifted to the
// ambient space through the torus Jacobian. The manufactured solution
// u = (sin 2ph - 2 cos 2ph/(2+cos th)) cos th takes Dirichlet data at ph = 0
// and homogeneous Robin data (beta1 = beta2 = 1) at ph = pi.
inline Fixture semi_torus_l3_problem(index_t n_theta, index_t n_phi,
                                     SamplingMode mode = SamplingMode::well_sampled,
                                     std::uint64_t seed = 1) {
    const double a = 2.0;
    Fixture fx;
    fx.name = "semi_torus_l3";
    detail::torus_common(fx, a, mode, n_theta, n_phi, seed);

    fx.op = OperatorSpec{};
    fx.op.kind = OperatorKind::kolmogorov;
    fx.op.k = 200;
    fx.op.drift = [a](const vec& x) {
        const auto t = detail::torus_angles(x, a);
        vec b(2);
        b[0] = 2.0 + t.st;
        b[1] = 2.0 + t.ct;
        return vec(detail::torus_jacobian(t, a) * b);
    };
    fx.op.diffusion = [a](const vec& x) {
        const auto t = detail::torus_angles(x, a);
        mat c(2, 2);
        c << 3.0 + t.cp, 0.1, 0.1, 2.0;
        const mat Dj = detail::torus_jacobian(t, a);
        return mat(Dj * c * Dj.transpose());
    };

    // u and its intrinsic partials through P = cos th, Q = 2 cos th/(2+cos th)
    struct Parts { double u, ut, up, utt, upp, utp; };
    auto parts = [a](const detail::TorusAngles& t) {
        const double w = a + t.ct;
        const double s2p = 2.0 * t.sp * t.cp, c2p = t.cp * t.cp - t.sp * t.sp;
        const double P = t.ct, Pp = -t.st, Ppp = -t.ct;
        const double Q = 2.0 * t.ct / w;
        const double Qp = -2.0 * a * t.st / (w * w);
        const double Qpp = -2.0 * a * (t.ct * w + 2.0 * t.st * t.st) / (w * w * w);
        Parts p;
        p.u = s2p * P - c2p * Q;
        p.ut = s2p * Pp - c2p * Qp;
        p.up = 2.0 * c2p * P + 2.0 * s2p * Q;
        p.utt = s2p * Ppp - c2p * Qpp;
        p.upp = -4.0 * s2p * P + 4.0 * c2p * Q;
        p.utp = 2.0 * c2p * Pp + 2.0 * s2p * Qp;
        return p;
    };

    fx.u = [a, parts](const vec& x) { return parts(detail::torus_angles(x, a)).u; };
    // f = b . grad u + (1/2) c : Hess u with the covariant Hessian of the
    // torus metric: Hess_{tt} = utt, Hess_{tp} = utp + (st/w) up,
    // Hess_{pp} = upp - st w ut
    fx.f = [a, parts](const vec& x) {
        const auto t = detail::torus_angles(x, a);
        const auto p = parts(t);
        const double w = a + t.ct;
        const double b1 = 2.0 + t.st, b2 = 2.0 + t.ct;
        const double c11 = 3.0 + t.cp, c12 = 0.1, c22 = 2.0;
        const double htt = p.utt;
        const double htp = p.utp + (t.st / w) * p.up;
        const double hpp = p.upp - t.st * w * p.ut;
        return b1 * p.ut + b2 * p.up + 0.5 * c11 * htt + c12 * htp + 0.5 * c22 * hpp;
    };

    // Dirichlet at ph = 0, Robin at ph = pi (outward normal derivative is
    // u_p/w there); the Robin data vanishes identically.
    fx.beta1 = [](const vec& x) { return x[0] < 0 ? 1.0 : 0.0; };
    fx.beta2 = [](const vec&) { return 1.0; };
    fx.g = [a, parts](const vec& x) {
        if (x[0] < 0) return 0.0;  // ph = pi side
        const auto t = detail::torus_angles(x, a);
        return parts(t).u;
    };
    fx.seed = mode == SamplingMode::random ? seed : 0;
    return fx;
}

// Weighted Laplacian with kappa = 1.1 + sin^2 th cos^2 ph and solution
// u = sin ph sin th; boundary data as in the second-order problem
// (Dirichlet at ph = 0, Robin beta1 = beta2 = 1 at ph = pi). The operator
// div(kappa grad u) is discretized in drift-diffusion form, b = grad kappa
// and c = 2 kappa g^{-1} in intrinsic coordinates, so the anisotropic local
// kernel carries the variable weight instead of a density-estimated
// right normalization; that keeps the stencil usable on random clouds.
inline Fixture semi_torus_l2_problem(index_t n_theta, index_t n_phi,
                                     SamplingMode mode = SamplingMode::well_sampled,
                                     std::uint64_t seed = 1) {
    const double a = 2.0;
    Fixture fx;
    fx.name = "semi_torus_l2";
    detail::torus_common(fx, a, mode, n_theta, n_phi, seed);

    fx.op = OperatorSpec{};
    fx.op.kind = OperatorKind::kolmogorov;
    fx.op.k = mode == SamplingMode::well_sampled ? 121 : 0;  // 0: caller sets sqrt(N)
    fx.op.drift = [a](const vec& x) {
        const auto t = detail::torus_angles(x, a);
        const double w = a + t.ct;
        vec b(2);
        b[0] = 2.0 * t.st * t.ct * t.cp * t.cp;              // d kappa / d th
        b[1] = -2.0 * t.st * t.st * t.cp * t.sp / (w * w);   // g^{pp} d kappa / d ph
        return vec(detail::torus_jacobian(t, a) * b);
    };
    fx.op.diffusion = [a](const vec& x) {
        const auto t = detail::torus_angles(x, a);
        const double w = a + t.ct;
        const double kap = 1.1 + t.st * t.st * t.cp * t.cp;
        mat c(2, 2);
        c << 2.0 * kap, 0.0, 0.0, 2.0 * kap / (w * w);
        const mat Dj = detail::torus_jacobian(t, a);
        return mat(Dj * c * Dj.transpose());
    };

    fx.u = [a](const vec& x) {
        const auto t = detail::torus_angles(x, a);
        return t.sp * t.st;
    };
    // f = kappa Lap u + grad kappa . grad u on the torus metric:
    // Lap u = utt - (st/w) ut + upp/w^2, grads contract with diag(1, w^-2)
    fx.f = [a](const vec& x) {
        const auto t = detail::torus_angles(x, a);
        const double w = a + t.ct;
        const double ut = t.sp * t.ct, utt = -t.sp * t.st;
        const double up = t.cp * t.st, upp = -t.sp * t.st;
        const double kap = 1.1 + t.st * t.st * t.cp * t.cp;
        const double kt = 2.0 * t.st * t.ct * t.cp * t.cp;
        const double kp = -2.0 * t.st * t.st * t.cp * t.sp;
        const double lap = utt - (t.st / w) * ut + upp / (w * w);
        return kap * lap + kt * ut + kp * up / (w * w);
    };

    fx.beta1 = [](const vec& x) { return x[0] < 0 ? 1.0 : 0.0; };
    fx.beta2 = [](const vec&) { return 1.0; };
    fx.g = [a](const vec& x) {
        if (x[0] >= 0) return 0.0;  // Dirichlet side: u(th, 0) = 0
        const auto t = detail::torus_angles(x, a);
        const double w = a + t.ct;
        // beta1 u_p/w + beta2 u at ph = pi: cos(pi) st/w + 0
        return -t.st / w;
    };
    fx.seed = mode == SamplingMode::random ? seed : 0;
    return fx;
}

// ---------------------------------------------------------------------------
// Degenerate-weight problem on the flat interval [-1, 1]: weight 1 - x^2
// (extended by |1 - x^2| off the interval so ghost evaluations stay
// nonnegative), spectrum lambda_k = -k(k+1) with polynomial eigenfunctions.
// At the endpoints the operator degenerates to -2x d/dx, which replaces the
// boundary rows of the eigensystem.

inline Fixture legendre_problem(index_t N) {
    require(N >= 16, errc::invalid_argument, "interval grid too small");
    Fixture fx;
    fx.name = "legendre";
    fx.cloud.points.resize(N, 1);
    for (index_t i = 0; i < N; ++i)
        fx.cloud.points(i, 0) = 2.0 * static_cast<double>(i) / static_cast<double>(N - 1) - 1.0;
    fx.cloud.boundary_ids = {0, N - 1};
    fx.cloud.d = 1;

    fx.op = OperatorSpec{};
    fx.op.kind = OperatorKind::weighted_laplacian;
    fx.op.k = 50;
    if (N == 400) fx.op.eps = 1.5e-5;
    fx.op.kappa = [](const vec& x) { return std::abs(1.0 - x[0] * x[0]); };

    fx.normal = [](const vec& x) {
        return (vec(1) << (x[0] < 0 ? -1.0 : 1.0)).finished();
    };

    for (index_t k = 0; k < 20; ++k)
        fx.analytic_eigs.push_back(-static_cast<double>(k * (k + 1)));
    fx.eig_psi = [](index_t k, const vec& xv) {
        // Legendre polynomials by the three-term recurrence
        const double x = xv[0];
        double p0 = 1.0, p1 = x;
        if (k == 0) return p0;
        if (k == 1) return p1;
        for (index_t m = 2; m <= k; ++m) {
            const double pm = ((2.0 * static_cast<double>(m) - 1.0) * x * p1 -
                               (static_cast<double>(m) - 1.0) * p0) /
                              static_cast<double>(m);
            p0 = p1;
            p1 = pm;
        }
        return p1;
    };
    return fx;
}

// Replacement rows for the degenerate endpoints: -2x du/dx by second-order
// one-sided differences on the equispaced interval grid. Columns run over
// n_cols >= N so the rows drop into an augmented-width system unchanged.
inline spmat legendre_boundary_rows(const PointCloud& cloud, index_t n_cols) {
    const index_t N = cloud.size();
    require(N >= 3 && n_cols >= N, errc::invalid_argument, "grid too small for one-sided rows");
    const double dx = cloud.points(1, 0) - cloud.points(0, 0);
    std::vector<triplet> trip;
    // left end x = -1: u' ~ (-3 u_0 + 4 u_1 - u_2)/(2 dx)
    {
        const double c = -2.0 * cloud.points(0, 0) / (2.0 * dx);
        trip.emplace_back(0, 0, -3.0 * c);
        trip.emplace_back(0, 1, 4.0 * c);
        trip.emplace_back(0, 2, -1.0 * c);
    }
    // right end x = +1: u' ~ (3 u_{N-1} - 4 u_{N-2} + u_{N-3})/(2 dx)
    {
        const double c = -2.0 * cloud.points(N - 1, 0) / (2.0 * dx);
        trip.emplace_back(1, static_cast<int>(N - 1), 3.0 * c);
        trip.emplace_back(1, static_cast<int>(N - 2), -4.0 * c);
        trip.emplace_back(1, static_cast<int>(N - 3), 1.0 * c);
    }
    spmat rows(2, n_cols);
    rows.setFromTriplets(trip.begin(), trip.end());
    return rows;
}

// ---------------------------------------------------------------------------
// Unit half circle (cos t, sin t), t in [0, pi]; arclength Laplacian.
// Dirichlet spectrum lambda_k = -k^2 with sin(k t); the Robin pair
// (-du/dnu + u at t=0, du/dnu + u at t=pi) has leading mode lambda_1 = 1 with
// psi_1 = exp(-t), then lambda_k = -(k-1)^2.

enum class CircleBc { dirichlet, robin };

inline Fixture semi_circle(index_t N, CircleBc bc = CircleBc::dirichlet) {
    require(N >= 8, errc::invalid_argument, "semicircle grid too small");
    Fixture fx;
    fx.name = bc == CircleBc::dirichlet ? "semi_circle_dirichlet" : "semi_circle_robin";
    fx.cloud.points.resize(N, 2);
    for (index_t i = 0; i < N; ++i) {
        const double t = static_cast<double>(i) * std::numbers::pi / static_cast<double>(N - 1);
        fx.cloud.points(i, 0) = std::cos(t);
        fx.cloud.points(i, 1) = std::sin(t);
    }
    fx.cloud.boundary_ids = {0, N - 1};
    fx.cloud.d = 1;

    fx.op = OperatorSpec{};
    fx.op.kind = OperatorKind::laplace_beltrami;
    fx.op.k = 50;
    if (N == 400) fx.op.eps = 2.1e-5;

    fx.normal = [](const vec&) { return (vec(2) << 0.0, -1.0).finished(); };

    if (bc == CircleBc::dirichlet) {
        fx.beta1 = [](const vec&) { return 0.0; };
        fx.beta2 = [](const vec&) { return 1.0; };
        for (index_t k = 1; k <= 20; ++k)
            fx.analytic_eigs.push_back(-static_cast<double>(k * k));
        fx.eig_psi = [](index_t k, const vec& x) {
            const double t = detail::half_arc_theta(x[1], x[0]);
            return std::sin(static_cast<double>(k + 1) * t);  // k is 0-based
        };
    } else {
        // beta1 carries the sign flip between the two endpoints
        fx.beta1 = [](const vec& x) { return x[0] > 0 ? -1.0 : 1.0; };
        fx.beta2 = [](const vec&) { return 1.0; };
        fx.analytic_eigs.push_back(1.0);
        for (index_t k = 2; k <= 20; ++k)
            fx.analytic_eigs.push_back(-static_cast<double>((k - 1) * (k - 1)));
        fx.eig_psi = [](index_t k, const vec& x) {
            const double t = detail::half_arc_theta(x[1], x[0]);
            if (k == 0) return std::exp(-t);
            return std::cos(static_cast<double>(k) * t) -
                   std::sin(static_cast<double>(k) * t) / static_cast<double>(k);
        };
    }
    fx.g = [](const vec&) { return 0.0; };
    return fx;
}

}  // namespace gpdm
