#include <gpdm/pde.hpp>
#include <gpdm/fixtures.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace gpdm;

namespace {

template <class F>
errc code_of(F&& fn) {
    try {
        fn();
    } catch (const gpdm_error& e) {
        return e.code();
    }
    throw std::runtime_error("expected a gpdm_error");
}

// one boundary point with h = 0.5 and the second manifold sample as g0,
// enough to freeze the boundary-row entries by hand
GhostSet tiny_ghosts() {
    GhostSet gs;
    gs.K = 3;
    gs.n_cloud = 4;
    gs.boundary.ids = {0};
    gs.boundary.mode = SamplingMode::well_sampled;
    gs.boundary.g0_ids = {1};
    gs.boundary.normals = mat::Constant(1, 1, -1.0);
    gs.boundary.spacing = vec::Constant(1, 0.5);
    gs.interior = mat::Constant(1, 1, 0.5);
    gs.layers.resize(3, 1);
    gs.layers << -0.5, -1.0, -1.5;
    return gs;
}

// full ghost pipeline for a fixture: tune (unless pinned), estimate the
// boundary, place ghosts, assemble, eliminate
struct Built {
    GhostSet gs;
    GpdmOperator op;
    DmMatrix dm;
    vec f, fb, g, b1, b2, a, u_true;
};

Built build_problem(const Fixture& fx, index_t K) {
    Built o;
    const auto index = build_index(fx.cloud.points, fx.op.k);
    OperatorSpec spec = fx.op;
    if (spec.eps <= 0)
        spec.eps = tune_bandwidth(fx.cloud.points, index, static_cast<int>(fx.cloud.d)).eps_star;
    const BoundaryData bd = estimate_boundary(fx.cloud, index);
    o.gs = build_ghosts(fx.cloud, bd, K);
    o.dm = assemble_augmented(fx.cloud, o.gs, spec);

    const mat aug = o.gs.augmented_points(fx.cloud.points);
    const index_t nm = o.gs.n_manifold(), J = o.gs.J();
    o.f.resize(nm);
    o.u_true.resize(nm);
    for (index_t i = 0; i < nm; ++i) {
        const vec x = aug.row(i).transpose();
        o.f[i] = fx.f(x);
        o.u_true[i] = fx.u(x);
    }
    o.fb.resize(J);
    o.g.resize(J);
    o.b1.resize(J);
    o.b2.resize(J);
    vec ab;
    for (index_t j = 0; j < J; ++j) {
        const vec xb = fx.cloud.points.row(o.gs.boundary.ids[static_cast<std::size_t>(j)]).transpose();
        o.fb[j] = fx.f(xb);
        o.g[j] = fx.g(xb);
        o.b1[j] = fx.beta1(xb);
        o.b2[j] = fx.beta2(xb);
    }
    if (fx.shift_a) {
        o.a.resize(nm);
        for (index_t i = 0; i < nm; ++i) o.a[i] = fx.shift_a(aug.row(i).transpose());
        ab.resize(J);
        for (index_t j = 0; j < J; ++j)
            ab[j] = fx.shift_a(fx.cloud.points.row(o.gs.boundary.ids[static_cast<std::size_t>(j)]).transpose());
    }
    const auto sys = build_extrapolation(o.dm, o.gs, o.fb, ab);
    o.op = build_gpdm(o.dm, sys);
    return o;
}

double sup_err(const vec& u, const vec& v) { return (u - v).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("boundary rows freeze the two-entry difference pattern") {
    const GhostSet gs = tiny_ghosts();

    SECTION("Robin row") {
        const auto bc = discretize_bc(gs, vec::Constant(1, 1.0), vec::Constant(1, 3.0));
        REQUIRE(bc.rows.rows() == 1);
        REQUIRE(bc.rows.cols() == 4);
        const mat B(bc.rows);
        CHECK(B(0, 0) == Catch::Approx(5.0).margin(1e-14));   // 1/h + beta2
        CHECK(B(0, 1) == Catch::Approx(-2.0).margin(1e-14));  // -1/h at g0
        CHECK(B(0, 2) == 0.0);
        CHECK(B(0, 3) == 0.0);
    }
    SECTION("Dirichlet row touches only the boundary sample") {
        const auto bc = discretize_bc(gs, vec::Zero(1), vec::Constant(1, 3.0));
        const mat B(bc.rows);
        CHECK(B(0, 0) == 3.0);
        CHECK(B.row(0).cwiseAbs().sum() == 3.0);
    }
    SECTION("an empty condition is rejected") {
        CHECK(code_of([&] { discretize_bc(gs, vec::Zero(1), vec::Zero(1)); }) == errc::invalid_bc);
        CHECK(code_of([&] { discretize_bc(gs, vec::Zero(2), vec::Zero(1)); }) ==
              errc::invalid_argument);
    }
}

TEST_CASE("boundary rows are first-order consistent on the half ellipse") {
    // applied to the true trace they reproduce the Robin data to O(h);
    // N = 100 hits the grid endpoint whose angle rounds past pi, so it also
    // guards the branch correction in the manufactured fields
    std::vector<double> Ns, errs;
    for (index_t N : {100, 200, 400, 800}) {
        const Fixture fx = semi_ellipse(N);
        const auto index = build_index(fx.cloud.points, fx.op.k);
        const BoundaryData bd = estimate_boundary(fx.cloud, index);
        const GhostSet gs = build_ghosts(fx.cloud, bd, 2);
        const index_t J = gs.J();
        vec b1(J), b2(J), g(J);
        for (index_t j = 0; j < J; ++j) {
            const vec xb = fx.cloud.points.row(gs.boundary.ids[static_cast<std::size_t>(j)]).transpose();
            b1[j] = fx.beta1(xb);
            b2[j] = fx.beta2(xb);
            g[j] = fx.g(xb);
        }
        const auto bc = discretize_bc(gs, b1, b2);
        const vec u = eval_field(fx.u, fx.cloud.points);
        errs.push_back((bc.rows * u - g).cwiseAbs().maxCoeff());
        Ns.push_back(static_cast<double>(N));
    }
    CHECK(errs.front() < 0.02);
    const double slope = loglog_slope(Ns, errs);
    CHECK(slope > -1.3);
    CHECK(slope < -0.7);
}

TEST_CASE("a constant solves the shifted homogeneous Neumann problem exactly") {
    // u = 1.5 with shift a = 1: L u = 0, f = -1.5, du/dnu = 0. The shift must
    // reach both the ghost closure and the reduced solve for this to hold.
    Fixture fx = semi_ellipse(150);
    fx.u = [](const vec&) { return 1.5; };
    fx.f = [](const vec&) { return -1.5; };
    fx.g = [](const vec&) { return 0.0; };
    fx.beta1 = [](const vec&) { return 1.0; };
    fx.beta2 = [](const vec&) { return 0.0; };
    fx.shift_a = [](const vec&) { return 1.0; };

    const Built b = build_problem(fx, 5);
    const auto bc = discretize_bc(b.gs, b.b1, b.b2);
    const auto rep = solve_robin_neumann(b.op, b.gs, bc, b.f, b.g, b.a);
    CHECK(sup_err(rep.u_hat, vec::Constant(150, 1.5)) < 1e-9);
    CHECK(rep.residual_inf < 1e-9);
}

TEST_CASE("manufactured ellipse problems solve with clean reports") {
    SECTION("Robin") {
        const Fixture fx = semi_ellipse(400);
        const Built b = build_problem(fx, 6);
        const auto bc = discretize_bc(b.gs, b.b1, b.b2);
        const auto rep = solve_robin_neumann(b.op, b.gs, bc, b.f, b.g);
        CHECK(sup_err(rep.u_hat, b.u_true) < 6e-3);
        CHECK(rep.residual_inf < 1e-9);
        CHECK(rep.dominance_margin > -1e-9);
        CHECK(rep.nonconvergent_warning == (rep.dominance_margin < -1e-12));
        CHECK(rep.eps_used > 0);
        CHECK(rep.N == 400);
        CHECK(rep.J == 2);
        CHECK(rep.K == 6);
    }
    SECTION("Dirichlet") {
        const Fixture fx = semi_ellipse_dirichlet(400);
        const Built b = build_problem(fx, 6);
        const auto rep = solve_dirichlet(b.op, b.gs, b.f, b.g);
        CHECK(sup_err(rep.u_hat, b.u_true) < 3e-3);
        CHECK(rep.residual_inf < 1e-9);
        CHECK(rep.dominance_margin > -1e-9);
        // boundary unknowns substitute exactly
        for (index_t j = 0; j < b.gs.J(); ++j)
            CHECK(std::abs(rep.u_hat[b.gs.boundary.ids[static_cast<std::size_t>(j)]] - b.g[j]) < 1e-13);
    }
}

TEST_CASE("a positive shift is inherited by the dominance margin") {
    // with a = 0.7 every interior row gains 0.7 of slack while the Robin rows
    // keep beta2 = 1/2, so the reported margin is their minimum
    Fixture fx = semi_ellipse(300);
    const auto u0 = fx.u, f0 = fx.f;
    fx.f = [u0, f0](const vec& x) { return f0(x) - 0.7 * u0(x); };
    fx.shift_a = [](const vec&) { return 0.7; };

    const Built b = build_problem(fx, 6);
    const auto bc = discretize_bc(b.gs, b.b1, b.b2);
    const auto rep = solve_robin_neumann(b.op, b.gs, bc, b.f, b.g, b.a);
    CHECK(sup_err(rep.u_hat, b.u_true) < 6e-3);
    CHECK(rep.dominance_margin == Catch::Approx(0.5).margin(1e-6));
    CHECK_FALSE(rep.nonconvergent_warning);
}

TEST_CASE("one-dimensional Poisson matches the classical difference oracle") {
    const index_t n = 81;
    const double pi = std::numbers::pi;
    Fixture fx;
    fx.cloud.points.resize(n, 1);
    for (index_t i = 0; i < n; ++i)
        fx.cloud.points(i, 0) = static_cast<double>(i) / static_cast<double>(n - 1);
    fx.cloud.boundary_ids = {0, n - 1};
    fx.cloud.d = 1;
    fx.op.kind = OperatorKind::laplace_beltrami;
    fx.op.k = 12;
    fx.u = [pi](const vec& x) { return std::sin(pi * x[0]); };
    fx.f = [pi](const vec& x) { return -pi * pi * std::sin(pi * x[0]); };
    fx.g = [](const vec&) { return 0.0; };
    fx.beta1 = [](const vec&) { return 0.0; };
    fx.beta2 = [](const vec&) { return 1.0; };

    const Built b = build_problem(fx, 4);
    const auto rep = solve_dirichlet(b.op, b.gs, b.f, b.g);
    CHECK(rep.residual_inf < 1e-9);
    CHECK(sup_err(rep.u_hat, b.u_true) < 2e-3);

    // second-difference solve of the same two-point problem
    const double h = 1.0 / static_cast<double>(n - 1);
    mat A = mat::Zero(n - 2, n - 2);
    vec rhs(n - 2);
    for (index_t i = 0; i < n - 2; ++i) {
        A(i, i) = -2.0 / (h * h);
        if (i > 0) A(i, i - 1) = 1.0 / (h * h);
        if (i + 1 < n - 2) A(i, i + 1) = 1.0 / (h * h);
        rhs[i] = b.f[i + 1];
    }
    vec u_fd = vec::Zero(n);
    u_fd.segment(1, n - 2) = A.fullPivLu().solve(rhs);
    CHECK(sup_err(u_fd, b.u_true) < 2e-3);
    CHECK(sup_err(rep.u_hat, u_fd) < 2e-3);
}

TEST_CASE("random Dirichlet data obeys the discrete maximum principle") {
    Fixture fx = semi_ellipse_dirichlet(120);
    const auto index = build_index(fx.cloud.points, fx.op.k);
    fx.op.eps = tune_bandwidth(fx.cloud.points, index, 1).eps_star;
    const BoundaryData bd = estimate_boundary(fx.cloud, index);
    const GhostSet gs = build_ghosts(fx.cloud, bd, 5);
    const DmMatrix dm = assemble_augmented(fx.cloud, gs, fx.op);
    const index_t N = gs.n_manifold(), J = gs.J();

    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937 rng(static_cast<unsigned>(seed));
        std::uniform_real_distribution<double> fpos(0.5, 1.5), gd(-1.0, 1.0);
        vec f(N), fb(J), g(J);
        for (index_t i = 0; i < N; ++i) f[i] = fpos(rng);
        for (index_t j = 0; j < J; ++j) {
            fb[j] = f[gs.boundary.ids[static_cast<std::size_t>(j)]];
            g[j] = gd(rng);
        }
        // L u > 0 everywhere: the maximum sits on the boundary
        {
            const auto sys = build_extrapolation(dm, gs, fb);
            const auto rep = solve_dirichlet(build_gpdm(dm, sys), gs, f, g);
            CHECK(rep.u_hat.maxCoeff() <= g.maxCoeff() + 1e-10);
        }
        // mirrored sign: the minimum sits on the boundary
        {
            const auto sys = build_extrapolation(dm, gs, vec(-fb));
            const auto rep = solve_dirichlet(build_gpdm(dm, sys), gs, vec(-f), g);
            CHECK(rep.u_hat.minCoeff() >= g.minCoeff() - 1e-10);
        }
    }
}

TEST_CASE("directional stencil differentiates exactly on a flat half plane") {
    mat pts(7, 2);
    pts << 0.0, 0.0,    // boundary point, outward normal (0, -1)
           -0.08, 0.12,
           0.09, 0.11,
           0.0, 0.25,
           -0.2, 0.3,
           0.25, 0.28,
           0.05, 0.4;
    PointCloud cloud;
    cloud.points = pts;
    cloud.boundary_ids = {0};
    cloud.d = 2;
    const auto index = build_index(cloud.points, 6);
    const vec nu = (vec(2) << 0.0, -1.0).finished();

    vec u(7);
    for (index_t i = 0; i < 7; ++i) u[i] = 2.0 * pts(i, 0) + 3.0 * pts(i, 1) - 1.0;
    bool fb = true;
    const double d = normal_derivative_stencil(cloud, index, 0, nu, u, &fb);
    CHECK_FALSE(fb);
    CHECK(d == Catch::Approx(-3.0).margin(1e-10));

    const auto row = normal_derivative_row(cloud, index, 0, nu);
    REQUIRE(row.ids.size() == 3);
    CHECK(row.ids[0] == 0);
}

TEST_CASE("mirror-image stencil neighbors get equal weights") {
    mat pts(5, 2);
    pts << 0.0, 0.0,
           -0.08, 0.12,
           0.08, 0.12,
           0.0, 0.3,
           0.0, 0.45;
    PointCloud cloud;
    cloud.points = pts;
    cloud.boundary_ids = {0};
    cloud.d = 2;
    const auto index = build_index(cloud.points, 4);
    const vec nu = (vec(2) << 0.0, -1.0).finished();

    const auto row = normal_derivative_row(cloud, index, 0, nu);
    REQUIRE(row.ids.size() == 3);
    CHECK_FALSE(row.fallback);
    CHECK(row.coef[1] == Catch::Approx(row.coef[2]).margin(1e-10));
}

TEST_CASE("stencil derivative converges at first order along the semicircle") {
    // only one admissible side exists at a curve endpoint, so the one-sided
    // fallback carries the estimate; u = cos t has du/dnu = 0 at t = 0
    std::vector<double> Ns, errs;
    for (index_t N : {50, 100, 200, 400, 800}) {
        const Fixture fx = semi_circle(N);
        const auto index = build_index(fx.cloud.points, 12);
        vec u(fx.cloud.size());
        for (index_t i = 0; i < fx.cloud.size(); ++i) u[i] = fx.cloud.points(i, 0);
        const vec nu = fx.normal(fx.cloud.points.row(0).transpose());
        bool fb = false;
        const double d = normal_derivative_stencil(fx.cloud, index, fx.cloud.boundary_ids[0], nu, u, &fb);
        CHECK(fb);
        Ns.push_back(static_cast<double>(N));
        errs.push_back(std::abs(d));
    }
    const double slope = loglog_slope(Ns, errs);
    CHECK(slope > -1.3);
    CHECK(slope < -0.7);
}

TEST_CASE("stencil falls back to the best-aligned neighbor outside the window") {
    mat pts(4, 2);
    pts << 0.0, 0.0,
           1.0, 0.1,    // 5.7 degrees off tangent, outside the 45 degree cone
           -1.0, 0.05,
           2.0, 0.0;
    PointCloud cloud;
    cloud.points = pts;
    cloud.boundary_ids = {0};
    cloud.d = 2;
    const auto index = build_index(cloud.points, 3);
    const vec nu = (vec(2) << 0.0, -1.0).finished();

    const auto row = normal_derivative_row(cloud, index, 0, nu);
    CHECK(row.fallback);
    REQUIRE(row.ids.size() == 2);
    CHECK(row.ids[1] == 1);
    const double dist = std::hypot(1.0, 0.1);
    CHECK(row.coef[0] == Catch::Approx(1.0 / dist));
    CHECK(row.coef[1] == Catch::Approx(-1.0 / dist));
}

TEST_CASE("nearly collinear stencil neighbors are rejected") {
    mat pts(3, 2);
    pts << 0.0, 0.0,
           -1e-9, 0.1,
           1.1e-9, 0.11;
    PointCloud cloud;
    cloud.points = pts;
    cloud.boundary_ids = {0};
    cloud.d = 2;
    const auto index = build_index(cloud.points, 2);
    const vec nu = (vec(2) << 0.0, -1.0).finished();
    CHECK(code_of([&] { normal_derivative_row(cloud, index, 0, nu); }) ==
          errc::degenerate_geometry);
}

TEST_CASE("ghost and stencil closures agree on the Neumann ellipse") {
    const Fixture fx = semi_ellipse_neumann(300);
    const Built b = build_problem(fx, 6);
    const auto bc = discretize_bc(b.gs, b.b1, b.b2);
    const auto rep = solve_robin_neumann(b.op, b.gs, bc, b.f, b.g, b.a);
    CHECK(sup_err(rep.u_hat, b.u_true) < 6e-3);

    const auto index = build_index(fx.cloud.points, fx.op.k);
    OperatorSpec spec = fx.op;
    spec.eps = b.dm.eps;
    const BoundaryData bd = estimate_boundary(fx.cloud, index);
    const auto repdm = solve_dm_baseline(fx.cloud, index, spec, bd, b.b1, b.b2, b.f, b.g, b.a);
    CHECK(repdm.K == 0);
    CHECK(sup_err(repdm.u_hat, b.u_true) < 6e-3);

    const double ratio =
        sup_err(repdm.u_hat, b.u_true) / sup_err(rep.u_hat, b.u_true);
    CHECK(ratio > 0.2);
    CHECK(ratio < 5.0);
}

TEST_CASE("relabeling the cloud permutes the Dirichlet solution") {
    Fixture fx = semi_ellipse_dirichlet(80);
    const auto index0 = build_index(fx.cloud.points, fx.op.k);
    fx.op.eps = tune_bandwidth(fx.cloud.points, index0, 1).eps_star;
    const Built b = build_problem(fx, 4);
    const auto rep = solve_dirichlet(b.op, b.gs, b.f, b.g);

    const index_t n = fx.cloud.size();
    std::vector<index_t> to_new(static_cast<std::size_t>(n));
    for (index_t i = 0; i < n; ++i) to_new[static_cast<std::size_t>(i)] = i;
    std::mt19937 rng(7);
    std::shuffle(to_new.begin(), to_new.end(), rng);

    Fixture fy = fx;
    fy.cloud.points.resize(n, 2);
    for (index_t i = 0; i < n; ++i)
        fy.cloud.points.row(to_new[static_cast<std::size_t>(i)]) = fx.cloud.points.row(i);
    fy.cloud.boundary_ids = {to_new[0], to_new[static_cast<std::size_t>(n - 1)]};

    const Built b2 = build_problem(fy, 4);
    const auto rep2 = solve_dirichlet(b2.op, b2.gs, b2.f, b2.g);
    for (index_t i = 0; i < n; ++i)
        CHECK(rep2.u_hat[to_new[static_cast<std::size_t>(i)]] ==
              Catch::Approx(rep.u_hat[i]).margin(1e-8));
}

TEST_CASE("Neumann points demand a positive shift") {
    const Fixture fx = semi_ellipse_neumann(100);
    const Built b = build_problem(fx, 4);
    const auto bc = discretize_bc(b.gs, b.b1, b.b2);
    CHECK(code_of([&] { solve_robin_neumann(b.op, b.gs, bc, b.f, b.g); }) == errc::invalid_bc);
    CHECK(code_of([&] {
              solve_robin_neumann(b.op, b.gs, bc, b.f, b.g, vec::Zero(b.gs.n_manifold()));
          }) == errc::invalid_bc);

    const auto index = build_index(fx.cloud.points, fx.op.k);
    OperatorSpec spec = fx.op;
    spec.eps = b.dm.eps;
    const BoundaryData bd = estimate_boundary(fx.cloud, index);
    CHECK(code_of([&] {
              solve_dm_baseline(fx.cloud, index, spec, bd, b.b1, b.b2, b.f, b.g);
          }) == errc::invalid_bc);
}

TEST_CASE("solver rejects inconsistent right-hand sides") {
    const Fixture fx = semi_ellipse_dirichlet(60);
    const Built b = build_problem(fx, 3);
    CHECK(code_of([&] { solve_dirichlet(b.op, b.gs, vec::Zero(10), b.g); }) ==
          errc::invalid_argument);
    CHECK(code_of([&] { solve_dirichlet(b.op, b.gs, b.f, vec::Zero(5)); }) ==
          errc::invalid_argument);
}
