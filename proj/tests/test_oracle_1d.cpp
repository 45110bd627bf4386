#include <gpdm/pde.hpp>

#include "support/dense_oracle.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace gpdm;

namespace {

PointCloud half_circle(index_t n) {
    PointCloud c;
    c.points.resize(n, 2);
    for (index_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * std::numbers::pi / static_cast<double>(n - 1);
        c.points(i, 0) = std::cos(t);
        c.points(i, 1) = std::sin(t);
    }
    c.boundary_ids = {0, n - 1};
    c.d = 1;
    return c;
}

// every pinned number a single configuration needs, shared by both paths
struct Config {
    index_t n = 0, k = 0, K = 0;
    double eps = 0;
    OperatorSpec spec;
    dense_oracle::Kind kind = dense_oracle::Kind::plain;
    vec beta1, beta2, g;
    bool dirichlet_only = false;
    double shift = 0;  // constant zeroth-order coefficient, 0 = none
};

double rel_inf(const vec& got, const vec& want) {
    return (got - want).cwiseAbs().maxCoeff() / want.cwiseAbs().maxCoeff();
}

// Run the sparse pipeline and the dense mirror on the same inputs and demand
// agreement far inside both solvers' roundoff on the ghost map, the
// eliminated operator, and the solved boundary-value problem.
void check_agreement(const Config& cfg) {
    PointCloud cloud = half_circle(cfg.n);
    const index_t N = cloud.size();
    vec f(N);
    for (index_t i = 0; i < N; ++i) {
        const double x0 = cloud.points(i, 0), x1 = cloud.points(i, 1);
        f[i] = x0 * x0 - x1 + 0.25 * std::sin(3.0 * x0);
    }
    const vec a = cfg.shift != 0 ? vec(vec::Constant(N, cfg.shift)) : vec();

    // sparse path
    OperatorSpec spec = cfg.spec;
    spec.eps = cfg.eps;
    spec.k = cfg.k;
    const auto index = build_index(cloud.points, cfg.k);
    const auto bd = estimate_boundary(cloud, index);
    const auto ghosts = build_ghosts(cloud, bd, cfg.K);
    const auto Lh = assemble_augmented(cloud, ghosts, spec);
    const index_t J = ghosts.J();
    vec fb(J), ab;
    for (index_t j = 0; j < J; ++j) fb[j] = f[ghosts.boundary.ids[static_cast<std::size_t>(j)]];
    if (a.size()) {
        ab.resize(J);
        for (index_t j = 0; j < J; ++j)
            ab[j] = a[ghosts.boundary.ids[static_cast<std::size_t>(j)]];
    }
    const auto sys = build_extrapolation(Lh, ghosts, fb, ab);
    const auto op = build_gpdm(Lh, sys);
    const SolveReport rep =
        cfg.dirichlet_only
            ? solve_dirichlet(op, ghosts, f, cfg.g, a)
            : solve_robin_neumann(op, ghosts, discretize_bc(ghosts, cfg.beta1, cfg.beta2), f,
                                  cfg.g, a);

    // dense mirror
    dense_oracle::Problem P;
    P.points = cloud.points;
    for (index_t b : cloud.boundary_ids) P.boundary_ids.push_back(b);
    P.k = cfg.k;
    P.eps = cfg.eps;
    P.K = cfg.K;
    P.kind = cfg.kind;
    P.kappa = cfg.spec.kappa;
    P.drift = cfg.spec.drift;
    P.diffusion = cfg.spec.diffusion;
    P.f = f;
    P.a = a;
    P.beta1 = cfg.beta1;
    P.beta2 = cfg.beta2;
    P.g = cfg.g;
    const auto oracle = dense_oracle::run(P);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    vec v(N);
    for (index_t i = 0; i < N; ++i) v[i] = uni(rng);

    const vec ghosts_lib = sys.A * v + sys.b;
    const vec ghosts_ora = oracle.A * v + oracle.b;
    CHECK(rel_inf(ghosts_lib, ghosts_ora) < 1e-9);

    const vec act_lib = op.apply(v);
    const vec act_ora = oracle.Lg * v + oracle.offset;
    CHECK(rel_inf(act_lib, act_ora) < 1e-9);

    CHECK(rel_inf(rep.u_hat, oracle.u_hat) < 1e-9);
}

}  // namespace

TEST_CASE("dense mirror agrees on a Dirichlet arclength problem") {
    Config cfg;
    cfg.n = 60;
    cfg.k = 20;
    cfg.K = 3;
    cfg.eps = 1e-3;
    cfg.spec.kind = OperatorKind::laplace_beltrami;
    cfg.kind = dense_oracle::Kind::plain;
    cfg.beta1 = vec::Zero(2);
    cfg.beta2 = vec::Ones(2);
    cfg.g = (vec(2) << 0.4, -0.1).finished();
    cfg.dirichlet_only = true;
    check_agreement(cfg);
}

TEST_CASE("dense mirror agrees on a shifted Robin arclength problem") {
    Config cfg;
    cfg.n = 60;
    cfg.k = 20;
    cfg.K = 3;
    cfg.eps = 1e-3;
    cfg.spec.kind = OperatorKind::laplace_beltrami;
    cfg.kind = dense_oracle::Kind::plain;
    cfg.beta1 = vec::Ones(2);
    cfg.beta2 = vec::Ones(2);
    cfg.g = (vec(2) << 0.3, -0.2).finished();
    cfg.shift = 0.7;
    check_agreement(cfg);
}

TEST_CASE("dense mirror agrees on a mixed weighted problem") {
    Config cfg;
    cfg.n = 48;
    cfg.k = 16;
    cfg.K = 4;
    cfg.eps = 1.5e-3;
    cfg.spec.kind = OperatorKind::weighted_laplacian;
    cfg.spec.kappa = [](const vec& x) { return 1.1 + x[1]; };
    cfg.kind = dense_oracle::Kind::weighted;
    cfg.beta1 = (vec(2) << 0.0, 1.0).finished();
    cfg.beta2 = vec::Ones(2);
    cfg.g = (vec(2) << 0.15, 0.05).finished();
    check_agreement(cfg);
}

TEST_CASE("dense mirror agrees on a drift-diffusion problem") {
    Config cfg;
    cfg.n = 40;
    cfg.k = 14;
    cfg.K = 2;
    cfg.eps = 2e-3;
    cfg.spec.kind = OperatorKind::kolmogorov;
    cfg.spec.drift = [](const vec& x) {
        return vec((vec(2) << -0.15 * x[1], 0.15 * x[0]).finished());
    };
    cfg.spec.diffusion = [](const vec& x) {
        const vec t = (vec(2) << -x[1], x[0]).finished();
        return mat(2.0 * (1.1 + x[1]) * t * t.transpose());
    };
    cfg.kind = dense_oracle::Kind::drift_diffusion;
    cfg.beta1 = vec::Ones(2);
    cfg.beta2 = vec::Ones(2);
    cfg.g = (vec(2) << -0.1, 0.2).finished();
    cfg.shift = 0.5;
    check_agreement(cfg);
}
