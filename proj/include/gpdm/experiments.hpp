#pragma once

// Named benchmark problems carried through the whole pipeline: bandwidth
// tuning, boundary estimation, ghost construction, operator assembly, ghost
// elimination, then a forward-error probe, a boundary-value solve, or an
// eigensolve. The plain estimator without ghost corrections runs beside each
// as the baseline. The command-line driver and the reproduction suite both go
// through these entry points so they cannot drift apart.

#include "boundary.hpp"
#include "core.hpp"
#include "eig.hpp"
#include "extrapolation.hpp"
#include "fixtures.hpp"
#include "operators.hpp"
#include "pde.hpp"
#include "pointcloud.hpp"

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

namespace gpdm {

enum class Method { dm, gpdm };

inline Method parse_method(const std::string& s) {
    if (s == "dm") return Method::dm;
    if (s == "gpdm") return Method::gpdm;
    throw gpdm_error(errc::invalid_argument, "unknown method '" + s + "' (expected dm or gpdm)");
}

inline OperatorKind parse_operator(const std::string& s) {
    if (s == "l1") return OperatorKind::laplace_beltrami;
    if (s == "l2") return OperatorKind::weighted_laplacian;
    if (s == "l3") return OperatorKind::kolmogorov;
    throw gpdm_error(errc::invalid_argument,
                     "unknown operator '" + s + "' (expected l1, l2 or l3)");
}

namespace detail {

inline index_t grid_side(index_t n) {
    const auto side = static_cast<index_t>(std::llround(std::sqrt(static_cast<double>(n))));
    require(side * side == n, errc::invalid_argument,
            "surface fixtures need a square point budget (n = side * side)");
    return side;
}

inline void check_bc_choice(const std::string& name, const std::string& bc,
                            std::initializer_list<const char*> allowed) {
    if (bc.empty()) return;
    for (const char* s : allowed)
        if (bc == s) return;
    throw gpdm_error(errc::invalid_bc, name + " does not support bc '" + bc + "'");
}

}  // namespace detail

// Instantiate a named problem with a total point budget n. Surfaces interpret
// n as a side * side grid (well-sampled) or as the total draw count (random,
// still required square so the two modes stay size-comparable). bc picks the
// variant where a fixture has several; empty keeps the fixture default.
inline Fixture make_fixture(const std::string& name, index_t n,
                            SamplingMode mode = SamplingMode::well_sampled,
                            std::uint64_t seed = 1, const std::string& bc = "") {
    const bool random = mode == SamplingMode::random;
    if (random)
        require(seed != 0, errc::invalid_argument, "random sampling needs a nonzero seed");
    auto fixed_grid_only = [&] {
        require(!random, errc::invalid_argument, name + " is a fixed-grid fixture");
    };
    if (name == "semi_ellipse") {
        fixed_grid_only();
        detail::check_bc_choice(name, bc, {"robin", "dirichlet", "neumann"});
        if (bc == "dirichlet") return semi_ellipse_dirichlet(n);
        if (bc == "neumann") return semi_ellipse_neumann(n);
        return semi_ellipse(n);
    }
    if (name == "semi_torus") {
        detail::check_bc_choice(name, bc, {"dirichlet"});
        const index_t side = detail::grid_side(n);
        return semi_torus(side, side, 2.0, mode, seed);
    }
    if (name == "semi_torus_l3") {
        detail::check_bc_choice(name, bc, {"mixed"});
        const index_t side = detail::grid_side(n);
        return semi_torus_l3_problem(side, side, mode, seed);
    }
    if (name == "semi_torus_l2") {
        detail::check_bc_choice(name, bc, {"mixed"});
        const index_t side = detail::grid_side(n);
        return semi_torus_l2_problem(side, side, mode, seed);
    }
    if (name == "legendre") {
        fixed_grid_only();
        detail::check_bc_choice(name, bc, {});
        return legendre_problem(n);
    }
    if (name == "semi_circle") {
        fixed_grid_only();
        detail::check_bc_choice(name, bc, {"dirichlet", "robin"});
        return semi_circle(n, bc == "robin" ? CircleBc::robin : CircleBc::dirichlet);
    }
    throw gpdm_error(errc::invalid_argument, "unknown fixture '" + name + "'");
}

inline std::vector<std::string> fixture_names() {
    return {"semi_ellipse", "semi_torus", "semi_torus_l3", "semi_torus_l2",
            "legendre",     "semi_circle"};
}

// A problem taken through every stage shared by the runners below. Fields
// sampled from fixture callbacks stay empty when the fixture does not define
// them; a file-driven caller can fill them afterwards.
struct Pipeline {
    Fixture fx;
    OperatorSpec spec;  // fixture spec with eps and k resolved
    NeighborIndex index;
    BoundaryData boundary;
    GhostSet ghosts;
    DmMatrix Lh;   // manifold rows by manifold + ghost columns
    mat manifold;  // rows the solution lives on (random mode appends ghost seeds)
    vec u_true, f; // sampled on the manifold rows
    vec beta1, beta2, g;  // sampled on the boundary points
    vec a;                // zeroth-order shift on the manifold rows, empty if none
    double eps_used = 0;
};

// eps > 0 pins the bandwidth, 0 defers to the fixture and tunes when the
// fixture does not pin one either; k = 0 keeps the fixture's stencil size.
inline Pipeline run_pipeline(Fixture fixture, double eps = 0, index_t k = 0, index_t K = 6) {
    Pipeline p;
    p.fx = std::move(fixture);
    const PointCloud& cloud = p.fx.cloud;
    cloud.validate();

    p.spec = p.fx.op;
    if (k > 0) p.spec.k = k;
    if (p.spec.k <= 0)  // stencil convention for clouds without a pinned size
        p.spec.k = static_cast<index_t>(std::ceil(std::sqrt(static_cast<double>(cloud.size()))));
    p.index = build_index(cloud.points, p.spec.k);
    if (eps > 0)
        p.spec.eps = eps;
    else if (p.spec.eps <= 0)
        p.spec.eps = tune_bandwidth(cloud.points, p.index, cloud.d).eps_star;
    p.eps_used = p.spec.eps;

    BoundaryOptions bopt;
    bopt.mode = p.fx.seed != 0 ? SamplingMode::random : SamplingMode::well_sampled;
    p.boundary = estimate_boundary(cloud, p.index, bopt);
    p.ghosts = build_ghosts(cloud, p.boundary, K);
    p.Lh = assemble_augmented(cloud, p.ghosts, p.spec);
    p.manifold = p.ghosts.augmented_points(cloud.points).topRows(p.ghosts.n_manifold());

    if (p.fx.u) p.u_true = eval_field(p.fx.u, p.manifold);
    if (p.fx.f) p.f = eval_field(p.fx.f, p.manifold);
    if (p.fx.shift_a) p.a = eval_field(p.fx.shift_a, p.manifold);
    const index_t J = p.ghosts.J();
    if (p.fx.beta1) {
        p.beta1.resize(J);
        p.beta2.resize(J);
        p.g = vec::Zero(J);
        for (index_t j = 0; j < J; ++j) {
            const vec xb = p.manifold.row(p.boundary.ids[j]).transpose();
            p.beta1[j] = p.fx.beta1(xb);
            p.beta2[j] = p.fx.beta2(xb);
            if (p.fx.g) p.g[j] = p.fx.g(xb);
        }
    }
    return p;
}

namespace detail {

inline vec at_boundary(const Pipeline& p, const vec& field) {
    const index_t J = p.ghosts.J();
    vec out(J);
    for (index_t j = 0; j < J; ++j) out[j] = field[p.boundary.ids[j]];
    return out;
}

// Ghost-eliminated operator with the boundary-value problem folded into the
// extrapolation offsets, so apply(u_true) targets f + a u_true row by row.
inline GpdmOperator eliminate(const Pipeline& p) {
    require(p.f.size() == p.manifold.rows(), errc::invalid_argument,
            "pipeline carries no right-hand side");
    const vec fb = at_boundary(p, p.f);
    const vec ab = p.a.size() ? vec(at_boundary(p, p.a)) : vec();
    const auto sys = build_extrapolation(p.Lh, p.ghosts, fb, ab);
    return build_gpdm(p.Lh, sys);
}

}  // namespace detail

struct ForwardError {
    vec residual;       // per row |estimate - target|, target = f + a u
    double fe_inf = 0;  // residual maximum
    double eps = 0;
    index_t N = 0;  // rows measured
};

// Apply the discrete operator to the known solution and compare against the
// right-hand side. The ghost-corrected estimator measures its manifold rows;
// the plain baseline runs on the bare cloud, where the rows at the boundary
// carry the uncorrected one-sided error. Rows at appended ghost seeds sit a
// step off the sampled set and carry a placement error by construction, so
// the metric covers the cloud rows only.
inline ForwardError forward_error(const Pipeline& p, Method method) {
    require(p.u_true.size() == p.manifold.rows(), errc::invalid_argument,
            "forward error needs the exact solution on the manifold rows");
    ForwardError fe;
    fe.eps = p.eps_used;
    const index_t N = p.fx.cloud.size();
    if (method == Method::gpdm) {
        const auto op = detail::eliminate(p);
        vec target = p.f;
        if (p.a.size()) target += p.a.cwiseProduct(p.u_true);
        fe.residual = (op.apply(p.u_true) - target).cwiseAbs().head(N);
    } else {
        const auto plain = assemble(p.fx.cloud.points, N, p.spec);
        vec target = p.f.head(N);
        if (p.a.size()) target += p.a.head(N).cwiseProduct(p.u_true.head(N));
        fe.residual = (plain.L * p.u_true.head(N) - target).cwiseAbs();
    }
    fe.N = fe.residual.size();
    fe.fe_inf = fe.residual.maxCoeff();
    return fe;
}

struct SolveRun {
    SolveReport rep;
    vec u_true;  // empty when the fixture has no exact solution
};

// Solve the fixture's boundary-value problem. Both methods discretize the
// same boundary operator; they differ in how interior rows treat the
// boundary neighborhood.
inline SolveRun solve_run(const Pipeline& p, Method method) {
    require(p.f.size() == p.manifold.rows(), errc::invalid_argument,
            "solve needs a right-hand side on the manifold rows");
    require(p.beta1.size() == p.ghosts.J(), errc::invalid_argument,
            "solve needs boundary coefficients");
    SolveRun run;
    if (method == Method::gpdm) {
        const auto op = detail::eliminate(p);
        const auto bc = discretize_bc(p.ghosts, p.beta1, p.beta2);
        run.rep = solve_robin_neumann(op, p.ghosts, bc, p.f, p.g, p.a);
        run.u_true = p.u_true;
    } else {
        const index_t N = p.fx.cloud.size();
        const vec a_cloud = p.a.size() ? vec(p.a.head(N)) : vec();
        run.rep = solve_dm_baseline(p.fx.cloud, p.index, p.spec, p.boundary, p.beta1, p.beta2,
                                    p.f.head(N), p.g, a_cloud);
        if (p.u_true.size()) run.u_true = p.u_true.head(N);
    }
    run.rep.eps_used = p.eps_used;
    if (run.u_true.size()) {
        // as in forward_error, score only the rows at sampled points
        const index_t N = std::min(p.fx.cloud.size(), run.rep.u_hat.size());
        run.rep.ie_inf = (run.rep.u_hat.head(N) - run.u_true.head(N)).cwiseAbs().maxCoeff();
    }
    return run;
}

// Eigensolve on the fixture. Fixtures without a boundary operator use the
// replacement rows for degenerate endpoints instead of eliminating boundary
// conditions.
inline EigReport eigs_run(const Pipeline& p, Method method, index_t m_req) {
    if (!p.fx.beta1) {
        require(p.fx.name == "legendre", errc::invalid_argument,
                "fixture has no boundary operator");
        if (method == Method::gpdm) {
            const auto brows = legendre_boundary_rows(p.fx.cloud, p.ghosts.n_manifold());
            return gpdm_eigs_replaced_rows(p.Lh, p.ghosts, brows, m_req);
        }
        const auto brows = legendre_boundary_rows(p.fx.cloud, p.fx.cloud.size());
        return dm_eigs_replaced_rows(p.fx.cloud, p.spec, p.fx.cloud.boundary_ids, brows, m_req);
    }
    if (method == Method::gpdm) return gpdm_eigs(p.Lh, p.ghosts, p.beta1, p.beta2, m_req);
    return dm_eigs(p.fx.cloud, p.index, p.spec, p.boundary, p.beta1, p.beta2, m_req);
}

struct SweepPoint {
    index_t n = 0;
    double value = 0;  // trial-averaged error
    double eps = 0;    // bandwidth of the last trial
};

struct SweepResult {
    std::vector<SweepPoint> points;
    double slope = 0;  // log-log fit of value against n
};

// Error against point budget over a list of sizes. metric "fe" probes the
// forward error of the known solution, "ie" the sup error of the solved one.
// Random-mode fixtures average over `trials` consecutive seeds.
inline SweepResult convergence_sweep(const std::string& fixture, const std::vector<index_t>& ns,
                                     Method method, const std::string& metric, double eps = 0,
                                     index_t k = 0, index_t K = 6,
                                     SamplingMode mode = SamplingMode::well_sampled,
                                     std::uint64_t seed = 1, index_t trials = 1,
                                     const std::string& bc = "") {
    require(!ns.empty(), errc::invalid_argument, "convergence sweep needs point budgets");
    require(trials >= 1, errc::invalid_argument, "trials must be positive");
    require(metric == "fe" || metric == "ie", errc::invalid_argument,
            "unknown metric '" + metric + "' (expected fe or ie)");
    SweepResult res;
    std::vector<double> xs, ys;
    for (const index_t n : ns) {
        SweepPoint pt;
        pt.n = n;
        for (index_t t = 0; t < trials; ++t) {
            const auto fx = make_fixture(fixture, n, mode, seed + static_cast<std::uint64_t>(t), bc);
            const auto p = run_pipeline(fx, eps, k, K);
            pt.value += metric == "fe" ? forward_error(p, method).fe_inf
                                       : solve_run(p, method).rep.ie_inf;
            pt.eps = p.eps_used;
        }
        pt.value /= static_cast<double>(trials);
        res.points.push_back(pt);
        xs.push_back(static_cast<double>(n));
        ys.push_back(pt.value);
    }
    res.slope = xs.size() >= 2 ? loglog_slope(xs, ys) : 0.0;
    return res;
}

struct NormalCheck {
    double err_mean = 0;  // mean Euclidean gap between estimated and exact normals
    double eps = 0;       // regression bandwidth used
};

// Accuracy of the estimated outward normals on a randomly sampled cloud,
// against the fixture's analytic normal field. The regression bandwidth is
// pinned to eps1 when positive, otherwise to the tuned kernel bandwidth.
inline NormalCheck normal_check(const Fixture& fx, double eps1 = 0, index_t k = 0) {
    require(static_cast<bool>(fx.normal), errc::invalid_argument,
            "fixture has no analytic normal field");
    NormalCheck nc;
    const index_t kk = k > 0 ? k : (fx.op.k > 0 ? fx.op.k : 50);
    const auto index = build_index(fx.cloud.points, kk);
    nc.eps = eps1 > 0 ? eps1 : tune_bandwidth(fx.cloud.points, index, fx.cloud.d).eps_star;
    BoundaryOptions bopt;
    bopt.mode = fx.seed != 0 ? SamplingMode::random : SamplingMode::well_sampled;
    bopt.eps1 = nc.eps;
    const auto bd = estimate_boundary(fx.cloud, index, bopt);
    for (index_t j = 0; j < bd.J(); ++j) {
        const vec xb = fx.cloud.points.row(bd.ids[j]).transpose();
        nc.err_mean += (bd.normals.row(j).transpose() - fx.normal(xb)).norm();
    }
    nc.err_mean /= static_cast<double>(bd.J());
    return nc;
}

}  // namespace gpdm
