// gpdm: mesh-free elliptic operators on point clouds with boundary.
//
// Subcommands
//   tune           scan kernel bandwidths, report the selected one
//   forward-error  apply the operator to the known solution, report residuals
//   solve          boundary-value solve, ghost-corrected or plain baseline
//   eigs           eigenvalues and eigenfunctions
//   convergence    error against point budget with a log-log slope fit
//
// Problems come from a named fixture (--fixture) or from files (--cloud CSV
// plus --boundary JSON, restricted to the plain Laplacian since coefficient
// fields cannot be read from a file). Every run writes CSV tables and a
// report.json under --out. Exit codes: 0 success, 2 bad usage or bad input,
// 3 numerical failure; report.json is written on 0 and 3.

#include <gpdm/gpdm.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using gpdm::index_t;
using gpdm::vec;

namespace {

struct Opts {
    std::string config;
    std::string fixture;
    std::string cloud_path, boundary_path;
    std::string method = "gpdm";
    std::string op;  // empty keeps the fixture operator; file runs default to l1
    std::string eps = "auto";
    index_t k = 0;  // 0 keeps the fixture stencil size (50 for file runs)
    index_t layers = 6;
    std::string mode = "well";
    std::string bc;  // empty keeps the fixture default (dirichlet for file runs)
    std::vector<index_t> sweep;
    std::uint64_t seed = 1;
    std::string out = ".";
    index_t n = 400;
    index_t modes = 10;
    std::string metric = "ie";
    index_t trials = 1;
    std::string test_fn = "default";
    std::string rhs_path;
    double beta1 = 1.0, beta2 = 1.0, g = 0.0, shift = 0.0;
};

double parse_eps(const std::string& s) {
    if (s == "auto") return 0.0;
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    gpdm::require(pos == s.size() && v > 0, gpdm::errc::invalid_argument,
                  "--eps expects a positive number or 'auto', got '" + s + "'");
    return v;
}

gpdm::SamplingMode parse_mode(const std::string& s) {
    if (s == "well") return gpdm::SamplingMode::well_sampled;
    if (s == "random") return gpdm::SamplingMode::random;
    throw gpdm::gpdm_error(gpdm::errc::invalid_argument,
                           "unknown mode '" + s + "' (expected well or random)");
}

const char* operator_token(gpdm::OperatorKind kind) {
    switch (kind) {
        case gpdm::OperatorKind::laplace_beltrami:   return "l1";
        case gpdm::OperatorKind::weighted_laplacian: return "l2";
        case gpdm::OperatorKind::kolmogorov:         return "l3";
    }
    return "?";
}

bool file_driven(const Opts& o) { return !o.cloud_path.empty() || !o.boundary_path.empty(); }

// Build the problem the flags describe. Fixture runs take everything from the
// registry; file runs assemble a plain-Laplacian problem with constant
// boundary coefficients.
gpdm::Fixture make_problem(const Opts& o) {
    if (!file_driven(o)) {
        gpdm::require(!o.fixture.empty(), gpdm::errc::invalid_argument,
                      "pass --fixture NAME or --cloud/--boundary files");
        auto fx = gpdm::make_fixture(o.fixture, o.n, parse_mode(o.mode), o.seed, o.bc);
        gpdm::require(o.op.empty() || o.op == operator_token(fx.op.kind),
                      gpdm::errc::invalid_argument,
                      o.fixture + " pins operator " + operator_token(fx.op.kind));
        return fx;
    }
    gpdm::require(!o.cloud_path.empty() && !o.boundary_path.empty(), gpdm::errc::invalid_argument,
                  "file runs need both --cloud and --boundary");
    gpdm::require(o.mode == "well", gpdm::errc::invalid_argument,
                  "file runs support well-sampled clouds only");
    gpdm::require(o.op.empty() || o.op == "l1", gpdm::errc::invalid_argument,
                  "file runs support only the l1 operator");
    gpdm::Fixture fx;
    fx.name = "cloud";
    fx.cloud = gpdm::read_cloud(o.cloud_path, o.boundary_path);
    fx.op.kind = gpdm::OperatorKind::laplace_beltrami;
    fx.op.k = o.k > 0 ? o.k : 50;

    const std::string bc = o.bc.empty() ? "dirichlet" : o.bc;
    double b1 = 0, b2 = 1;
    if (bc == "robin") {
        b1 = o.beta1;
        b2 = o.beta2;
        gpdm::require(b1 != 0 && b2 != 0, gpdm::errc::invalid_bc,
                      "robin needs nonzero --beta1 and --beta2");
    } else if (bc == "neumann") {
        b1 = o.beta1;
        b2 = 0;
        gpdm::require(b1 != 0, gpdm::errc::invalid_bc, "neumann needs nonzero --beta1");
        gpdm::require(o.shift > 0, gpdm::errc::invalid_bc,
                      "a pure-flux problem is singular; pass --shift A with A > 0");
    } else {
        gpdm::require(bc == "dirichlet", gpdm::errc::invalid_bc,
                      "file runs support bc dirichlet, neumann or robin");
    }
    fx.beta1 = [b1](const vec&) { return b1; };
    fx.beta2 = [b2](const vec&) { return b2; };
    const double gv = o.g;
    fx.g = [gv](const vec&) { return gv; };
    if (o.shift > 0) {
        const double av = o.shift;
        fx.shift_a = [av](const vec&) { return av; };
    }
    return fx;
}

void apply_test_fn(gpdm::Fixture& fx, const std::string& test_fn) {
    if (test_fn == "default") return;
    gpdm::require(test_fn == "constant", gpdm::errc::invalid_argument,
                  "unknown --test-fn '" + test_fn + "' (expected default or constant)");
    // constants are in the operator's null space, so the target is zero
    fx.u = [](const vec&) { return 1.0; };
    fx.f = [](const vec&) { return 0.0; };
    fx.shift_a = {};
}

gpdm::Pipeline make_pipeline(const Opts& o, const gpdm::Fixture& fx) {
    auto p = gpdm::run_pipeline(fx, parse_eps(o.eps), o.k, o.layers);
    if (!o.rhs_path.empty()) {
        const gpdm::mat col = gpdm::read_cloud_csv(o.rhs_path);
        gpdm::require(col.cols() == 1 && col.rows() == p.manifold.rows(),
                      gpdm::errc::invalid_argument,
                      "--rhs expects one value per manifold row");
        p.f = col.col(0);
    } else if (!p.f.size() && file_driven(o)) {
        p.f = vec::Zero(p.manifold.rows());
    }
    return p;
}

fs::path out_file(const Opts& o, const char* name) {
    fs::create_directories(o.out);
    return fs::path(o.out) / name;
}

gpdm::json envelope(const Opts& o, const char* command) {
    gpdm::json j;
    j["status"] = "ok";
    j["command"] = command;
    j["input"] = file_driven(o) ? o.cloud_path : o.fixture;
    j["method"] = o.method;
    j["mode"] = o.mode;
    j["seed"] = o.seed;
    return j;
}

vec iota(index_t n) {
    vec v(n);
    for (index_t i = 0; i < n; ++i) v[i] = static_cast<double>(i);
    return v;
}

int cmd_tune(const Opts& o) {
    gpdm::PointCloud cloud;
    index_t k = o.k;
    if (file_driven(o)) {
        gpdm::require(!o.cloud_path.empty() && !o.boundary_path.empty(),
                      gpdm::errc::invalid_argument, "file runs need both --cloud and --boundary");
        cloud = gpdm::read_cloud(o.cloud_path, o.boundary_path);
        if (k <= 0) k = 50;
    } else {
        const auto fx = make_problem(o);
        cloud = fx.cloud;
        if (k <= 0) k = fx.op.k > 0 ? fx.op.k : 50;
    }
    const auto index = gpdm::build_index(cloud.points, k);
    const auto br = gpdm::tune_bandwidth(cloud.points, index, cloud.d);
    gpdm::write_table_csv(out_file(o, "tune.csv").string(), {"eps", "s"}, {br.eps_grid, br.S});

    auto j = envelope(o, "tune");
    j["k"] = k;
    j["report"] = gpdm::to_json(br);
    gpdm::write_json_file(out_file(o, "report.json").string(), j);
    std::cout << "eps_star " << gpdm::fmt_g(br.eps_star) << "  d_est " << gpdm::fmt_g(br.d_est)
              << "\n";
    return 0;
}

int cmd_forward_error(const Opts& o) {
    gpdm::require(!file_driven(o), gpdm::errc::invalid_argument,
                  "forward-error needs a fixture with a known solution");
    const auto method = gpdm::parse_method(o.method);
    auto j = envelope(o, "forward-error");
    j["test_fn"] = o.test_fn;

    if (!o.sweep.empty()) {
        std::vector<double> ns, errs, epss;
        for (const index_t n : o.sweep) {
            Opts on = o;
            on.n = n;
            auto fx = make_problem(on);
            apply_test_fn(fx, o.test_fn);
            const auto p = make_pipeline(on, fx);
            const auto fe = gpdm::forward_error(p, method);
            ns.push_back(static_cast<double>(n));
            errs.push_back(fe.fe_inf);
            epss.push_back(fe.eps);
        }
        const double slope = ns.size() >= 2 ? gpdm::loglog_slope(ns, errs) : 0.0;
        gpdm::write_table_csv(out_file(o, "fe_sweep.csv").string(), {"n", "fe_inf", "eps"},
                              {Eigen::Map<const vec>(ns.data(), std::ssize(ns)),
                               Eigen::Map<const vec>(errs.data(), std::ssize(errs)),
                               Eigen::Map<const vec>(epss.data(), std::ssize(epss))});
        j["slope"] = slope;
        j["n"] = o.sweep;
        j["fe_inf"] = errs;
        gpdm::write_json_file(out_file(o, "report.json").string(), j);
        std::cout << "fe slope " << gpdm::fmt_g(slope) << "\n";
        return 0;
    }

    auto fx = make_problem(o);
    apply_test_fn(fx, o.test_fn);
    const auto p = make_pipeline(o, fx);
    const auto fe = gpdm::forward_error(p, method);
    gpdm::write_table_csv(out_file(o, "fe.csv").string(), {"row", "residual"},
                          {iota(fe.N), fe.residual});
    j["fe_inf"] = fe.fe_inf;
    j["eps_used"] = fe.eps;
    j["rows"] = fe.N;
    gpdm::write_json_file(out_file(o, "report.json").string(), j);
    std::cout << "fe_inf " << gpdm::fmt_g(fe.fe_inf) << "\n";
    return 0;
}

int cmd_solve(const Opts& o) {
    const auto method = gpdm::parse_method(o.method);
    const auto p = make_pipeline(o, make_problem(o));
    const auto run = gpdm::solve_run(p, method);

    const index_t rows = run.rep.u_hat.size();
    std::vector<std::string> headers = {"row"};
    std::vector<vec> cols = {iota(rows)};
    for (index_t c = 0; c < p.manifold.cols(); ++c) {
        headers.push_back("x" + std::to_string(c));
        cols.push_back(p.manifold.col(c).head(rows));
    }
    headers.push_back("u_hat");
    cols.push_back(run.rep.u_hat);
    if (run.u_true.size()) {
        headers.push_back("u_true");
        cols.push_back(run.u_true);
        headers.push_back("abs_err");
        cols.push_back((run.rep.u_hat - run.u_true).cwiseAbs());
    }
    gpdm::write_table_csv(out_file(o, "solution.csv").string(), headers, cols);

    auto j = envelope(o, "solve");
    j["report"] = gpdm::to_json(run.rep);
    gpdm::write_json_file(out_file(o, "report.json").string(), j);
    std::cout << "residual_inf " << gpdm::fmt_g(run.rep.residual_inf);
    if (run.rep.ie_inf >= 0) std::cout << "  ie_inf " << gpdm::fmt_g(run.rep.ie_inf);
    std::cout << "\n";
    if (run.rep.nonconvergent_warning)
        std::cerr << "warning: some rows lost diagonal dominance (margin "
                  << gpdm::fmt_g(run.rep.dominance_margin) << ")\n";
    return 0;
}

int cmd_eigs(const Opts& o) {
    gpdm::require(o.modes >= 0, gpdm::errc::invalid_argument, "--modes must be >= 0");
    const auto method = gpdm::parse_method(o.method);
    const auto p = make_pipeline(o, make_problem(o));
    const auto rep = gpdm::eigs_run(p, method, o.modes);

    const auto m = static_cast<index_t>(rep.lambdas.size());
    gpdm::write_table_csv(out_file(o, "eigenvalues.csv").string(),
                          {"idx", "lambda", "lambda_imag", "residual"},
                          {iota(m), rep.lambdas, rep.lambdas_imag, rep.residuals});

    std::vector<std::string> headers = {"row"};
    const auto nid = static_cast<index_t>(rep.ids.size());
    vec ids(nid);
    for (index_t i = 0; i < nid; ++i) ids[i] = static_cast<double>(rep.ids[i]);
    std::vector<vec> cols = {ids};
    for (index_t c = 0; c < p.manifold.cols(); ++c) {
        headers.push_back("x" + std::to_string(c));
        vec coord(nid);
        for (index_t i = 0; i < nid; ++i) coord[i] = p.manifold(rep.ids[i], c);
        cols.push_back(coord);
    }
    for (index_t c = 0; c < rep.psis.cols(); ++c) {
        headers.push_back("psi" + std::to_string(c));
        cols.push_back(rep.psis.col(c));
    }
    if (m == 0) {  // keep column lengths consistent in the empty report
        for (auto& cvec : cols) cvec = vec();
    }
    gpdm::write_table_csv(out_file(o, "eigenfunctions.csv").string(), headers, cols);

    auto j = envelope(o, "eigs");
    j["modes_requested"] = o.modes;
    j["report"] = gpdm::to_json(rep);
    if (!rep.converged) j["status"] = "error";
    gpdm::write_json_file(out_file(o, "report.json").string(), j);
    std::cout << "converged " << rep.n_converged << "/" << o.modes << "\n";
    return rep.converged ? 0 : 3;
}

int cmd_convergence(const Opts& o) {
    gpdm::require(!file_driven(o), gpdm::errc::invalid_argument,
                  "convergence needs a fixture with a known solution");
    gpdm::require(o.sweep.size() >= 2, gpdm::errc::invalid_argument,
                  "--sweep needs at least two point budgets");
    const auto res = gpdm::convergence_sweep(o.fixture, o.sweep, gpdm::parse_method(o.method),
                                             o.metric, parse_eps(o.eps), o.k, o.layers,
                                             parse_mode(o.mode), o.seed, o.trials, o.bc);

    const auto m = static_cast<index_t>(res.points.size());
    vec ns(m), vals(m), epss(m);
    for (index_t i = 0; i < m; ++i) {
        ns[i] = static_cast<double>(res.points[i].n);
        vals[i] = res.points[i].value;
        epss[i] = res.points[i].eps;
    }
    gpdm::write_table_csv(out_file(o, "sweep.csv").string(), {"n", o.metric, "eps"},
                          {ns, vals, epss});

    auto j = envelope(o, "convergence");
    j["metric"] = o.metric;
    j["trials"] = o.trials;
    j["slope"] = res.slope;
    j["n"] = std::vector<double>(ns.begin(), ns.end());
    j[o.metric] = std::vector<double>(vals.begin(), vals.end());
    gpdm::write_json_file(out_file(o, "report.json").string(), j);
    std::cout << o.metric << " slope " << gpdm::fmt_g(res.slope) << "\n";
    return 0;
}

// Fill flags the user did not pass from a JSON config, so the command line
// wins over the file. Keys use the flag names with underscores.
void apply_config(CLI::App* cmd, Opts& o) {
    if (o.config.empty()) return;
    auto in = std::ifstream(o.config);
    gpdm::require(in.good(), gpdm::errc::invalid_argument, "cannot open config: " + o.config);
    const gpdm::json j = gpdm::json::parse(in);
    gpdm::require(j.is_object(), gpdm::errc::invalid_argument,
                  "config must be a JSON object: " + o.config);

    static const std::set<std::string> known = {
        "fixture", "cloud",  "boundary", "method", "operator", "eps",    "k",
        "ghost_layers",      "mode",     "bc",     "sweep",    "seed",   "out",
        "n",       "modes",  "metric",   "trials", "test_fn",  "rhs",    "beta1",
        "beta2",   "g",      "shift"};
    for (const auto& item : j.items())
        gpdm::require(known.count(item.key()) > 0, gpdm::errc::invalid_argument,
                      "unknown config key '" + item.key() + "'");

    auto fresh = [&](const char* flag) {
        const auto* opt = cmd->get_option_no_throw(flag);
        return opt != nullptr && opt->count() == 0;
    };
    auto take = [&](const char* key, const char* flag, auto& field) {
        if (j.contains(key) && fresh(flag))
            field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("fixture", "--fixture", o.fixture);
    take("cloud", "--cloud", o.cloud_path);
    take("boundary", "--boundary", o.boundary_path);
    take("method", "--method", o.method);
    take("operator", "--operator", o.op);
    take("k", "--k", o.k);
    take("ghost_layers", "--ghost-layers", o.layers);
    take("mode", "--mode", o.mode);
    take("bc", "--bc", o.bc);
    take("sweep", "--sweep", o.sweep);
    take("seed", "--seed", o.seed);
    take("out", "--out", o.out);
    take("n", "--n", o.n);
    take("modes", "--modes", o.modes);
    take("metric", "--metric", o.metric);
    take("trials", "--trials", o.trials);
    take("test_fn", "--test-fn", o.test_fn);
    take("rhs", "--rhs", o.rhs_path);
    take("beta1", "--beta1", o.beta1);
    take("beta2", "--beta2", o.beta2);
    take("g", "--g", o.g);
    take("shift", "--shift", o.shift);
    if (j.contains("eps") && fresh("--eps"))
        o.eps = j.at("eps").is_string() ? j.at("eps").get<std::string>()
                                        : gpdm::fmt_g(j.at("eps").get<double>());
}

void add_common(CLI::App* cmd, Opts& o) {
    cmd->add_option("--config", o.config, "JSON config; explicit flags override its keys");
    auto* fixture = cmd->add_option("--fixture", o.fixture, "named problem");
    auto* cloud = cmd->add_option("--cloud", o.cloud_path, "point cloud CSV, one row per point");
    auto* boundary =
        cmd->add_option("--boundary", o.boundary_path, "boundary JSON with boundary_ids and d");
    fixture->excludes(cloud)->excludes(boundary);
    cmd->add_option("--method", o.method, "dm or gpdm")
        ->check(CLI::IsMember({"dm", "gpdm"}));
    cmd->add_option("--operator", o.op, "l1, l2 or l3")
        ->check(CLI::IsMember({"l1", "l2", "l3"}));
    cmd->add_option("--eps", o.eps, "kernel bandwidth, or 'auto'");
    cmd->add_option("--k", o.k, "nearest-neighbor stencil size");
    cmd->add_option("--ghost-layers", o.layers, "ghost layers per boundary point");
    cmd->add_option("--mode", o.mode, "well or random sampling")
        ->check(CLI::IsMember({"well", "random"}));
    cmd->add_option("--bc", o.bc, "dirichlet, neumann, robin or mixed")
        ->check(CLI::IsMember({"dirichlet", "neumann", "robin", "mixed"}));
    cmd->add_option("--seed", o.seed, "random-mode seed");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--n", o.n, "point budget");
}

}  // namespace

int main(int argc, char** argv) {
    Opts o;
    CLI::App app{"mesh-free elliptic operators on point clouds with boundary"};
    app.require_subcommand(1);

    auto* tune = app.add_subcommand("tune", "scan kernel bandwidths, report the selected one");
    auto* fe = app.add_subcommand("forward-error", "operator residual on the known solution");
    auto* solve = app.add_subcommand("solve", "boundary-value solve");
    auto* eigs = app.add_subcommand("eigs", "eigenvalues and eigenfunctions");
    auto* conv = app.add_subcommand("convergence", "error against point budget");
    for (auto* cmd : {tune, fe, solve, eigs, conv}) add_common(cmd, o);

    fe->add_option("--sweep", o.sweep, "point budgets, comma separated")->delimiter(',');
    fe->add_option("--test-fn", o.test_fn, "default or constant")
        ->check(CLI::IsMember({"default", "constant"}));
    for (auto* cmd : {solve, eigs}) {
        cmd->add_option("--rhs", o.rhs_path, "right-hand side CSV, one value per manifold row");
        cmd->add_option("--beta1", o.beta1, "flux coefficient for file runs");
        cmd->add_option("--beta2", o.beta2, "trace coefficient for file runs");
        cmd->add_option("--g", o.g, "constant boundary value for file runs");
        cmd->add_option("--shift", o.shift, "constant zeroth-order shift for file runs");
    }
    eigs->add_option("--modes", o.modes, "eigenpairs to compute");
    conv->add_option("--sweep", o.sweep, "point budgets, comma separated")->delimiter(',');
    conv->add_option("--metric", o.metric, "fe or ie")->check(CLI::IsMember({"fe", "ie"}));
    conv->add_option("--trials", o.trials, "seeds averaged per budget in random mode");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    CLI::App* cmd = app.get_subcommands().front();

    try {
        apply_config(cmd, o);
        if (cmd == tune) return cmd_tune(o);
        if (cmd == fe) return cmd_forward_error(o);
        if (cmd == solve) return cmd_solve(o);
        if (cmd == eigs) return cmd_eigs(o);
        return cmd_convergence(o);
    } catch (const gpdm::gpdm_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (e.is_validation()) return 2;
        try {  // best effort once the run has failed
            gpdm::json j;
            j["status"] = "error";
            j["code"] = gpdm::errc_name(e.code());
            j["message"] = e.what();
            gpdm::write_json_file(out_file(o, "report.json").string(), j);
        } catch (...) {
        }
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: bad JSON input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
