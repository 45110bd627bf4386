#pragma once

// File formats: point clouds as headerless numeric CSV (one row per point),
// boundary metadata as JSON {"boundary_ids": [...], "d": 2}, reports as JSON,
// tables as CSV with a header line. All floating-point output goes through
// %.17g so repeated runs are byte-identical and round-trips are lossless.

#include "core.hpp"
#include "pointcloud.hpp"
#include "pde.hpp"
#include "eig.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace gpdm {

using json = nlohmann::json;

inline std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    require(out.good(), errc::invalid_argument, "cannot open for writing: " + path);
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), errc::invalid_argument, "cannot open for reading: " + path);
    return in;
}

}  // namespace detail

inline void write_cloud_csv(const std::string& path, const mat& points) {
    auto out = detail::open_out(path);
    for (index_t i = 0; i < points.rows(); ++i) {
        for (index_t c = 0; c < points.cols(); ++c) {
            if (c) out << ',';
            out << fmt_g(points(i, c));
        }
        out << '\n';
    }
}

inline mat read_cloud_csv(const std::string& path) {
    auto in = detail::open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        require(rows.empty() || row.size() == rows.front().size(), errc::invalid_argument,
                "ragged cloud CSV: " + path);
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), errc::invalid_argument, "empty cloud CSV: " + path);
    mat points(static_cast<index_t>(rows.size()), static_cast<index_t>(rows.front().size()));
    for (index_t i = 0; i < points.rows(); ++i)
        for (index_t c = 0; c < points.cols(); ++c)
            points(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
    return points;
}

inline void write_boundary_json(const std::string& path, const std::vector<index_t>& ids, int d) {
    json j;
    j["boundary_ids"] = ids;
    j["d"] = d;
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

inline PointCloud read_cloud(const std::string& cloud_path, const std::string& boundary_path) {
    PointCloud cloud;
    cloud.points = read_cloud_csv(cloud_path);
    auto in = detail::open_in(boundary_path);
    json j = json::parse(in);
    require(j.contains("boundary_ids") && j.contains("d"), errc::invalid_argument,
            "boundary JSON needs boundary_ids and d: " + boundary_path);
    cloud.boundary_ids = j["boundary_ids"].get<std::vector<index_t>>();
    cloud.d = j["d"].get<int>();
    cloud.validate();
    return cloud;
}

// table CSV: named columns of equal length
inline void write_table_csv(const std::string& path, const std::vector<std::string>& headers,
                            const std::vector<vec>& cols) {
    require(!cols.empty() && headers.size() == cols.size(), errc::invalid_argument,
            "write_table_csv needs one header per column");
    for (const auto& c : cols)
        require(c.size() == cols.front().size(), errc::invalid_argument,
                "write_table_csv needs equal column lengths");
    auto out = detail::open_out(path);
    for (std::size_t h = 0; h < headers.size(); ++h) {
        if (h) out << ',';
        out << headers[h];
    }
    out << '\n';
    for (index_t i = 0; i < cols.front().size(); ++i) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) out << ',';
            out << fmt_g(cols[c][i]);
        }
        out << '\n';
    }
}

inline void write_json_file(const std::string& path, const json& j) {
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

inline json to_json(const BandwidthReport& br) {
    json j;
    j["eps_star"] = br.eps_star;
    j["d_est"] = br.d_est;
    j["max_slope"] = br.slope.size() ? br.slope.maxCoeff() : 0.0;
    j["grid_size"] = br.eps_grid.size();
    return j;
}

inline json to_json(const SolveReport& rep) {
    json j;
    j["residual_inf"] = rep.residual_inf;
    if (rep.ie_inf >= 0) j["ie_inf"] = rep.ie_inf;
    j["dominance_margin"] = rep.dominance_margin;
    j["nonconvergent_warning"] = rep.nonconvergent_warning;
    j["eps_used"] = rep.eps_used;
    j["N"] = rep.N;
    j["J"] = rep.J;
    j["K"] = rep.K;
    j["wall_time"] = rep.wall_time;
    return j;
}

inline json to_json(const EigReport& rep) {
    json j;
    j["lambdas"] = std::vector<double>(rep.lambdas.begin(), rep.lambdas.end());
    j["lambdas_imag"] = std::vector<double>(rep.lambdas_imag.begin(), rep.lambdas_imag.end());
    j["complex_flag"] = rep.complex_flag;
    j["residuals"] = std::vector<double>(rep.residuals.begin(), rep.residuals.end());
    j["converged"] = rep.converged;
    j["n_converged"] = rep.n_converged;
    return j;
}

// sparse export: 1-based coordinate triplets
inline void write_matrix_market(const std::string& path, const spmat& A) {
    auto out = detail::open_out(path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
    for (index_t c = 0; c < A.outerSize(); ++c)
        for (spmat::InnerIterator it(A, c); it; ++it)
            out << (it.row() + 1) << ' ' << (c + 1) << ' ' << fmt_g(it.value()) << '\n';
}

}  // namespace gpdm
