#pragma once

// Point-cloud containers, exact k-nearest-neighbor tables, kernel bandwidth
// auto-tuning, and kernel density estimates. Everything here is deterministic:
// distances are accumulated coordinate-wise (no GEMM reassociation) and ties
// are broken by smaller point index, so results are reproducible bit-for-bit
// across runs and equal to a naive brute-force scan.

#include "core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace gpdm {

struct PointCloud {
    mat points;                         // N x n, row = ambient coordinates of one sample
    std::vector<index_t> boundary_ids;  // indices of boundary samples (may be empty)
    int d = 0;                          // intrinsic dimension, 0 = unknown

    index_t size() const { return points.rows(); }
    index_t ambient_dim() const { return points.cols(); }

    bool is_boundary(index_t i) const {
        return std::find(boundary_ids.begin(), boundary_ids.end(), i) != boundary_ids.end();
    }

    std::vector<index_t> interior_ids() const {
        std::vector<char> mark(static_cast<std::size_t>(size()), 0);
        for (index_t b : boundary_ids) mark[static_cast<std::size_t>(b)] = 1;
        std::vector<index_t> out;
        out.reserve(static_cast<std::size_t>(size()) - boundary_ids.size());
        for (index_t i = 0; i < size(); ++i)
            if (!mark[static_cast<std::size_t>(i)]) out.push_back(i);
        return out;
    }

    void validate() const {
        require(points.rows() >= 1 && points.cols() >= 1, errc::invalid_argument,
                "point cloud must be a nonempty N x n matrix");
        require(points.allFinite(), errc::invalid_argument, "point coordinates must be finite");
        std::vector<char> seen(static_cast<std::size_t>(size()), 0);
        for (index_t b : boundary_ids) {
            require(b >= 0 && b < size(), errc::invalid_argument, "boundary id out of range");
            require(!seen[static_cast<std::size_t>(b)], errc::invalid_argument,
                    "duplicate boundary id");
            seen[static_cast<std::size_t>(b)] = 1;
        }
        require(d >= 0, errc::invalid_argument, "intrinsic dimension must be >= 0");
    }
};

struct NeighborIndex {
    Eigen::Matrix<index_t, Eigen::Dynamic, Eigen::Dynamic> indices;  // N x k, ascending distance
    mat dists;                                                       // N x k, matching distances
    index_t k() const { return indices.cols(); }
    index_t size() const { return indices.rows(); }
};

namespace detail {

// Squared Euclidean distance accumulated coordinate-wise. Both the library
// and the brute-force test oracle must use this exact evaluation order so
// neighbor tables agree to the last bit.
inline double sqdist(const mat& pts, index_t i, index_t j) {
    double s = 0;
    for (index_t l = 0; l < pts.cols(); ++l) {
        const double t = pts(i, l) - pts(j, l);
        s += t * t;
    }
    return s;
}

}  // namespace detail

// Exact k-NN by linear scan with a bounded max-heap per query point.
// Self is excluded; ties resolve to the smaller index. A zero distance to a
// distinct point means duplicated samples, which downstream kernel
// normalizations cannot tolerate.
inline NeighborIndex build_index(const mat& points, index_t k) {
    const index_t n = points.rows();
    require(n >= 2, errc::invalid_argument, "need at least two points for a neighbor index");
    require(k >= 1 && k <= n - 1, errc::invalid_argument,
            "neighbor count k must satisfy 1 <= k <= N-1");

    NeighborIndex out;
    out.indices.resize(n, k);
    out.dists.resize(n, k);

    using entry = std::pair<double, index_t>;  // (squared distance, index)
    std::vector<entry> heap;  // max-heap on lexicographic (d2, idx)
    heap.reserve(static_cast<std::size_t>(k) + 1);

    for (index_t i = 0; i < n; ++i) {
        heap.clear();
        for (index_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d2 = detail::sqdist(points, i, j);
            entry e{d2, j};
            if (static_cast<index_t>(heap.size()) < k) {
                heap.push_back(e);
                std::push_heap(heap.begin(), heap.end());
            } else if (e < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = e;
                std::push_heap(heap.begin(), heap.end());
            }
        }
        std::sort_heap(heap.begin(), heap.end());
        for (index_t m = 0; m < k; ++m) {
            const auto& [d2, j] = heap[static_cast<std::size_t>(m)];
            require(d2 > 0, errc::degenerate_geometry,
                    "duplicate points (zero pairwise distance)");
            out.indices(i, m) = j;
            out.dists(i, m) = std::sqrt(d2);
        }
    }
    return out;
}

struct BandwidthReport {
    vec eps_grid;      // candidate bandwidths, ascending
    vec S;             // kernel sum per candidate, in (0, 1]
    vec slope;         // d log S / d log eps per grid cell, length |eps_grid|-1
    double eps_star;   // selected bandwidth
    int d_est;         // round(2 * max slope)
};

inline vec default_eps_grid() {
    // 41 log-spaced candidates spanning [2^-14, 10].
    const int m = 41;
    const double lo = std::log(std::pow(2.0, -14)), hi = std::log(10.0);
    vec g(m);
    for (int i = 0; i < m; ++i) g[i] = std::exp(lo + (hi - lo) * i / (m - 1));
    return g;
}

// Kernel-sum bandwidth tuning. S(eps) averages exp(-|x_i - x_j|^2 / (4 eps))
// over the k-NN pairs plus the diagonal terms; the diagonal keeps S bounded
// away from zero so the log-log slope decays to 0 at both ends and the
// informative plateau (slope = d/2 for data on a d-dimensional manifold)
// shows up as an interior feature. When d is known the cell whose slope is
// closest to d/2 wins; otherwise the max-slope cell does, and 2 * max slope
// estimates d.
inline BandwidthReport tune_bandwidth(const mat& points, const NeighborIndex& index,
                                      int d = 0, vec eps_grid = vec()) {
    if (eps_grid.size() == 0) eps_grid = default_eps_grid();
    require(eps_grid.size() >= 3, errc::invalid_argument, "bandwidth grid needs >= 3 points");
    for (index_t i = 0; i + 1 < eps_grid.size(); ++i)
        require(eps_grid[i] > 0 && eps_grid[i] < eps_grid[i + 1], errc::invalid_argument,
                "bandwidth grid must be positive and ascending");

    const index_t n = points.rows(), k = index.k();
    BandwidthReport rep;
    rep.eps_grid = eps_grid;
    rep.S.resize(eps_grid.size());
    const double pairs = static_cast<double>(n) * static_cast<double>(k + 1);
    for (index_t g = 0; g < eps_grid.size(); ++g) {
        const double inv = 1.0 / (4.0 * eps_grid[g]);
        double s = static_cast<double>(n);  // self pairs contribute exp(0)
        for (index_t i = 0; i < n; ++i)
            for (index_t m = 0; m < k; ++m) {
                const double dist = index.dists(i, m);
                s += std::exp(-dist * dist * inv);
            }
        rep.S[g] = s / pairs;
    }

    rep.slope.resize(eps_grid.size() - 1);
    for (index_t g = 0; g + 1 < eps_grid.size(); ++g)
        rep.slope[g] = (std::log(rep.S[g + 1]) - std::log(rep.S[g])) /
                       (std::log(eps_grid[g + 1]) - std::log(eps_grid[g]));

    index_t best = 0;
    double max_slope = rep.slope[0];
    for (index_t g = 1; g < rep.slope.size(); ++g)
        if (rep.slope[g] > max_slope) { max_slope = rep.slope[g]; best = g; }
    require(max_slope > 0.05, errc::tuning_failed,
            "kernel sum is flat across the bandwidth grid; widen the grid or check scaling");
    rep.d_est = static_cast<int>(std::lround(2.0 * max_slope));

    if (d > 0) {
        const double target = 0.5 * d;
        best = 0;
        double gap = std::abs(rep.slope[0] - target);
        for (index_t g = 1; g < rep.slope.size(); ++g) {
            const double cur = std::abs(rep.slope[g] - target);
            if (cur < gap) { gap = cur; best = g; }
        }
    }
    rep.eps_star = eps_grid[best];
    return rep;
}

// Symmetrized sparsity pattern: the unordered pair {i,j} is kept when either
// point lists the other among its k nearest neighbors. Rows come back as
// sorted neighbor lists with self excluded; kernel assemblies add the
// diagonal themselves.
inline std::vector<std::vector<index_t>> symmetrized_pattern(const NeighborIndex& index) {
    const index_t n = index.size(), k = index.k();
    std::vector<std::vector<index_t>> adj(static_cast<std::size_t>(n));
    for (auto& row : adj) row.reserve(static_cast<std::size_t>(k) + 4);
    for (index_t i = 0; i < n; ++i)
        for (index_t m = 0; m < k; ++m) {
            const index_t j = index.indices(i, m);
            adj[static_cast<std::size_t>(i)].push_back(j);
            adj[static_cast<std::size_t>(j)].push_back(i);
        }
    for (auto& row : adj) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
    }
    return adj;
}

// Kernel density estimate q(x_j) = eps^{-d/2} N^{-1} sum_i exp(-|x_i-x_j|^2/(4 eps)),
// the sum running over the symmetrized k-NN pattern plus the self pair. Up to
// the universal (4 pi)^{d/2} factor this is the sampling density; only ratios
// of it enter the operator normalizations.
inline vec estimate_density(const mat& points, const NeighborIndex& index, double eps, int d) {
    require(eps > 0, errc::invalid_argument, "bandwidth must be positive");
    require(d >= 1, errc::invalid_argument, "density estimate needs the intrinsic dimension");
    const index_t n = points.rows();
    const auto pattern = symmetrized_pattern(index);
    vec q = vec::Ones(n);  // self pair
    const double inv = 1.0 / (4.0 * eps);
    for (index_t i = 0; i < n; ++i)
        for (index_t j : pattern[static_cast<std::size_t>(i)])
            q[i] += std::exp(-detail::sqdist(points, i, j) * inv);
    const double scale = std::pow(eps, -0.5 * d) / static_cast<double>(n);
    return q * scale;
}

// Mean distance to the P nearest neighbors, the local spacing scale used for
// ghost step sizes on randomly sampled clouds.
inline vec local_spacing(const NeighborIndex& index, index_t P) {
    require(P >= 1 && P <= index.k(), errc::invalid_argument,
            "local_spacing needs 1 <= P <= k");
    vec h(index.size());
    for (index_t i = 0; i < index.size(); ++i) {
        double s = 0;
        for (index_t m = 0; m < P; ++m) s += index.dists(i, m);
        h[i] = s / static_cast<double>(P);
    }
    return h;
}

}  // namespace gpdm
