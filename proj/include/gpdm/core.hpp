#pragma once

// Shared aliases and error plumbing for the gpdm library.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpdm {

using index_t = std::ptrdiff_t;
using vec = Eigen::VectorXd;
using mat = Eigen::MatrixXd;  // row = point, col = ambient coordinate
using spmat = Eigen::SparseMatrix<double>;
using triplet = Eigen::Triplet<double>;

// Failure classes surfaced by the library. The CLI maps validation errors to
// exit code 2 and numerical errors to exit code 3.
enum class errc {
    invalid_argument,
    tuning_failed,
    degenerate_geometry,
    orientation_ambiguous,
    disconnected_point,
    invalid_coefficient,
    ill_conditioned_diffusion,
    extrapolation_singular,
    invalid_bc,
    solver_failure,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::invalid_argument:          return "invalid-argument";
        case errc::tuning_failed:             return "tuning-failed";
        case errc::degenerate_geometry:       return "degenerate-geometry";
        case errc::orientation_ambiguous:     return "orientation-ambiguous";
        case errc::disconnected_point:        return "disconnected-point";
        case errc::invalid_coefficient:       return "invalid-coefficient";
        case errc::ill_conditioned_diffusion: return "ill-conditioned-diffusion";
        case errc::extrapolation_singular:    return "extrapolation-singular";
        case errc::invalid_bc:                return "invalid-bc";
        case errc::solver_failure:            return "solver-failure";
    }
    return "unknown";
}

class gpdm_error : public std::runtime_error {
public:
    gpdm_error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    errc code() const noexcept { return code_; }

    // Validation errors are caller mistakes (bad sizes, bad flags); the rest
    // are numerical conditions discovered at run time.
    bool is_validation() const noexcept {
        return code_ == errc::invalid_argument || code_ == errc::invalid_bc;
    }

private:
    errc code_;
};

inline void require(bool cond, errc code, const std::string& what) {
    if (!cond) throw gpdm_error(code, what);
}

// Least-squares slope of log(y) against log(x). Used for empirical
// convergence orders; exact on y = c * x^p.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, errc::invalid_argument,
            "loglog_slope needs >= 2 matched samples");
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i] > 0 && y[i] > 0, errc::invalid_argument, "loglog_slope needs positive data");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    require(std::abs(denom) > 0, errc::invalid_argument, "loglog_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / denom;
}

}  // namespace gpdm
