#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fou/common.hpp"
#include "fou/field.hpp"
#include "fou/grid.hpp"
#include "fou/matrix.hpp"

namespace fou {

struct ResampleDiagnostics {
    bool boundary_warning = false;    // input carried mass near the box edge
    double boundary_mass_fraction = 0.0;
    double leaked_mass_fraction = 0.0;  // change-of-variables mass deficit
};

namespace detail {

// Lagrange basis weights for an even tap count at fractional position theta
// measured from the first tap.
inline void lagrange_weights(double theta, int taps, double* w) {
    for (int i = 0; i < taps; ++i) {
        double acc = 1.0;
        for (int j = 0; j < taps; ++j) {
            if (j == i) continue;
            acc *= (theta - j) / static_cast<double>(i - j);
        }
        w[i] = acc;
    }
}

inline double boundary_mass_fraction(const Field& u, std::size_t shell) {
    double total = 0.0, edge = 0.0;
    MultiIndex mi(u.grid);
    std::size_t flat = 0;
    do {
        const double m = std::norm(u.values[flat++]);
        total += m;
        for (std::size_t j = 0; j < u.grid.dim(); ++j) {
            const std::size_t i = mi[j], n = u.grid.npoints()[j];
            if (i < shell || i >= n - shell) {
                edge += m;
                break;
            }
        }
    } while (mi.advance());
    return total > 0.0 ? edge / total : 0.0;
}

}  // namespace detail

// Samples x -> u(A x) on u's own grid by separable Lagrange interpolation of
// order 1, 3 or 5, treating u as zero outside the box.  The input must be
// numerically supported away from the boundary; violations produce a warning
// in the diagnostics together with the measured leaked mass, not an error.
inline Field resample_linear_map(const Field& u, const SquareMatrix& a, int order = 5,
                                 ResampleDiagnostics* diag = nullptr) {
    const Grid& grid = u.grid;
    const std::size_t n = grid.dim();
    if (static_cast<std::size_t>(a.dim()) != n)
        throw InvalidArgument("resample_linear_map: matrix dimension does not match grid");
    if (order != 1 && order != 3 && order != 5)
        throw InvalidArgument("resample_linear_map: interpolation order must be 1, 3 or 5");
    const int taps = order + 1;

    Eigen::PartialPivLU<Mat> lu(a.eigen());
    const double det = lu.determinant();
    if (det == 0.0 || !std::isfinite(det))
        throw InvalidArgument("resample_linear_map: map is singular");

    ResampleDiagnostics local;
    const double in_mass = l2_norm_sq(u);
    local.boundary_mass_fraction =
        detail::boundary_mass_fraction(u, static_cast<std::size_t>(taps / 2 + 1));
    local.boundary_warning = local.boundary_mass_fraction > 1e-10;

    Field out(grid);
    std::vector<double> x(n), y(n);
    std::array<std::array<double, 6>, 4> weights{};
    std::array<std::ptrdiff_t, 4> start{};
    const std::vector<std::size_t> strides = grid.strides();

    MultiIndex mi(grid);
    std::size_t flat = 0;
    do {
        for (std::size_t j = 0; j < n; ++j) x[j] = grid.point(j, mi[j]);
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t m = 0; m < n; ++m) acc += a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m)) * x[m];
            y[j] = acc;
        }
        bool inside = true;
        for (std::size_t j = 0; j < n; ++j) {
            const double g = (y[j] + 0.5 * grid.lengths()[j]) / grid.spacing(j);
            const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(std::floor(g)) - (taps / 2 - 1);
            start[j] = s;
            if (s + taps <= 0 || s >= static_cast<std::ptrdiff_t>(grid.npoints()[j])) {
                inside = false;
                break;
            }
            detail::lagrange_weights(g - static_cast<double>(s), taps, weights[j].data());
        }
        if (inside) {
            // Tensor-product accumulation over the stencil.
            std::array<int, 4> t{};
            Complex acc(0.0, 0.0);
            while (true) {
                double w = 1.0;
                std::ptrdiff_t idx = 0;
                bool valid = true;
                for (std::size_t j = 0; j < n; ++j) {
                    const std::ptrdiff_t i = start[j] + t[j];
                    if (i < 0 || i >= static_cast<std::ptrdiff_t>(grid.npoints()[j])) {
                        valid = false;
                        break;
                    }
                    w *= weights[j][static_cast<std::size_t>(t[j])];
                    idx += i * static_cast<std::ptrdiff_t>(strides[j]);
                }
                if (valid) acc += w * u.values[static_cast<std::size_t>(idx)];
                std::size_t j = n;
                for (;;) {
                    if (j == 0) goto stencil_done;
                    --j;
                    if (++t[j] < taps) break;
                    t[j] = 0;
                }
            }
        stencil_done:
            out.values[flat] = acc;
        }
        ++flat;
    } while (mi.advance());

    const double out_mass = l2_norm_sq(out);
    if (in_mass > 0.0)
        local.leaked_mass_fraction = std::max(0.0, 1.0 - std::abs(det) * out_mass / in_mass);
    if (diag) *diag = local;
    return out;
}

}  // namespace fou
