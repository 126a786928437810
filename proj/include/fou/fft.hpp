#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "fou/common.hpp"
#include "fou/field.hpp"
#include "fou/grid.hpp"

namespace fou {

namespace detail {

// Process-lifetime FFTW plan cache keyed by (dims, sign).  Plans are created
// with FFTW_UNALIGNED so they can execute on any buffer.
class FftwPlans {
public:
    static fftw_plan get(const std::vector<std::size_t>& npoints, int sign) {
        static FftwPlans instance;
        std::lock_guard<std::mutex> lock(instance.mutex_);
        auto key = std::make_pair(npoints, sign);
        auto it = instance.plans_.find(key);
        if (it != instance.plans_.end()) return it->second;

        std::vector<int> dims(npoints.begin(), npoints.end());
        std::vector<fftw_complex> scratch(total(npoints));
        fftw_plan plan =
            fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), scratch.data(),
                          scratch.data(), sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!plan) throw InternalError("FFTW plan creation failed");
        instance.plans_.emplace(std::move(key), plan);
        return plan;
    }

private:
    static std::size_t total(const std::vector<std::size_t>& npoints) {
        std::size_t t = 1;
        for (std::size_t n : npoints) t *= n;
        return t;
    }

    std::mutex mutex_;
    std::map<std::pair<std::vector<std::size_t>, int>, fftw_plan> plans_;
};

// (-1)^{sum of index components}: the checkerboard that recenters the
// transform origin to the middle of the box.
inline void apply_checkerboard(const Grid& grid, std::vector<Complex>& values) {
    MultiIndex mi(grid);
    std::size_t flat = 0;
    do {
        std::size_t parity = 0;
        for (std::size_t j = 0; j < grid.dim(); ++j) parity += mi[j];
        if (parity & 1) values[flat] = -values[flat];
        ++flat;
    } while (mi.advance());
}

inline void execute_dft(const Grid& grid, std::vector<Complex>& values, int sign) {
    fftw_plan plan = FftwPlans::get(grid.npoints(), sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(values.data()),
                     reinterpret_cast<fftw_complex*>(values.data()));
}

// Global sign prod_j (-1)^{N_j/2}; only N_j = 2 contributes among powers of
// two.
inline double center_sign(const Grid& grid) {
    double s = 1.0;
    for (std::size_t n : grid.npoints())
        if ((n / 2) & 1) s = -s;
    return s;
}

}  // namespace detail

// Discrete approximation of the Fourier transform
//   u^(xi) = int e^{-i<x,xi>} u(x) dx
// on the centered lattice: cell-volume-weighted DFT with centered phases.
// The result lives on the frequency grid, so norms and points carry over.
inline Field dft(const Field& u) {
    Field out{u.grid.frequency_grid(), u.values};
    detail::apply_checkerboard(u.grid, out.values);
    detail::execute_dft(u.grid, out.values, FFTW_FORWARD);
    detail::apply_checkerboard(out.grid, out.values);
    const double scale = u.grid.cell_volume() * detail::center_sign(u.grid);
    for (Complex& v : out.values) v *= scale;
    return out;
}

// Exact inverse of dft (round-trip is accurate to rounding).  Takes a field
// on the frequency grid, returns one on the physical grid.
inline Field idft(const Field& spectrum) {
    Field out{spectrum.grid.frequency_grid(), spectrum.values};
    detail::apply_checkerboard(spectrum.grid, out.values);
    detail::execute_dft(spectrum.grid, out.values, FFTW_BACKWARD);
    detail::apply_checkerboard(out.grid, out.values);
    // Per axis the inverse scale is 1/(h N) = 1/L on the physical grid.
    double scale = detail::center_sign(out.grid);
    for (std::size_t j = 0; j < out.grid.dim(); ++j) scale /= out.grid.lengths()[j];
    for (Complex& v : out.values) v *= scale;
    return out;
}

// Applies the Fourier multiplier with symbol w(xi): idft(w . dft(u)).
// The weight is evaluated pointwise at the centered grid frequencies.
template <typename W>
Field apply_fourier_weight(const Field& u, W&& w) {
    Field spectrum = dft(u);
    const Grid& fgrid = spectrum.grid;
    const std::size_t n = fgrid.dim();
    std::vector<double> xi(n);
    MultiIndex mi(fgrid);
    std::size_t flat = 0;
    do {
        for (std::size_t j = 0; j < n; ++j) xi[j] = fgrid.point(j, mi[j]);
        const Complex wv = Complex(w(xi));
        if (!std::isfinite(wv.real()) || !std::isfinite(wv.imag())) {
            std::string pt = "(";
            for (std::size_t j = 0; j < n; ++j) pt += (j ? ", " : "") + std::to_string(xi[j]);
            pt += ")";
            throw NumericalError("nonfinite_weight",
                                 "apply_fourier_weight: non-finite weight at xi = " + pt);
        }
        spectrum.values[flat++] *= wv;
    } while (mi.advance());
    return idft(spectrum);
}

// ||w(xi) u^||_{L^2} / (2 pi)^{n/2}: the physical-space norm of the Fourier
// multiplier applied to u, computed without the inverse transform.
template <typename W>
double weighted_seminorm(const Field& u, W&& w) {
    Field spectrum = dft(u);
    const Grid& fgrid = spectrum.grid;
    const std::size_t n = fgrid.dim();
    std::vector<double> xi(n);
    double acc = 0.0;
    MultiIndex mi(fgrid);
    std::size_t flat = 0;
    do {
        for (std::size_t j = 0; j < n; ++j) xi[j] = fgrid.point(j, mi[j]);
        const double wv = w(xi);
        acc += wv * wv * std::norm(spectrum.values[flat++]);
    } while (mi.advance());
    const double two_pi = 2.0 * 3.14159265358979323846;
    double plancherel = 1.0;
    for (std::size_t j = 0; j < n; ++j) plancherel *= two_pi;
    return std::sqrt(fgrid.cell_volume() * acc / plancherel);
}

// Frequency-cube indicator |xi_j| <= k for all j (the projection pi_k).
inline bool in_frequency_cube(const std::vector<double>& xi, double k) {
    for (double x : xi)
        if (std::abs(x) > k * (1.0 + 1e-12) + 1e-300) return false;
    return true;
}

inline Field frequency_cutoff(const Field& u, double k) {
    return apply_fourier_weight(u, [k](const std::vector<double>& xi) {
        return in_frequency_cube(xi, k) ? 1.0 : 0.0;
    });
}

// Norms of pi_k u and (1 - pi_k) u computed spectrally.
inline std::pair<double, double> band_split_norms(const Field& u, double k) {
    Field spectrum = dft(u);
    const Grid& fgrid = spectrum.grid;
    const std::size_t n = fgrid.dim();
    std::vector<double> xi(n);
    double inside = 0.0, outside = 0.0;
    MultiIndex mi(fgrid);
    std::size_t flat = 0;
    do {
        for (std::size_t j = 0; j < n; ++j) xi[j] = fgrid.point(j, mi[j]);
        const double m = std::norm(spectrum.values[flat++]);
        if (in_frequency_cube(xi, k))
            inside += m;
        else
            outside += m;
    } while (mi.advance());
    const double two_pi = 2.0 * 3.14159265358979323846;
    double plancherel = 1.0;
    for (std::size_t j = 0; j < n; ++j) plancherel *= two_pi;
    const double scale = fgrid.cell_volume() / plancherel;
    return {std::sqrt(scale * inside), std::sqrt(scale * outside)};
}

}  // namespace fou
