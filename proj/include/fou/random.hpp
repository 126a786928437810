#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fou/fft.hpp"
#include "fou/field.hpp"
#include "fou/grid.hpp"

namespace fou {

// splitmix64: stable derivation of per-purpose seeds from a run seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t salt = 0) {
    return std::mt19937_64(mix_seed(seed, salt));
}

// Grid white noise: iid standard normal real samples.
inline Field white_noise(const Grid& grid, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed, 0x57);
    std::normal_distribution<double> normal(0.0, 1.0);
    Field u(grid);
    for (Complex& v : u.values) v = Complex(normal(rng), 0.0);
    return u;
}

// Rough data with an exactly flat power spectrum: unit-modulus random phases
// on every frequency bin.  Same roughness as white noise but scan values
// carry no chi-squared jitter from the sampled periodogram.
inline Field flat_spectrum_noise(const Grid& grid, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed, 0xF5);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * 3.14159265358979323846);
    Field spectrum(grid.frequency_grid());
    for (Complex& v : spectrum.values) {
        const double a = angle(rng);
        v = Complex(std::cos(a), std::sin(a));
    }
    Field u = idft(spectrum);
    const double scale = 1.0 / l2_norm(u);
    for (Complex& v : u.values) v *= scale;
    return u;
}

// Random field band-limited to the frequency cube [-k, k]^n: complex
// Gaussian spectrum inside, zero outside (pi_k-invariant by construction).
inline Field band_limited_noise(const Grid& grid, double k, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed, 0xB1);
    std::normal_distribution<double> normal(0.0, 1.0);
    Field spectrum(grid.frequency_grid());
    const Grid& fgrid = spectrum.grid;
    std::vector<double> xi(fgrid.dim());
    MultiIndex mi(fgrid);
    std::size_t flat = 0;
    do {
        for (std::size_t j = 0; j < fgrid.dim(); ++j) xi[j] = fgrid.point(j, mi[j]);
        spectrum.values[flat++] = in_frequency_cube(xi, k)
                                      ? Complex(normal(rng), normal(rng))
                                      : Complex(0.0, 0.0);
    } while (mi.advance());
    return idft(spectrum);
}

// exp(-|x-c|^2 / (2 sigma^2)) * exp(i <kappa, x>)
inline Field gaussian_packet(const Grid& grid, const std::vector<double>& center, double sigma,
                             const std::vector<double>& kappa) {
    return sample_field(grid, [&](const std::vector<double>& x) {
        double r2 = 0.0, phase = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double d = x[j] - center[j];
            r2 += d * d;
            phase += kappa[j] * x[j];
        }
        const double amp = std::exp(-0.5 * r2 / (sigma * sigma));
        return Complex(amp * std::cos(phase), amp * std::sin(phase));
    });
}

// Sum of `count` random Gaussian wave packets with centers kept `margin` box
// fractions away from the boundary: smooth, numerically supported inside the
// box and numerically band-limited at the same time.
inline Field random_wave_packets(const Grid& grid, std::size_t count, double kappa_max,
                                 std::uint64_t seed, double margin = 0.25) {
    std::mt19937_64 rng = make_rng(seed, 0xAE);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Field out(grid);
    const std::size_t n = grid.dim();
    for (std::size_t p = 0; p < count; ++p) {
        std::vector<double> center(n), kappa(n);
        for (std::size_t j = 0; j < n; ++j) {
            center[j] = unit(rng) * (0.5 - margin) * grid.lengths()[j];
            kappa[j] = unit(rng) * kappa_max;
        }
        const double sigma = 1.0 + 0.5 * std::abs(unit(rng));
        Field packet = gaussian_packet(grid, center, sigma, kappa);
        const double amp = unit(rng);
        for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += amp * packet.values[i];
    }
    return out;
}

}  // namespace fou
