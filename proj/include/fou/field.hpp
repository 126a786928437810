#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fou/common.hpp"
#include "fou/grid.hpp"

namespace fou {

using Complex = std::complex<double>;

// Complex samples on a Grid, row-major.  A Field is a plain value; the same
// type carries physical samples and (on the frequency grid) spectra.
struct Field {
    Grid grid;
    std::vector<Complex> values;

    Field() = default;
    explicit Field(Grid g) : grid(std::move(g)), values(grid.total(), Complex(0.0, 0.0)) {}
    Field(Grid g, std::vector<Complex> v) : grid(std::move(g)), values(std::move(v)) {
        if (values.size() != grid.total())
            throw InvalidArgument("Field: value count does not match grid");
    }

    std::size_t size() const { return values.size(); }
};

namespace detail {

inline void check_same_grid(const Field& a, const Field& b, const char* where) {
    if (!a.grid.approx_equal(b.grid))
        throw InvalidArgument(std::string(where) + ": fields live on different grids");
}

}  // namespace detail

// Samples a pointwise evaluator f : R^n -> C on the grid.  Errors name the
// offending point if the evaluator returns a non-finite value.
template <typename F>
Field sample_field(const Grid& grid, F&& f) {
    Field out(grid);
    const std::size_t n = grid.dim();
    std::vector<double> x(n);
    MultiIndex mi(grid);
    std::size_t flat = 0;
    do {
        for (std::size_t j = 0; j < n; ++j) x[j] = grid.point(j, mi[j]);
        Complex v = f(x);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            std::string pt = "(";
            for (std::size_t j = 0; j < n; ++j) pt += (j ? ", " : "") + std::to_string(x[j]);
            pt += ")";
            throw NumericalError("nonfinite_sample", "sample_field: non-finite value at " + pt);
        }
        out.values[flat++] = v;
    } while (mi.advance());
    return out;
}

inline double l2_norm_sq(const Field& u) {
    double acc = 0.0;
    for (const Complex& v : u.values) acc += std::norm(v);
    return u.grid.cell_volume() * acc;
}

inline double l2_norm(const Field& u) { return std::sqrt(l2_norm_sq(u)); }

inline Complex l2_inner(const Field& a, const Field& b) {
    detail::check_same_grid(a, b, "l2_inner");
    Complex acc(0.0, 0.0);
    for (std::size_t i = 0; i < a.values.size(); ++i) acc += a.values[i] * std::conj(b.values[i]);
    return a.grid.cell_volume() * acc;
}

// Restricted norm ||u||_{L^2(omega)}; `indicator` marks the cells of omega.
inline double l2_norm_on(const Field& u, const std::vector<std::uint8_t>& indicator) {
    if (indicator.size() != u.values.size())
        throw InvalidArgument("l2_norm_on: indicator size does not match field");
    double acc = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i)
        if (indicator[i]) acc += std::norm(u.values[i]);
    return std::sqrt(u.grid.cell_volume() * acc);
}

inline Field masked(const Field& u, const std::vector<std::uint8_t>& indicator) {
    if (indicator.size() != u.values.size())
        throw InvalidArgument("masked: indicator size does not match field");
    Field out = u;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        if (!indicator[i]) out.values[i] = Complex(0.0, 0.0);
    return out;
}

inline double max_imag_abs(const Field& u) {
    double m = 0.0;
    for (const Complex& v : u.values) m = std::max(m, std::abs(v.imag()));
    return m;
}

// --- field arithmetic -------------------------------------------------------

inline Field& axpy(Field& y, double a, const Field& x) {
    detail::check_same_grid(y, x, "axpy");
    for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] += a * x.values[i];
    return y;
}

inline Field scaled(const Field& u, Complex a) {
    Field out = u;
    for (Complex& v : out.values) v *= a;
    return out;
}

// --- FOUF snapshot format ---------------------------------------------------
//
// magic "FOUF", u16 version = 1, u16 n, per axis { u32 N_j, f64 L_j },
// then prod N_j little-endian (f64 re, f64 im) pairs, row-major.

static_assert(std::endian::native == std::endian::little,
              "FOUF I/O assumes a little-endian host");

inline void write_fouf(const Field& u, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_fouf: cannot open " + path);
    out.write("FOUF", 4);
    auto put16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    auto put32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto put64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    put16(1);
    put16(static_cast<std::uint16_t>(u.grid.dim()));
    for (std::size_t j = 0; j < u.grid.dim(); ++j) {
        put32(static_cast<std::uint32_t>(u.grid.npoints()[j]));
        put64(u.grid.lengths()[j]);
    }
    for (const Complex& v : u.values) {
        put64(v.real());
        put64(v.imag());
    }
    if (!out) throw IoError("write_fouf: write failed for " + path);
}

inline Field read_fouf(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_fouf: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FOUF", 4) != 0)
        throw IoError("read_fouf: bad magic in " + path);
    auto get16 = [&] {
        std::uint16_t v;
        in.read(reinterpret_cast<char*>(&v), 2);
        return v;
    };
    auto get32 = [&] {
        std::uint32_t v;
        in.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    auto get64 = [&] {
        double v;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    const std::uint16_t version = get16();
    if (version != 1) throw IoError("read_fouf: unsupported version " + std::to_string(version));
    const std::uint16_t n = get16();
    std::vector<std::size_t> npoints(n);
    std::vector<double> lengths(n);
    for (std::uint16_t j = 0; j < n; ++j) {
        npoints[j] = get32();
        lengths[j] = get64();
    }
    if (!in) throw IoError("read_fouf: truncated header in " + path);
    Field u{Grid(std::move(lengths), std::move(npoints))};
    for (Complex& v : u.values) {
        double re = get64();
        double im = get64();
        v = Complex(re, im);
    }
    if (!in) throw IoError("read_fouf: truncated data in " + path);
    return u;
}

// CSV export: one row per grid point with coordinates and re/im.
inline void write_field_csv(const Field& u, const std::string& path) {
    std::FILE* out = std::fopen(path.c_str(), "w");
    if (!out) throw IoError("write_field_csv: cannot open " + path);
    const std::size_t n = u.grid.dim();
    for (std::size_t j = 0; j < n; ++j) std::fprintf(out, "x%zu,", j);
    std::fprintf(out, "re,im\n");
    MultiIndex mi(u.grid);
    std::size_t flat = 0;
    do {
        for (std::size_t j = 0; j < n; ++j) std::fprintf(out, "%.17g,", u.grid.point(j, mi[j]));
        std::fprintf(out, "%.17g,%.17g\n", u.values[flat].real(), u.values[flat].imag());
        ++flat;
    } while (mi.advance());
    std::fclose(out);
}

}  // namespace fou
