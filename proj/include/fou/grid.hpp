#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fou/common.hpp"

namespace fou {

inline bool is_power_of_two(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

// Periodic uniform tensor grid on the centered box [-L_j/2, L_j/2)^n.
// Points x_i = -L/2 + i h with h = L/N; frequencies live on the centered
// lattice (m - N/2) * 2*pi/L.
class Grid {
public:
    Grid() = default;

    Grid(std::vector<double> lengths, std::vector<std::size_t> npoints)
        : lengths_(std::move(lengths)), npoints_(std::move(npoints)) {
        if (lengths_.empty() || lengths_.size() != npoints_.size())
            throw InvalidArgument("Grid: lengths and point counts must match and be nonempty");
        if (lengths_.size() > 4) throw InvalidArgument("Grid: dimensions above 4 are unsupported");
        for (std::size_t j = 0; j < lengths_.size(); ++j) {
            if (!(lengths_[j] > 0.0) || !std::isfinite(lengths_[j]))
                throw InvalidArgument("Grid: box length must be positive and finite");
            if (!is_power_of_two(npoints_[j]) || npoints_[j] < 2)
                throw InvalidArgument("Grid: point counts must be powers of two (>= 2)");
        }
    }

    static Grid uniform(std::size_t dim, double length, std::size_t npoints) {
        return Grid(std::vector<double>(dim, length), std::vector<std::size_t>(dim, npoints));
    }

    std::size_t dim() const { return lengths_.size(); }
    const std::vector<double>& lengths() const { return lengths_; }
    const std::vector<std::size_t>& npoints() const { return npoints_; }

    std::size_t total() const {
        std::size_t t = 1;
        for (std::size_t n : npoints_) t *= n;
        return t;
    }

    double spacing(std::size_t axis) const {
        return lengths_[axis] / static_cast<double>(npoints_[axis]);
    }

    double cell_volume() const {
        double v = 1.0;
        for (std::size_t j = 0; j < dim(); ++j) v *= spacing(j);
        return v;
    }

    double box_volume() const {
        double v = 1.0;
        for (double l : lengths_) v *= l;
        return v;
    }

    double point(std::size_t axis, std::size_t i) const {
        return -0.5 * lengths_[axis] + static_cast<double>(i) * spacing(axis);
    }

    double freq_step(std::size_t axis) const {
        return 2.0 * 3.14159265358979323846 / lengths_[axis];
    }

    // Centered frequency of bin m on `axis`: (m - N/2) * 2*pi/L.
    double freq(std::size_t axis, std::size_t m) const {
        return (static_cast<double>(m) - 0.5 * static_cast<double>(npoints_[axis])) *
               freq_step(axis);
    }

    double nyquist(std::size_t axis) const {
        return 0.5 * static_cast<double>(npoints_[axis]) * freq_step(axis);
    }

    // Grid whose points are this grid's frequencies (and vice versa).
    Grid frequency_grid() const {
        std::vector<double> flen(dim());
        for (std::size_t j = 0; j < dim(); ++j)
            flen[j] = static_cast<double>(npoints_[j]) * freq_step(j);
        return Grid(std::move(flen), npoints_);
    }

    bool approx_equal(const Grid& other, double rel_tol = 1e-12) const {
        if (dim() != other.dim()) return false;
        for (std::size_t j = 0; j < dim(); ++j) {
            if (npoints_[j] != other.npoints_[j]) return false;
            if (std::abs(lengths_[j] - other.lengths_[j]) > rel_tol * lengths_[j]) return false;
        }
        return true;
    }

    // Row-major strides: the last axis is contiguous.
    std::vector<std::size_t> strides() const {
        std::vector<std::size_t> s(dim());
        std::size_t acc = 1;
        for (std::size_t j = dim(); j-- > 0;) {
            s[j] = acc;
            acc *= npoints_[j];
        }
        return s;
    }

private:
    std::vector<double> lengths_;
    std::vector<std::size_t> npoints_;
};

// Odometer over the multi-indices of a grid, row-major order.
class MultiIndex {
public:
    explicit MultiIndex(const Grid& grid) : npoints_(grid.npoints()), index_(grid.dim(), 0) {}

    const std::vector<std::size_t>& operator*() const { return index_; }
    std::size_t operator[](std::size_t axis) const { return index_[axis]; }

    bool advance() {
        for (std::size_t j = index_.size(); j-- > 0;) {
            if (++index_[j] < npoints_[j]) return true;
            index_[j] = 0;
        }
        return false;
    }

private:
    std::vector<std::size_t> npoints_;
    std::vector<std::size_t> index_;
};

}  // namespace fou
