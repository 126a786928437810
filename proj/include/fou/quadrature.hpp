#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <vector>

#include "fou/common.hpp"

namespace fou {

// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

inline GaussLegendreRule compute_gauss_legendre(std::size_t n) {
    if (n == 0) throw InvalidArgument("Gauss-Legendre rule needs at least one node");
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double pi = 3.14159265358979323846;
    // Newton iteration from the Chebyshev-based initial guess; nodes come out
    // in decreasing order, symmetry fills the other half.
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Legendre recurrence for P_n(x) and P_n'(x).
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

}  // namespace detail

// Rules are cached per node count; they are pure data, cheap to share.
inline const GaussLegendreRule& gauss_legendre(std::size_t n) {
    static std::map<std::size_t, GaussLegendreRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_legendre(n)).first;
    return it->second;
}

template <typename F>
double gl_integrate(const F& f, double a, double b, std::size_t nodes) {
    const GaussLegendreRule& rule = gauss_legendre(nodes);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return half * sum;
}

struct QuadratureOptions {
    std::size_t nodes = 32;       // base rule; the error estimate doubles it
    double rel_tol = 1e-10;
    std::size_t max_doublings = 4;   // whole-interval stage
    std::size_t max_segments = 512;  // adaptive bisection stage
};

struct QuadratureDiagnostics {
    std::size_t evaluations = 0;
    std::size_t segments = 1;
    bool split = false;  // true if bisection was needed beyond plain doubling
};

// Integrates f over [a, b] to `rel_tol` relative accuracy.  Plain node
// doubling handles smooth integrands; integrands with |.|^q kinks (symbol
// integrals at grazing zeros) fall back to adaptive bisection, where each
// segment keeps the doubled-rule error estimate.  Throws with the worst
// subinterval when the segment budget runs out.
template <typename F>
double adaptive_integrate(const F& f, double a, double b, const QuadratureOptions& opt = {},
                          QuadratureDiagnostics* diag = nullptr) {
    if (!(b >= a)) throw InvalidArgument("adaptive_integrate: interval end below start");
    if (a == b) return 0.0;

    QuadratureDiagnostics local;
    auto record = [&](QuadratureDiagnostics d) {
        if (diag) *diag = d;
    };

    // Stage 1: node doubling on the whole interval.
    double coarse = gl_integrate(f, a, b, opt.nodes);
    local.evaluations += opt.nodes;
    std::size_t n = opt.nodes;
    for (std::size_t d = 0; d < opt.max_doublings; ++d) {
        n *= 2;
        double fine = gl_integrate(f, a, b, n);
        local.evaluations += n;
        double scale = std::max(std::abs(fine), std::numeric_limits<double>::min());
        if (std::abs(fine - coarse) <= opt.rel_tol * scale) {
            record(local);
            return fine;
        }
        coarse = fine;
    }

    // Stage 2: adaptive bisection; per segment the estimate is GL(2n) and the
    // error is |GL(2n) - GL(n)|.
    struct Segment {
        double a, b, value, err;
    };
    local.split = true;
    auto make_segment = [&](double lo, double hi) {
        double c = gl_integrate(f, lo, hi, opt.nodes);
        double v = gl_integrate(f, lo, hi, 2 * opt.nodes);
        local.evaluations += 3 * opt.nodes;
        return Segment{lo, hi, v, std::abs(v - c)};
    };
    std::vector<Segment> segments{make_segment(a, b)};
    while (true) {
        double total = 0.0, err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            total += segments[i].value;
            err += segments[i].err;
            if (segments[i].err > segments[worst].err) worst = i;
        }
        double scale = std::max(std::abs(total), std::numeric_limits<double>::min());
        if (err <= opt.rel_tol * scale) {
            local.segments = segments.size();
            record(local);
            return total;
        }
        if (segments.size() >= opt.max_segments) {
            const Segment& w = segments[worst];
            throw NumericalError(
                "quadrature_nonconvergent",
                "adaptive quadrature did not reach tolerance; worst subinterval [" +
                    std::to_string(w.a) + ", " + std::to_string(w.b) + "] with error " +
                    std::to_string(w.err));
        }
        Segment w = segments[worst];
        double mid = 0.5 * (w.a + w.b);
        segments[worst] = make_segment(w.a, mid);
        segments.push_back(make_segment(mid, w.b));
    }
}

}  // namespace fou
