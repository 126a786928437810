#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fou/common.hpp"
#include "fou/matrix.hpp"

namespace fou {

// Kalman flag of a model (B, Q): verdict of the rank condition, the smallest
// index r, orthonormal bases of the nested spaces V_0 c ... c V_r spanned by
// Ran(B^j Q^{1/2}), the orthogonal projections P_k onto them and the
// increments Pi_k between consecutive flags.
struct KalmanStructure {
    Eigen::Index n = 0;
    bool holds = false;
    std::optional<int> r;
    double rank_tol = 0.0;
    std::vector<int> rank_profile;  // rank of [Q^{1/2}, ..., B^k Q^{1/2}] per k
    std::vector<Mat> bases;         // n x dim(V_k), orthonormal columns
    std::vector<Mat> proj;          // P_k
    std::vector<Mat> incr;          // Pi_0 = P_0, Pi_k = P_k - P_{k-1}

    const Mat& projection(int k) const {
        if (k < 0 || k >= static_cast<int>(proj.size()))
            throw InvalidArgument("KalmanStructure: projection index out of range");
        return proj[static_cast<std::size_t>(k)];
    }
};

namespace detail {

inline int numerical_rank(const Mat& m, double tol) {
    Eigen::BDCSVD<Mat> svd(m);
    int rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > tol) ++rank;
    return rank;
}

inline void check_structure_invariants(const KalmanStructure& ks) {
    const double tol = 1e-12;
    const Eigen::Index n = ks.n;
    for (std::size_t k = 0; k < ks.proj.size(); ++k) {
        const Mat& P = ks.proj[k];
        if ((P - P.transpose()).cwiseAbs().maxCoeff() > tol)
            throw InternalError("KalmanStructure: projection " + std::to_string(k) +
                                " is not symmetric");
        if ((P * P - P).cwiseAbs().maxCoeff() > tol)
            throw InternalError("KalmanStructure: projection " + std::to_string(k) +
                                " is not idempotent");
        if (k + 1 < ks.proj.size() &&
            (ks.proj[k] * ks.proj[k + 1] - ks.proj[k]).cwiseAbs().maxCoeff() > tol)
            throw InternalError("KalmanStructure: projections are not nested at k = " +
                                std::to_string(k));
    }
    if (ks.holds) {
        if ((ks.proj.back() - Mat::Identity(n, n)).cwiseAbs().maxCoeff() > tol)
            throw InternalError("KalmanStructure: P_r is not the identity");
        Mat sum = Mat::Zero(n, n);
        for (std::size_t j = 0; j < ks.incr.size(); ++j) {
            sum += ks.incr[j];
            for (std::size_t k = 0; k < j; ++k)
                if ((ks.incr[j] * ks.incr[k]).cwiseAbs().maxCoeff() > tol)
                    throw InternalError("KalmanStructure: increments are not orthogonal");
        }
        if ((sum - ks.proj.back()).cwiseAbs().maxCoeff() > tol)
            throw InternalError("KalmanStructure: increments do not sum to P_r");
    }
}

}  // namespace detail

// Computes the Kalman verdict and the full flag.  The rank-form and the
// kernel-intersection form of the condition are evaluated independently and
// must agree; a non-Kalman model is a valid result, not an error.
inline KalmanStructure analyze_structure(const SquareMatrix& b, const PsdMatrix& q,
                                         double rank_tol = 0.0) {
    const Eigen::Index n = b.dim();
    if (q.dim() != n) throw InvalidArgument("analyze_structure: dimension mismatch");

    const Mat& B = b.eigen();
    const Mat& S = q.sqrt().eigen();  // Q^{1/2}

    // Column blocks B^k Q^{1/2} of the full Kalman matrix.
    std::vector<Mat> blocks(static_cast<std::size_t>(n));
    blocks[0] = S;
    for (Eigen::Index k = 1; k < n; ++k) blocks[static_cast<std::size_t>(k)] = B * blocks[k - 1];

    Mat full(n, n * n);
    for (Eigen::Index k = 0; k < n; ++k)
        full.middleCols(k * n, n) = blocks[static_cast<std::size_t>(k)];

    Eigen::BDCSVD<Mat> full_svd(full);
    const double sigma_max = full_svd.singularValues().size() > 0
                                 ? full_svd.singularValues()(0)
                                 : 0.0;
    if (rank_tol <= 0.0)
        rank_tol = static_cast<double>(n) * std::numeric_limits<double>::epsilon() *
                   std::max(sigma_max, std::numeric_limits<double>::min());

    KalmanStructure ks;
    ks.n = n;
    ks.rank_tol = rank_tol;

    int r = -1;
    std::vector<Mat> bases;
    for (Eigen::Index k = 0; k < n; ++k) {
        Mat trunc = full.leftCols((k + 1) * n);
        Eigen::BDCSVD<Mat> svd(trunc, Eigen::ComputeThinU);
        int rank = 0;
        for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > rank_tol) ++rank;
        ks.rank_profile.push_back(rank);
        bases.push_back(svd.matrixU().leftCols(rank));

        // Independent check: kernel-intersection form on the stacked rows
        // Q^{1/2} (B^T)^j, whose kernel is V_k^perp.
        Mat stacked((k + 1) * n, n);
        for (Eigen::Index j = 0; j <= k; ++j)
            stacked.middleRows(j * n, n) = blocks[static_cast<std::size_t>(j)].transpose();
        const int kernel_dim = static_cast<int>(n) - detail::numerical_rank(stacked, rank_tol);
        if (kernel_dim != static_cast<int>(n) - rank)
            throw InternalError(
                "analyze_structure: rank and kernel-intersection characterizations disagree at "
                "k = " +
                std::to_string(k));

        if (rank == static_cast<int>(n)) {
            r = static_cast<int>(k);
            break;
        }
    }

    ks.holds = (r >= 0);
    if (!ks.holds) return ks;

    ks.r = r;
    ks.bases = std::move(bases);
    for (int k = 0; k <= r; ++k) {
        const Mat& U = ks.bases[static_cast<std::size_t>(k)];
        Mat P = U * U.transpose();
        ks.proj.push_back(0.5 * (P + P.transpose()));
    }
    // P_r has full rank; snap it to the exact identity so downstream weights
    // see no roundoff haze.
    ks.proj.back() = Mat::Identity(n, n);
    ks.incr.push_back(ks.proj[0]);
    for (int k = 1; k <= r; ++k) ks.incr.push_back(ks.proj[k] - ks.proj[k - 1]);

    detail::check_structure_invariants(ks);
    return ks;
}

// Exponents the paper attaches to a Kalman structure for a given s.
struct ExponentTable {
    double s = 0.0;
    int r = 0;
    std::vector<double> smoothing_exponent;   // 1/(2s) + k
    std::vector<double> subelliptic_order;    // 2s / (1 + 2ks)
    double gamma = 0.0;                       // 1/(2s) + r
    double dissipation_m = 0.0;               // 2s*gamma = 1 + 2rs
    std::optional<double> cost_exponent;      // (1+2rs)/(2s-1), s > 1/2 only
    double subelliptic_loss = 0.0;            // 2rs / (1 + 2rs)
};

inline ExponentTable characteristic_exponents(const KalmanStructure& ks, double s) {
    if (!(s > 0.0)) throw InvalidArgument("characteristic_exponents: s must be positive");
    if (!ks.holds || !ks.r)
        throw InvalidArgument("characteristic_exponents: Kalman condition does not hold");
    ExponentTable table;
    table.s = s;
    table.r = *ks.r;
    for (int k = 0; k <= table.r; ++k) {
        table.smoothing_exponent.push_back(1.0 / (2.0 * s) + k);
        table.subelliptic_order.push_back(2.0 * s / (1.0 + 2.0 * k * s));
    }
    table.gamma = 1.0 / (2.0 * s) + table.r;
    table.dissipation_m = 2.0 * s * table.gamma;
    if (s > 0.5) table.cost_exponent = (1.0 + 2.0 * table.r * s) / (2.0 * s - 1.0);
    table.subelliptic_loss = 2.0 * table.r * s / (1.0 + 2.0 * table.r * s);
    return table;
}

}  // namespace fou
