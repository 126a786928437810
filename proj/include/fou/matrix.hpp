#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fou/common.hpp"
#include "fou/quadrature.hpp"

namespace fou {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Dense real n x n matrix with validated entries.  Holds model coefficients
// (the drift matrix B and friends); not meant for large n.
class SquareMatrix {
public:
    SquareMatrix() : m_(Mat::Zero(1, 1)) {}

    explicit SquareMatrix(Mat m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols() || m_.rows() < 1)
            throw InvalidArgument("SquareMatrix: matrix must be square with n >= 1");
        if (!m_.allFinite()) throw InvalidArgument("SquareMatrix: entries must be finite");
    }

    static SquareMatrix zero(Eigen::Index n) { return SquareMatrix(Mat::Zero(n, n)); }
    static SquareMatrix identity(Eigen::Index n) { return SquareMatrix(Mat::Identity(n, n)); }

    static SquareMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        const auto n = static_cast<Eigen::Index>(rows.size());
        if (n < 1) throw InvalidArgument("SquareMatrix: empty row list");
        Mat m(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (static_cast<Eigen::Index>(rows[i].size()) != n)
                throw InvalidArgument("SquareMatrix: row " + std::to_string(i) + " has wrong length");
            for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[i][j];
        }
        return SquareMatrix(std::move(m));
    }

    Eigen::Index dim() const { return m_.rows(); }
    const Mat& eigen() const { return m_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    bool is_zero() const { return m_.isZero(0.0); }

private:
    Mat m_;
};

// Symmetric positive semidefinite matrix together with its PSD square root.
// Eigenvalues below `eig_tol` are clamped to zero when forming the root.
class PsdMatrix {
public:
    PsdMatrix() = default;

    const SquareMatrix& base() const { return base_; }
    const SquareMatrix& sqrt() const { return sqrt_; }
    double eig_tol() const { return eig_tol_; }
    const Vec& eigenvalues() const { return clamped_eigs_; }
    Eigen::Index dim() const { return base_.dim(); }

    // Nonsingular in the numerical-rank sense used for the clamp.
    bool nonsingular() const { return clamped_eigs_.minCoeff() > eig_tol_; }

    friend PsdMatrix psd_sqrt(const SquareMatrix& q);

private:
    SquareMatrix base_;
    SquareMatrix sqrt_;
    Vec clamped_eigs_;
    double eig_tol_ = 0.0;
};

// exp(tA) by scaling and squaring with diagonal Pade approximants of degree
// 3/5/7/9/13 picked from the 1-norm (Higham's thresholds).  Accurate to
// ~1e-13 relative for moderate norms; fails loudly instead of returning Inf.
inline SquareMatrix mat_exp(const SquareMatrix& a, double t) {
    if (!std::isfinite(t)) throw InvalidArgument("mat_exp: time must be finite");
    const Eigen::Index n = a.dim();
    Mat A = t * a.eigen();
    if (!A.allFinite())
        throw NumericalError("mat_exp_overflow", "mat_exp: t*A overflows double range");

    static const double theta[] = {1.495585217958292e-2, 2.539398330063230e-1,
                                   9.504178996162932e-1, 2.097847961257068e0,
                                   5.371920351148152e0};
    static const int degrees[] = {3, 5, 7, 9, 13};
    static const std::vector<std::vector<double>> pade_coeffs = {
        {120., 60., 12., 1.},
        {30240., 15120., 3360., 420., 30., 1.},
        {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.},
        {17643225600., 8821612800., 2075673600., 302702400., 30270240., 2162160., 110880., 3960.,
         90., 1.},
        {64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800.,
         129060195264000., 10559470521600., 670442572800., 33522128640., 1323241920., 40840800.,
         960960., 16380., 182., 1.}};

    const double norm = A.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
    int choice = -1;
    for (int i = 0; i < 5; ++i) {
        if (norm <= theta[i]) {
            choice = i;
            break;
        }
    }
    int squarings = 0;
    if (choice < 0) {
        choice = 4;
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta[4]))));
        if (squarings > 200)
            throw NumericalError("mat_exp_overflow",
                                 "mat_exp: ||tA|| = " + std::to_string(norm) +
                                     " too large for double range");
        A /= std::pow(2.0, squarings);
    }

    const std::vector<double>& b = pade_coeffs[choice];
    const int degree = degrees[choice];
    const Mat A2 = A * A;
    Mat U, V;
    if (degree < 13) {
        Mat evenPow = Mat::Identity(n, n);
        U = b[1] * Mat::Identity(n, n);
        V = b[0] * Mat::Identity(n, n);
        for (int k = 2; k <= degree; k += 2) {
            evenPow = evenPow * A2;
            V += b[k] * evenPow;
            if (k + 1 <= degree) U += b[k + 1] * evenPow;
        }
        U = A * U;
    } else {
        const Mat A4 = A2 * A2;
        const Mat A6 = A4 * A2;
        U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 +
                 b[1] * Mat::Identity(n, n));
        V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 +
            b[0] * Mat::Identity(n, n);
    }
    Mat numer = V + U;
    Mat denom = V - U;
    Mat R = denom.partialPivLu().solve(numer);
    for (int i = 0; i < squarings; ++i) R = R * R;
    if (!R.allFinite())
        throw NumericalError("mat_exp_overflow", "mat_exp: result overflows double range");
    return SquareMatrix(std::move(R));
}

// Symmetric PSD square root via eigendecomposition.  Rejects asymmetric
// input and genuinely negative eigenvalues; clamps roundoff-level negatives.
inline PsdMatrix psd_sqrt(const SquareMatrix& q) {
    const Mat& Q = q.eigen();
    const Eigen::Index n = q.dim();
    const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InvalidArgument("psd_sqrt: matrix is not symmetric within 1e-12 relative");

    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Q + Q.transpose()));
    if (es.info() != Eigen::Success)
        throw NumericalError("eig_failed", "psd_sqrt: eigendecomposition failed");
    Vec lambda = es.eigenvalues();
    const double lambda_max = std::max(0.0, lambda.maxCoeff());
    const double eig_tol =
        static_cast<double>(n) * std::numeric_limits<double>::epsilon() * lambda_max;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (lambda(i) < -std::max(eig_tol, 1e-300))
            throw InvalidArgument("psd_sqrt: matrix is not positive semidefinite (eigenvalue " +
                                  std::to_string(lambda(i)) + ")");
        if (lambda(i) < eig_tol) lambda(i) = 0.0;
    }
    Mat root = es.eigenvectors() * lambda.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    root = 0.5 * (root + root.transpose());

    PsdMatrix out;
    out.base_ = SquareMatrix(0.5 * (Q + Q.transpose()));
    out.sqrt_ = SquareMatrix(std::move(root));
    out.clamped_eigs_ = std::move(lambda);
    out.eig_tol_ = eig_tol;
    return out;
}

// Controllability Gramian Q_t = int_0^t exp(-sB) Q exp(-sB^T) ds.
// Gauss-Legendre with node doubling; the integrand is entire in s, so plain
// doubling converges spectrally.
inline PsdMatrix gramian(const SquareMatrix& b, const PsdMatrix& q, double t,
                         std::size_t nodes = 32) {
    if (!(t > 0.0)) throw InvalidArgument("gramian: time must be positive");
    if (b.dim() != q.dim()) throw InvalidArgument("gramian: dimension mismatch");
    const Eigen::Index n = b.dim();
    const Mat& Q = q.base().eigen();

    auto integrate = [&](std::size_t m) {
        const GaussLegendreRule& rule = gauss_legendre(m);
        Mat acc = Mat::Zero(n, n);
        const double mid = 0.5 * t, half = 0.5 * t;
        for (std::size_t i = 0; i < m; ++i) {
            const double s = mid + half * rule.nodes[i];
            Mat E = mat_exp(b, -s).eigen();
            acc += rule.weights[i] * (E * Q * E.transpose());
        }
        return (half * acc).eval();
    };

    Mat coarse = integrate(nodes);
    std::size_t m = nodes;
    for (std::size_t d = 0; d < 4; ++d) {
        m *= 2;
        Mat fine = integrate(m);
        const double scale = std::max(fine.norm(), std::numeric_limits<double>::min());
        if ((fine - coarse).norm() <= 1e-10 * scale) {
            // GL weights are positive and the integrand is PSD, so any
            // negative eigenvalue is pure roundoff; clamp before rooting.
            Mat sym = 0.5 * (fine + fine.transpose());
            Eigen::SelfAdjointEigenSolver<Mat> es(sym);
            Vec lambda = es.eigenvalues().cwiseMax(0.0);
            sym = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
            return psd_sqrt(SquareMatrix(0.5 * (sym + sym.transpose())));
        }
        coarse = fine;
    }
    throw NumericalError("gramian_nonconvergent",
                         "gramian: node doubling did not converge (t = " + std::to_string(t) +
                             ", reached " + std::to_string(m) + " nodes)");
}

}  // namespace fou
