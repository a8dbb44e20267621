#pragma once

#include "vbtrack/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace vbtrack {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Symmetry tolerance applied when validating covariances.
inline constexpr double kSymmetryTolerance = 1e-9;
/// Smallest eigenvalue allowed relative to the largest eigenvalue magnitude.
inline constexpr double kPsdRelativeTolerance = 1e-8;

/// Returns (M + M^T)/2, rejecting matrices that are clearly indefinite.
///
/// The check is relative: an eigenvalue below -1e-8 times the largest
/// eigenvalue magnitude raises NumericDegeneracy. Round-off negatives
/// smaller than that are passed through unchanged.
template <typename Derived>
Mat<typename Derived::Scalar> symmetrize_psd(const Eigen::MatrixBase<Derived>& m)
{
    using Scalar = typename Derived::Scalar;
    if (m.rows() != m.cols()) {
        throw DimensionMismatch("symmetrize_psd: matrix is " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + ", expected square");
    }
    Mat<Scalar> sym = (m + m.transpose()) / Scalar(2);
    if (sym.size() == 0) {
        return sym;
    }
    if (!sym.allFinite()) {
        throw NumericDegeneracy("symmetrize_psd: non-finite entries");
    }
    Eigen::SelfAdjointEigenSolver<Mat<Scalar>> eig(sym, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    const Scalar largest = ev.cwiseAbs().maxCoeff();
    if (ev.minCoeff() < -Scalar(kPsdRelativeTolerance) * largest) {
        throw NumericDegeneracy("symmetrize_psd: matrix is indefinite (min eigenvalue " +
                                std::to_string(double(ev.minCoeff())) + ")");
    }
    return sym;
}

/// Gaussian mean/covariance pair. The covariance is symmetrized and checked
/// for positive semi-definiteness on construction.
template <typename Scalar>
class GaussianBelief {
public:
    GaussianBelief(Vec<Scalar> mean, const Mat<Scalar>& cov)
        : mean_(std::move(mean)), cov_(symmetrize_psd(cov))
    {
        if (cov_.rows() != mean_.size()) {
            throw DimensionMismatch("GaussianBelief: mean has " + std::to_string(mean_.size()) +
                                    " entries, covariance is " + std::to_string(cov_.rows()) +
                                    "x" + std::to_string(cov_.cols()));
        }
    }

    const Vec<Scalar>& mean() const noexcept { return mean_; }
    const Mat<Scalar>& cov() const noexcept { return cov_; }
    Eigen::Index dim() const noexcept { return mean_.size(); }

private:
    Vec<Scalar> mean_;
    Mat<Scalar> cov_;
};

/// x_k = F x_{k-1} + w_k,  z_k = H x_k + v_k,  w ~ (0, Q), v ~ (0, R).
///
/// Q and R only need to be positive semi-definite here; operations that
/// invert R or the innovation covariance raise NumericDegeneracy instead.
template <typename Scalar>
class LinearModel {
public:
    LinearModel(Mat<Scalar> F, const Mat<Scalar>& Q, Mat<Scalar> H, const Mat<Scalar>& R,
                Scalar dt)
        : F_(std::move(F)), Q_(symmetrize_psd(Q)), H_(std::move(H)), R_(symmetrize_psd(R)), dt_(dt)
    {
        const auto n = F_.rows();
        if (F_.cols() != n || Q_.rows() != n || H_.cols() != n || R_.rows() != H_.rows()) {
            throw DimensionMismatch("LinearModel: inconsistent dimensions");
        }
        if (!(dt_ > Scalar(0))) {
            throw InvalidParameter("LinearModel: dt must be positive");
        }
    }

    const Mat<Scalar>& F() const noexcept { return F_; }
    const Mat<Scalar>& Q() const noexcept { return Q_; }
    const Mat<Scalar>& H() const noexcept { return H_; }
    const Mat<Scalar>& R() const noexcept { return R_; }
    Scalar dt() const noexcept { return dt_; }

    Eigen::Index state_dim() const noexcept { return F_.rows(); }
    Eigen::Index obs_dim() const noexcept { return H_.rows(); }

    LinearModel with_Q(const Mat<Scalar>& Q) const { return {F_, Q, H_, R_, dt_}; }
    LinearModel with_R(const Mat<Scalar>& R) const { return {F_, Q_, H_, R, dt_}; }

private:
    Mat<Scalar> F_;
    Mat<Scalar> Q_;
    Mat<Scalar> H_;
    Mat<Scalar> R_;
    Scalar dt_;
};

/// Planar constant-velocity state [px, py, vx, vy].
struct StateVector {
    double px = 0.0;
    double py = 0.0;
    double vx = 0.0;
    double vy = 0.0;

    Eigen::Vector4d to_eigen() const { return {px, py, vx, vy}; }
    static StateVector from_eigen(const Eigen::Ref<const Eigen::VectorXd>& x)
    {
        if (x.size() != 4) {
            throw DimensionMismatch("StateVector: expected 4 entries");
        }
        return {x(0), x(1), x(2), x(3)};
    }
};

/// Constant-velocity model in the plane observed in position.
///
/// F = [[I, dt I], [0, I]], Q = [[dt^3/3 I, dt^2/2 I], [dt^2/2 I, dt I]],
/// H = [I 0], R = r I.
template <typename Scalar = double>
LinearModel<Scalar> build_cv_model(Scalar dt, Scalar r)
{
    if (!(dt > Scalar(0)) || !std::isfinite(double(dt))) {
        throw InvalidParameter("build_cv_model: dt must be positive");
    }
    if (!(r > Scalar(0)) || !std::isfinite(double(r))) {
        throw InvalidParameter("build_cv_model: r must be positive");
    }
    const Mat<Scalar> I2 = Mat<Scalar>::Identity(2, 2);
    Mat<Scalar> F = Mat<Scalar>::Identity(4, 4);
    F.topRightCorner(2, 2) = dt * I2;

    Mat<Scalar> Q(4, 4);
    Q.topLeftCorner(2, 2) = (dt * dt * dt / Scalar(3)) * I2;
    Q.topRightCorner(2, 2) = (dt * dt / Scalar(2)) * I2;
    Q.bottomLeftCorner(2, 2) = (dt * dt / Scalar(2)) * I2;
    Q.bottomRightCorner(2, 2) = dt * I2;

    Mat<Scalar> H = Mat<Scalar>::Zero(2, 4);
    H.leftCols(2) = I2;

    return {F, Q, H, r * I2, dt};
}

}  // namespace vbtrack
