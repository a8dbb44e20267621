#pragma once

#include "vbtrack/errors.hpp"
#include "vbtrack/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace vbtrack {

namespace detail {

template <typename Scalar>
void check_state_dim(const GaussianBelief<Scalar>& belief, const LinearModel<Scalar>& model,
                     const char* where)
{
    if (belief.dim() != model.state_dim()) {
        throw DimensionMismatch(std::string(where) + ": belief has dimension " +
                                std::to_string(belief.dim()) + ", model expects " +
                                std::to_string(model.state_dim()));
    }
}

template <typename Scalar, typename Derived>
void check_obs_dim(const Eigen::MatrixBase<Derived>& z, const LinearModel<Scalar>& model,
                   const char* where)
{
    if (z.size() != model.obs_dim()) {
        throw DimensionMismatch(std::string(where) + ": detection has dimension " +
                                std::to_string(z.size()) + ", model expects " +
                                std::to_string(model.obs_dim()));
    }
}

/// LLT of a symmetric matrix; throws NumericDegeneracy when it is not PD.
template <typename Scalar>
Eigen::LLT<Mat<Scalar>> factorize_pd(const Mat<Scalar>& m, const char* where)
{
    Eigen::LLT<Mat<Scalar>> llt(m);
    if (llt.info() != Eigen::Success) {
        throw NumericDegeneracy(std::string(where) + ": matrix is not positive definite");
    }
    const auto diag = llt.matrixLLT().diagonal();
    if (!diag.allFinite() || diag.minCoeff() <= Scalar(0)) {
        throw NumericDegeneracy(std::string(where) + ": singular factorization");
    }
    return llt;
}

/// Conditions a Gaussian prior on z through H with noise covariance R.
/// Shared by the Kalman update and the variational state-factor update.
template <typename Scalar, typename Derived>
GaussianBelief<Scalar> gaussian_condition(const Vec<Scalar>& mean, const Mat<Scalar>& cov,
                                          const Eigen::MatrixBase<Derived>& z,
                                          const Mat<Scalar>& H, const Mat<Scalar>& R,
                                          const char* where)
{
    const Mat<Scalar> PHt = cov * H.transpose();
    const Mat<Scalar> innov_cov = symmetrize_psd(Mat<Scalar>(H * PHt + R));
    const auto llt = factorize_pd(innov_cov, where);
    // K = P H^T S^{-1}, computed as (S^{-1} H P)^T.
    const Mat<Scalar> K = llt.solve(PHt.transpose()).transpose();
    const Vec<Scalar> innovation = z - H * mean;
    const Eigen::Index n = mean.size();
    // Joseph form keeps the result PSD under round-off.
    const Mat<Scalar> IKH = Mat<Scalar>::Identity(n, n) - K * H;
    const Mat<Scalar> post_cov = IKH * cov * IKH.transpose() + K * R * K.transpose();
    return {mean + K * innovation, post_cov};
}

}  // namespace detail

template <typename Scalar>
GaussianBelief<Scalar> kf_predict(const GaussianBelief<Scalar>& prior,
                                  const LinearModel<Scalar>& model)
{
    detail::check_state_dim(prior, model, "kf_predict");
    const auto& F = model.F();
    return {F * prior.mean(), F * prior.cov() * F.transpose() + model.Q()};
}

template <typename Scalar, typename Derived>
GaussianBelief<Scalar> kf_update(const GaussianBelief<Scalar>& pred,
                                 const Eigen::MatrixBase<Derived>& z,
                                 const LinearModel<Scalar>& model)
{
    detail::check_state_dim(pred, model, "kf_update");
    detail::check_obs_dim(z, model, "kf_update");
    return detail::gaussian_condition(pred.mean(), pred.cov(), z, model.H(), model.R(),
                                      "kf_update");
}

/// log N(z; H mean, H P H^T + R), the marginal likelihood of one detection.
template <typename Scalar, typename Derived>
Scalar log_evidence(const GaussianBelief<Scalar>& pred, const Eigen::MatrixBase<Derived>& z,
                    const LinearModel<Scalar>& model)
{
    detail::check_state_dim(pred, model, "log_evidence");
    detail::check_obs_dim(z, model, "log_evidence");
    const auto& H = model.H();
    const Mat<Scalar> innov_cov =
        symmetrize_psd(Mat<Scalar>(H * pred.cov() * H.transpose() + model.R()));
    const auto llt = detail::factorize_pd(innov_cov, "log_evidence");
    const Vec<Scalar> innovation = z - H * pred.mean();
    const Vec<Scalar> whitened = llt.matrixL().solve(innovation);
    const Scalar log_det = Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
    const auto d = static_cast<Scalar>(z.size());
    return Scalar(-0.5) * (d * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) + log_det +
                           whitened.squaredNorm());
}

}  // namespace vbtrack
