#pragma once

#include "vbtrack/errors.hpp"
#include "vbtrack/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

namespace vbtrack::dist {

template <typename Scalar>
Scalar log_2pi()
{
    return std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
}

/// ln Gamma_D(a), the multivariate gamma function.
template <typename Scalar>
Scalar log_multigamma(Scalar a, Eigen::Index dim)
{
    const auto d = static_cast<Scalar>(dim);
    Scalar out = d * (d - Scalar(1)) / Scalar(4) * std::log(std::numbers::pi_v<Scalar>);
    for (Eigen::Index j = 0; j < dim; ++j) {
        out += std::lgamma(a - static_cast<Scalar>(j) / Scalar(2));
    }
    return out;
}

template <typename Scalar>
Scalar log_det_pd(const Mat<Scalar>& m)
{
    Eigen::LLT<Mat<Scalar>> llt(m);
    if (llt.info() != Eigen::Success) {
        throw NumericDegeneracy("log_det_pd: matrix is not positive definite");
    }
    return Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
}

template <typename Scalar>
Scalar log_normal(const Vec<Scalar>& x, const Vec<Scalar>& mean, const Mat<Scalar>& cov)
{
    Eigen::LLT<Mat<Scalar>> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw NumericDegeneracy("log_normal: covariance is not positive definite");
    }
    const Vec<Scalar> w = llt.matrixL().solve(x - mean);
    const Scalar log_det = Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
    return Scalar(-0.5) * (static_cast<Scalar>(x.size()) * log_2pi<Scalar>() + log_det +
                           w.squaredNorm());
}

/// Gamma density with shape/rate parameterization.
template <typename Scalar>
Scalar log_gamma_pdf(Scalar x, Scalar shape, Scalar rate)
{
    return shape * std::log(rate) - std::lgamma(shape) + (shape - Scalar(1)) * std::log(x) -
           rate * x;
}

/// Inverse-Wishart with `dof` degrees of freedom and scale matrix `scale`;
/// E[Sigma] = scale / (dof - D - 1).
template <typename Scalar>
Scalar log_inverse_wishart(const Mat<Scalar>& sigma, Scalar dof, const Mat<Scalar>& scale)
{
    const Eigen::Index d = sigma.rows();
    Eigen::LLT<Mat<Scalar>> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw NumericDegeneracy("log_inverse_wishart: sample is not positive definite");
    }
    const Scalar log_det_sigma = Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
    const Scalar trace_term = llt.solve(scale).trace();
    const auto dd = static_cast<Scalar>(d);
    return dof / Scalar(2) * log_det_pd(scale) - dof * dd / Scalar(2) * std::log(Scalar(2)) -
           log_multigamma(dof / Scalar(2), d) -
           (dof + dd + Scalar(1)) / Scalar(2) * log_det_sigma - trace_term / Scalar(2);
}

template <typename Scalar, typename Rng>
Vec<Scalar> sample_standard_normal(Eigen::Index n, Rng& rng)
{
    std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
    Vec<Scalar> out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out(i) = normal(rng);
    }
    return out;
}

/// Draw from N(mean, L L^T) given the lower Cholesky factor L.
template <typename Scalar, typename Rng>
Vec<Scalar> sample_normal(const Vec<Scalar>& mean, const Mat<Scalar>& chol_lower, Rng& rng)
{
    return mean + chol_lower * sample_standard_normal<Scalar>(mean.size(), rng);
}

template <typename Scalar, typename Rng>
Scalar sample_gamma(Scalar shape, Scalar rate, Rng& rng)
{
    std::gamma_distribution<Scalar> gamma(shape, Scalar(1) / rate);
    return gamma(rng);
}

/// Bartlett-decomposition draw of Sigma ~ IW(dof, scale).
template <typename Scalar, typename Rng>
Mat<Scalar> sample_inverse_wishart(Scalar dof, const Mat<Scalar>& scale, Rng& rng)
{
    const Eigen::Index d = scale.rows();
    // Sigma^{-1} ~ Wishart(dof, scale^{-1}).
    const Mat<Scalar> scale_inv = scale.llt().solve(Mat<Scalar>::Identity(d, d));
    Eigen::LLT<Mat<Scalar>> llt(scale_inv);
    if (llt.info() != Eigen::Success) {
        throw NumericDegeneracy("sample_inverse_wishart: scale is not positive definite");
    }
    const Mat<Scalar> L = llt.matrixL();
    std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
    Mat<Scalar> A = Mat<Scalar>::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        std::chi_squared_distribution<Scalar> chi2(dof - static_cast<Scalar>(i));
        A(i, i) = std::sqrt(chi2(rng));
        for (Eigen::Index j = 0; j < i; ++j) {
            A(i, j) = normal(rng);
        }
    }
    const Mat<Scalar> LA = L * A;
    const Mat<Scalar> wishart = LA * LA.transpose();
    return symmetrize_psd(Mat<Scalar>(wishart.llt().solve(Mat<Scalar>::Identity(d, d))));
}

}  // namespace vbtrack::dist
