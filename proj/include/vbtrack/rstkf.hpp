#pragma once

#include "vbtrack/distributions.hpp"
#include "vbtrack/errors.hpp"
#include "vbtrack/kalman.hpp"
#include "vbtrack/model.hpp"
#include "vbtrack/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

// Robust Student's-t Kalman update solved by variational coordinate descent.
//
// Hierarchical model for one conditional update:
//   x | Sigma, xi ~ N(mu_pred, Sigma / xi),   Sigma ~ IW(u, U),   xi ~ G(s/2, s/2)
//   z | x, lambda ~ N(H x, R / lambda),        lambda ~ G(v/2, v/2)
// with U = P_pred (u - D_x - 1) so that E[Sigma] = P_pred. The variational
// posterior factorizes as N(m, S) IW(Lambda, nu) G(alpha, beta) G(gamma, delta).

namespace vbtrack {

/// Degrees of freedom and iteration count of the robust update.
struct StudentTConfig {
    double s = 10.0;          ///< prior (process) dof
    double v = 10.0;          ///< measurement dof
    std::optional<double> u;  ///< inverse-Wishart dof; unset selects max(50, D_x + 2)
    int iters = 10;

    double iw_dof(Eigen::Index state_dim) const
    {
        return u.value_or(std::max(50.0, static_cast<double>(state_dim) + 2.0));
    }

    void validate(Eigen::Index state_dim) const
    {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw InvalidParameter("StudentTConfig: s must be positive");
        }
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InvalidParameter("StudentTConfig: v must be positive");
        }
        const double dof = iw_dof(state_dim);
        if (!(dof > static_cast<double>(state_dim) + 1.0) || !std::isfinite(dof)) {
            throw InvalidParameter("StudentTConfig: u must exceed D_x + 1 (u=" +
                                   std::to_string(dof) + ", D_x=" + std::to_string(state_dim) +
                                   ")");
        }
        if (iters < 0) {
            throw InvalidParameter("StudentTConfig: iters must be non-negative");
        }
    }

    /// Configuration whose update coincides with the Kalman filter up to
    /// O(1/dof) terms.
    static StudentTConfig gaussian_limit(Eigen::Index state_dim, double dof = 1e9)
    {
        StudentTConfig cfg;
        cfg.s = dof;
        cfg.v = dof;
        cfg.u = static_cast<double>(state_dim) + 1.0 + dof;
        return cfg;
    }
};

template <typename Scalar>
struct VBFactors {
    Vec<Scalar> m;       ///< state mean
    Mat<Scalar> S;       ///< state covariance
    Mat<Scalar> Lambda;  ///< inverse-Wishart scale
    Scalar nu;           ///< inverse-Wishart dof
    Scalar alpha;        ///< shape of q(xi)
    Scalar beta;         ///< rate of q(xi)
    Scalar gamma;        ///< shape of q(lambda)
    Scalar delta;        ///< rate of q(lambda)

    Eigen::Index state_dim() const noexcept { return m.size(); }
};

template <typename Scalar>
struct VBPriors {
    Vec<Scalar> mu_pred;
    Mat<Scalar> P_pred;
    Mat<Scalar> U;
    StudentTConfig config;

    Scalar u() const { return static_cast<Scalar>(config.iw_dof(mu_pred.size())); }
    Scalar s() const { return static_cast<Scalar>(config.s); }
    Scalar v() const { return static_cast<Scalar>(config.v); }
};

template <typename Scalar>
struct AuxMatrices {
    Mat<Scalar> S_tilde;
    Mat<Scalar> R_tilde;
};

template <typename Scalar>
VBPriors<Scalar> make_vb_priors(const GaussianBelief<Scalar>& pred, const StudentTConfig& cfg)
{
    const Eigen::Index dx = pred.dim();
    cfg.validate(dx);
    const auto u = static_cast<Scalar>(cfg.iw_dof(dx));
    return {pred.mean(), pred.cov(), pred.cov() * (u - static_cast<Scalar>(dx) - Scalar(1)), cfg};
}

/// Unit scale expectations: E[xi] = E[lambda] = 1 and E[Sigma] = P_pred.
template <typename Scalar>
VBFactors<Scalar> vb_init(const GaussianBelief<Scalar>& pred, const StudentTConfig& cfg)
{
    const Eigen::Index dx = pred.dim();
    cfg.validate(dx);
    const auto u = static_cast<Scalar>(cfg.iw_dof(dx));
    const Scalar nu = u + Scalar(1);
    const auto s = static_cast<Scalar>(cfg.s);
    const auto v = static_cast<Scalar>(cfg.v);
    return {
        pred.mean(),
        pred.cov(),
        pred.cov() * (nu - static_cast<Scalar>(dx) - Scalar(1)),
        nu,
        s / Scalar(2),
        s / Scalar(2),
        v / Scalar(2),
        v / Scalar(2),
    };
}

/// S~ = Lambda / (nu - D_x - 1) * beta / alpha,  R~ = R * delta / gamma.
template <typename Scalar>
AuxMatrices<Scalar> aux_matrices(const VBFactors<Scalar>& f, const LinearModel<Scalar>& model)
{
    const auto dx = static_cast<Scalar>(f.state_dim());
    const Scalar denom = f.nu - dx - Scalar(1);
    if (!(denom > Scalar(0))) {
        throw NumericDegeneracy("aux_matrices: nu must exceed D_x + 1");
    }
    if (!(f.alpha > Scalar(0)) || !(f.gamma > Scalar(0))) {
        throw NumericDegeneracy("aux_matrices: non-positive gamma shape");
    }
    return {
        symmetrize_psd(Mat<Scalar>(f.Lambda / denom * (f.beta / f.alpha))),
        symmetrize_psd(Mat<Scalar>(model.R() * (f.delta / f.gamma))),
    };
}

/// Gaussian conditioning of N(mu_pred, S~) on z with noise R~. Only m and S change.
template <typename Scalar, typename Derived>
VBFactors<Scalar> vb_update_state(const VBFactors<Scalar>& f, const VBPriors<Scalar>& priors,
                                  const Eigen::MatrixBase<Derived>& z,
                                  const LinearModel<Scalar>& model)
{
    detail::check_obs_dim(z, model, "vb_update_state");
    const auto aux = aux_matrices(f, model);
    auto post = detail::gaussian_condition(priors.mu_pred, aux.S_tilde, z, model.H(),
                                           aux.R_tilde, "vb_update_state");
    VBFactors<Scalar> out = f;
    out.m = post.mean();
    out.S = post.cov();
    return out;
}

namespace detail {

/// C_x = S + (m - mu_pred)(m - mu_pred)^T
template <typename Scalar>
Mat<Scalar> state_discrepancy(const VBFactors<Scalar>& f, const VBPriors<Scalar>& priors)
{
    const Vec<Scalar> d = f.m - priors.mu_pred;
    return f.S + d * d.transpose();
}

}  // namespace detail

/// Lambda = U + (alpha/beta) C_x,  nu = u + 1.
template <typename Scalar>
VBFactors<Scalar> vb_update_sigma(const VBFactors<Scalar>& f, const VBPriors<Scalar>& priors)
{
    VBFactors<Scalar> out = f;
    out.Lambda =
        symmetrize_psd(Mat<Scalar>(priors.U + (f.alpha / f.beta) * detail::state_discrepancy(f, priors)));
    out.nu = priors.u() + Scalar(1);
    return out;
}

/// alpha = (D_x + s)/2,  beta = (s + tr(C_x (nu + D_x - 1) Lambda^{-1}))/2.
template <typename Scalar>
VBFactors<Scalar> vb_update_xi(const VBFactors<Scalar>& f, const VBPriors<Scalar>& priors)
{
    const Eigen::Index n = f.state_dim();
    const auto dx = static_cast<Scalar>(n);
    Eigen::LLT<Mat<Scalar>> llt(f.Lambda);
    if (llt.info() != Eigen::Success) {
        throw NumericDegeneracy("vb_update_xi: Lambda is not positive definite");
    }
    const Mat<Scalar> cx = detail::state_discrepancy(f, priors);
    // tr(C_x Lambda^{-1}) = tr(Lambda^{-1} C_x)
    const Scalar trace = llt.solve(cx).trace();
    VBFactors<Scalar> out = f;
    out.alpha = (dx + priors.s()) / Scalar(2);
    out.beta = (priors.s() + (f.nu + dx - Scalar(1)) * trace) / Scalar(2);
    return out;
}

/// gamma = (D_o + v)/2,  delta = (v + tr(C_o R^{-1}))/2,
/// C_o = (z - H m)(z - H m)^T + H S H^T.
template <typename Scalar, typename Derived>
VBFactors<Scalar> vb_update_lambda(const VBFactors<Scalar>& f,
                                   const Eigen::MatrixBase<Derived>& z,
                                   const LinearModel<Scalar>& model,
                                   const StudentTConfig& cfg)
{
    detail::check_obs_dim(z, model, "vb_update_lambda");
    const auto& H = model.H();
    Eigen::LLT<Mat<Scalar>> llt(model.R());
    if (llt.info() != Eigen::Success) {
        throw NumericDegeneracy("vb_update_lambda: R is not positive definite");
    }
    const Vec<Scalar> residual = z - H * f.m;
    const Mat<Scalar> co = residual * residual.transpose() + H * f.S * H.transpose();
    const auto v = static_cast<Scalar>(cfg.v);
    VBFactors<Scalar> out = f;
    out.gamma = (static_cast<Scalar>(model.obs_dim()) + v) / Scalar(2);
    out.delta = (v + llt.solve(co).trace()) / Scalar(2);
    return out;
}

template <typename Scalar, typename Derived>
VBFactors<Scalar> vb_update_lambda(const VBFactors<Scalar>& f, const VBPriors<Scalar>& priors,
                                   const Eigen::MatrixBase<Derived>& z,
                                   const LinearModel<Scalar>& model)
{
    return vb_update_lambda(f, z, model, priors.config);
}

/// One coordinate-descent sweep after the initial state update:
/// Sigma, xi, lambda, then the state factor with refreshed S~ and R~.
template <typename Scalar, typename Derived>
VBFactors<Scalar> vb_sweep(const VBFactors<Scalar>& f, const VBPriors<Scalar>& priors,
                           const Eigen::MatrixBase<Derived>& z, const LinearModel<Scalar>& model)
{
    auto next = vb_update_sigma(f, priors);
    next = vb_update_xi(next, priors);
    next = vb_update_lambda(next, priors, z, model);
    return vb_update_state(next, priors, z, model);
}

/// Runs vb_init, the initial state update, then cfg.iters sweeps.
/// The callback sees the factors after the initial update (index 0) and
/// after every sweep (index 1..iters).
template <typename Scalar, typename Derived, typename Callback>
VBFactors<Scalar> rstkf_solve(const GaussianBelief<Scalar>& pred,
                              const Eigen::MatrixBase<Derived>& z,
                              const LinearModel<Scalar>& model, const StudentTConfig& cfg,
                              Callback&& on_iteration)
{
    detail::check_state_dim(pred, model, "rstkf_update");
    detail::check_obs_dim(z, model, "rstkf_update");
    const auto priors = make_vb_priors(pred, cfg);
    auto f = vb_update_state(vb_init(pred, cfg), priors, z, model);
    on_iteration(0, static_cast<const VBFactors<Scalar>&>(f));
    for (int i = 1; i <= cfg.iters; ++i) {
        f = vb_sweep(f, priors, z, model);
        on_iteration(i, static_cast<const VBFactors<Scalar>&>(f));
    }
    return f;
}

template <typename Scalar, typename Derived>
VBFactors<Scalar> rstkf_solve(const GaussianBelief<Scalar>& pred,
                              const Eigen::MatrixBase<Derived>& z,
                              const LinearModel<Scalar>& model, const StudentTConfig& cfg)
{
    return rstkf_solve(pred, z, model, cfg, [](int, const VBFactors<Scalar>&) {});
}

template <typename Scalar, typename Derived>
GaussianBelief<Scalar> rstkf_update(const GaussianBelief<Scalar>& pred,
                                    const Eigen::MatrixBase<Derived>& z,
                                    const LinearModel<Scalar>& model, const StudentTConfig& cfg)
{
    auto f = rstkf_solve(pred, z, model, cfg);
    return {std::move(f.m), f.S};
}

/// Largest relative change over all scalar parameters of two factor sets.
template <typename Scalar>
Scalar max_relative_change(const VBFactors<Scalar>& a, const VBFactors<Scalar>& b)
{
    auto rel = [](const auto& x, const auto& y) {
        const Scalar scale = std::max(Scalar(x.cwiseAbs().maxCoeff()), Scalar(1e-12));
        return Scalar((x - y).cwiseAbs().maxCoeff()) / scale;
    };
    auto rel_s = [](Scalar x, Scalar y) {
        return std::abs(x - y) / std::max(std::abs(x), Scalar(1e-12));
    };
    Scalar out = std::max({rel(a.m, b.m), rel(a.S, b.S), rel(a.Lambda, b.Lambda)});
    out = std::max({out, rel_s(a.nu, b.nu), rel_s(a.alpha, b.alpha), rel_s(a.beta, b.beta),
                    rel_s(a.gamma, b.gamma), rel_s(a.delta, b.delta)});
    return out;
}

template <typename Scalar>
struct FreeEnergyEstimate {
    Scalar value;
    Scalar std_error;
};

/// Monte Carlo estimate of
///   E_q[ln q(x,Sigma,xi,lambda) - ln p(x,Sigma,xi | z_{1:k-1}) - ln p(z, lambda | x)]
/// with (x, Sigma, xi, lambda) drawn from the factorized q. Deterministic for
/// a fixed seed, so estimates for different factors share random numbers.
template <typename Scalar, typename Derived>
FreeEnergyEstimate<Scalar> estimate_free_energy(const VBFactors<Scalar>& f,
                                                const VBPriors<Scalar>& priors,
                                                const Eigen::MatrixBase<Derived>& z,
                                                const LinearModel<Scalar>& model,
                                                std::int64_t n_samples, std::uint64_t seed)
{
    if (n_samples < 1000) {
        throw InvalidParameter("estimate_free_energy: n_samples must be at least 1000");
    }
    if (!(f.alpha > 0 && f.beta > 0 && f.gamma > 0 && f.delta > 0) ||
        !(f.nu > static_cast<Scalar>(f.state_dim()) + 1)) {
        throw NumericDegeneracy("estimate_free_energy: invalid variational factors");
    }
    Eigen::LLT<Mat<Scalar>> s_llt(f.S);
    if (s_llt.info() != Eigen::Success) {
        throw NumericDegeneracy("estimate_free_energy: S is not positive definite");
    }
    const Mat<Scalar> s_chol = s_llt.matrixL();
    const Vec<Scalar> z_vec = z;
    const auto& H = model.H();
    const Scalar s_dof = priors.s();
    const Scalar v_dof = priors.v();
    const Scalar u_dof = priors.u();

    Rng rng = make_stream(seed, 0, 0, DrawPurpose::FreeEnergy);
    // Welford accumulation keeps the variance stable for large n.
    Scalar mean = 0;
    Scalar m2 = 0;
    for (std::int64_t i = 0; i < n_samples; ++i) {
        const Vec<Scalar> x = dist::sample_normal(f.m, s_chol, rng);
        const Mat<Scalar> sigma = dist::sample_inverse_wishart(f.nu, f.Lambda, rng);
        const Scalar xi = dist::sample_gamma(f.alpha, f.beta, rng);
        const Scalar lam = dist::sample_gamma(f.gamma, f.delta, rng);

        const Scalar log_q = dist::log_normal(x, f.m, f.S) +
                             dist::log_inverse_wishart(sigma, f.nu, f.Lambda) +
                             dist::log_gamma_pdf(xi, f.alpha, f.beta) +
                             dist::log_gamma_pdf(lam, f.gamma, f.delta);
        const Scalar log_prior =
            dist::log_normal(x, priors.mu_pred, Mat<Scalar>(sigma / xi)) +
            dist::log_inverse_wishart(sigma, u_dof, priors.U) +
            dist::log_gamma_pdf(xi, s_dof / Scalar(2), s_dof / Scalar(2));
        const Scalar log_lik =
            dist::log_normal(z_vec, Vec<Scalar>(H * x), Mat<Scalar>(model.R() / lam)) +
            dist::log_gamma_pdf(lam, v_dof / Scalar(2), v_dof / Scalar(2));

        const Scalar sample = log_q - log_prior - log_lik;
        const Scalar delta = sample - mean;
        mean += delta / static_cast<Scalar>(i + 1);
        m2 += delta * (sample - mean);
    }
    const auto n = static_cast<Scalar>(n_samples);
    const Scalar variance = m2 / (n - Scalar(1));
    return {mean, std::sqrt(variance / n)};
}

}  // namespace vbtrack
