#pragma once

#include "vbtrack/errors.hpp"
#include "vbtrack/kalman.hpp"
#include "vbtrack/mixture.hpp"
#include "vbtrack/model.hpp"
#include "vbtrack/rstkf.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace vbtrack {

struct AssociationConfig {
    double p_d = 0.95;
    double clutter_intensity = 3.0 / 90000.0;  ///< expected clutter per unit area

    void validate() const
    {
        if (!(p_d > 0.0 && p_d <= 1.0)) {
            throw InvalidParameter("AssociationConfig: p_d must lie in (0, 1]");
        }
        if (!(clutter_intensity > 0.0) || !std::isfinite(clutter_intensity)) {
            throw InvalidParameter("AssociationConfig: clutter_intensity must be positive");
        }
    }
};

struct KalmanBackend {};
struct RobustBackend {
    StudentTConfig student_t;
};
using Backend = std::variant<KalmanBackend, RobustBackend>;

template <typename Scalar>
struct TrackerConfig {
    Backend backend;
    Scalar gamma_prune;
    std::size_t n_max;
    AssociationConfig assoc;
    LinearModel<Scalar> model;

    /// gamma_prune must lie in (0, 1); zero is admitted only for exact
    /// enumeration, where reduction is disabled on purpose.
    void validate() const
    {
        if (!(gamma_prune >= Scalar(0) && gamma_prune < Scalar(1))) {
            throw InvalidParameter("TrackerConfig: gamma_prune must lie in [0, 1)");
        }
        if (n_max < 1) {
            throw InvalidParameter("TrackerConfig: n_max must be at least 1");
        }
        assoc.validate();
        if (const auto* robust = std::get_if<RobustBackend>(&backend)) {
            robust->student_t.validate(model.state_dim());
        }
    }

    bool is_robust() const noexcept { return std::holds_alternative<RobustBackend>(backend); }
};

template <typename Scalar>
struct TrackerState {
    GaussianMixture<Scalar> posterior;
    std::size_t step = 0;
};

template <typename Scalar>
GaussianMixture<Scalar> predict_mixture(const TrackerState<Scalar>& state,
                                        const LinearModel<Scalar>& model)
{
    std::vector<MixtureComponent<Scalar>> out;
    out.reserve(state.posterior.size());
    for (const auto& c : state.posterior.components()) {
        out.push_back({c.log_weight, kf_predict(c.belief, model)});
    }
    return GaussianMixture<Scalar>(std::move(out));
}

namespace detail {

template <typename Scalar>
Scalar association_log_weight(Scalar prior_lw, const Vec<Scalar>* z,
                              const GaussianBelief<Scalar>& pred, const TrackerConfig<Scalar>& cfg)
{
    const auto p_d = static_cast<Scalar>(cfg.assoc.p_d);
    if (z == nullptr) {
        return prior_lw + std::log1p(-p_d);
    }
    return prior_lw + std::log(p_d) + log_evidence(pred, *z, cfg.model) -
           std::log(static_cast<Scalar>(cfg.assoc.clutter_intensity));
}

}  // namespace detail

/// Unnormalized log-weight of extending a hypothesis with association theta.
///
///   theta = 0: prior + ln(1 - p_d)
///   theta > 0: prior + ln p_d + ln N(z; H mu, H P H^T + R) - ln lambda_c
///
/// Factors common to every hypothesis of the step are dropped.
template <typename Scalar>
Scalar hypothesis_log_weight(Scalar prior_lw, std::size_t theta,
                             const std::optional<Vec<Scalar>>& z,
                             const GaussianBelief<Scalar>& pred, const TrackerConfig<Scalar>& cfg)
{
    if ((theta == 0) != !z.has_value()) {
        throw InvalidParameter("hypothesis_log_weight: detection must be given iff theta > 0");
    }
    return detail::association_log_weight(prior_lw, z ? &*z : nullptr, pred, cfg);
}

/// Conditional posterior for one (component, detection) pair. Both backends
/// share the Gaussian evidence for weighting, so only the moments differ.
template <typename Scalar, typename Derived>
GaussianBelief<Scalar> conditional_update(const GaussianBelief<Scalar>& pred,
                                          const Eigen::MatrixBase<Derived>& z,
                                          const TrackerConfig<Scalar>& cfg)
{
    if (const auto* robust = std::get_if<RobustBackend>(&cfg.backend)) {
        return rstkf_update(pred, z, cfg.model, robust->student_t);
    }
    return kf_update(pred, z, cfg.model);
}

/// Candidates before reduction, ordered by (component index, theta).
template <typename Scalar>
GaussianMixture<Scalar> expand_hypotheses(const GaussianMixture<Scalar>& predicted,
                                          std::span<const Vec<Scalar>> detections,
                                          const TrackerConfig<Scalar>& cfg)
{
    std::vector<MixtureComponent<Scalar>> out;
    out.reserve(predicted.size() * (detections.size() + 1));
    for (const auto& c : predicted.components()) {
        out.push_back({detail::association_log_weight<Scalar>(c.log_weight, nullptr, c.belief, cfg),
                       c.belief});
        for (std::size_t j = 0; j < detections.size(); ++j) {
            const auto& z = detections[j];
            out.push_back({detail::association_log_weight(c.log_weight, &z, c.belief, cfg),
                           conditional_update(c.belief, z, cfg)});
        }
    }
    return GaussianMixture<Scalar>(std::move(out));
}

/// One recursion: predict, expand over associations, normalize, prune, cap.
template <typename Scalar>
TrackerState<Scalar> tracker_step(const TrackerState<Scalar>& state,
                                  std::span<const Vec<Scalar>> detections,
                                  const TrackerConfig<Scalar>& cfg)
{
    for (const auto& z : detections) {
        detail::check_obs_dim(z, cfg.model, "tracker_step");
    }
    const auto predicted = predict_mixture(state, cfg.model);
    auto posterior = normalize(expand_hypotheses(predicted, detections, cfg));
    posterior = prune(posterior, cfg.gamma_prune);
    posterior = reduce_runnalls(posterior, cfg.n_max);
    return {normalize(posterior), state.step + 1};
}

template <typename Scalar>
TrackerState<Scalar> tracker_step(const TrackerState<Scalar>& state,
                                  const std::vector<Vec<Scalar>>& detections,
                                  const TrackerConfig<Scalar>& cfg)
{
    return tracker_step(state, std::span<const Vec<Scalar>>(detections), cfg);
}

}  // namespace vbtrack
