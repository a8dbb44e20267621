#include "vbtrack/simulator.hpp"

#include "vbtrack/distributions.hpp"
#include "vbtrack/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace vbtrack {

namespace {

bool in_unit_interval(double p)
{
    return p > 0.0 && p <= 1.0;
}

/// Lower Cholesky factor of a PSD covariance; zero blocks are allowed.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& cov)
{
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    if (ldlt.info() != Eigen::Success) {
        throw NumericDegeneracy("psd_sqrt: factorization failed");
    }
    const Eigen::VectorXd d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd L = ldlt.matrixL();
    Eigen::MatrixXd out = ldlt.transpositionsP().transpose() * (L * d.asDiagonal());
    return out;
}

/// Contaminated Gaussian draw: N(0, C) w.p. p_nominal, else N(0, inflation C).
Eigen::VectorXd contaminated_draw(const Eigen::MatrixXd& sqrt_cov, double p_nominal,
                                  double inflation, Rng& rng)
{
    std::bernoulli_distribution nominal(p_nominal);
    const bool is_nominal = nominal(rng);
    const Eigen::VectorXd e = dist::sample_standard_normal<double>(sqrt_cov.cols(), rng);
    const double scale = is_nominal ? 1.0 : std::sqrt(inflation);
    return scale * (sqrt_cov * e);
}

}  // namespace

void Scenario::validate() const
{
    if (model.state_dim() != 4 || model.obs_dim() != 2) {
        throw InvalidParameter("Scenario: the simulator expects a planar CV model (D_x=4, D_o=2)");
    }
    if (!in_unit_interval(p_omega) || !in_unit_interval(p_v) || !in_unit_interval(p_d)) {
        throw InvalidParameter("Scenario: p_omega, p_v and p_d must lie in (0, 1]");
    }
    if (!(clutter_rate >= 0.0) || !std::isfinite(clutter_rate)) {
        throw InvalidParameter("Scenario: clutter_rate must be non-negative");
    }
    if (!(clutter_half_range > 0.0)) {
        throw InvalidParameter("Scenario: clutter_half_range must be positive");
    }
    if (!(inflation > 0.0)) {
        throw InvalidParameter("Scenario: inflation must be positive");
    }
    if (steps < 1) {
        throw InvalidParameter("Scenario: steps must be at least 1");
    }
    if (x0.size() != 4 || prior0.dim() != 4) {
        throw DimensionMismatch("Scenario: x0 and prior0 must have 4 entries");
    }
    if (forced_outlier) {
        if (forced_outlier->step < 1 || forced_outlier->step > steps) {
            throw InvalidParameter("Scenario: forced outlier step outside the horizon");
        }
        if (forced_outlier->draw && forced_outlier->draw->size() != 4) {
            throw DimensionMismatch("Scenario: forced outlier draw must have 4 entries");
        }
    }
}

double Scenario::clutter_intensity() const
{
    const double side = 2.0 * clutter_half_range;
    return clutter_rate / (side * side);
}

std::vector<StateVector> simulate_truth(const Scenario& sc, const RunStreams& streams)
{
    sc.validate();
    const Eigen::MatrixXd sqrt_q = psd_sqrt(sc.model.Q());
    std::vector<StateVector> out;
    out.reserve(static_cast<std::size_t>(sc.steps));
    Eigen::VectorXd x = sc.x0;
    for (int k = 1; k <= sc.steps; ++k) {
        Rng rng = streams.stream(static_cast<std::uint64_t>(k), DrawPurpose::ProcessNoise);
        Eigen::VectorXd w = contaminated_draw(sqrt_q, sc.p_omega, sc.inflation, rng);
        if (sc.forced_outlier && sc.forced_outlier->step == k) {
            if (sc.forced_outlier->draw) {
                w += *sc.forced_outlier->draw;
            } else {
                Rng outlier_rng =
                    streams.stream(static_cast<std::uint64_t>(k), DrawPurpose::Outlier);
                w += std::sqrt(sc.inflation) *
                     (sqrt_q * dist::sample_standard_normal<double>(4, outlier_rng));
            }
        }
        x = sc.model.F() * x + w;
        out.push_back(StateVector::from_eigen(x));
    }
    return out;
}

StepObservation generate_detections(const StateVector& x, const Scenario& sc,
                                    const RunStreams& streams, std::uint64_t step)
{
    StepObservation obs;
    obs.truth = x;
    const Eigen::VectorXd state = x.to_eigen();

    Rng det_rng = streams.stream(step, DrawPurpose::Detection);
    std::bernoulli_distribution detected(sc.p_d);
    obs.object_detected = detected(det_rng);
    if (obs.object_detected) {
        Rng meas_rng = streams.stream(step, DrawPurpose::MeasurementNoise);
        const Eigen::MatrixXd sqrt_r = psd_sqrt(sc.model.R());
        obs.detections.push_back(sc.model.H() * state +
                                 contaminated_draw(sqrt_r, sc.p_v, sc.inflation, meas_rng));
    }

    Rng clutter_rng = streams.stream(step, DrawPurpose::Clutter);
    if (sc.clutter_rate > 0.0) {
        std::poisson_distribution<int> count(sc.clutter_rate);
        const int n = count(clutter_rng);
        std::uniform_real_distribution<double> offset(-sc.clutter_half_range, sc.clutter_half_range);
        for (int i = 0; i < n; ++i) {
            const double dx = offset(clutter_rng);
            const double dy = offset(clutter_rng);
            obs.detections.push_back(Eigen::Vector2d(x.px + dx, x.py + dy));
        }
    }

    // Fisher-Yates with an explicit permutation so the object's slot is known.
    std::vector<std::size_t> order(obs.detections.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    Rng shuffle_rng = streams.stream(step, DrawPurpose::Shuffle);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(order[i - 1], order[pick(shuffle_rng)]);
    }
    std::vector<Eigen::VectorXd> shuffled;
    shuffled.reserve(order.size());
    for (std::size_t slot = 0; slot < order.size(); ++slot) {
        shuffled.push_back(obs.detections[order[slot]]);
        if (obs.object_detected && order[slot] == 0) {
            obs.object_index = slot;
        }
    }
    obs.detections = std::move(shuffled);
    return obs;
}

std::vector<StepObservation> simulate(const Scenario& sc, std::uint64_t run)
{
    const RunStreams streams{sc.seed, run};
    const auto truth = simulate_truth(sc, streams);
    std::vector<StepObservation> out;
    out.reserve(truth.size());
    for (std::size_t k = 0; k < truth.size(); ++k) {
        out.push_back(generate_detections(truth[k], sc, streams, k + 1));
    }
    return out;
}

Scenario make_experiment_scenario(int exp_id, std::uint64_t seed)
{
    Scenario sc;
    switch (exp_id) {
    case 1:
        sc.p_omega = 1.0;
        sc.p_v = 1.0;
        break;
    case 2:
        sc.p_omega = 0.95;
        sc.p_v = 1.0;
        break;
    case 3:
        sc.p_omega = 1.0;
        sc.p_v = 0.90;
        break;
    case 4:
        sc.p_omega = 0.95;
        sc.p_v = 0.90;
        break;
    default:
        throw InvalidParameter("make_experiment_scenario: experiment id must be 1..4, got " +
                               std::to_string(exp_id));
    }
    sc.seed = seed;
    return sc;
}

Eigen::VectorXd demo_outlier_draw(const Scenario& sc)
{
    const double sigma_v = std::sqrt(sc.inflation * sc.model.Q()(2, 2));
    Eigen::VectorXd draw = Eigen::VectorXd::Zero(4);
    const Eigen::Vector2d v0(sc.x0(2), sc.x0(3));
    const Eigen::Vector2d dir = v0.norm() > 0.0 ? Eigen::Vector2d(v0.array().sign())
                                                : Eigen::Vector2d(1.0, 1.0);
    draw.tail(2) = -1.5 * sigma_v * dir;
    return draw;
}

Scenario make_demo_scenario(std::uint64_t seed)
{
    Scenario sc;
    sc.p_omega = 1.0;
    sc.p_v = 1.0;
    sc.seed = seed;
    sc.forced_outlier = ForcedOutlier{20, demo_outlier_draw(sc)};
    return sc;
}

}  // namespace vbtrack
