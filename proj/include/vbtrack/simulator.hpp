#pragma once

#include "vbtrack/model.hpp"
#include "vbtrack/random.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace vbtrack {

/// A process-noise outlier injected at a fixed step of the truth trajectory.
/// The injection adds to that step's regular process-noise draw.
struct ForcedOutlier {
    int step = 20;
    /// Explicit injection; when unset it is drawn from N(0, inflation Q).
    std::optional<Eigen::VectorXd> draw;
};

/// Simulation protocol for single-object tracking in clutter. Units are SI.
struct Scenario {
    LinearModel<double> model = build_cv_model(1.0, 10.0);
    int steps = 100;
    double p_omega = 1.0;      ///< probability of nominal process noise
    double p_v = 1.0;          ///< probability of nominal measurement noise
    double inflation = 100.0;  ///< outlier covariance multiplier
    double p_d = 0.95;
    double clutter_rate = 3.0;          ///< mean clutter count per step
    double clutter_half_range = 150.0;  ///< half-width of the clutter square [m]
    Eigen::VectorXd x0 = Eigen::Vector4d(0.0, 0.0, 10.0, 10.0);
    GaussianBelief<double> prior0{Eigen::Vector4d(0.0, 0.0, 10.0, 10.0),
                                  Eigen::Vector4d(100.0, 100.0, 25.0, 25.0).asDiagonal().toDenseMatrix()};
    std::uint64_t seed = 1;
    std::optional<ForcedOutlier> forced_outlier;

    void validate() const;

    /// Constant clutter intensity implied by the clutter window [1/m^2].
    double clutter_intensity() const;
};

struct StepObservation {
    StateVector truth;
    std::vector<Eigen::VectorXd> detections;
    bool object_detected = false;
    std::optional<std::size_t> object_index;
};

/// Source of the independent per-step streams of one Monte Carlo run.
struct RunStreams {
    std::uint64_t seed = 0;
    std::uint64_t run = 0;

    Rng stream(std::uint64_t step, DrawPurpose purpose) const
    {
        return make_stream(seed, run, step, purpose);
    }
};

/// x_k = F x_{k-1} + w_k for k = 1..steps; returns x_1..x_steps.
std::vector<StateVector> simulate_truth(const Scenario& sc, const RunStreams& streams);

/// Detections of one step: the object's (with probability p_d) plus Poisson
/// clutter uniform on a square centred at the true position, shuffled.
StepObservation generate_detections(const StateVector& x, const Scenario& sc,
                                    const RunStreams& streams, std::uint64_t step);

/// Truth and detections for steps 1..sc.steps.
std::vector<StepObservation> simulate(const Scenario& sc, std::uint64_t run = 0);

/// Scenario of experiment 1..4 (Gaussian/heavy-tailed process and measurement noise).
Scenario make_experiment_scenario(int exp_id, std::uint64_t seed = 1);

/// Gaussian scenario with a single process outlier at step 20.
Scenario make_demo_scenario(std::uint64_t seed = 2022);

/// Velocity drop used by the demo outlier: 1.5 outlier standard deviations
/// against the direction of travel on both velocity axes.
Eigen::VectorXd demo_outlier_draw(const Scenario& sc);

}  // namespace vbtrack
