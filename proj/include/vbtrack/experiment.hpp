#pragma once

#include "vbtrack/simulator.hpp"
#include "vbtrack/tracker.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace vbtrack {

/// Point estimates produced by one tracker over a simulated run.
struct TrackOutput {
    std::vector<Eigen::VectorXd> estimates;  ///< one state estimate per step
    bool failed = false;                     ///< a numeric error stopped the filter
};

using Estimator =
    std::function<TrackOutput(const Scenario&, std::span<const StepObservation>)>;

/// A named estimator under test.
struct TrackerSpec {
    std::string name;
    Estimator estimate;
};

/// Mixture-reduction and association settings shared by both filters.
TrackerConfig<double> default_tracker_config(const Scenario& sc, Backend backend);

/// Runs the Gaussian sum filter from sc.prior0 and reports MMSE means. A
/// numeric failure flags the run and coasts the last estimate through F.
TrackOutput run_gsf(const Scenario& sc, std::span<const StepObservation> data,
                    const TrackerConfig<double>& cfg);

TrackerSpec gsf_spec(std::string name, TrackerConfig<double> cfg);

/// "gsf" (Kalman backend) and "rstkf-gsf" (robust backend with `student_t`).
std::vector<TrackerSpec> standard_trackers(const Scenario& sc, bool with_kf, bool with_rstkf,
                                           const StudentTConfig& student_t = {});

struct RunResult {
    std::uint64_t seed = 0;
    std::uint64_t run = 0;
    std::vector<std::string> trackers;
    std::vector<std::vector<double>> pos_err;  ///< [tracker][step], meters
    std::vector<std::vector<double>> vel_err;  ///< [tracker][step], m/s
    std::vector<bool> lost_track;              ///< [tracker]
};

/// Position and velocity error per step. A run counts as a lost track when the
/// filter failed or the final position error exceeds the clutter half-range.
RunResult score_run(const Scenario& sc, std::span<const StepObservation> data,
                    std::span<const TrackerSpec> trackers, std::uint64_t run);

/// Simulates run `run` of the scenario and scores every tracker on the same data.
RunResult run_single(const Scenario& sc, std::span<const TrackerSpec> trackers,
                     std::uint64_t run = 0);

struct RmseCurves {
    std::vector<std::string> trackers;
    std::vector<std::vector<double>> pos_rmse;  ///< [tracker][step]
    std::vector<std::vector<double>> vel_rmse;  ///< [tracker][step]
    std::vector<std::size_t> lost_tracks;       ///< [tracker]
    std::size_t runs = 0;

    std::size_t tracker_index(const std::string& name) const;
    double mean_pos_rmse(std::size_t tracker) const;
    double mean_vel_rmse(std::size_t tracker) const;
};

/// RMSE(k) = sqrt(mean over runs of squared Euclidean error). Runs are summed
/// in run-index order whatever order they arrive in.
RmseCurves aggregate_rmse(std::span<const RunResult> runs);

/// Runs 0..m_runs-1 of the scenario on up to `workers` threads.
RmseCurves run_monte_carlo(const Scenario& sc, std::span<const TrackerSpec> trackers,
                           std::size_t m_runs, std::size_t workers = 1);

RmseCurves run_experiment(int exp_id, std::size_t m_runs, std::uint64_t seed,
                          bool with_kf = true, bool with_rstkf = true,
                          const StudentTConfig& student_t = {}, std::size_t workers = 1);

/// n log-spaced values from c_min to c_max inclusive.
std::vector<double> log_grid(double c_min, double c_max, std::size_t n);

struct TuningResult {
    std::vector<double> c_grid;
    std::vector<double> gsf_total_rmse;  ///< per c
    double rstkf_total_rmse = 0.0;
    std::size_t argmin = 0;

    double best_gsf() const { return gsf_total_rmse.at(argmin); }
};

/// Total RMSE (sum over steps of position error on one dataset).
double total_rmse(const Scenario& sc, std::span<const StepObservation> data,
                  const TrackOutput& out);

/// GSF with Q scaled by each c versus the RSTKF-GSF on the same data.
TuningResult tuning_sweep(const Scenario& sc, std::span<const StepObservation> data,
                          std::span<const double> c_grid, const StudentTConfig& student_t = {});

}  // namespace vbtrack
