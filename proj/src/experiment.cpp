#include "vbtrack/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace vbtrack {

TrackerConfig<double> default_tracker_config(const Scenario& sc, Backend backend)
{
    TrackerConfig<double> cfg{
        std::move(backend),
        6.25e-6,
        10,
        AssociationConfig{sc.p_d, sc.clutter_intensity()},
        sc.model,
    };
    cfg.validate();
    return cfg;
}

TrackOutput run_gsf(const Scenario& sc, std::span<const StepObservation> data,
                    const TrackerConfig<double>& cfg)
{
    cfg.validate();
    TrackOutput out;
    out.estimates.reserve(data.size());
    TrackerState<double> state{GaussianMixture<double>(sc.prior0), 0};
    for (const auto& obs : data) {
        if (!out.failed) {
            try {
                state = tracker_step(state, obs.detections, cfg);
                out.estimates.push_back(mmse_estimate(state.posterior).mean());
                continue;
            } catch (const Error&) {
                out.failed = true;
            }
        }
        const Eigen::VectorXd last =
            out.estimates.empty() ? sc.prior0.mean() : out.estimates.back();
        out.estimates.push_back(cfg.model.F() * last);
    }
    return out;
}

TrackerSpec gsf_spec(std::string name, TrackerConfig<double> cfg)
{
    return {std::move(name), [cfg = std::move(cfg)](const Scenario& sc,
                                                    std::span<const StepObservation> data) {
                return run_gsf(sc, data, cfg);
            }};
}

std::vector<TrackerSpec> standard_trackers(const Scenario& sc, bool with_kf, bool with_rstkf,
                                           const StudentTConfig& student_t)
{
    std::vector<TrackerSpec> out;
    if (with_kf) {
        out.push_back(gsf_spec("gsf", default_tracker_config(sc, KalmanBackend{})));
    }
    if (with_rstkf) {
        out.push_back(gsf_spec("rstkf-gsf", default_tracker_config(sc, RobustBackend{student_t})));
    }
    return out;
}

RunResult score_run(const Scenario& sc, std::span<const StepObservation> data,
                    std::span<const TrackerSpec> trackers, std::uint64_t run)
{
    RunResult result;
    result.seed = sc.seed;
    result.run = run;
    for (const auto& spec : trackers) {
        const TrackOutput out = spec.estimate(sc, data);
        if (out.estimates.size() != data.size()) {
            throw InvalidParameter("score_run: tracker '" + spec.name +
                                   "' returned the wrong number of estimates");
        }
        std::vector<double> pos(data.size());
        std::vector<double> vel(data.size());
        for (std::size_t k = 0; k < data.size(); ++k) {
            const Eigen::VectorXd err = out.estimates[k] - data[k].truth.to_eigen();
            pos[k] = err.head(2).norm();
            vel[k] = err.tail(2).norm();
        }
        const bool diverged = !pos.empty() && !(pos.back() <= sc.clutter_half_range);
        result.trackers.push_back(spec.name);
        result.pos_err.push_back(std::move(pos));
        result.vel_err.push_back(std::move(vel));
        result.lost_track.push_back(out.failed || diverged);
    }
    return result;
}

RunResult run_single(const Scenario& sc, std::span<const TrackerSpec> trackers, std::uint64_t run)
{
    const auto data = simulate(sc, run);
    return score_run(sc, data, trackers, run);
}

std::size_t RmseCurves::tracker_index(const std::string& name) const
{
    const auto it = std::find(trackers.begin(), trackers.end(), name);
    if (it == trackers.end()) {
        throw InvalidParameter("RmseCurves: unknown tracker '" + name + "'");
    }
    return static_cast<std::size_t>(it - trackers.begin());
}

double RmseCurves::mean_pos_rmse(std::size_t tracker) const
{
    const auto& c = pos_rmse.at(tracker);
    return std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
}

double RmseCurves::mean_vel_rmse(std::size_t tracker) const
{
    const auto& c = vel_rmse.at(tracker);
    return std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
}

RmseCurves aggregate_rmse(std::span<const RunResult> runs)
{
    if (runs.empty()) {
        throw InvalidParameter("aggregate_rmse: no runs");
    }
    std::vector<const RunResult*> ordered;
    ordered.reserve(runs.size());
    for (const auto& r : runs) {
        ordered.push_back(&r);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const RunResult* a, const RunResult* b) { return a->run < b->run; });

    RmseCurves curves;
    curves.trackers = ordered.front()->trackers;
    curves.runs = runs.size();
    const std::size_t n_trackers = curves.trackers.size();
    const std::size_t steps = ordered.front()->pos_err.empty() ? 0 : ordered.front()->pos_err[0].size();
    curves.pos_rmse.assign(n_trackers, std::vector<double>(steps, 0.0));
    curves.vel_rmse.assign(n_trackers, std::vector<double>(steps, 0.0));
    curves.lost_tracks.assign(n_trackers, 0);
    for (const RunResult* r : ordered) {
        if (r->trackers != curves.trackers) {
            throw InvalidParameter("aggregate_rmse: runs disagree on the tracker list");
        }
        for (std::size_t t = 0; t < n_trackers; ++t) {
            if (r->pos_err[t].size() != steps || r->vel_err[t].size() != steps) {
                throw InvalidParameter("aggregate_rmse: runs disagree on the horizon");
            }
            for (std::size_t k = 0; k < steps; ++k) {
                curves.pos_rmse[t][k] += r->pos_err[t][k] * r->pos_err[t][k];
                curves.vel_rmse[t][k] += r->vel_err[t][k] * r->vel_err[t][k];
            }
            curves.lost_tracks[t] += r->lost_track[t] ? 1 : 0;
        }
    }
    const auto m = static_cast<double>(runs.size());
    for (std::size_t t = 0; t < n_trackers; ++t) {
        for (std::size_t k = 0; k < steps; ++k) {
            curves.pos_rmse[t][k] = std::sqrt(curves.pos_rmse[t][k] / m);
            curves.vel_rmse[t][k] = std::sqrt(curves.vel_rmse[t][k] / m);
        }
    }
    return curves;
}

RmseCurves run_monte_carlo(const Scenario& sc, std::span<const TrackerSpec> trackers,
                           std::size_t m_runs, std::size_t workers)
{
    if (m_runs < 1) {
        throw InvalidParameter("run_monte_carlo: m_runs must be at least 1");
    }
    sc.validate();
    workers = std::clamp<std::size_t>(workers, 1, m_runs);
    std::vector<RunResult> results(m_runs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto work = [&] {
        for (std::size_t run = next++; run < m_runs && !failed; run = next++) {
            try {
                results[run] = run_single(sc, trackers, run);
            } catch (...) {
                if (!failed.exchange(true)) {
                    failure = std::current_exception();
                }
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return aggregate_rmse(results);
}

RmseCurves run_experiment(int exp_id, std::size_t m_runs, std::uint64_t seed, bool with_kf,
                          bool with_rstkf, const StudentTConfig& student_t, std::size_t workers)
{
    const Scenario sc = make_experiment_scenario(exp_id, seed);
    const auto trackers = standard_trackers(sc, with_kf, with_rstkf, student_t);
    if (trackers.empty()) {
        throw InvalidParameter("run_experiment: no tracker selected");
    }
    return run_monte_carlo(sc, trackers, m_runs, workers);
}

std::vector<double> log_grid(double c_min, double c_max, std::size_t n)
{
    if (!(c_min > 0.0) || !(c_max >= c_min) || n < 1) {
        throw InvalidParameter("log_grid: need 0 < c_min <= c_max and n >= 1");
    }
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = c_min;
        return out;
    }
    const double lo = std::log(c_min);
    const double hi = std::log(c_max);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    out.front() = c_min;
    out.back() = c_max;
    return out;
}

double total_rmse(const Scenario&, std::span<const StepObservation> data, const TrackOutput& out)
{
    double total = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        total += (out.estimates.at(k).head(2) - data[k].truth.to_eigen().head(2)).norm();
    }
    return total;
}

TuningResult tuning_sweep(const Scenario& sc, std::span<const StepObservation> data,
                          std::span<const double> c_grid, const StudentTConfig& student_t)
{
    if (c_grid.empty()) {
        throw InvalidParameter("tuning_sweep: empty c grid");
    }
    TuningResult result;
    result.c_grid.assign(c_grid.begin(), c_grid.end());
    for (double c : c_grid) {
        if (!(c >= 1.0)) {
            throw InvalidParameter("tuning_sweep: scale factors must be >= 1");
        }
        auto cfg = default_tracker_config(sc, KalmanBackend{});
        cfg.model = sc.model.with_Q(c * sc.model.Q());
        result.gsf_total_rmse.push_back(total_rmse(sc, data, run_gsf(sc, data, cfg)));
    }
    const auto robust = default_tracker_config(sc, RobustBackend{student_t});
    result.rstkf_total_rmse = total_rmse(sc, data, run_gsf(sc, data, robust));
    result.argmin = static_cast<std::size_t>(
        std::min_element(result.gsf_total_rmse.begin(), result.gsf_total_rmse.end()) -
        result.gsf_total_rmse.begin());
    return result;
}

}  // namespace vbtrack
