// vbtrack command-line driver: Monte Carlo experiments, outlier demo, timing,
// process-noise tuning sweep and config-driven simulation.

#include "vbtrack/benchmark.hpp"
#include "vbtrack/config.hpp"
#include "vbtrack/errors.hpp"
#include "vbtrack/experiment.hpp"
#include "vbtrack/report.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

using namespace vbtrack;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct FilterOptions {
    std::string backend = "both";
    int iters = 10;
    std::optional<double> dof_s;
    std::optional<double> dof_v;
    std::optional<double> dof_u;
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());

    void add_to(CLI::App* cmd)
    {
        cmd->add_option("--backend", backend, "Trackers to run")
            ->check(CLI::IsMember({"kf", "rstkf", "both"}))
            ->capture_default_str();
        cmd->add_option("--iters", iters, "VB iterations per robust update")->capture_default_str();
        cmd->add_option("--dof-s", dof_s, "Process dof s");
        cmd->add_option("--dof-v", dof_v, "Measurement dof v");
        cmd->add_option("--dof-u", dof_u, "Inverse-Wishart dof u");
        cmd->add_option("--workers", workers, "Monte Carlo worker threads")->capture_default_str();
    }

    StudentTConfig student_t() const
    {
        StudentTConfig cfg;
        cfg.iters = iters;
        if (dof_s) {
            cfg.s = *dof_s;
        }
        if (dof_v) {
            cfg.v = *dof_v;
        }
        cfg.u = dof_u;
        return cfg;
    }

    bool with_kf() const { return backend != "rstkf"; }
    bool with_rstkf() const { return backend != "kf"; }
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json tracker_json(const Scenario& sc, const StudentTConfig& st, bool with_kf, bool with_rstkf)
{
    const auto cfg = default_tracker_config(sc, KalmanBackend{});
    json trackers = json::array();
    if (with_kf) {
        trackers.push_back("gsf");
    }
    if (with_rstkf) {
        trackers.push_back("rstkf-gsf");
    }
    return {{"trackers", trackers},
            {"gamma_prune", cfg.gamma_prune},
            {"n_max", cfg.n_max},
            {"p_d", cfg.assoc.p_d},
            {"clutter_intensity", cfg.assoc.clutter_intensity},
            {"student_t", student_t_to_json(st, sc.model.state_dim())}};
}

json base_metadata(const std::string& command)
{
    return {{"command", command}, {"git_describe", git_describe()}};
}

void print_done(const json& j)
{
    std::cout << j.dump() << '\n';
}

int run_experiment_cmd(int exp, std::size_t runs, bool full, std::uint64_t seed, const fs::path& out,
                       const FilterOptions& opt)
{
    if (full) {
        runs = 1000;
    }
    const auto st = opt.student_t();
    const Scenario sc = make_experiment_scenario(exp, seed);
    const auto t0 = std::chrono::steady_clock::now();
    const auto curves =
        run_experiment(exp, runs, seed, opt.with_kf(), opt.with_rstkf(), st, opt.workers);
    const double wall = seconds_since(t0);

    const std::string stem = "exp" + std::to_string(exp);
    const fs::path csv = out / (stem + "_rmse.csv");
    const fs::path meta = out / (stem + "_meta.json");
    write_text_file(csv, rmse_csv(curves));

    json j = base_metadata("run-experiment");
    j["experiment"] = exp;
    j["seed"] = seed;
    j["runs"] = runs;
    j["scenario"] = scenario_to_json(sc);
    j["tracker"] = tracker_json(sc, st, opt.with_kf(), opt.with_rstkf());
    j["summary"] = curves_summary_json(curves);
    j["timing"] = {{"wall_seconds", wall}, {"workers", opt.workers}};
    write_json_file(meta, j);
    print_done({{"status", "ok"}, {"csv", csv.string()}, {"metadata", meta.string()}});
    return 0;
}

/// Per-step estimates of one run, for trajectory plots.
std::string trajectory_csv(std::span<const StepObservation> data,
                           const std::vector<std::pair<std::string, TrackOutput>>& outputs)
{
    std::ostringstream out;
    out << "step,tracker,px,py,vx,vy\n";
    for (std::size_t k = 0; k < data.size(); ++k) {
        const auto t = data[k].truth;
        out << (k + 1) << ",truth," << format_number(t.px) << ',' << format_number(t.py) << ','
            << format_number(t.vx) << ',' << format_number(t.vy) << '\n';
        for (const auto& [name, o] : outputs) {
            const auto& e = o.estimates[k];
            out << (k + 1) << ',' << name << ',' << format_number(e(0)) << ',' << format_number(e(1))
                << ',' << format_number(e(2)) << ',' << format_number(e(3)) << '\n';
        }
    }
    return out.str();
}

int demo_outlier_cmd(const fs::path& out, std::uint64_t seed, const FilterOptions& opt)
{
    const auto st = opt.student_t();
    const Scenario sc = make_demo_scenario(seed);
    const auto t0 = std::chrono::steady_clock::now();
    const auto data = simulate(sc, 0);
    const auto trackers = standard_trackers(sc, opt.with_kf(), opt.with_rstkf(), st);
    if (trackers.empty()) {
        throw InvalidParameter("demo-outlier: no tracker selected");
    }
    std::vector<std::pair<std::string, TrackOutput>> outputs;
    for (const auto& t : trackers) {
        outputs.emplace_back(t.name, t.estimate(sc, data));
    }
    const RunResult run = score_run(sc, data, trackers, 0);
    const std::vector<RunResult> runs{run};
    const auto curves = aggregate_rmse(runs);
    const double wall = seconds_since(t0);

    const fs::path csv = out / "demo_rmse.csv";
    const fs::path traj = out / "demo_trajectory.csv";
    const fs::path meta = out / "demo_meta.json";
    write_text_file(csv, rmse_csv(curves));
    write_text_file(traj, trajectory_csv(data, outputs));
    json j = base_metadata("demo-outlier");
    j["seed"] = seed;
    j["scenario"] = scenario_to_json(sc);
    j["tracker"] = tracker_json(sc, st, opt.with_kf(), opt.with_rstkf());
    j["summary"] = curves_summary_json(curves);
    j["timing"] = {{"wall_seconds", wall}};
    write_json_file(meta, j);
    print_done({{"status", "ok"},
                {"csv", csv.string()},
                {"trajectory", traj.string()},
                {"metadata", meta.string()}});
    return 0;
}

int benchmark_cmd(std::size_t reps, const std::optional<fs::path>& out)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto table = benchmark_filters(reps);
    json j = base_metadata("benchmark");
    j["results"] = timing_to_json(table);
    j["timing"] = {{"wall_seconds", seconds_since(t0)}};
    if (out) {
        const fs::path meta = *out / "benchmark.json";
        write_json_file(meta, j);
        print_done({{"status", "ok"}, {"metadata", meta.string()}});
    } else {
        std::cout << j.dump(2) << '\n';
    }
    return 0;
}

int tune_cmd(std::size_t points, double cmin, double cmax, std::uint64_t seed,
             const std::optional<fs::path>& out, const FilterOptions& opt)
{
    const auto st = opt.student_t();
    const Scenario sc = make_demo_scenario(seed);
    const auto t0 = std::chrono::steady_clock::now();
    const auto data = simulate(sc, 0);
    const auto grid = log_grid(cmin, cmax, points);
    const auto res = tuning_sweep(sc, data, grid, st);
    const double wall = seconds_since(t0);

    json j = base_metadata("tune");
    j["seed"] = seed;
    j["scenario"] = scenario_to_json(sc);
    j["student_t"] = student_t_to_json(st, sc.model.state_dim());
    j["results"] = tuning_to_json(res);
    j["timing"] = {{"wall_seconds", wall}};
    if (out) {
        std::ostringstream csv;
        csv << "c,gsf_total_rmse,rstkf_gsf_total_rmse\n";
        for (std::size_t i = 0; i < res.c_grid.size(); ++i) {
            csv << format_number(res.c_grid[i]) << ',' << format_number(res.gsf_total_rmse[i]) << ','
                << format_number(res.rstkf_total_rmse) << '\n';
        }
        write_text_file(*out / "tuning.csv", csv.str());
        write_json_file(*out / "tuning_meta.json", j);
    }
    print_done({{"status", "ok"},
                {"best_c", res.c_grid[res.argmin]},
                {"best_gsf_total_rmse", res.best_gsf()},
                {"rstkf_gsf_total_rmse", res.rstkf_total_rmse}});
    return 0;
}

int simulate_cmd(const fs::path& config, std::size_t runs, const std::optional<fs::path>& out,
                 std::size_t workers)
{
    const auto cfg = simulation_config_from_kv(read_key_value_file(config));
    const Scenario& sc = cfg.scenario;
    std::vector<TrackerSpec> trackers;
    auto make = [&](Backend backend) {
        auto tc = default_tracker_config(sc, std::move(backend));
        tc.gamma_prune = cfg.gamma_prune;
        tc.n_max = cfg.n_max;
        if (cfg.clutter_intensity) {
            tc.assoc.clutter_intensity = *cfg.clutter_intensity;
        }
        tc.validate();
        return tc;
    };
    if (cfg.with_kf) {
        trackers.push_back(gsf_spec("gsf", make(KalmanBackend{})));
    }
    if (cfg.with_rstkf) {
        trackers.push_back(gsf_spec("rstkf-gsf", make(RobustBackend{cfg.student_t})));
    }
    if (trackers.empty()) {
        throw InvalidParameter("simulate: no tracker selected");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto curves = run_monte_carlo(sc, trackers, runs, workers);
    const double wall = seconds_since(t0);

    json j = base_metadata("simulate");
    j["config_file"] = config.string();
    j["seed"] = sc.seed;
    j["runs"] = runs;
    j["scenario"] = scenario_to_json(sc);
    j["tracker"] = {{"gamma_prune", cfg.gamma_prune},
                    {"n_max", cfg.n_max},
                    {"clutter_intensity", cfg.clutter_intensity.value_or(sc.clutter_intensity())},
                    {"student_t", student_t_to_json(cfg.student_t, sc.model.state_dim())}};
    j["summary"] = curves_summary_json(curves);
    j["timing"] = {{"wall_seconds", wall}, {"workers", workers}};
    if (out) {
        write_text_file(*out / "simulate_rmse.csv", rmse_csv(curves));
        write_json_file(*out / "simulate_meta.json", j);
        print_done({{"status", "ok"}, {"csv", (*out / "simulate_rmse.csv").string()}});
    } else {
        std::cout << rmse_csv(curves);
    }
    return 0;
}

void print_error(const std::string& kind, const std::string& message)
{
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Single-object tracking in clutter: GSF and robust Student's-t GSF"};
    app.require_subcommand(1);

    FilterOptions exp_opt;
    int exp_id = 1;
    std::size_t runs = 100;
    bool full = false;
    std::uint64_t seed = 1;
    std::string out_dir;
    auto* run_exp = app.add_subcommand("run-experiment", "Monte Carlo RMSE curves for experiment 1..4");
    run_exp->add_option("--exp", exp_id, "Experiment id")->required()->check(CLI::Range(1, 4));
    run_exp->add_option("--runs", runs, "Monte Carlo runs")->capture_default_str();
    run_exp->add_flag("--full", full, "Use 1000 runs");
    run_exp->add_option("--seed", seed, "Master seed")->capture_default_str();
    run_exp->add_option("--out", out_dir, "Output directory")->required();
    exp_opt.add_to(run_exp);

    FilterOptions demo_opt;
    std::string demo_out;
    std::uint64_t demo_seed = 2022;
    auto* demo = app.add_subcommand("demo-outlier", "Single run with a process outlier at step 20");
    demo->add_option("--out", demo_out, "Output directory")->required();
    demo->add_option("--seed", demo_seed, "Seed")->capture_default_str();
    demo_opt.add_to(demo);

    std::size_t reps = 1000;
    std::string bench_out;
    auto* bench = app.add_subcommand("benchmark", "Median update time of KF and RSTKF");
    bench->add_option("--reps", reps, "Timed repetitions per filter")->capture_default_str();
    bench->add_option("--out", bench_out, "Output directory (default: print JSON)");

    FilterOptions tune_opt;
    std::size_t points = 100;
    double cmin = 1.0;
    double cmax = 200.0;
    std::uint64_t tune_seed = 2022;
    std::string tune_out;
    auto* tune = app.add_subcommand("tune", "GSF with Q scaled by c versus the robust GSF");
    tune->add_option("--points", points, "Grid size")->capture_default_str();
    tune->add_option("--cmin", cmin, "Smallest scale")->capture_default_str();
    tune->add_option("--cmax", cmax, "Largest scale")->capture_default_str();
    tune->add_option("--seed", tune_seed, "Demo seed")->capture_default_str();
    tune->add_option("--out", tune_out, "Output directory");
    tune_opt.add_to(tune);

    std::string config_file;
    std::size_t sim_runs = 1;
    std::size_t sim_workers = std::max(1u, std::thread::hardware_concurrency());
    std::string sim_out;
    auto* sim = app.add_subcommand("simulate", "Run trackers on a scenario from a key-value file");
    sim->add_option("--config", config_file, "Config file")->required();
    sim->add_option("--runs", sim_runs, "Monte Carlo runs")->capture_default_str();
    sim->add_option("--workers", sim_workers, "Worker threads")->capture_default_str();
    sim->add_option("--out", sim_out, "Output directory (default: CSV to stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 2;
    }

    auto opt_path = [](const std::string& s) {
        return s.empty() ? std::nullopt : std::optional<fs::path>(s);
    };
    try {
        if (*run_exp) {
            return run_experiment_cmd(exp_id, runs, full, seed, out_dir, exp_opt);
        }
        if (*demo) {
            return demo_outlier_cmd(demo_out, demo_seed, demo_opt);
        }
        if (*bench) {
            return benchmark_cmd(reps, opt_path(bench_out));
        }
        if (*tune) {
            return tune_cmd(points, cmin, cmax, tune_seed, opt_path(tune_out), tune_opt);
        }
        if (*sim) {
            return simulate_cmd(config_file, sim_runs, opt_path(sim_out), sim_workers);
        }
    } catch (const Error& e) {
        print_error(e.kind(), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
    return 0;
}
