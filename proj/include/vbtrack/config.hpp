#pragma once

#include "vbtrack/rstkf.hpp"
#include "vbtrack/simulator.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace vbtrack {

/// Plain-text `key = value` settings. Blank lines and text after `#` are
/// ignored; vector values are whitespace-separated numbers.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in, const std::string& source = "<stream>");
KeyValues read_key_value_file(const std::filesystem::path& path);

/// Scenario plus the tracker settings a `simulate` run needs.
///
/// Scenario keys: dt, r, steps, p_omega, p_v, inflation, p_d, clutter_rate,
/// clutter_half_range, x0 (4 values), prior_mean (4), prior_cov (16, row-major)
/// or prior_cov_diag (4), seed, outlier_step, outlier_draw (4).
/// Tracker keys: backend (kf|rstkf|both), dof_s, dof_v, dof_u, iters,
/// gamma_prune, n_max, clutter_intensity.
struct SimulationConfig {
    Scenario scenario;
    bool with_kf = true;
    bool with_rstkf = true;
    StudentTConfig student_t;
    double gamma_prune = 6.25e-6;
    std::size_t n_max = 10;
    std::optional<double> clutter_intensity;  ///< defaults to the scenario's window density
};

SimulationConfig simulation_config_from_kv(const KeyValues& kv);

/// Serializes the scenario keys; parsing the result reproduces the scenario
/// for constant-velocity models.
std::string scenario_to_kv(const Scenario& sc);

}  // namespace vbtrack
