#pragma once

#include "vbtrack/benchmark.hpp"
#include "vbtrack/experiment.hpp"
#include "vbtrack/rstkf.hpp"
#include "vbtrack/simulator.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>

namespace vbtrack {

/// `git describe` of the source tree at configure time.
std::string git_describe();

/// Shortest round-trip decimal form; identical input gives identical text.
std::string format_number(double v);

nlohmann::json scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const nlohmann::json& j);

nlohmann::json student_t_to_json(const StudentTConfig& cfg, Eigen::Index state_dim);

/// CSV with header `step,tracker,pos_rmse,vel_rmse`, one row per (step, tracker).
/// Steps are 1-based.
std::string rmse_csv(const RmseCurves& curves);

nlohmann::json curves_summary_json(const RmseCurves& curves);
nlohmann::json timing_to_json(const TimingTable& table);
nlohmann::json tuning_to_json(const TuningResult& result);

/// Writes `text` to `path`, creating parent directories. Failures raise
/// IoError naming the path.
void write_text_file(const std::filesystem::path& path, const std::string& text);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace vbtrack
