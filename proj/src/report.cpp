#include "vbtrack/report.hpp"

#include "vbtrack/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#ifndef VBTRACK_GIT_DESCRIBE
#define VBTRACK_GIT_DESCRIBE "unknown"
#endif

namespace vbtrack {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* name)
{
    if (!j.is_array() || j.empty() || !j.front().is_array()) {
        throw InvalidParameter(std::string("scenario json: '") + name + "' must be a matrix");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols) {
            throw InvalidParameter(std::string("scenario json: ragged matrix '") + name + "'");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(i, c) = j[i][c].get<double>();
        }
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v)
{
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string git_describe()
{
    return VBTRACK_GIT_DESCRIBE;
}

std::string format_number(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json scenario_to_json(const Scenario& sc)
{
    json j;
    j["model"] = {
        {"dt", sc.model.dt()},
        {"F", matrix_to_json(sc.model.F())},
        {"Q", matrix_to_json(sc.model.Q())},
        {"H", matrix_to_json(sc.model.H())},
        {"R", matrix_to_json(sc.model.R())},
    };
    j["steps"] = sc.steps;
    j["p_omega"] = sc.p_omega;
    j["p_v"] = sc.p_v;
    j["inflation"] = sc.inflation;
    j["p_d"] = sc.p_d;
    j["clutter_rate"] = sc.clutter_rate;
    j["clutter_half_range"] = sc.clutter_half_range;
    j["clutter_intensity"] = sc.clutter_intensity();
    j["x0"] = vector_to_json(sc.x0);
    j["prior0"] = {{"mean", vector_to_json(sc.prior0.mean())},
                   {"cov", matrix_to_json(sc.prior0.cov())}};
    j["seed"] = sc.seed;
    if (sc.forced_outlier) {
        json fo{{"step", sc.forced_outlier->step}};
        fo["draw"] = sc.forced_outlier->draw ? vector_to_json(*sc.forced_outlier->draw) : json(nullptr);
        j["forced_outlier"] = fo;
    } else {
        j["forced_outlier"] = nullptr;
    }
    return j;
}

Scenario scenario_from_json(const json& j)
{
    try {
        const auto& m = j.at("model");
        Scenario sc;
        sc.model = LinearModel<double>(matrix_from_json(m.at("F"), "F"), matrix_from_json(m.at("Q"), "Q"),
                                       matrix_from_json(m.at("H"), "H"), matrix_from_json(m.at("R"), "R"),
                                       m.at("dt").get<double>());
        sc.steps = j.at("steps").get<int>();
        sc.p_omega = j.at("p_omega").get<double>();
        sc.p_v = j.at("p_v").get<double>();
        sc.inflation = j.at("inflation").get<double>();
        sc.p_d = j.at("p_d").get<double>();
        sc.clutter_rate = j.at("clutter_rate").get<double>();
        sc.clutter_half_range = j.at("clutter_half_range").get<double>();
        sc.x0 = vector_from_json(j.at("x0"));
        sc.prior0 = GaussianBelief<double>(vector_from_json(j.at("prior0").at("mean")),
                                           matrix_from_json(j.at("prior0").at("cov"), "prior0.cov"));
        sc.seed = j.at("seed").get<std::uint64_t>();
        const auto& fo = j.at("forced_outlier");
        if (!fo.is_null()) {
            ForcedOutlier out;
            out.step = fo.at("step").get<int>();
            if (!fo.at("draw").is_null()) {
                out.draw = vector_from_json(fo.at("draw"));
            }
            sc.forced_outlier = out;
        }
        sc.validate();
        return sc;
    } catch (const json::exception& e) {
        throw InvalidParameter(std::string("scenario json: ") + e.what());
    }
}

json student_t_to_json(const StudentTConfig& cfg, Eigen::Index state_dim)
{
    return {{"s", cfg.s}, {"v", cfg.v}, {"u", cfg.iw_dof(state_dim)}, {"iters", cfg.iters}};
}

std::string rmse_csv(const RmseCurves& curves)
{
    std::ostringstream out;
    out << "step,tracker,pos_rmse,vel_rmse\n";
    const std::size_t steps = curves.pos_rmse.empty() ? 0 : curves.pos_rmse.front().size();
    for (std::size_t k = 0; k < steps; ++k) {
        for (std::size_t t = 0; t < curves.trackers.size(); ++t) {
            out << (k + 1) << ',' << curves.trackers[t] << ',' << format_number(curves.pos_rmse[t][k])
                << ',' << format_number(curves.vel_rmse[t][k]) << '\n';
        }
    }
    return out.str();
}

json curves_summary_json(const RmseCurves& curves)
{
    json trackers = json::array();
    for (std::size_t t = 0; t < curves.trackers.size(); ++t) {
        trackers.push_back({{"name", curves.trackers[t]},
                            {"mean_pos_rmse", curves.mean_pos_rmse(t)},
                            {"mean_vel_rmse", curves.mean_vel_rmse(t)},
                            {"lost_tracks", curves.lost_tracks[t]}});
    }
    return {{"runs", curves.runs},
            {"rmse_definition",
             "per-step sqrt(mean over runs of squared Euclidean error); position over (px,py) "
             "jointly, velocity over (vx,vy) jointly; point estimate = mixture mean"},
            {"trackers", trackers}};
}

json timing_to_json(const TimingTable& table)
{
    json rows = json::array();
    for (const auto& r : table.rows) {
        json row{{"filter", r.filter},
                 {"iters", r.iters},
                 {"median_ns", r.median_ns},
                 {"p05_ns", r.p05_ns},
                 {"p95_ns", r.p95_ns}};
        if (r.filter == "rstkf") {
            row["ratio_to_kf"] = r.median_ns / table.kf().median_ns;
        }
        rows.push_back(std::move(row));
    }
    return {{"reps", table.reps}, {"rows", rows}};
}

json tuning_to_json(const TuningResult& result)
{
    return {{"c_grid", result.c_grid},
            {"gsf_total_rmse", result.gsf_total_rmse},
            {"rstkf_gsf_total_rmse", result.rstkf_total_rmse},
            {"argmin_c", result.c_grid.at(result.argmin)},
            {"best_gsf_total_rmse", result.best_gsf()}};
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) {
            throw IoError("cannot create directory '" + path.parent_path().string() +
                          "': " + ec.message());
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << text;
    out.flush();
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

void write_json_file(const std::filesystem::path& path, const json& j)
{
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace vbtrack
