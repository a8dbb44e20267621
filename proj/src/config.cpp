#include "vbtrack/config.hpp"

#include "vbtrack/errors.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

namespace vbtrack {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text)
{
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(text, &used);
    } catch (const std::exception&) {
        throw InvalidParameter("config: key '" + key + "' expects a number, got '" + text + "'");
    }
    if (trim(text.substr(used)) != "") {
        throw InvalidParameter("config: key '" + key + "' expects a number, got '" + text + "'");
    }
    return out;
}

std::vector<double> to_vector(const std::string& key, const std::string& text, std::size_t n)
{
    std::istringstream in(text);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        out.push_back(to_double(key, tok));
    }
    if (out.size() != n) {
        throw InvalidParameter("config: key '" + key + "' expects " + std::to_string(n) +
                               " values, got " + std::to_string(out.size()));
    }
    return out;
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(const Eigen::VectorXd& v)
{
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out += (i ? " " : "") + fmt(v(i));
    }
    return out;
}

Eigen::VectorXd as_eigen(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

const std::set<std::string>& known_keys()
{
    static const std::set<std::string> keys{
        "dt", "r", "steps", "p_omega", "p_v", "inflation", "p_d", "clutter_rate",
        "clutter_half_range", "x0", "prior_mean", "prior_cov", "prior_cov_diag", "seed",
        "outlier_step", "outlier_draw", "backend", "dof_s", "dof_v", "dof_u", "iters",
        "gamma_prune", "n_max", "clutter_intensity"};
    return keys;
}

}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source)
{
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidParameter(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw InvalidParameter(source + ":" + std::to_string(lineno) + ": empty key");
        }
        if (!kv.emplace(key, value).second) {
            throw InvalidParameter(source + ":" + std::to_string(lineno) + ": duplicate key '" +
                                   key + "'");
        }
    }
    return kv;
}

KeyValues read_key_value_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file '" + path.string() + "'");
    }
    return parse_key_values(in, path.string());
}

SimulationConfig simulation_config_from_kv(const KeyValues& kv)
{
    for (const auto& [key, value] : kv) {
        if (!known_keys().contains(key)) {
            throw InvalidParameter("config: unknown key '" + key + "'");
        }
    }
    auto get = [&](const std::string& key) -> const std::string* {
        const auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto num = [&](const std::string& key, double fallback) {
        const auto* v = get(key);
        return v ? to_double(key, *v) : fallback;
    };

    SimulationConfig cfg;
    Scenario& sc = cfg.scenario;
    const double dt = num("dt", sc.model.dt());
    const double r = num("r", sc.model.R()(0, 0));
    sc.model = build_cv_model(dt, r);
    sc.steps = static_cast<int>(num("steps", sc.steps));
    sc.p_omega = num("p_omega", sc.p_omega);
    sc.p_v = num("p_v", sc.p_v);
    sc.inflation = num("inflation", sc.inflation);
    sc.p_d = num("p_d", sc.p_d);
    sc.clutter_rate = num("clutter_rate", sc.clutter_rate);
    sc.clutter_half_range = num("clutter_half_range", sc.clutter_half_range);
    if (const auto* v = get("seed")) {
        try {
            sc.seed = std::stoull(*v);
        } catch (const std::exception&) {
            throw InvalidParameter("config: key 'seed' expects an unsigned integer");
        }
    }
    if (const auto* v = get("x0")) {
        sc.x0 = as_eigen(to_vector("x0", *v, 4));
    }
    Eigen::VectorXd prior_mean = get("prior_mean") ? as_eigen(to_vector("prior_mean", *get("prior_mean"), 4))
                                                   : Eigen::VectorXd(sc.x0);
    Eigen::MatrixXd prior_cov = sc.prior0.cov();
    if (get("prior_cov") && get("prior_cov_diag")) {
        throw InvalidParameter("config: give prior_cov or prior_cov_diag, not both");
    }
    if (const auto* v = get("prior_cov")) {
        const auto vals = to_vector("prior_cov", *v, 16);
        prior_cov = Eigen::Map<const Eigen::Matrix<double, 4, 4, Eigen::RowMajor>>(vals.data());
    } else if (const auto* v = get("prior_cov_diag")) {
        prior_cov = as_eigen(to_vector("prior_cov_diag", *v, 4)).asDiagonal();
    }
    sc.prior0 = GaussianBelief<double>(prior_mean, prior_cov);
    if (const auto* v = get("outlier_step")) {
        ForcedOutlier fo;
        fo.step = static_cast<int>(to_double("outlier_step", *v));
        if (const auto* d = get("outlier_draw")) {
            fo.draw = as_eigen(to_vector("outlier_draw", *d, 4));
        }
        sc.forced_outlier = fo;
    } else if (get("outlier_draw")) {
        throw InvalidParameter("config: outlier_draw requires outlier_step");
    }
    sc.validate();

    if (const auto* v = get("backend")) {
        if (*v == "kf") {
            cfg.with_rstkf = false;
        } else if (*v == "rstkf") {
            cfg.with_kf = false;
        } else if (*v != "both") {
            throw InvalidParameter("config: backend must be kf, rstkf or both");
        }
    }
    cfg.student_t.s = num("dof_s", cfg.student_t.s);
    cfg.student_t.v = num("dof_v", cfg.student_t.v);
    if (const auto* v = get("dof_u")) {
        cfg.student_t.u = to_double("dof_u", *v);
    }
    cfg.student_t.iters = static_cast<int>(num("iters", cfg.student_t.iters));
    cfg.student_t.validate(4);
    cfg.gamma_prune = num("gamma_prune", cfg.gamma_prune);
    cfg.n_max = static_cast<std::size_t>(num("n_max", static_cast<double>(cfg.n_max)));
    if (const auto* v = get("clutter_intensity")) {
        cfg.clutter_intensity = to_double("clutter_intensity", *v);
    }
    return cfg;
}

std::string scenario_to_kv(const Scenario& sc)
{
    std::ostringstream out;
    out << "dt = " << fmt(sc.model.dt()) << '\n'
        << "r = " << fmt(sc.model.R()(0, 0)) << '\n'
        << "steps = " << sc.steps << '\n'
        << "p_omega = " << fmt(sc.p_omega) << '\n'
        << "p_v = " << fmt(sc.p_v) << '\n'
        << "inflation = " << fmt(sc.inflation) << '\n'
        << "p_d = " << fmt(sc.p_d) << '\n'
        << "clutter_rate = " << fmt(sc.clutter_rate) << '\n'
        << "clutter_half_range = " << fmt(sc.clutter_half_range) << '\n'
        << "x0 = " << fmt(sc.x0) << '\n'
        << "prior_mean = " << fmt(sc.prior0.mean()) << '\n';
    const Eigen::Matrix<double, 4, 4, Eigen::RowMajor> cov = sc.prior0.cov();
    out << "prior_cov = " << fmt(Eigen::Map<const Eigen::VectorXd>(cov.data(), 16)) << '\n'
        << "seed = " << sc.seed << '\n';
    if (sc.forced_outlier) {
        out << "outlier_step = " << sc.forced_outlier->step << '\n';
        if (sc.forced_outlier->draw) {
            out << "outlier_draw = " << fmt(*sc.forced_outlier->draw) << '\n';
        }
    }
    return out.str();
}

}  // namespace vbtrack
