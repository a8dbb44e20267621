#include "doctest.h"

#include "vbtrack/config.hpp"
#include "vbtrack/errors.hpp"
#include "vbtrack/kalman.hpp"
#include "vbtrack/simulator.hpp"

#include <cmath>
#include <sstream>
#include <vector>

using namespace vbtrack;

namespace {

/// Process-noise increments w_k = x_k - F x_{k-1} of one run.
std::vector<Eigen::VectorXd> increments(const Scenario& sc, std::uint64_t run)
{
    const auto truth = simulate_truth(sc, RunStreams{sc.seed, run});
    std::vector<Eigen::VectorXd> out;
    Eigen::VectorXd prev = sc.x0;
    for (const auto& s : truth) {
        const Eigen::VectorXd x = s.to_eigen();
        out.push_back(x - sc.model.F() * prev);
        prev = x;
    }
    return out;
}

}  // namespace

TEST_CASE("experiment scenarios")
{
    const double expected[4][2] = {{1.0, 1.0}, {0.95, 1.0}, {1.0, 0.9}, {0.95, 0.9}};
    for (int id = 1; id <= 4; ++id) {
        const auto sc = make_experiment_scenario(id, 3);
        CHECK(sc.p_omega == expected[id - 1][0]);
        CHECK(sc.p_v == expected[id - 1][1]);
        CHECK(sc.steps == 100);
        CHECK(sc.p_d == 0.95);
        CHECK(sc.clutter_rate == 3.0);
        CHECK(sc.clutter_half_range == 150.0);
        CHECK(sc.model.dt() == 1.0);
        CHECK(sc.model.R()(0, 0) == 10.0);
        CHECK(sc.seed == 3);
    }
    CHECK_THROWS_AS(make_experiment_scenario(0), InvalidParameter);
    CHECK_THROWS_AS(make_experiment_scenario(5), InvalidParameter);
}

TEST_CASE("clutter intensity matches the window density")
{
    const Scenario sc;
    const double r = 10.0;
    CHECK(sc.clutter_intensity() == doctest::Approx(3.0 / std::pow(2.0 * 15.0 * r, 2)));
    CHECK(sc.clutter_intensity() == doctest::Approx(3.0 / 90000.0));
}

TEST_CASE("scenario validation")
{
    Scenario sc;
    sc.p_d = 0.0;
    CHECK_THROWS_AS(sc.validate(), InvalidParameter);
    sc = Scenario{};
    sc.steps = 0;
    CHECK_THROWS_AS(sc.validate(), InvalidParameter);
    sc = Scenario{};
    sc.clutter_rate = -1.0;
    CHECK_THROWS_AS(sc.validate(), InvalidParameter);
    sc = Scenario{};
    sc.forced_outlier = ForcedOutlier{101, std::nullopt};
    CHECK_THROWS_AS(sc.validate(), InvalidParameter);
}

TEST_CASE("noiseless constant velocity")
{
    Scenario sc;
    sc.model = sc.model.with_Q(Eigen::MatrixXd::Zero(4, 4));
    const auto truth = simulate_truth(sc, RunStreams{1, 0});
    REQUIRE(truth.size() == 100);
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const double t = static_cast<double>(k + 1);
        CHECK(truth[k].px == doctest::Approx(10.0 * t));
        CHECK(truth[k].py == doctest::Approx(10.0 * t));
        CHECK(truth[k].vx == 10.0);
        CHECK(truth[k].vy == 10.0);
    }
}

TEST_CASE("process outlier fraction and covariance")
{
    Scenario sc;
    sc.p_omega = 0.95;
    sc.steps = 1000;
    const Eigen::MatrixXd Q = sc.model.Q();
    const Eigen::MatrixXd Qinv = Q.inverse();
    // Classify by squared Mahalanobis length against 40, then undo the known
    // misclassification rates using the chi2_4 survival e^{-x/2}(1 + x/2).
    int outliers = 0;
    int total = 0;
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(4, 4);
    for (std::uint64_t run = 0; run < 100; ++run) {
        for (const auto& w : increments(sc, run)) {
            const double d2 = w.dot(Qinv * w);
            outliers += d2 > 40.0 ? 1 : 0;
            second += w * w.transpose();
            ++total;
        }
    }
    REQUIRE(total == 100000);
    auto chi2_4_tail = [](double x) { return std::exp(-x / 2.0) * (1.0 + x / 2.0); };
    const double hit = chi2_4_tail(40.0 / 100.0);
    const double false_alarm = chi2_4_tail(40.0);
    const double frac = (static_cast<double>(outliers) / total - false_alarm) / (hit - false_alarm);
    CHECK(std::abs(frac - 0.05) < 0.003);
    const Eigen::MatrixXd expected = (0.95 + 0.05 * 100.0) * Q;
    const Eigen::MatrixXd sample = second / total;
    for (int i = 0; i < 4; ++i) {
        CHECK(sample(i, i) == doctest::Approx(expected(i, i)).epsilon(0.05));
    }
    CHECK((sample - expected).norm() < 0.05 * expected.norm());
}

TEST_CASE("detections")
{
    SUBCASE("noiseless single detection")
    {
        Scenario sc;
        sc.p_d = 1.0;
        sc.clutter_rate = 0.0;
        sc.model = sc.model.with_R(Eigen::MatrixXd::Zero(2, 2));
        const StateVector x{3, 4, 5, 6};
        const auto obs = generate_detections(x, sc, RunStreams{1, 0}, 1);
        REQUIRE(obs.detections.size() == 1);
        CHECK(obs.detections[0] == Eigen::VectorXd(Eigen::Vector2d(3, 4)));
        CHECK(obs.object_detected);
        CHECK(obs.object_index == std::optional<std::size_t>(0));
    }
    SUBCASE("clutter count, window and detection rate")
    {
        const Scenario sc;
        const StateVector x{500, -200, 0, 0};
        const RunStreams streams{17, 0};
        long long clutter = 0;
        long long detections = 0;
        long long detected = 0;
        const int n = 100000;
        bool inside = true;
        bool index_consistent = true;
        for (int k = 1; k <= n; ++k) {
            const auto obs = generate_detections(x, sc, streams, static_cast<std::uint64_t>(k));
            detections += static_cast<long long>(obs.detections.size());
            detected += obs.object_detected ? 1 : 0;
            clutter += static_cast<long long>(obs.detections.size()) - (obs.object_detected ? 1 : 0);
            index_consistent = index_consistent && (obs.object_index.has_value() == obs.object_detected);
            for (std::size_t i = 0; i < obs.detections.size(); ++i) {
                if (obs.object_index && *obs.object_index == i) {
                    continue;
                }
                const auto& d = obs.detections[i];
                inside = inside && std::abs(d(0) - x.px) <= 150.0 && std::abs(d(1) - x.py) <= 150.0;
            }
        }
        CHECK(static_cast<double>(clutter) / n == doctest::Approx(3.0).epsilon(0.05 / 3.0));
        CHECK(static_cast<double>(detections) / n == doctest::Approx(0.95 + 3.0).epsilon(0.02));
        CHECK(static_cast<double>(detected) / n == doctest::Approx(0.95).epsilon(0.01));
        CHECK(inside);
        CHECK(index_consistent);
    }
    SUBCASE("object index points at the true detection")
    {
        Scenario sc;
        sc.model = sc.model.with_R(1e-6 * Eigen::MatrixXd::Identity(2, 2));
        const StateVector x{0, 0, 0, 0};
        for (int k = 1; k <= 200; ++k) {
            const auto obs = generate_detections(x, sc, RunStreams{3, 0}, static_cast<std::uint64_t>(k));
            if (obs.object_index) {
                CHECK(obs.detections[*obs.object_index].norm() < 0.01);
            }
        }
    }
}

TEST_CASE("determinism")
{
    const auto sc = make_experiment_scenario(4, 9);
    const auto a = simulate(sc, 5);
    const auto b = simulate(sc, 5);
    const auto c = simulate(sc, 6);
    REQUIRE(a.size() == b.size());
    bool same = true;
    bool differs = false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        same = same && a[k].truth.to_eigen() == b[k].truth.to_eigen() &&
               a[k].detections.size() == b[k].detections.size();
        for (std::size_t i = 0; same && i < a[k].detections.size(); ++i) {
            same = a[k].detections[i] == b[k].detections[i];
        }
        differs = differs || a[k].truth.to_eigen() != c[k].truth.to_eigen();
    }
    CHECK(same);
    CHECK(differs);
}

TEST_CASE("demo scenario")
{
    const auto sc = make_demo_scenario();
    REQUIRE(sc.forced_outlier.has_value());
    CHECK(sc.forced_outlier->step == 20);
    CHECK(sc.p_omega == 1.0);
    CHECK(sc.p_v == 1.0);

    SUBCASE("zero injection equals no injection")
    {
        auto zero = sc;
        zero.forced_outlier->draw = Eigen::VectorXd::Zero(4);
        auto none = sc;
        none.forced_outlier.reset();
        const auto a = simulate_truth(zero, RunStreams{sc.seed, 0});
        const auto b = simulate_truth(none, RunStreams{sc.seed, 0});
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(a[k].to_eigen() == b[k].to_eigen());
        }
    }
    SUBCASE("ten sigma draw gives a visible velocity jump")
    {
        auto big = sc;
        const double sigma = std::sqrt(100.0 * sc.model.Q()(2, 2));
        Eigen::VectorXd draw = Eigen::VectorXd::Zero(4);
        draw(2) = 10.0 * sigma;
        big.forced_outlier->draw = draw;
        const auto w = increments(big, 0);
        CHECK(std::abs(w[19](2)) > 3.0 * sigma);
        CHECK(std::abs(w[18](2)) < 3.0 * sigma);
    }
    SUBCASE("default draw brakes against the direction of travel")
    {
        const auto w = increments(sc, 0);
        const double sigma = std::sqrt(100.0 * sc.model.Q()(2, 2));
        auto none = sc;
        none.forced_outlier.reset();
        const auto w0 = increments(none, 0);
        CHECK(w[19](2) - w0[19](2) == doctest::Approx(-1.5 * sigma));
        CHECK(w[19](3) - w0[19](3) == doctest::Approx(-1.5 * sigma));
        CHECK(w[19](2) < -sigma);
    }
}

TEST_CASE("matched Kalman innovations are zero-mean")
{
    const auto sc = make_experiment_scenario(1, 4);
    auto clean = sc;
    clean.p_d = 1.0;
    clean.clutter_rate = 0.0;
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    Eigen::Vector2d sumsq = Eigen::Vector2d::Zero();
    int n = 0;
    for (std::uint64_t run = 0; run < 20; ++run) {
        const auto data = simulate(clean, run);
        GaussianBelief<double> b(sc.x0, Eigen::MatrixXd::Zero(4, 4));
        for (const auto& obs : data) {
            const auto pred = kf_predict(b, sc.model);
            const Eigen::VectorXd e = obs.detections.at(0) - sc.model.H() * pred.mean();
            sum += e;
            sumsq += e.cwiseProduct(e);
            ++n;
            b = kf_update(pred, obs.detections[0], sc.model);
        }
    }
    const Eigen::Vector2d mean = sum / n;
    const Eigen::Vector2d var = sumsq / n - mean.cwiseProduct(mean);
    for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(mean(i)) < 3.0 * std::sqrt(var(i) / n));
    }
}

TEST_CASE("key-value config")
{
    std::istringstream in(
        "# demo\n"
        "steps = 50\n"
        "p_omega = 0.95  # heavy tails\n"
        "x0 = 1 2 3 4\n"
        "prior_cov_diag = 10 10 5 5\n"
        "outlier_step = 7\n"
        "backend = rstkf\n"
        "dof_u = 30\n"
        "iters = 4\n");
    const auto cfg = simulation_config_from_kv(parse_key_values(in));
    CHECK(cfg.scenario.steps == 50);
    CHECK(cfg.scenario.p_omega == 0.95);
    CHECK(cfg.scenario.x0 == Eigen::VectorXd(Eigen::Vector4d(1, 2, 3, 4)));
    CHECK(cfg.scenario.prior0.cov()(2, 2) == 5.0);
    REQUIRE(cfg.scenario.forced_outlier.has_value());
    CHECK(cfg.scenario.forced_outlier->step == 7);
    CHECK_FALSE(cfg.with_kf);
    CHECK(cfg.with_rstkf);
    CHECK(cfg.student_t.u == std::optional<double>(30.0));
    CHECK(cfg.student_t.iters == 4);

    SUBCASE("round trip through text")
    {
        auto sc = make_experiment_scenario(3, 77);
        sc.forced_outlier = ForcedOutlier{12, Eigen::Vector4d(0, 0, -1.5, 2.5)};
        std::istringstream again(scenario_to_kv(sc));
        const auto back = simulation_config_from_kv(parse_key_values(again)).scenario;
        CHECK(back.p_v == sc.p_v);
        CHECK(back.seed == 77);
        CHECK(back.model.Q() == sc.model.Q());
        CHECK(back.prior0.cov() == sc.prior0.cov());
        REQUIRE(back.forced_outlier.has_value());
        CHECK(*back.forced_outlier->draw == *sc.forced_outlier->draw);
    }
    SUBCASE("unknown keys are rejected")
    {
        std::istringstream bad("stepz = 3\n");
        CHECK_THROWS_AS(simulation_config_from_kv(parse_key_values(bad)), InvalidParameter);
    }
    SUBCASE("malformed values are rejected")
    {
        std::istringstream bad("steps = many\n");
        CHECK_THROWS_AS(simulation_config_from_kv(parse_key_values(bad)), InvalidParameter);
        std::istringstream short_vec("x0 = 1 2\n");
        CHECK_THROWS(simulation_config_from_kv(parse_key_values(short_vec)));
    }
    SUBCASE("missing file")
    {
        CHECK_THROWS_AS(read_key_value_file("/nonexistent/vbtrack.cfg"), IoError);
    }
}
