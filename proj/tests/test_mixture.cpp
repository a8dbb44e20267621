#include "doctest.h"

#include "vbtrack/distributions.hpp"
#include "vbtrack/errors.hpp"
#include "vbtrack/mixture.hpp"
#include "vbtrack/random.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace vbtrack;

namespace {

using Comp = MixtureComponent<double>;
using Mix = GaussianMixture<double>;

Comp comp1(double w, double mean, double var)
{
    return {std::log(w), GaussianBelief<double>(Eigen::VectorXd::Constant(1, mean),
                                                Eigen::MatrixXd::Constant(1, 1, var))};
}

double total_weight(const Mix& mix)
{
    double acc = 0.0;
    for (double w : mix.weights()) {
        acc += w;
    }
    return acc;
}

Mix random_mixture(std::size_t n, Eigen::Index d, Rng& rng)
{
    std::vector<Comp> comps;
    std::uniform_real_distribution<double> uw(0.01, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(d, d, [&] {
            return std::normal_distribution<double>()(rng);
        });
        comps.push_back({std::log(uw(rng)),
                         GaussianBelief<double>(dist::sample_standard_normal<double>(d, rng) * 5.0,
                                                a * a.transpose() +
                                                    0.1 * Eigen::MatrixXd::Identity(d, d))});
    }
    return normalize(Mix(std::move(comps)));
}

}  // namespace

TEST_CASE("normalize")
{
    SUBCASE("equal weights")
    {
        const auto n = normalize(Mix({comp1(2, 0, 1), comp1(2, 1, 1)}));
        CHECK(n[0].log_weight == doctest::Approx(std::log(0.5)));
        CHECK(n[1].log_weight == doctest::Approx(std::log(0.5)));
    }
    SUBCASE("single component")
    {
        CHECK(normalize(Mix({comp1(0.3, 0, 1)}))[0].log_weight == doctest::Approx(0.0));
    }
    SUBCASE("wide dynamic range")
    {
        auto a = comp1(1, 0, 1);
        auto b = comp1(1, 1, 1);
        a.log_weight = 0.0;
        b.log_weight = -1000.0;
        const auto n = normalize(Mix({a, b}));
        CHECK(n[0].log_weight == doctest::Approx(0.0));
        CHECK(n[1].log_weight == doctest::Approx(-1000.0));
        CHECK(std::isfinite(n[1].log_weight));
    }
    SUBCASE("all weights zero")
    {
        auto a = comp1(1, 0, 1);
        a.log_weight = -std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(normalize(Mix({a, a})), EmptyPosterior);
    }
    SUBCASE("zero-weight components dropped")
    {
        auto a = comp1(1, 0, 1);
        a.log_weight = -std::numeric_limits<double>::infinity();
        const auto n = normalize(Mix({a, comp1(0.2, 3, 1)}));
        CHECK(n.size() == 1);
        CHECK(n[0].belief.mean()(0) == 3.0);
    }
}

TEST_CASE("GaussianMixture invariants")
{
    CHECK_THROWS_AS(Mix(std::vector<Comp>{}), InvalidParameter);
    const Comp c2{0.0, GaussianBelief<double>(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity())};
    CHECK_THROWS_AS(Mix({comp1(1, 0, 1), c2}), DimensionMismatch);
    auto bad = comp1(1, 0, 1);
    bad.log_weight = std::nan("");
    CHECK_THROWS_AS(Mix({bad}), InvalidParameter);
}

TEST_CASE("prune")
{
    SUBCASE("drops a negligible component")
    {
        const auto p = prune(normalize(Mix({comp1(1 - 1e-7, 0, 1), comp1(1e-7, 1, 1)})), 6.25e-6);
        CHECK(p.size() == 1);
        CHECK(p[0].log_weight == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("equal weights above the threshold are kept")
    {
        const auto m = normalize(Mix({comp1(1, 0, 1), comp1(1, 1, 1), comp1(1, 2, 1)}));
        const auto p = prune(m, 0.1);
        REQUIRE(p.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(p[i].log_weight == doctest::Approx(m[i].log_weight));
        }
    }
    SUBCASE("threshold semantics")
    {
        const auto p = prune(normalize(Mix({comp1(0.6, 0, 1), comp1(0.4, 1, 1)})), 0.5);
        REQUIRE(p.size() == 1);
        CHECK(p[0].belief.mean()(0) == 0.0);
    }
    SUBCASE("keeps the heaviest even above every weight")
    {
        const auto p = prune(normalize(Mix({comp1(0.3, 0, 1), comp1(0.7, 1, 1)})), 0.9);
        REQUIRE(p.size() == 1);
        CHECK(p[0].belief.mean()(0) == 1.0);
    }
    SUBCASE("idempotent")
    {
        Rng rng = make_stream(41, 0, 0, DrawPurpose::TestData);
        for (int trial = 0; trial < 100; ++trial) {
            const auto m = random_mixture(8, 2, rng);
            const auto once = normalize(prune(m, 0.08));
            const auto twice = normalize(prune(once, 0.08));
            REQUIRE(once.size() == twice.size());
            for (std::size_t i = 0; i < once.size(); ++i) {
                CHECK(twice[i].log_weight == doctest::Approx(once[i].log_weight).epsilon(1e-14));
                CHECK(twice[i].belief.mean() == once[i].belief.mean());
            }
        }
    }
}

TEST_CASE("merge_pair")
{
    SUBCASE("identical halves")
    {
        const auto m = merge_pair(comp1(0.5, 1.5, 2), comp1(0.5, 1.5, 2));
        CHECK(m.log_weight == doctest::Approx(0.0));
        CHECK(m.belief.mean()(0) == doctest::Approx(1.5));
        CHECK(m.belief.cov()(0, 0) == doctest::Approx(2.0));
    }
    SUBCASE("1-D moment matching")
    {
        const auto m = merge_pair(comp1(0.5, 0, 1), comp1(0.5, 2, 1));
        CHECK(m.belief.mean()(0) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(m.belief.cov()(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("dimension mismatch")
    {
        const Comp c2{0.0, GaussianBelief<double>(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity())};
        CHECK_THROWS_AS(merge_pair(comp1(1, 0, 1), c2), DimensionMismatch);
    }
    SUBCASE("agrees with sampled moments")
    {
        Eigen::Matrix2d pa;
        pa << 2.0, 0.3, 0.3, 1.0;
        Eigen::Matrix2d pb;
        pb << 0.5, -0.2, -0.2, 1.5;
        const Comp a{std::log(0.3), GaussianBelief<double>(Eigen::Vector2d(-1, 2), pa)};
        const Comp b{std::log(0.7), GaussianBelief<double>(Eigen::Vector2d(2, 0.5), pb)};
        const auto merged = merge_pair(a, b);

        Rng rng = make_stream(42, 0, 0, DrawPurpose::TestData);
        const Eigen::MatrixXd la = pa.llt().matrixL();
        const Eigen::MatrixXd lb = pb.llt().matrixL();
        std::bernoulli_distribution pick_a(0.3);
        const int n = 1000000;
        std::vector<Eigen::Vector2d> xs(n);
        Eigen::Vector2d sum = Eigen::Vector2d::Zero();
        for (auto& x : xs) {
            x = pick_a(rng) ? dist::sample_normal(a.belief.mean(), la, rng)
                            : dist::sample_normal(b.belief.mean(), lb, rng);
            sum += x;
        }
        const Eigen::Vector2d mean = sum / n;
        Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
        for (const auto& x : xs) {
            cov += (x - mean) * (x - mean).transpose();
        }
        cov /= (n - 1);
        const auto& P = merged.belief.cov();
        for (int i = 0; i < 2; ++i) {
            const double se_mean = std::sqrt(P(i, i) / n);
            CHECK(std::abs(mean(i) - merged.belief.mean()(i)) < 3.0 * se_mean);
            for (int j = i; j < 2; ++j) {
                // Standard error of the entry from the spread of its summands.
                double m2 = 0.0;
                for (const auto& x : xs) {
                    const double p = (x(i) - mean(i)) * (x(j) - mean(j)) - cov(i, j);
                    m2 += p * p;
                }
                const double se_cov = std::sqrt(m2 / (n - 1) / n);
                CHECK(std::abs(cov(i, j) - P(i, j)) < 3.0 * se_cov);
            }
        }
    }
}

TEST_CASE("merge_cost")
{
    SUBCASE("identical components cost nothing")
    {
        CHECK(merge_cost(comp1(0.4, 1, 2), comp1(0.6, 1, 2)) == doctest::Approx(0.0));
    }
    SUBCASE("hand value")
    {
        CHECK(merge_cost(comp1(0.5, 0, 1), comp1(0.5, 2, 1)) ==
              doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));
        CHECK(0.5 * std::log(2.0) == doctest::Approx(0.3466).epsilon(1e-4));
    }
    SUBCASE("grows with separation")
    {
        double prev = -1.0;
        for (int i = 0; i <= 40; ++i) {
            const double c = merge_cost(comp1(0.5, 0, 1), comp1(0.5, 0.25 * i, 1));
            CHECK(c > prev);
            prev = c;
        }
    }
    SUBCASE("symmetric")
    {
        Rng rng = make_stream(43, 0, 0, DrawPurpose::TestData);
        for (int trial = 0; trial < 50; ++trial) {
            const auto m = random_mixture(2, 3, rng);
            CHECK(merge_cost(m[0], m[1]) == doctest::Approx(merge_cost(m[1], m[0])).epsilon(1e-12));
        }
    }
}

TEST_CASE("reduce_runnalls")
{
    SUBCASE("within the cap")
    {
        const auto m = normalize(Mix({comp1(1, 0, 1), comp1(1, 5, 1)}));
        const auto r = reduce_runnalls(m, 2);
        REQUIRE(r.size() == 2);
        CHECK(r[1].belief.mean() == m[1].belief.mean());
    }
    SUBCASE("identical pair merged first")
    {
        const auto m = normalize(Mix({comp1(1, 0, 1), comp1(1, 10, 1), comp1(1, 10, 1)}));
        const auto r = reduce_runnalls(m, 2);
        REQUIRE(r.size() == 2);
        CHECK(r[0].belief.mean()(0) == 0.0);
        CHECK(r[1].belief.mean()(0) == doctest::Approx(10.0));
        CHECK(std::exp(r[1].log_weight) == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("tie goes to the lowest pair")
    {
        // (0,1) and (1,2) are equally cheap; the merge lands in slot 0.
        const auto m = normalize(Mix({comp1(1, 0, 1), comp1(1, 1, 1), comp1(1, 2, 1)}));
        const auto r = reduce_runnalls(m, 2);
        REQUIRE(r.size() == 2);
        CHECK(r[0].belief.mean()(0) == doctest::Approx(0.5));
        CHECK(r[1].belief.mean()(0) == 2.0);
    }
    SUBCASE("n_max=1 is whole-mixture moment matching")
    {
        Rng rng = make_stream(44, 0, 0, DrawPurpose::TestData);
        const auto m = random_mixture(6, 3, rng);
        const auto r = reduce_runnalls(m, 1);
        REQUIRE(r.size() == 1);
        const auto w = m.weights();
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
        for (std::size_t i = 0; i < m.size(); ++i) {
            mean += w[i] * m[i].belief.mean();
        }
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
        for (std::size_t i = 0; i < m.size(); ++i) {
            const Eigen::VectorXd d = m[i].belief.mean() - mean;
            cov += w[i] * (m[i].belief.cov() + d * d.transpose());
        }
        CHECK(r[0].belief.mean().isApprox(mean, 1e-12));
        CHECK(r[0].belief.cov().isApprox(cov, 1e-12));
        CHECK(r[0].log_weight == doctest::Approx(0.0).epsilon(1e-14));
        const auto mm = mmse_estimate(m);
        CHECK(mm.mean().isApprox(r[0].belief.mean(), 1e-12));
        CHECK(mm.cov().isApprox(r[0].belief.cov(), 1e-12));
    }
    SUBCASE("preserves weight and mean on random mixtures")
    {
        Rng rng = make_stream(45, 0, 0, DrawPurpose::TestData);
        for (int trial = 0; trial < 200; ++trial) {
            const auto m = random_mixture(12, 4, rng);
            const auto r = reduce_runnalls(m, 4);
            CHECK(r.size() == 4);
            CHECK(total_weight(r) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK((mmse_estimate(r).mean() - mmse_estimate(m).mean()).norm() < 1e-12 * 20);
        }
    }
    SUBCASE("rejects n_max=0")
    {
        CHECK_THROWS_AS(reduce_runnalls(Mix({comp1(1, 0, 1)}), 0), InvalidParameter);
    }
}

TEST_CASE("mmse_estimate")
{
    SUBCASE("single component")
    {
        const auto e = mmse_estimate(Mix({comp1(1, 4, 3)}));
        CHECK(e.mean()(0) == 4.0);
        CHECK(e.cov()(0, 0) == 3.0);
    }
    SUBCASE("symmetric pair")
    {
        const auto e = mmse_estimate(normalize(Mix({comp1(1, -1, 1), comp1(1, 1, 1)})));
        CHECK(e.mean()(0) == doctest::Approx(0.0));
        CHECK(e.cov()(0, 0) == doctest::Approx(2.0));
    }
}

TEST_CASE("log-domain helpers")
{
    const double ninf = -std::numeric_limits<double>::infinity();
    CHECK(log_add_exp(ninf, ninf) == ninf);
    CHECK(log_add_exp(std::log(2.0), std::log(3.0)) == doctest::Approx(std::log(5.0)));
    const std::vector<double> v{-1e4, -1e4};
    CHECK(log_sum_exp<double>(v) == doctest::Approx(-1e4 + std::log(2.0)));
}
