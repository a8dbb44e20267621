#include "vbtrack/benchmark.hpp"

#include "vbtrack/distributions.hpp"
#include "vbtrack/errors.hpp"
#include "vbtrack/kalman.hpp"
#include "vbtrack/random.hpp"
#include "vbtrack/rstkf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace vbtrack {

namespace {

struct UpdateInput {
    GaussianBelief<double> pred;
    Eigen::VectorXd z;
};

/// Predicted beliefs after one CV step from a random posterior, plus a
/// detection drawn from the matching predictive density.
std::vector<UpdateInput> make_inputs(const LinearModel<double>& model, std::size_t n,
                                     std::uint64_t seed)
{
    std::vector<UpdateInput> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = make_stream(seed, i, 0, DrawPurpose::Benchmark);
        const Eigen::VectorXd mean = 50.0 * dist::sample_standard_normal<double>(4, rng);
        const Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(4, 4, [&] {
            return std::normal_distribution<double>(0.0, 1.0)(rng);
        });
        const Eigen::MatrixXd cov = A * A.transpose() + 5.0 * Eigen::MatrixXd::Identity(4, 4);
        auto pred = kf_predict(GaussianBelief<double>(mean, cov), model);
        const Eigen::MatrixXd innov = model.H() * pred.cov() * model.H().transpose() + model.R();
        const Eigen::MatrixXd L = innov.llt().matrixL();
        Eigen::VectorXd z = model.H() * pred.mean() + L * dist::sample_standard_normal<double>(2, rng);
        out.push_back({std::move(pred), std::move(z)});
    }
    return out;
}

double quantile(std::vector<double> sorted, double q)
{
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

template <typename Fn>
TimingRow time_update(std::string name, int iters, const std::vector<UpdateInput>& inputs,
                      std::size_t warmup, Fn&& update)
{
    using clock = std::chrono::steady_clock;
    std::vector<double> samples;
    samples.reserve(inputs.size() - warmup);
    double sink = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto t0 = clock::now();
        const auto post = update(inputs[i]);
        const auto t1 = clock::now();
        sink += post.mean()(0);
        if (i >= warmup) {
            samples.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count());
        }
    }
    // Keeps the optimizer from discarding the updates.
    volatile double keep = sink;
    (void)keep;
    return {std::move(name), iters, quantile(samples, 0.5), quantile(samples, 0.05),
            quantile(samples, 0.95)};
}

}  // namespace

const TimingRow& TimingTable::kf() const
{
    for (const auto& r : rows) {
        if (r.filter == "kf") {
            return r;
        }
    }
    throw InvalidParameter("TimingTable: no Kalman row");
}

const TimingRow& TimingTable::rstkf(int iters) const
{
    for (const auto& r : rows) {
        if (r.filter == "rstkf" && r.iters == iters) {
            return r;
        }
    }
    throw InvalidParameter("TimingTable: no RSTKF row for " + std::to_string(iters) + " iterations");
}

double TimingTable::ratio_to_kf(int iters) const
{
    return rstkf(iters).median_ns / kf().median_ns;
}

TimingTable benchmark_filters(std::size_t reps, const std::vector<int>& iters_list,
                              std::size_t warmup, std::uint64_t seed)
{
    if (reps < 100) {
        throw InvalidParameter("benchmark_filters: reps must be at least 100");
    }
    const auto model = build_cv_model(1.0, 10.0);
    const auto inputs = make_inputs(model, reps + warmup, seed);

    TimingTable table;
    table.reps = reps;
    table.rows.push_back(time_update("kf", 0, inputs, warmup, [&](const UpdateInput& in) {
        return kf_update(in.pred, in.z, model);
    }));
    for (int iters : iters_list) {
        StudentTConfig cfg;
        cfg.iters = iters;
        table.rows.push_back(time_update("rstkf", iters, inputs, warmup, [&](const UpdateInput& in) {
            return rstkf_update(in.pred, in.z, model, cfg);
        }));
    }
    return table;
}

}  // namespace vbtrack
