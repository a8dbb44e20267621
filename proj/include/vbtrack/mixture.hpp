#pragma once

#include "vbtrack/distributions.hpp"
#include "vbtrack/errors.hpp"
#include "vbtrack/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace vbtrack {

template <typename Scalar>
struct MixtureComponent {
    Scalar log_weight;
    GaussianBelief<Scalar> belief;
};

/// Weighted Gaussian components with weights kept in the log domain.
template <typename Scalar>
class GaussianMixture {
public:
    explicit GaussianMixture(std::vector<MixtureComponent<Scalar>> components)
        : components_(std::move(components))
    {
        if (components_.empty()) {
            throw InvalidParameter("GaussianMixture: at least one component required");
        }
        const auto dim = components_.front().belief.dim();
        for (const auto& c : components_) {
            if (c.belief.dim() != dim) {
                throw DimensionMismatch("GaussianMixture: components differ in dimension");
            }
            if (std::isnan(c.log_weight) || c.log_weight == std::numeric_limits<Scalar>::infinity()) {
                throw InvalidParameter("GaussianMixture: log-weight must be finite or -inf");
            }
        }
    }

    explicit GaussianMixture(GaussianBelief<Scalar> single)
        : GaussianMixture(std::vector<MixtureComponent<Scalar>>{{Scalar(0), std::move(single)}})
    {
    }

    std::span<const MixtureComponent<Scalar>> components() const noexcept { return components_; }
    std::size_t size() const noexcept { return components_.size(); }
    const MixtureComponent<Scalar>& operator[](std::size_t i) const { return components_[i]; }
    Eigen::Index dim() const noexcept { return components_.front().belief.dim(); }

    /// Linear-domain weights.
    std::vector<Scalar> weights() const
    {
        std::vector<Scalar> w;
        w.reserve(components_.size());
        for (const auto& c : components_) {
            w.push_back(std::exp(c.log_weight));
        }
        return w;
    }

private:
    std::vector<MixtureComponent<Scalar>> components_;
};

template <typename Scalar>
Scalar log_sum_exp(std::span<const Scalar> values)
{
    const Scalar inf = std::numeric_limits<Scalar>::infinity();
    Scalar hi = -inf;
    for (Scalar v : values) {
        hi = std::max(hi, v);
    }
    if (hi == -inf) {
        return -inf;
    }
    Scalar acc = 0;
    for (Scalar v : values) {
        acc += std::exp(v - hi);
    }
    return hi + std::log(acc);
}

template <typename Scalar>
Scalar log_add_exp(Scalar a, Scalar b)
{
    const Scalar hi = std::max(a, b);
    if (hi == -std::numeric_limits<Scalar>::infinity()) {
        return hi;
    }
    return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

/// Log-sum-exp normalization. Zero-probability (-inf) components are dropped.
template <typename Scalar>
GaussianMixture<Scalar> normalize(const GaussianMixture<Scalar>& mix)
{
    std::vector<Scalar> lw;
    lw.reserve(mix.size());
    for (const auto& c : mix.components()) {
        lw.push_back(c.log_weight);
    }
    const Scalar total = log_sum_exp<Scalar>(lw);
    if (!std::isfinite(total)) {
        throw EmptyPosterior("normalize: every component has zero weight");
    }
    std::vector<MixtureComponent<Scalar>> out;
    out.reserve(mix.size());
    for (const auto& c : mix.components()) {
        if (c.log_weight != -std::numeric_limits<Scalar>::infinity()) {
            out.push_back({c.log_weight - total, c.belief});
        }
    }
    return GaussianMixture<Scalar>(std::move(out));
}

/// Drops components with weight below the threshold and renormalizes. The
/// heaviest component always survives.
template <typename Scalar>
GaussianMixture<Scalar> prune(const GaussianMixture<Scalar>& mix, Scalar gamma_prune)
{
    const Scalar log_threshold = std::log(gamma_prune);
    std::size_t best = 0;
    for (std::size_t i = 1; i < mix.size(); ++i) {
        if (mix[i].log_weight > mix[best].log_weight) {
            best = i;
        }
    }
    std::vector<MixtureComponent<Scalar>> kept;
    for (std::size_t i = 0; i < mix.size(); ++i) {
        if (i == best || mix[i].log_weight >= log_threshold) {
            kept.push_back(mix[i]);
        }
    }
    return normalize(GaussianMixture<Scalar>(std::move(kept)));
}

/// Moment-matched merge of two weighted components.
template <typename Scalar>
MixtureComponent<Scalar> merge_pair(const MixtureComponent<Scalar>& a,
                                    const MixtureComponent<Scalar>& b)
{
    if (a.belief.dim() != b.belief.dim()) {
        throw DimensionMismatch("merge_pair: components differ in dimension");
    }
    const Scalar log_w = log_add_exp(a.log_weight, b.log_weight);
    // Relative weights computed in the log domain stay accurate when both are tiny.
    const Scalar wa = std::exp(a.log_weight - log_w);
    const Scalar wb = std::exp(b.log_weight - log_w);
    const Vec<Scalar> mean = wa * a.belief.mean() + wb * b.belief.mean();
    const Vec<Scalar> da = a.belief.mean() - mean;
    const Vec<Scalar> db = b.belief.mean() - mean;
    const Mat<Scalar> cov = wa * (a.belief.cov() + da * da.transpose()) +
                            wb * (b.belief.cov() + db * db.transpose());
    return {log_w, GaussianBelief<Scalar>(mean, cov)};
}

/// Runnalls' upper bound on the KL discrimination lost by merging a and b:
///   B = 1/2 [(w_a + w_b) ln det P_ab - w_a ln det P_a - w_b ln det P_b]
template <typename Scalar>
Scalar merge_cost(const MixtureComponent<Scalar>& a, const MixtureComponent<Scalar>& b)
{
    const Scalar log_det_a = dist::log_det_pd(a.belief.cov());
    const Scalar log_det_b = dist::log_det_pd(b.belief.cov());
    const auto merged = merge_pair(a, b);
    const Scalar log_det_m = dist::log_det_pd(merged.belief.cov());
    const Scalar wa = std::exp(a.log_weight);
    const Scalar wb = std::exp(b.log_weight);
    const Scalar cost = Scalar(0.5) * ((wa + wb) * log_det_m - wa * log_det_a - wb * log_det_b);
    // The bound is non-negative by concavity of ln det; clamp round-off.
    return std::max(cost, Scalar(0));
}

/// Greedy Runnalls reduction: merge the cheapest pair until at most n_max
/// components remain. Ties go to the lexicographically smallest (i, j); the
/// merged component takes slot i.
template <typename Scalar>
GaussianMixture<Scalar> reduce_runnalls(const GaussianMixture<Scalar>& mix, std::size_t n_max)
{
    if (n_max < 1) {
        throw InvalidParameter("reduce_runnalls: n_max must be at least 1");
    }
    if (mix.size() <= n_max) {
        return mix;
    }
    std::vector<MixtureComponent<Scalar>> comps(mix.components().begin(), mix.components().end());
    std::vector<Scalar> log_det(comps.size());
    for (std::size_t i = 0; i < comps.size(); ++i) {
        log_det[i] = dist::log_det_pd(comps[i].belief.cov());
    }
    auto pair_cost = [&](std::size_t i, std::size_t j) {
        const auto merged = merge_pair(comps[i], comps[j]);
        const Scalar wi = std::exp(comps[i].log_weight);
        const Scalar wj = std::exp(comps[j].log_weight);
        const Scalar c = Scalar(0.5) * ((wi + wj) * dist::log_det_pd(merged.belief.cov()) -
                                        wi * log_det[i] - wj * log_det[j]);
        return std::max(c, Scalar(0));
    };

    // Upper-triangular cost table; only row/column of the merged slot is refreshed.
    const std::size_t n = comps.size();
    std::vector<Scalar> cost(n * n, Scalar(0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            cost[i * n + j] = pair_cost(i, j);
        }
    }
    std::vector<bool> alive(n, true);
    std::size_t count = n;
    while (count > n_max) {
        std::size_t bi = n;
        std::size_t bj = n;
        Scalar best = std::numeric_limits<Scalar>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) {
                continue;
            }
            for (std::size_t j = i + 1; j < n; ++j) {
                if (alive[j] && cost[i * n + j] < best) {
                    best = cost[i * n + j];
                    bi = i;
                    bj = j;
                }
            }
        }
        if (bi == n) {
            // Every remaining cost is NaN; fall back to the first live pair.
            bi = static_cast<std::size_t>(std::find(alive.begin(), alive.end(), true) - alive.begin());
            bj = static_cast<std::size_t>(std::find(alive.begin() + static_cast<std::ptrdiff_t>(bi) + 1,
                                                    alive.end(), true) -
                                          alive.begin());
        }
        comps[bi] = merge_pair(comps[bi], comps[bj]);
        log_det[bi] = dist::log_det_pd(comps[bi].belief.cov());
        alive[bj] = false;
        --count;
        for (std::size_t k = 0; k < n; ++k) {
            if (!alive[k] || k == bi) {
                continue;
            }
            if (k < bi) {
                cost[k * n + bi] = pair_cost(k, bi);
            } else {
                cost[bi * n + k] = pair_cost(bi, k);
            }
        }
    }
    std::vector<MixtureComponent<Scalar>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < n; ++i) {
        if (alive[i]) {
            out.push_back(std::move(comps[i]));
        }
    }
    return GaussianMixture<Scalar>(std::move(out));
}

/// Mixture mean and total covariance (the MMSE point estimate).
template <typename Scalar>
GaussianBelief<Scalar> mmse_estimate(const GaussianMixture<Scalar>& mix)
{
    const auto w = mix.weights();
    const Eigen::Index d = mix.dim();
    Vec<Scalar> mean = Vec<Scalar>::Zero(d);
    for (std::size_t i = 0; i < mix.size(); ++i) {
        mean += w[i] * mix[i].belief.mean();
    }
    Mat<Scalar> cov = Mat<Scalar>::Zero(d, d);
    for (std::size_t i = 0; i < mix.size(); ++i) {
        const Vec<Scalar> diff = mix[i].belief.mean() - mean;
        cov += w[i] * (mix[i].belief.cov() + diff * diff.transpose());
    }
    return {mean, cov};
}

}  // namespace vbtrack
