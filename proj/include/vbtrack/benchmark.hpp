#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace vbtrack {

struct TimingRow {
    std::string filter;  ///< "kf" or "rstkf"
    int iters = 0;       ///< VB iterations; 0 for the Kalman filter
    double median_ns = 0.0;
    double p05_ns = 0.0;  ///< lower edge of the inner 90th percentile
    double p95_ns = 0.0;  ///< upper edge of the inner 90th percentile
};

struct TimingTable {
    std::size_t reps = 0;
    std::vector<TimingRow> rows;

    const TimingRow& kf() const;
    const TimingRow& rstkf(int iters) const;
    /// median(RSTKF with `iters`) / median(KF)
    double ratio_to_kf(int iters) const;
};

/// Wall time of a single conditional update on CV-scenario inputs, for the
/// Kalman filter and the robust update at each iteration count. Runs on the
/// calling thread; the first `warmup` repetitions of every row are discarded.
TimingTable benchmark_filters(std::size_t reps, const std::vector<int>& iters_list = {1, 5, 10},
                              std::size_t warmup = 50, std::uint64_t seed = 7);

}  // namespace vbtrack
