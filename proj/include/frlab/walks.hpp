#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "fit.hpp"
#include "graph.hpp"
#include "markov.hpp"
#include "rng.hpp"

namespace frlab {

struct ExitTimeStats {
    int center = 0;
    int radius = 0;
    long long trials = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double alpha = 0.5;
    std::uint64_t seed = 0;
};

// Mean first exit time from B(x,r) by direct simulation. Each trial owns a
// deterministic substream of the seed and the per-trial exit times accumulate
// into integer sums, so the result is bitwise reproducible for any job count.
inline ExitTimeStats simulate_exit(const MarkovOperator& op, int x, int r,
                                   long long trials, std::uint64_t seed, int jobs = 1) {
    const WeightedGraph& g = op.graph();
    if (r < 1)
        throw validation_error("simulate_exit: need r >= 1");
    if (trials < 1)
        throw validation_error("simulate_exit: need at least one trial");
    const auto dist = bfs_distances(g, x);
    const int ecc = *std::max_element(dist.begin(), dist.end());
    if (r > ecc)
        throw validation_error("simulate_exit: B(x,r) covers the whole graph, "
                               "the walk would never exit");

    const double alpha = op.alpha();
    const auto run_trial = [&](std::uint64_t trial) -> std::uint64_t {
        SplitMix64 rng(substream_seed(seed, trial));
        int cur = x;
        std::uint64_t steps = 0;
        while (true) {
            ++steps;
            const double u = rng.next_unit();
            if (u >= alpha) {
                const double target = (u - alpha) / (1.0 - alpha) * g.measure(cur);
                auto nbrs = g.neighbors(cur);
                auto wts = g.weights(cur);
                double acc = 0.0;
                int next = nbrs[nbrs.size() - 1];
                for (std::size_t i = 0; i < nbrs.size(); ++i) {
                    acc += wts[i];
                    if (acc > target) {
                        next = nbrs[i];
                        break;
                    }
                }
                cur = next;
            }
            if (dist[cur] >= r) return steps;
        }
    };

    std::atomic<std::uint64_t> sum{0}, sum_sq{0};
    constexpr long long kChunk = 256;
    const long long chunks = (trials + kChunk - 1) / kChunk;
    std::atomic<long long> next_chunk{0};
    const auto worker = [&] {
        while (true) {
            const long long c = next_chunk.fetch_add(1);
            if (c >= chunks) return;
            std::uint64_t local = 0, local_sq = 0;
            const long long hi = std::min(trials, (c + 1) * kChunk);
            for (long long t = c * kChunk; t < hi; ++t) {
                const std::uint64_t tau = run_trial(static_cast<std::uint64_t>(t));
                local += tau;
                local_sq += tau * tau;
            }
            sum.fetch_add(local);
            sum_sq.fetch_add(local_sq);
        }
    };

    const int nthreads = static_cast<int>(std::min<long long>(std::max(jobs, 1), chunks));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    ExitTimeStats stats;
    stats.center = x;
    stats.radius = r;
    stats.trials = trials;
    stats.alpha = alpha;
    stats.seed = seed;
    const double n = static_cast<double>(trials);
    const double s1 = static_cast<double>(sum.load());
    const double s2 = static_cast<double>(sum_sq.load());
    stats.mean = s1 / n;
    if (trials > 1) {
        const double var = std::max(0.0, (s2 - s1 * s1 / n) / (n - 1.0));
        stats.std_error = std::sqrt(var / n);
    }
    return stats;
}

// Log-log fit of mean exit time against radius; the exponent estimates the
// walk dimension.
inline ScalingFit exit_exponent_fit(std::span<const ExitTimeStats> stats) {
    std::vector<double> rs, means;
    for (const auto& s : stats) {
        rs.push_back(static_cast<double>(s.radius));
        means.push_back(s.mean);
    }
    return loglog_fit(rs, means);
}

} // namespace frlab
