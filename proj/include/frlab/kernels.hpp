#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "calculus.hpp"
#include "errors.hpp"
#include "fit.hpp"
#include "graph.hpp"
#include "markov.hpp"

namespace frlab {

// Geometrically spaced integer targets in [k_min, k_max], deduplicated.
inline std::vector<int> geometric_steps(int k_min, int k_max, int count) {
    if (k_min < 1 || k_max < k_min || count < 2)
        throw validation_error("geometric_steps: need 1 <= k_min <= k_max and count >= 2");
    std::vector<int> ks;
    const double a = std::log(static_cast<double>(k_min));
    const double b = std::log(static_cast<double>(k_max));
    for (int i = 0; i < count; ++i) {
        const double t = a + (b - a) * static_cast<double>(i) / (count - 1);
        const int k = static_cast<int>(std::lround(std::exp(t)));
        if (ks.empty() || k > ks.back()) ks.push_back(k);
    }
    return ks;
}

struct OnDiagonalFit {
    int y = 0;
    std::vector<int> ks;
    std::vector<double> values;  // p_k(y,y)
    ScalingFit fit;              // slope of log p_k(y,y) vs log k, expected -D/m
};

// Streams the kernel column from delta_y and records the on-diagonal value at
// each target step, then fits the decay exponent.
inline OnDiagonalFit on_diagonal_fit(const MarkovOperator& op, int y,
                                     std::span<const int> ks) {
    OnDiagonalFit res;
    res.y = y;
    KernelWalk walk(op, y);
    for (int k : ks) {
        walk.advance_to(k);
        const double v = walk.values()[y];
        if (v <= 0.0)
            throw domain_error("on_diagonal_fit: nonpositive on-diagonal value; "
                               "k grid too coarse for this walk");
        res.ks.push_back(k);
        res.values.push_back(v);
    }
    std::vector<double> xs(res.ks.begin(), res.ks.end());
    res.fit = loglog_fit(xs, res.values);
    return res;
}

// Largest k free of boundary contamination: the walk started at y must not
// feel the finite truncation, so k^{1/m} stays below a fraction of the
// distance from y to the extremal corners (3^{n-1} on a level-n fractal).
inline int trusted_horizon(int level, double m_exp, double kappa = 0.1) {
    if (level < 1)
        throw validation_error("trusted_horizon: need level >= 1");
    const double scale = std::pow(3.0, level - 1);
    return static_cast<int>(kappa * std::pow(scale, m_exp));
}

struct UeCheckpoint {
    int k = 0;
    double sup_log = 0.0;  // running sup over x, k' <= k of log of the UE ratio
};

struct UeReport {
    int y = 0;
    double m_exp = 0.0;
    double c = 0.0;
    double sup_log = 0.0;                 // log of the (UE) constant realized on the window
    std::vector<UeCheckpoint> trace;      // running sup at geometric checkpoints
};

// Scans p_{k-1}(x,y) * V(y, k^{1/m}) / m(y) * exp(c (d(x,y)^m / k)^{1/(m-1)})
// over all x and k <= k_max. Everything runs in log space: the exponential
// factor overflows double for the Gaussian exponent m = 2 long before the
// product stops being informative. Vertices with p <= 0 contribute nothing.
inline UeReport verify_ue(const MarkovOperator& op, int y, int k_max, double m_exp,
                          double c, int checkpoints = 12) {
    if (k_max < 1)
        throw validation_error("verify_ue: need k_max >= 1");
    if (!(m_exp > 1.0))
        throw validation_error("verify_ue: need m > 1");
    const WeightedGraph& g = op.graph();
    const int nv = g.vertex_count();
    const auto dist = bfs_distances(g, y);

    // V(y, r) through one sorted pass: prefix sums of measure by distance.
    int max_d = 0;
    for (int d : dist) max_d = std::max(max_d, d);
    std::vector<double> vol_by_dist(max_d + 2, 0.0);
    for (int x = 0; x < nv; ++x) vol_by_dist[dist[x] + 1] += g.measure(x);
    for (int d = 1; d <= max_d + 1; ++d) vol_by_dist[d] += vol_by_dist[d - 1];
    const auto volume_at = [&](double r) {
        // open ball d(x,y) < r, matching ball(); V >= m(y) always since r >= 1
        const int cutoff = std::min<int>(max_d + 1, static_cast<int>(std::ceil(r - 1e-12)));
        return vol_by_dist[cutoff];
    };

    std::vector<double> dist_pow(nv);
    for (int x = 0; x < nv; ++x)
        dist_pow[x] = std::pow(static_cast<double>(dist[x]), m_exp);

    const double inv_exp = 1.0 / (m_exp - 1.0);
    const double log_my = std::log(g.measure(y));
    const auto cps = geometric_steps(1, k_max, checkpoints);

    UeReport rep;
    rep.y = y;
    rep.m_exp = m_exp;
    rep.c = c;
    rep.sup_log = -std::numeric_limits<double>::infinity();

    KernelWalk walk(op, y);
    std::size_t next_cp = 0;
    for (int k = 1; k <= k_max; ++k) {
        // column() currently holds p_{k-1}(., y)
        const auto& col = walk.values();
        const double log_vol = std::log(volume_at(std::pow(static_cast<double>(k), 1.0 / m_exp)));
        for (int x = 0; x < nv; ++x) {
            const double p = col[x];
            if (p <= 0.0) continue;
            const double lg = std::log(p) + log_vol - log_my
                            + c * std::pow(dist_pow[x] / k, inv_exp);
            if (lg > rep.sup_log) rep.sup_log = lg;
        }
        while (next_cp < cps.size() && cps[next_cp] == k) {
            rep.trace.push_back({k, rep.sup_log});
            ++next_cp;
        }
        if (k < k_max) walk.advance(1);
    }
    return rep;
}

struct AnalyticityResult {
    int n = 0;
    double norm = 0.0;       // || (I-P) P^n ||_{L^2(m)}
    double scaled = 0.0;     // n * norm; analyticity means this stays bounded
    bool converged = false;
    int iterations = 0;
};

// Operator norm of (I-P)P^n on L^2(m) by power iteration on the composition
// with its adjoint. P is self-adjoint on L^2(m), so the norm is the largest
// |(1-s) s^n| over the spectrum; the iteration needs no symmetrization beyond
// applying the operator twice per step.
inline AnalyticityResult analyticity_norm(const MarkovOperator& op, int n,
                                          int max_iterations = 300, double tol = 1e-11) {
    if (n < 1)
        throw validation_error("analyticity_norm: need n >= 1");
    const WeightedGraph& g = op.graph();
    const int nv = g.vertex_count();
    std::vector<double> v(nv), w(nv), scratch(nv);
    for (int x = 0; x < nv; ++x)
        v[x] = static_cast<double>((static_cast<unsigned>(x + 1) * 2246822519u) % 997) / 997.0 - 0.5;

    const auto apply_op = [&](std::vector<double>& buf) {
        // buf <- (I-P) P^n buf
        for (int i = 0; i < n; ++i) {
            op.apply(buf, scratch);
            buf.swap(scratch);
        }
        op.apply(buf, scratch);
        for (int x = 0; x < nv; ++x) buf[x] -= scratch[x];
    };

    AnalyticityResult res;
    res.n = n;
    double prev = 0.0;
    for (int it = 1; it <= max_iterations; ++it) {
        double norm = std::sqrt(inner_m(g, v, v));
        if (norm == 0.0) break;
        for (double& e : v) e /= norm;
        w = v;
        apply_op(w);       // A v
        apply_op(w);       // A^2 v = A^T A v by self-adjointness
        const double lam = std::sqrt(std::max(0.0, inner_m(g, w, v)));
        res.norm = lam;
        res.iterations = it;
        if (it > 1 && std::abs(lam - prev) <= tol * std::max(1.0, lam)) {
            res.converged = true;
            break;
        }
        prev = lam;
        v.swap(w);
    }
    res.scaled = static_cast<double>(n) * res.norm;
    return res;
}

} // namespace frlab
