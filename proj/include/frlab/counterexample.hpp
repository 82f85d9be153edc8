#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "calculus.hpp"
#include "errors.hpp"
#include "fit.hpp"
#include "graph.hpp"
#include "markov.hpp"
#include "spectral.hpp"
#include "vicsek.hpp"

namespace frlab {

struct GnFunction {
    int level = 0;
    std::vector<double> values;
    double l1 = 0.0;             // ||g||_{L^1(m)}
    long long vertex_count = 0;  // |Omega_n|
    double total_measure = 0.0;  // m(Omega_n)
};

// The tent profile on a Vicsek graph: 1 at the center, 0 at the corners,
// linear along each main diagonal with slope 3^{-n}, and constant on every
// off-diagonal branch at the value of its attachment vertex (unique on a
// tree). A multi-source BFS from the diagonals propagates the attachment
// values outward.
inline GnFunction build_gn(const VicsekGraph& v) {
    const WeightedGraph& g = v.graph;
    const int nv = g.vertex_count();
    GnFunction fam;
    fam.level = v.level;
    fam.vertex_count = nv;
    fam.total_measure = g.total_measure();
    fam.values.assign(nv, -1.0);

    const double scale = std::pow(3.0, -v.level);
    std::deque<int> queue;
    for (int x = 0; x < nv; ++x) {
        if (v.diagonal_index[x] < 0) continue;
        fam.values[x] = scale * v.diagonal_dist[x];
        queue.push_back(x);
    }
    while (!queue.empty()) {
        const int x = queue.front();
        queue.pop_front();
        for (int y : g.neighbors(x)) {
            if (fam.values[y] >= 0.0) continue;
            fam.values[y] = fam.values[x];
            queue.push_back(y);
        }
    }
    for (int x = 0; x < nv; ++x) fam.l1 += fam.values[x] * g.measure(x);
    return fam;
}

struct GnNorms {
    double l1 = 0.0;
    double lp_p = 0.0;      // sum |g|^p m
    double edge_sum = 0.0;  // sum over edges of |g(x)-g(y)|^p, each edge once
    double grad_norm = 0.0; // || grad g ||_p with the lazy kernel
};

inline GnNorms gn_norms(const MarkovOperator& op, const GnFunction& fam, double p) {
    if (!(p >= 1.0))
        throw validation_error("gn_norms: need p >= 1");
    const WeightedGraph& g = op.graph();
    GnNorms out;
    out.l1 = fam.l1;
    for (int x = 0; x < g.vertex_count(); ++x) {
        out.lp_p += std::pow(fam.values[x], p) * g.measure(x);
        for (int y : g.neighbors(x))
            if (x < y) out.edge_sum += std::pow(std::abs(fam.values[x] - fam.values[y]), p);
    }
    out.grad_norm = lp_norm(g, gradient_length(op, fam.values), p);
    return out;
}

inline double reverse_riesz_threshold(double D, double beta) {
    const double denom = beta * (D + 1.0) - 1.0;
    if (!(denom > 0.0))
        throw validation_error("reverse_riesz_threshold: beta too small, "
                               "no finite threshold below beta = 1/(D+1)");
    return (D - 1.0) / denom;
}

inline void require_admissible_beta(double D, double beta, const char* who) {
    const double lo = 1.0 / (D + 1.0);
    const double hi = D / (D + 1.0);
    if (!(beta > lo && beta < hi))
        throw validation_error(std::string(who) + ": beta must lie in (1/(D+1), D/(D+1)) "
                               "for the reverse-Riesz threshold analysis");
}

struct NashRow {
    int level = 0;
    long long omega = 0;       // |Omega_n|
    double lhs = 0.0;          // ||g||_p^{1+theta}
    double rhs_grad = 0.0;     // ||g||_1^theta ||grad g||_p
    double rhs_frac = 0.0;     // ||g||_1^theta ||Delta^beta g||_p
    double log_ratio = 0.0;    // log(lhs / rhs_grad)
};

struct NashReport {
    int N = 2;
    double p = 1.5;
    double beta = 0.5;
    double D = 0.0;
    double dprime = 0.0;         // D' = 2D/(D+1)
    double theta = 0.0;          // 2 beta p / ((p-1) D')
    double gap = 0.0;            // beta (D+1)/D - 1/p - 1/(p' D)
    bool predicted_failure = false;  // gap < 0
    std::vector<NashRow> rows;
    double slope_observed = 0.0;  // slope of log(lhs/rhs_grad) vs log|Omega_n|
};

struct RieszGrowthRow {
    int level = 0;
    long long omega = 0;
    double forward_ratio = 0.0;  // ||grad g||_p / ||Delta^beta g||_p
    double reverse_ratio = 0.0;  // ||Delta^beta g||_p / ||grad g||_p
};

struct RieszGrowthReport {
    int N = 2;
    double p = 1.5;
    double beta = 0.5;
    std::vector<RieszGrowthRow> rows;
    ScalingFit fit;  // log reverse ratio vs log |Omega_n|
};

namespace detail {

struct GnLevelData {
    VicsekGraph v;
    GnFunction fam;
    GnNorms norms;
    double frac_norm = 0.0;
};

inline GnLevelData evaluate_gn_level(int N, int n, double p, double beta, double alpha,
                                     FracBackend backend, long long vertex_budget,
                                     int dense_cap) {
    GnLevelData data;
    data.v = build_vicsek(N, n, vertex_budget);
    MarkovOperator op = make_walk(data.v.graph, alpha);
    data.fam = build_gn(data.v);
    data.norms = gn_norms(op, data.fam, p);
    if (backend == FracBackend::spectral) {
        SpectralDecomposition dec(op, dense_cap);
        const FracEngine engine = FracEngine::spectral(op, dec);
        data.frac_norm = lp_norm(data.v.graph, engine.apply(data.fam.values, beta).value, p);
    } else {
        const FracEngine engine = FracEngine::series(op);
        data.frac_norm = lp_norm(data.v.graph, engine.apply(data.fam.values, beta).value, p);
    }
    return data;
}

} // namespace detail

// Evaluates both sides of the interpolation inequality
//   ||g||_p^{1+theta} <= C ||g||_1^theta ||grad g||_p,  theta = 2 beta p / ((p-1) D'),
// on the tent family across levels. A positive slope of log(LHS/RHS) against
// log|Omega_n| exhibits failure, and the analytic exponent gap predicts the
// sign in advance.
inline NashReport nash_test(int N, std::span<const int> levels, double p, double beta,
                            double alpha = 0.5,
                            FracBackend backend = FracBackend::spectral,
                            long long vertex_budget = 2'000'000, int dense_cap = 4000) {
    if (levels.size() < 2)
        throw validation_error("nash_test: need at least two levels");
    if (!(p > 1.0))
        throw validation_error("nash_test: need p > 1");
    NashReport rep;
    rep.N = N;
    rep.p = p;
    rep.beta = beta;
    rep.D = std::log(1.0 + std::pow(2.0, N)) / std::log(3.0);
    require_admissible_beta(rep.D, beta, "nash_test");
    rep.dprime = 2.0 * rep.D / (rep.D + 1.0);
    rep.theta = 2.0 * beta * p / ((p - 1.0) * rep.dprime);
    const double pprime = p / (p - 1.0);
    rep.gap = beta * (rep.D + 1.0) / rep.D - 1.0 / p - 1.0 / (pprime * rep.D);
    rep.predicted_failure = rep.gap < 0.0;

    std::vector<double> omegas, ratios;
    int prev = 0;
    for (int n : levels) {
        if (n <= prev)
            throw validation_error("nash_test: levels must be strictly increasing");
        prev = n;
        const auto data = detail::evaluate_gn_level(N, n, p, beta, alpha, backend,
                                                    vertex_budget, dense_cap);
        NashRow row;
        row.level = n;
        row.omega = data.fam.vertex_count;
        const double gp = std::pow(data.norms.lp_p, 1.0 / p);
        row.lhs = std::pow(gp, 1.0 + rep.theta);
        const double l1_theta = std::pow(data.norms.l1, rep.theta);
        row.rhs_grad = l1_theta * data.norms.grad_norm;
        row.rhs_frac = l1_theta * data.frac_norm;
        row.log_ratio = std::log(row.lhs / row.rhs_grad);
        rep.rows.push_back(row);
        omegas.push_back(static_cast<double>(row.omega));
        ratios.push_back(row.lhs / row.rhs_grad);
    }
    if (rep.rows.size() >= 3) {
        rep.slope_observed = loglog_fit(omegas, ratios).exponent;
    } else {
        rep.slope_observed = (rep.rows[1].log_ratio - rep.rows[0].log_ratio)
                           / (std::log(static_cast<double>(rep.rows[1].omega))
                              - std::log(static_cast<double>(rep.rows[0].omega)));
    }
    return rep;
}

// Growth of ||Delta^beta g_n||_p / ||grad g_n||_p across levels. A fitted
// exponent whose confidence interval stays above zero demonstrates that no
// level-independent reverse gradient bound can hold at this p.
inline RieszGrowthReport reverse_riesz_growth(int N, std::span<const int> levels, double p,
                                              double beta, double alpha = 0.5,
                                              FracBackend backend = FracBackend::spectral,
                                              long long vertex_budget = 2'000'000,
                                              int dense_cap = 4000) {
    if (levels.size() < 3)
        throw validation_error("reverse_riesz_growth: need at least three levels for a fit");
    const double D = std::log(1.0 + std::pow(2.0, N)) / std::log(3.0);
    require_admissible_beta(D, beta, "reverse_riesz_growth");
    RieszGrowthReport rep;
    rep.N = N;
    rep.p = p;
    rep.beta = beta;
    std::vector<double> omegas, ratios;
    for (int n : levels) {
        const auto data = detail::evaluate_gn_level(N, n, p, beta, alpha, backend,
                                                    vertex_budget, dense_cap);
        RieszGrowthRow row;
        row.level = n;
        row.omega = data.fam.vertex_count;
        row.forward_ratio = data.norms.grad_norm / data.frac_norm;
        row.reverse_ratio = data.frac_norm / data.norms.grad_norm;
        rep.rows.push_back(row);
        omegas.push_back(static_cast<double>(row.omega));
        ratios.push_back(row.reverse_ratio);
    }
    rep.fit = loglog_fit(omegas, ratios);
    return rep;
}

} // namespace frlab
