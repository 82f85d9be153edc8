#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <lapacke.h>

#include "calculus.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "markov.hpp"

namespace frlab {

// A g(x) = sum over neighbors of g, unweighted and without the self term.
inline std::vector<double> averaging(const WeightedGraph& g, std::span<const double> f) {
    const int nv = g.vertex_count();
    std::vector<double> out(nv, 0.0);
    for (int x = 0; x < nv; ++x)
        for (int z : g.neighbors(x)) out[x] += f[z];
    return out;
}

// Jensen gap J(x) = P(u^q)(x) - (Pu)^q(x). Nonnegative by convexity of t^q;
// values below -tol indicate a broken input rather than roundoff.
inline std::vector<double> jensen_gap(const MarkovOperator& op, std::span<const double> u,
                                      std::span<const double> u_next, double q) {
    if (!(q > 1.0 && q < 2.0))
        throw validation_error("jensen_gap: q must lie in (1,2)");
    const std::size_t nv = u.size();
    std::vector<double> uq(nv), j(nv);
    for (std::size_t x = 0; x < nv; ++x) uq[x] = std::pow(u[x], q);
    op.apply(uq, j);
    for (std::size_t x = 0; x < nv; ++x) j[x] -= std::pow(u_next[x], q);
    return j;
}

// N_q u(x) = u(x)^{2-q} * J(x), with 0^{2-q} taken as 0 so the formula stays
// meaningful outside the support. Inputs are a kernel column u = p_{k-1}(.,y)
// and its successor u_next = P u.
inline std::vector<double> pseudo_gradient(const MarkovOperator& op,
                                           std::span<const double> u,
                                           std::span<const double> u_next, double q) {
    constexpr double kJensenTol = 1e-12;
    auto j = jensen_gap(op, u, u_next, q);
    std::vector<double> nq(u.size());
    for (std::size_t x = 0; x < u.size(); ++x) {
        if (j[x] < -kJensenTol)
            throw domain_error("pseudo_gradient: Jensen gap negative beyond tolerance");
        const double jc = std::max(j[x], 0.0);
        nq[x] = u[x] > 0.0 ? std::pow(u[x], 2.0 - q) * jc : 0.0;
    }
    return nq;
}

struct HardySteinSnapshot {
    int y = 0;
    int k = 1;
    double q = 1.5;
    std::vector<double> u;          // p_{k-1}(., y)
    std::vector<double> u_next;     // p_k(., y)
    std::vector<double> time_diff;  // u_next - u
    std::vector<double> jensen;     // J_k, unclamped
    std::vector<double> pseudo;     // N_q u_k
    std::vector<double> averaged;   // A[N_q u_k]
    double jensen_min = 0.0;
    double jensen_sum = 0.0;    // sum J m
    double holder_bound = 0.0;  // q 2^{(q-1)/q} ||u||_q^{q-1} ||Delta u||_q
};

inline HardySteinSnapshot hardy_stein_snapshot(const MarkovOperator& op, int y, int k,
                                               double q) {
    if (k < 1)
        throw validation_error("hardy_stein_snapshot: need k >= 1");
    const WeightedGraph& g = op.graph();
    HardySteinSnapshot s;
    s.y = y;
    s.k = k;
    s.q = q;

    KernelWalk walk(op, y);
    walk.advance_to(k - 1);
    s.u = walk.values();
    walk.advance(1);
    s.u_next = walk.values();

    s.time_diff.resize(s.u.size());
    for (std::size_t x = 0; x < s.u.size(); ++x) s.time_diff[x] = s.u_next[x] - s.u[x];

    s.jensen = jensen_gap(op, s.u, s.u_next, q);
    s.pseudo = pseudo_gradient(op, s.u, s.u_next, q);
    s.averaged = averaging(g, s.pseudo);

    s.jensen_min = *std::min_element(s.jensen.begin(), s.jensen.end());
    for (int x = 0; x < g.vertex_count(); ++x) s.jensen_sum += s.jensen[x] * g.measure(x);

    const auto delta_u = laplacian(op, s.u);
    s.holder_bound = q * std::pow(2.0, (q - 1.0) / q)
                   * std::pow(lp_norm(g, s.u, q), q - 1.0) * lp_norm(g, delta_u, q);
    return s;
}

struct DominationRow {
    int k = 0;
    double max_ratio = 0.0;
    int evaluated = 0;
    int skipped = 0;  // vertices with u > 0 but vanishing averaged pseudo-gradient
};

struct DominationReport {
    int y = 0;
    double q = 1.5;
    std::vector<DominationRow> rows;
    double max_ratio = 0.0;
    int total_skipped = 0;
};

// sup over the evaluation set of |grad u_k|^2 / A[N_q u_k], scanned over a k
// range. The evaluation set keeps u > 0 and a strictly positive denominator;
// 0/0 at the support frontier is counted as skipped, not as a ratio.
inline DominationReport check_gradient_domination(const MarkovOperator& op, int y,
                                                  int k_min, int k_max, double q) {
    if (k_min < 1 || k_max < k_min)
        throw validation_error("check_gradient_domination: bad k range");
    constexpr double kTiny = 1e-300;
    const WeightedGraph& g = op.graph();
    const int nv = g.vertex_count();
    const double off = 1.0 - op.alpha();

    DominationReport rep;
    rep.y = y;
    rep.q = q;

    KernelWalk walk(op, y);
    walk.advance_to(k_min - 1);
    std::vector<double> u = walk.values();
    for (int k = k_min; k <= k_max; ++k) {
        walk.advance(1);
        const auto& u_next = walk.values();
        const auto nq = pseudo_gradient(op, u, u_next, q);
        const auto anq = averaging(g, nq);

        DominationRow row;
        row.k = k;
        for (int x = 0; x < nv; ++x) {
            if (!(u[x] > 0.0)) continue;
            double grad_sq = 0.0;
            auto nbrs = g.neighbors(x);
            auto wts = g.weights(x);
            for (std::size_t i = 0; i < nbrs.size(); ++i) {
                const double d = u[nbrs[i]] - u[x];
                grad_sq += wts[i] * d * d;
            }
            grad_sq *= 0.5 * off / g.measure(x);
            if (anq[x] > kTiny) {
                ++row.evaluated;
                row.max_ratio = std::max(row.max_ratio, grad_sq / anq[x]);
            } else {
                ++row.skipped;
            }
        }
        rep.rows.push_back(row);
        rep.max_ratio = std::max(rep.max_ratio, row.max_ratio);
        rep.total_skipped += row.skipped;
        u = u_next;
    }
    return rep;
}

struct WeightedGradientRow {
    int k = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

// Gradient-by-pseudo-gradient estimate at desk scale:
// LHS = || grad p_{k-1}(.,y) exp(c (d^m/k)^{1/(m-1)}) ||_q over L^q(m),
// RHS = m(y) / (sqrt(k) V(y, k^{1/m})^{1-1/q}).
// The weighted sum runs in log space per vertex; vertices with zero gradient
// contribute nothing, which also neutralizes the huge weights off the support.
inline std::vector<WeightedGradientRow> weighted_gradient_check(
        const MarkovOperator& op, int y, std::span<const int> ks, double q,
        double m_exp, double c) {
    if (!(m_exp > 1.0))
        throw validation_error("weighted_gradient_check: need m > 1");
    if (!(q >= 1.0))
        throw validation_error("weighted_gradient_check: need q >= 1");
    const WeightedGraph& g = op.graph();
    const int nv = g.vertex_count();
    const auto dist = bfs_distances(g, y);

    int max_d = 0;
    for (int d : dist) max_d = std::max(max_d, d);
    std::vector<double> vol_by_dist(max_d + 2, 0.0);
    for (int x = 0; x < nv; ++x) vol_by_dist[dist[x] + 1] += g.measure(x);
    for (int d = 1; d <= max_d + 1; ++d) vol_by_dist[d] += vol_by_dist[d - 1];

    std::vector<double> dist_pow(nv);
    for (int x = 0; x < nv; ++x)
        dist_pow[x] = std::pow(static_cast<double>(dist[x]), m_exp);
    const double inv_exp = 1.0 / (m_exp - 1.0);

    std::vector<WeightedGradientRow> rows;
    KernelWalk walk(op, y);
    for (int k : ks) {
        if (k < 1)
            throw validation_error("weighted_gradient_check: k grid must be >= 1");
        walk.advance_to(k - 1);
        const auto grad = gradient_length(op, walk.values());
        double sum = 0.0;
        for (int x = 0; x < nv; ++x) {
            if (!(grad[x] > 0.0)) continue;
            const double lg = q * (std::log(grad[x]) + c * std::pow(dist_pow[x] / k, inv_exp))
                            + std::log(g.measure(x));
            sum += std::exp(lg);
        }
        WeightedGradientRow row;
        row.k = k;
        row.lhs = std::pow(sum, 1.0 / q);
        const double r = std::pow(static_cast<double>(k), 1.0 / m_exp);
        const int cutoff = std::min<int>(max_d + 1, static_cast<int>(std::ceil(r - 1e-12)));
        row.rhs = g.measure(y)
                / (std::sqrt(static_cast<double>(k)) * std::pow(vol_by_dist[cutoff], 1.0 - 1.0 / q));
        row.ratio = row.lhs / row.rhs;
        rows.push_back(row);
    }
    return rows;
}

struct GradientTailRow {
    int k = 0;
    double r = 0.0;
    double tail = 0.0;       // sum over d(x,y) >= r of |grad p_{k-1}(.,y)| m
    double implied_c = 0.0;  // tail * sqrt(k) * exp(c (r^m/k)^{1/(m-1)})
};

// Integrated gradient tail of a kernel column outside radius r, with the
// constant implied by the target bound C k^{-1/2} exp(-c (r^m/k)^{1/(m-1)}).
inline std::vector<GradientTailRow> integrated_gradient_tail(
        const MarkovOperator& op, int y, std::span<const int> ks,
        std::span<const double> rs, double m_exp, double c) {
    if (!(m_exp > 1.0))
        throw validation_error("integrated_gradient_tail: need m > 1");
    const WeightedGraph& g = op.graph();
    const int nv = g.vertex_count();
    const auto dist = bfs_distances(g, y);
    const double inv_exp = 1.0 / (m_exp - 1.0);

    std::vector<GradientTailRow> rows;
    KernelWalk walk(op, y);
    for (int k : ks) {
        if (k < 1)
            throw validation_error("integrated_gradient_tail: k grid must be >= 1");
        walk.advance_to(k - 1);
        const auto grad = gradient_length(op, walk.values());
        for (double r : rs) {
            GradientTailRow row;
            row.k = k;
            row.r = r;
            for (int x = 0; x < nv; ++x)
                if (dist[x] >= r) row.tail += grad[x] * g.measure(x);
            row.implied_c = row.tail * std::sqrt(static_cast<double>(k))
                          * std::exp(c * std::pow(std::pow(r, m_exp) / k, inv_exp));
            rows.push_back(row);
        }
    }
    return rows;
}

// Smallest Lambda with sum_B |f - f_B|^2 m <= Lambda * sum_{edges in B} mu |df|^2,
// i.e. 1/lambda_1 of the Neumann Laplacian of the induced subgraph in L^2(m).
// The vertex measure stays the ambient m(x), not the induced degree.
inline double poincare_constant(const WeightedGraph& g, const Ball& b) {
    const int nb = static_cast<int>(b.members.size());
    if (nb < 2)
        throw validation_error("poincare_constant: ball has fewer than two vertices");
    if (nb > 4000)
        throw resource_error("poincare_constant: induced ball exceeds dense solver cap 4000");

    std::vector<int> local(g.vertex_count(), -1);
    for (int i = 0; i < nb; ++i) local[b.members[i]] = i;

    // connectivity of the induced subgraph
    {
        std::vector<char> seen(nb, 0);
        std::vector<int> stack = {0};
        seen[0] = 1;
        int reached = 1;
        while (!stack.empty()) {
            const int i = stack.back();
            stack.pop_back();
            const int x = b.members[i];
            for (int z : g.neighbors(x)) {
                const int j = local[z];
                if (j >= 0 && !seen[j]) {
                    seen[j] = 1;
                    ++reached;
                    stack.push_back(j);
                }
            }
        }
        if (reached != nb)
            throw validation_error("poincare_constant: induced ball subgraph is disconnected");
    }

    std::vector<double> s(static_cast<std::size_t>(nb) * nb, 0.0);
    std::vector<double> sqrt_m(nb);
    for (int i = 0; i < nb; ++i) sqrt_m[i] = std::sqrt(g.measure(b.members[i]));
    for (int i = 0; i < nb; ++i) {
        const int x = b.members[i];
        auto nbrs = g.neighbors(x);
        auto wts = g.weights(x);
        double deg_in = 0.0;
        for (std::size_t t = 0; t < nbrs.size(); ++t) {
            const int j = local[nbrs[t]];
            if (j < 0) continue;
            deg_in += wts[t];
            s[static_cast<std::size_t>(i) * nb + j] -= wts[t] / (sqrt_m[i] * sqrt_m[j]);
        }
        s[static_cast<std::size_t>(i) * nb + i] += deg_in / (sqrt_m[i] * sqrt_m[i]);
    }

    std::vector<double> ev(nb);
    const int info = LAPACKE_dsyevd(LAPACK_ROW_MAJOR, 'N', 'U', nb, s.data(), nb, ev.data());
    if (info != 0)
        throw resource_error("poincare_constant: eigensolver failed with info "
                             + std::to_string(info));
    if (std::abs(ev[0]) > 1e-8)
        throw domain_error("poincare_constant: Neumann kernel eigenvalue not zero");
    if (ev[1] <= 1e-12)
        throw domain_error("poincare_constant: spectral gap vanished on a connected ball");
    return 1.0 / ev[1];
}

} // namespace frlab
