#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "calculus.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "markov.hpp"

namespace frlab {

// Dyadic radius grid 1, 2, 4, ... reaching past any possible diameter, so the
// maximal function always sees both the single-vertex ball and the full graph.
inline std::vector<double> dyadic_radii(const WeightedGraph& g) {
    std::vector<double> radii;
    for (double r = 1.0; r < 2.0 * g.vertex_count(); r *= 2.0) radii.push_back(r);
    return radii;
}

// Centered maximal function over the given radius grid:
// Mf(x) = max_r (1/V(x,r)) sum_{B(x,r)} |f| m. Comparable to the uncentered
// operator under volume doubling, with a constant depending only on the
// doubling constant; the grid must contain r = 1 so that Mf >= |f|.
inline std::vector<double> maximal_function(const WeightedGraph& g,
                                            std::span<const double> f,
                                            std::span<const double> radii) {
    const int nv = g.vertex_count();
    if (radii.empty() || radii.front() > 1.0)
        throw validation_error("maximal_function: radius grid must start at 1");
    std::vector<double> out(nv, 0.0);
    std::vector<double> mass, vol;
    for (int x = 0; x < nv; ++x) {
        const auto dist = bfs_distances(g, x);
        int max_d = 0;
        for (int d : dist) max_d = std::max(max_d, d);
        mass.assign(max_d + 2, 0.0);
        vol.assign(max_d + 2, 0.0);
        for (int z = 0; z < nv; ++z) {
            mass[dist[z] + 1] += std::abs(f[z]) * g.measure(z);
            vol[dist[z] + 1] += g.measure(z);
        }
        for (int d = 1; d <= max_d + 1; ++d) {
            mass[d] += mass[d - 1];
            vol[d] += vol[d - 1];
        }
        double best = 0.0;
        for (double r : radii) {
            const int cutoff = std::min<int>(max_d + 1, static_cast<int>(std::ceil(r - 1e-12)));
            if (cutoff < 1) continue;
            best = std::max(best, mass[cutoff] / vol[cutoff]);
        }
        out[x] = best;
    }
    return out;
}

// Splitting-time profile: r^2 below scale one, r^m above.
inline double rho(double r, double m_exp) {
    if (!(r > 0.0))
        throw validation_error("rho: need r > 0");
    if (!(m_exp > 1.0))
        throw validation_error("rho: need m > 1");
    return r < 1.0 ? r * r : std::pow(r, m_exp);
}

struct BadPart {
    int center = 0;
    double whitney_radius = 0.0;  // r(x_i) = d(x_i, complement of the level set)
    Ball ball;                    // B_i = B(x_i, 5 r_i / 2)
    std::vector<double> b;        // supported on B_i, mean zero
    double l1 = 0.0;
};

struct CZCheck {
    double recon_error = 0.0;     // max |f - g - sum b_i|
    double c1 = 0.0;              // ||g||_inf / lambda
    double c2 = 0.0;              // max_i ||b_i||_1 / (lambda m(B_i))
    double c3 = 0.0;              // lambda sum_i m(B_i) / ||f||_1
    int overlap = 0;              // max over vertices of #{i : x in B_i}
    double meanzero_error = 0.0;  // max_i |sum b_i m|
    bool support_ok = true;
    bool halfballs_disjoint = true;
    bool covers_level_set = true;
};

struct CZDecomposition {
    double lambda = 0.0;
    std::vector<double> f;
    std::vector<double> good;
    std::vector<BadPart> parts;
    std::vector<char> level_set;  // indicator of {Mf > lambda}
    CZCheck check;
};

inline CZCheck verify_cz(const WeightedGraph& g, const CZDecomposition& dec) {
    const int nv = g.vertex_count();
    CZCheck c;
    std::vector<double> resum(nv, 0.0);
    std::vector<int> cover_count(nv, 0);
    double sum_ball_measure = 0.0;
    for (const auto& part : dec.parts) {
        std::vector<char> in_ball(nv, 0);
        for (int x : part.ball.members) {
            in_ball[x] = 1;
            ++cover_count[x];
        }
        double mz = 0.0;
        for (int x = 0; x < nv; ++x) {
            resum[x] += part.b[x];
            mz += part.b[x] * g.measure(x);
            if (part.b[x] != 0.0 && !in_ball[x]) c.support_ok = false;
        }
        c.meanzero_error = std::max(c.meanzero_error, std::abs(mz));
        c.c2 = std::max(c.c2, part.l1 / (dec.lambda * part.ball.measure));
        sum_ball_measure += part.ball.measure;
    }
    for (int x = 0; x < nv; ++x) {
        c.recon_error = std::max(c.recon_error,
                                 std::abs(dec.f[x] - dec.good[x] - resum[x]));
        c.c1 = std::max(c.c1, std::abs(dec.good[x]) / dec.lambda);
        c.overlap = std::max(c.overlap, cover_count[x]);
        if (dec.level_set[x] && !dec.parts.empty() && cover_count[x] == 0)
            c.covers_level_set = false;
    }
    const double f_l1 = lp_norm(g, dec.f, 1.0);
    c.c3 = f_l1 > 0.0 ? dec.lambda * sum_ball_measure / f_l1 : 0.0;

    std::vector<int> half_owner(nv, -1);
    for (std::size_t i = 0; i < dec.parts.size(); ++i) {
        const auto half = ball(g, dec.parts[i].center, dec.parts[i].whitney_radius / 2.0);
        for (int x : half.members) {
            if (half_owner[x] >= 0) c.halfballs_disjoint = false;
            half_owner[x] = static_cast<int>(i);
        }
    }
    return c;
}

// Calderon-Zygmund decomposition at level lambda. Whitney radii come from one
// multi-source BFS off the complement of the level set; ball selection is a
// greedy Vitali pass over decreasing radius (ties by vertex id, so the result
// is deterministic); the partition of unity splits f - c_i across overlapping
// balls with c_i chosen to make every bad part exactly mean zero.
inline CZDecomposition cz_decompose(const WeightedGraph& g, std::span<const double> f,
                                    double lambda) {
    if (!(lambda > 0.0))
        throw validation_error("cz_decompose: need lambda > 0");
    for (double v : f)
        if (!std::isfinite(v))
            throw validation_error("cz_decompose: f has a non-finite entry");

    const int nv = g.vertex_count();
    CZDecomposition dec;
    dec.lambda = lambda;
    dec.f.assign(f.begin(), f.end());
    dec.level_set.assign(nv, 0);

    const auto radii = dyadic_radii(g);
    const auto mf = maximal_function(g, f, radii);
    std::vector<int> complement;
    for (int x = 0; x < nv; ++x) {
        if (mf[x] > lambda) dec.level_set[x] = 1;
        else complement.push_back(x);
    }

    const bool empty_level_set =
        std::none_of(dec.level_set.begin(), dec.level_set.end(), [](char v) { return v != 0; });
    if (empty_level_set) {
        dec.good = dec.f;
        dec.check = verify_cz(g, dec);
        return dec;
    }

    // r(x) = d(x, complement); a full level set degenerates to one radius past
    // the diameter, which yields a near-global single ball.
    std::vector<double> whitney(nv);
    if (complement.empty()) {
        const double r = static_cast<double>(diameter_estimate(g) + 1);
        std::fill(whitney.begin(), whitney.end(), r);
    } else {
        const auto dist = multi_source_bfs(g, complement);
        for (int x = 0; x < nv; ++x) whitney[x] = static_cast<double>(dist[x]);
    }

    std::vector<int> order;
    for (int x = 0; x < nv; ++x)
        if (dec.level_set[x]) order.push_back(x);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (whitney[a] != whitney[b]) return whitney[a] > whitney[b];
        return a < b;
    });

    std::vector<char> blocked(nv, 0);
    std::vector<int> selected;
    for (int x : order) {
        const auto half = ball(g, x, whitney[x] / 2.0);
        bool free = true;
        for (int z : half.members)
            if (blocked[z]) { free = false; break; }
        if (!free) continue;
        for (int z : half.members) blocked[z] = 1;
        selected.push_back(x);
    }

    std::vector<int> cover_count(nv, 0);
    for (int x : selected) {
        BadPart part;
        part.center = x;
        part.whitney_radius = whitney[x];
        part.ball = ball(g, x, 2.5 * whitney[x]);
        dec.parts.push_back(std::move(part));
        for (int z : dec.parts.back().ball.members)
            if (dec.level_set[z]) ++cover_count[z];
    }

    dec.good = dec.f;
    for (auto& part : dec.parts) {
        part.b.assign(nv, 0.0);
        double fm = 0.0, chim = 0.0;
        for (int z : part.ball.members) {
            if (!dec.level_set[z]) continue;
            const double chi = 1.0 / cover_count[z];
            fm += dec.f[z] * chi * g.measure(z);
            chim += chi * g.measure(z);
        }
        const double ci = fm / chim;
        for (int z : part.ball.members) {
            if (!dec.level_set[z]) continue;
            const double chi = 1.0 / cover_count[z];
            part.b[z] = chi * (dec.f[z] - ci);
            part.l1 += std::abs(part.b[z]) * g.measure(z);
            dec.good[z] -= part.b[z];
        }
    }

    dec.check = verify_cz(g, dec);
    return dec;
}

struct TailClaimRow {
    int ball_index = 0;
    int center = 0;
    double radius = 0.0;  // Whitney radius r_i
    int t = 0;            // splitting time ceil(rho(r_i))
    double b_l1 = 0.0;
    double tail = 0.0;    // sum over x outside 2B_i of |T(I - P^t) b_i| m
    double ratio = 0.0;   // tail / ||b_i||_1
};

// Tail claim behind the weak (1,1) bound: for t_i = ceil(rho(r_i)) the Riesz
// image of (I - P^{t_i}) b_i carries little mass outside the doubled ball.
// Requires a spectral Riesz backend, so graphs must fit the dense cap.
inline std::vector<TailClaimRow> cz_tail_claim(const MarkovOperator& op,
                                               const FracEngine& engine,
                                               const CZDecomposition& dec,
                                               double m_exp) {
    const WeightedGraph& g = op.graph();
    const int nv = g.vertex_count();
    std::vector<TailClaimRow> rows;
    std::vector<double> h(nv), scratch(nv);
    for (std::size_t i = 0; i < dec.parts.size(); ++i) {
        const auto& part = dec.parts[i];
        TailClaimRow row;
        row.ball_index = static_cast<int>(i);
        row.center = part.center;
        row.radius = part.whitney_radius;
        row.t = static_cast<int>(std::ceil(rho(part.whitney_radius, m_exp)));
        row.b_l1 = part.l1;
        if (part.l1 == 0.0) {
            rows.push_back(row);
            continue;
        }
        h = part.b;
        for (int s = 0; s < row.t; ++s) {
            op.apply(h, scratch);
            h.swap(scratch);
        }
        for (int x = 0; x < nv; ++x) h[x] = part.b[x] - h[x];
        const auto riesz = riesz_apply(engine, h);
        const auto dist = bfs_distances(g, part.center);
        const double cut = 5.0 * part.whitney_radius;  // complement of 2B_i
        for (int x = 0; x < nv; ++x)
            if (dist[x] >= cut) row.tail += riesz[x] * g.measure(x);
        row.ratio = row.tail / row.b_l1;
        rows.push_back(row);
    }
    return rows;
}

} // namespace frlab
