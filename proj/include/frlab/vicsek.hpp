#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"

namespace frlab {

// Level-n Vicsek graph in the integer embedding: a level-k block spans a cube
// of side 2*3^k, its center sits at the odd lattice point in the middle, and
// every edge is a diagonal step (+-1, ..., +-1). The level-n graph is one
// central level-(n-1) block plus 2^N corner blocks, glued by merging the
// shared corner vertices (exact integer coordinates, so dedup is equality).
struct VicsekGraph {
    WeightedGraph graph;
    int N = 0;
    int level = 0;
    int z0 = 0;                      // global center
    std::vector<int> corners;       // z_i, indexed by the corner bitmask
    // Main-diagonal bookkeeping: diagonal_index[v] in [0, 2^N) if v lies on
    // the straight line from corner z_i to z0 (-1 otherwise; z0 itself gets
    // index 0), and diagonal_dist[v] = d(z_i, v) along that line.
    std::vector<int> diagonal_index;
    std::vector<int> diagonal_dist;
    std::vector<char> central_block;  // lies in the middle-third cube

    double growth_exponent() const {
        return std::log(1.0 + std::pow(2.0, N)) / std::log(3.0);
    }
    long long vertex_count_formula() const {
        long long c = 1;
        for (int i = 0; i < level; ++i) c *= (1LL << N) + 1;
        return (1LL << N) * c + 1;
    }
};

namespace detail {

inline void emit_vicsek_block(int N, int k, std::vector<long long>& anchor,
                              std::map<std::vector<long long>, int>& vertex_ids,
                              std::vector<std::pair<int, int>>& edges) {
    const auto intern = [&](const std::vector<long long>& coords) {
        auto [it, inserted] = vertex_ids.emplace(coords, static_cast<int>(vertex_ids.size()));
        return it->second;
    };
    if (k == 0) {
        // Star: center at anchor + (1,...,1), corners at anchor + 2*mask.
        std::vector<long long> center(anchor);
        for (auto& c : center) ++c;
        const int cid = intern(center);
        std::vector<long long> corner(N);
        for (int mask = 0; mask < (1 << N); ++mask) {
            for (int j = 0; j < N; ++j)
                corner[j] = anchor[j] + ((mask >> j) & 1 ? 2 : 0);
            edges.emplace_back(cid, intern(corner));
        }
        return;
    }
    long long sub = 2;
    for (int i = 1; i < k; ++i) sub *= 3;  // side of a level-(k-1) block
    // Central copy in the middle third.
    for (int j = 0; j < N; ++j) anchor[j] += sub;
    emit_vicsek_block(N, k - 1, anchor, vertex_ids, edges);
    for (int j = 0; j < N; ++j) anchor[j] -= sub;
    // Corner copies; each shares its inner corner with the central copy.
    for (int mask = 0; mask < (1 << N); ++mask) {
        for (int j = 0; j < N; ++j) anchor[j] += ((mask >> j) & 1) ? 2 * sub : 0;
        emit_vicsek_block(N, k - 1, anchor, vertex_ids, edges);
        for (int j = 0; j < N; ++j) anchor[j] -= ((mask >> j) & 1) ? 2 * sub : 0;
    }
}

} // namespace detail

inline VicsekGraph build_vicsek(int N, int n, long long vertex_budget = 2'000'000) {
    if (N < 1)
        throw validation_error("build_vicsek: N must be >= 1");
    if (n < 0)
        throw validation_error("build_vicsek: level must be >= 0");
    {
        long long v = 1;
        for (int i = 0; i < n; ++i) {
            v *= (1LL << N) + 1;
            if (v > vertex_budget) break;
        }
        v = (1LL << N) * v + 1;
        if (v > vertex_budget)
            throw resource_error("build_vicsek: level " + std::to_string(n) + " with N=" +
                                 std::to_string(N) + " needs " + std::to_string(v) +
                                 " vertices, over the budget of " +
                                 std::to_string(vertex_budget));
    }

    std::map<std::vector<long long>, int> vertex_ids;
    std::vector<std::pair<int, int>> edges;
    std::vector<long long> anchor(N, 0);
    detail::emit_vicsek_block(N, n, anchor, vertex_ids, edges);

    // Re-index so ids follow lexicographic coordinate order; the recursion
    // order above depends on the gluing sequence, this does not.
    std::vector<int> remap(vertex_ids.size());
    {
        int next = 0;
        for (auto& [coords, id] : vertex_ids) remap[id] = next++;
    }
    const int nv = static_cast<int>(vertex_ids.size());
    std::vector<long long> flat(static_cast<std::size_t>(nv) * N);
    for (const auto& [coords, id] : vertex_ids)
        for (int j = 0; j < N; ++j)
            flat[static_cast<std::size_t>(remap[id]) * N + j] = coords[j];

    GraphBuilder builder(nv);
    for (auto [u, v] : edges) builder.add_edge(remap[u], remap[v], 1.0);
    builder.set_coordinates(N, std::move(flat));

    VicsekGraph vg;
    vg.graph = builder.build();
    vg.N = N;
    vg.level = n;

    long long side = 2;
    for (int i = 0; i < n; ++i) side *= 3;  // 2*3^n
    const long long half = side / 2;        // 3^n
    const auto id_of = [&](const std::vector<long long>& coords) {
        auto it = vertex_ids.find(coords);
        if (it == vertex_ids.end())
            throw validation_error("build_vicsek: internal lookup failure");
        return remap[it->second];
    };
    vg.z0 = id_of(std::vector<long long>(N, half));
    std::vector<long long> coords(N);
    for (int mask = 0; mask < (1 << N); ++mask) {
        for (int j = 0; j < N; ++j) coords[j] = ((mask >> j) & 1) ? side : 0;
        vg.corners.push_back(id_of(coords));
    }

    vg.diagonal_index.assign(nv, -1);
    vg.diagonal_dist.assign(nv, 0);
    for (int mask = 0; mask < (1 << N); ++mask) {
        for (long long t = 0; t <= half; ++t) {
            for (int j = 0; j < N; ++j) {
                const long long corner = ((mask >> j) & 1) ? side : 0;
                coords[j] = corner + (((mask >> j) & 1) ? -t : t);
            }
            const int v = id_of(coords);
            if (vg.diagonal_index[v] < 0) {
                vg.diagonal_index[v] = mask;
                vg.diagonal_dist[v] = static_cast<int>(t);
            }
        }
    }

    vg.central_block.assign(nv, 0);
    if (n >= 1) {
        const long long lo = side / 3, hi = 2 * side / 3;
        for (int v = 0; v < nv; ++v) {
            bool inside = true;
            for (long long c : vg.graph.coordinates(v))
                if (c < lo || c > hi) { inside = false; break; }
            vg.central_block[v] = inside ? 1 : 0;
        }
    } else {
        vg.central_block.assign(nv, 1);
    }
    return vg;
}

} // namespace frlab
