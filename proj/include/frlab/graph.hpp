#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "fit.hpp"

namespace frlab {

// Immutable symmetric weighted graph in CSR form. m(x) = sum of incident edge
// weights; with unit weights this is the vertex degree. The paper's measure of
// a vertex set is the sum of m over its members.
class WeightedGraph {
public:
    int vertex_count() const { return nv_; }
    std::size_t edge_count() const { return adjacency_.size() / 2; }
    int max_degree() const { return max_degree_; }

    int degree(int x) const { return offsets_[x + 1] - offsets_[x]; }
    double measure(int x) const { return m_[x]; }
    const std::vector<double>& measures() const { return m_; }
    double total_measure() const { return total_measure_; }

    std::span<const int> neighbors(int x) const {
        return {adjacency_.data() + offsets_[x], adjacency_.data() + offsets_[x + 1]};
    }
    std::span<const double> weights(int x) const {
        return {weights_.data() + offsets_[x], weights_.data() + offsets_[x + 1]};
    }

    bool has_coordinates() const { return coord_dim_ > 0; }
    int coordinate_dim() const { return coord_dim_; }
    std::span<const long long> coordinates(int x) const {
        return {coords_.data() + static_cast<std::size_t>(x) * coord_dim_,
                coords_.data() + static_cast<std::size_t>(x + 1) * coord_dim_};
    }

private:
    friend class GraphBuilder;
    int nv_ = 0;
    std::vector<int> offsets_;
    std::vector<int> adjacency_;
    std::vector<double> weights_;
    std::vector<double> m_;
    double total_measure_ = 0.0;
    int max_degree_ = 0;
    int coord_dim_ = 0;
    std::vector<long long> coords_;
};

class GraphBuilder {
public:
    explicit GraphBuilder(int vertex_count) : nv_(vertex_count) {
        if (vertex_count <= 0)
            throw validation_error("GraphBuilder: vertex count must be positive");
    }

    // Undirected edge; adding the same pair twice is fine if the weights agree.
    void add_edge(int u, int v, double w) {
        if (u < 0 || u >= nv_ || v < 0 || v >= nv_)
            throw validation_error("add_edge: vertex id out of range");
        if (u == v)
            throw format_error("add_edge: self loops are not allowed");
        if (!(w > 0.0) || !std::isfinite(w))
            throw format_error("add_edge: edge weight must be positive and finite");
        auto key = std::minmax(u, v);
        auto [it, inserted] = edges_.emplace(key, w);
        if (!inserted && it->second != w)
            throw format_error("add_edge: conflicting weights for duplicate edge " +
                               std::to_string(u) + "-" + std::to_string(v));
    }

    void set_coordinates(int dim, std::vector<long long> flat_coords) {
        if (dim <= 0 || flat_coords.size() != static_cast<std::size_t>(nv_) * dim)
            throw validation_error("set_coordinates: wrong size");
        coord_dim_ = dim;
        coords_ = std::move(flat_coords);
    }

    WeightedGraph build() const {
        WeightedGraph g;
        g.nv_ = nv_;
        g.offsets_.assign(nv_ + 1, 0);
        for (const auto& [key, w] : edges_) {
            ++g.offsets_[key.first + 1];
            ++g.offsets_[key.second + 1];
        }
        for (int x = 0; x < nv_; ++x) g.offsets_[x + 1] += g.offsets_[x];
        g.adjacency_.resize(2 * edges_.size());
        g.weights_.resize(2 * edges_.size());
        std::vector<int> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
        for (const auto& [key, w] : edges_) {
            g.adjacency_[cursor[key.first]] = key.second;
            g.weights_[cursor[key.first]++] = w;
            g.adjacency_[cursor[key.second]] = key.first;
            g.weights_[cursor[key.second]++] = w;
        }
        g.m_.assign(nv_, 0.0);
        for (int x = 0; x < nv_; ++x) {
            for (double w : g.weights(x)) g.m_[x] += w;
            if (!(g.m_[x] > 0.0))
                throw validation_error("build: isolated vertex " + std::to_string(x));
            g.total_measure_ += g.m_[x];
            g.max_degree_ = std::max(g.max_degree_, g.degree(x));
        }
        if (!connected(g))
            throw validation_error("build: graph is not connected");
        g.coord_dim_ = coord_dim_;
        g.coords_ = coords_;
        return g;
    }

private:
    static bool connected(const WeightedGraph& g) {
        std::vector<char> seen(g.vertex_count(), 0);
        std::deque<int> queue{0};
        seen[0] = 1;
        int reached = 1;
        while (!queue.empty()) {
            int x = queue.front();
            queue.pop_front();
            for (int y : g.neighbors(x))
                if (!seen[y]) {
                    seen[y] = 1;
                    ++reached;
                    queue.push_back(y);
                }
        }
        return reached == g.vertex_count();
    }

    int nv_;
    std::map<std::pair<int, int>, double> edges_;
    int coord_dim_ = 0;
    std::vector<long long> coords_;
};

inline std::vector<int> bfs_distances(const WeightedGraph& g, int source) {
    if (source < 0 || source >= g.vertex_count())
        throw validation_error("bfs_distances: invalid source vertex");
    std::vector<int> dist(g.vertex_count(), -1);
    std::deque<int> queue{source};
    dist[source] = 0;
    while (!queue.empty()) {
        int x = queue.front();
        queue.pop_front();
        for (int y : g.neighbors(x))
            if (dist[y] < 0) {
                dist[y] = dist[x] + 1;
                queue.push_back(y);
            }
    }
    return dist;
}

inline std::vector<int> multi_source_bfs(const WeightedGraph& g, std::span<const int> sources) {
    if (sources.empty())
        throw validation_error("multi_source_bfs: empty source set");
    std::vector<int> dist(g.vertex_count(), -1);
    std::deque<int> queue;
    for (int s : sources) {
        if (s < 0 || s >= g.vertex_count())
            throw validation_error("multi_source_bfs: invalid source vertex");
        if (dist[s] == 0) continue;
        dist[s] = 0;
        queue.push_back(s);
    }
    while (!queue.empty()) {
        int x = queue.front();
        queue.pop_front();
        for (int y : g.neighbors(x))
            if (dist[y] < 0) {
                dist[y] = dist[x] + 1;
                queue.push_back(y);
            }
    }
    return dist;
}

inline int eccentricity(const WeightedGraph& g, int x) {
    const auto dist = bfs_distances(g, x);
    return *std::max_element(dist.begin(), dist.end());
}

// Double BFS sweep: exact on trees, a lower bound in general.
inline int diameter_estimate(const WeightedGraph& g) {
    const auto d0 = bfs_distances(g, 0);
    const int far0 = static_cast<int>(std::max_element(d0.begin(), d0.end()) - d0.begin());
    return eccentricity(g, far0);
}

struct Ball {
    int center = 0;
    double radius = 0.0;
    bool closed = false;  // default open: members are {y : d(x,y) < r}
    std::vector<int> members;
    double measure = 0.0;
};

inline Ball ball(const WeightedGraph& g, int x, double radius, bool closed = false) {
    if (x < 0 || x >= g.vertex_count())
        throw validation_error("ball: invalid center vertex");
    Ball b;
    b.center = x;
    b.radius = radius;
    b.closed = closed;
    const auto dist = bfs_distances(g, x);
    for (int y = 0; y < g.vertex_count(); ++y) {
        const double d = static_cast<double>(dist[y]);
        if (closed ? d <= radius : d < radius) {
            b.members.push_back(y);
            b.measure += g.measure(y);
        }
    }
    return b;
}

inline double ball_measure(const WeightedGraph& g, const std::vector<int>& dist, double radius) {
    double v = 0.0;
    for (int y = 0; y < g.vertex_count(); ++y)
        if (dist[y] < radius) v += g.measure(y);
    return v;
}

// Fit of log V(x,r) against log r, volumes averaged over the given centers.
// Radii must span at least a decade and stay within a quarter of the diameter
// so the finite graph does not flatten the growth curve.
inline ScalingFit volume_growth_fit(const WeightedGraph& g, const std::vector<int>& centers,
                                    const std::vector<int>& radii) {
    if (centers.empty())
        throw validation_error("volume_growth_fit: no centers");
    if (radii.size() < 3)
        throw validation_error("volume_growth_fit: needs at least 3 radii");
    const auto [rmin, rmax] = std::minmax_element(radii.begin(), radii.end());
    if (static_cast<double>(*rmax) < 10.0 * static_cast<double>(*rmin))
        throw validation_error("volume_growth_fit: radii must span at least one decade");
    if (*rmax > std::max(1, diameter_estimate(g) / 4))
        throw validation_error("volume_growth_fit: max radius exceeds diameter/4");

    std::vector<double> volumes(radii.size(), 0.0);
    for (int c : centers) {
        const auto dist = bfs_distances(g, c);
        for (std::size_t i = 0; i < radii.size(); ++i)
            volumes[i] += ball_measure(g, dist, radii[i]);
    }
    std::vector<double> xs;
    for (int r : radii) xs.push_back(static_cast<double>(r));
    for (double& v : volumes) v /= static_cast<double>(centers.size());
    return loglog_fit(xs, volumes);
}

// Text format: one edge per line "u v w", '#' starts a comment.
inline WeightedGraph load_edge_list(std::istream& in) {
    struct Entry { int u, v; double w; };
    std::vector<Entry> entries;
    int max_id = -1;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        int u, v;
        double w;
        if (!(ls >> u)) continue;  // blank or comment-only line
        if (!(ls >> v >> w))
            throw format_error("edge list line " + std::to_string(line_no) +
                               ": expected \"u v w\"");
        std::string rest;
        if (ls >> rest)
            throw format_error("edge list line " + std::to_string(line_no) +
                               ": trailing tokens");
        if (u < 0 || v < 0)
            throw format_error("edge list line " + std::to_string(line_no) +
                               ": negative vertex id");
        if (!(w > 0.0))
            throw format_error("edge list line " + std::to_string(line_no) +
                               ": weight must be positive");
        entries.push_back({u, v, w});
        max_id = std::max({max_id, u, v});
    }
    if (entries.empty())
        throw format_error("edge list: no edges");
    GraphBuilder builder(max_id + 1);
    for (const auto& e : entries) builder.add_edge(e.u, e.v, e.w);
    return builder.build();  // connectivity enforced here
}

inline void save_edge_list(const WeightedGraph& g, std::ostream& out) {
    out << "# " << g.vertex_count() << " vertices, " << g.edge_count() << " edges\n";
    char buf[64];
    for (int u = 0; u < g.vertex_count(); ++u) {
        auto nbrs = g.neighbors(u);
        auto wts = g.weights(u);
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            if (u < nbrs[i]) {
                std::snprintf(buf, sizeof buf, "%.17g", wts[i]);
                out << u << ' ' << nbrs[i] << ' ' << buf << '\n';
            }
        }
    }
}

inline void save_coordinates(const WeightedGraph& g, std::ostream& out) {
    if (!g.has_coordinates())
        throw validation_error("save_coordinates: graph has no coordinates");
    for (int v = 0; v < g.vertex_count(); ++v) {
        out << v;
        for (long long c : g.coordinates(v)) out << ' ' << c;
        out << '\n';
    }
}

} // namespace frlab
