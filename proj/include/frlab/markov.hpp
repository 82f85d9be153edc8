#pragma once

#include <cmath>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"

namespace frlab {

// Lazy reversible walk p(x,y) = alpha*1{x=y} + (1-alpha)*mu_xy/m(x).
// Reversible w.r.t. m: p(x,y)m(x) = p(y,x)m(y). With alpha >= 1/2 the
// spectrum lies in [0,1]; alpha > 0 gives the uniform lower bound (LB).
class MarkovOperator {
public:
    MarkovOperator(const WeightedGraph& g, double alpha) : g_(&g), alpha_(alpha) {
        if (!(alpha >= 0.0) || alpha >= 1.0)
            throw validation_error("MarkovOperator: alpha must lie in [0,1)");
        if (alpha == 0.0 && bipartite(g))
            lb_warning_ = "LB violated: alpha=0 on a bipartite graph, spectrum may reach -1";
    }

    const WeightedGraph& graph() const { return *g_; }
    double alpha() const { return alpha_; }
    bool lb_violated() const { return !lb_warning_.empty(); }
    const std::string& lb_warning() const { return lb_warning_; }

    double entry(int x, int y) const {
        double p = (x == y) ? alpha_ : 0.0;
        auto nbrs = g_->neighbors(x);
        auto wts = g_->weights(x);
        for (std::size_t i = 0; i < nbrs.size(); ++i)
            if (nbrs[i] == y) p += (1.0 - alpha_) * wts[i] / g_->measure(x);
        return p;
    }

    // out = P in, (P f)(x) = sum_y p(x,y) f(y). Aliasing in == out is not allowed.
    void apply(std::span<const double> in, std::span<double> out) const {
        const int nv = g_->vertex_count();
        for (int x = 0; x < nv; ++x) {
            double acc = 0.0;
            auto nbrs = g_->neighbors(x);
            auto wts = g_->weights(x);
            for (std::size_t i = 0; i < nbrs.size(); ++i) acc += wts[i] * in[nbrs[i]];
            out[x] = alpha_ * in[x] + (1.0 - alpha_) * acc / g_->measure(x);
        }
    }

    std::vector<double> apply(const std::vector<double>& in) const {
        std::vector<double> out(in.size());
        apply(std::span<const double>(in), std::span<double>(out));
        return out;
    }

private:
    static bool bipartite(const WeightedGraph& g) {
        std::vector<int> color(g.vertex_count(), -1);
        std::deque<int> queue{0};
        color[0] = 0;
        while (!queue.empty()) {
            int x = queue.front();
            queue.pop_front();
            for (int y : g.neighbors(x)) {
                if (color[y] < 0) {
                    color[y] = 1 - color[x];
                    queue.push_back(y);
                } else if (color[y] == color[x]) {
                    return false;
                }
            }
        }
        return true;
    }

    const WeightedGraph* g_;
    double alpha_;
    std::string lb_warning_;
};

inline MarkovOperator make_walk(const WeightedGraph& g, double alpha) {
    return MarkovOperator(g, alpha);
}

struct KernelColumn {
    int y = 0;
    int k = 0;
    std::vector<double> values;  // p_k(., y)
};

// Streams p_k(., y) for k = 0, 1, 2, ... by repeated sparse application;
// holds two working vectors and no history.
class KernelWalk {
public:
    KernelWalk(const MarkovOperator& op, int y) : op_(&op), y_(y), k_(0) {
        const int nv = op.graph().vertex_count();
        if (y < 0 || y >= nv)
            throw validation_error("KernelWalk: invalid base vertex");
        current_.assign(nv, 0.0);
        current_[y] = 1.0;
        scratch_.assign(nv, 0.0);
    }

    int k() const { return k_; }
    int base_vertex() const { return y_; }
    const std::vector<double>& values() const { return current_; }

    void advance(int steps = 1) {
        for (int s = 0; s < steps; ++s) {
            op_->apply(current_, scratch_);
            current_.swap(scratch_);
            ++k_;
        }
    }

    void advance_to(int k) {
        if (k < k_)
            throw validation_error("KernelWalk: cannot step backwards");
        advance(k - k_);
    }

private:
    const MarkovOperator* op_;
    int y_;
    int k_;
    std::vector<double> current_;
    std::vector<double> scratch_;
};

// Columns for the requested steps only; ks must be nondecreasing.
inline std::vector<KernelColumn> kernel_columns(const MarkovOperator& op, int y,
                                                std::span<const int> ks) {
    KernelWalk walk(op, y);
    std::vector<KernelColumn> out;
    for (int k : ks) {
        walk.advance_to(k);
        out.push_back({y, k, walk.values()});
    }
    return out;
}

// Sum_x p_k(x,y) m(x); equals m(y) by reversibility and stochasticity.
inline double column_mass(const WeightedGraph& g, const std::vector<double>& column) {
    double s = 0.0;
    for (int x = 0; x < g.vertex_count(); ++x) s += column[x] * g.measure(x);
    return s;
}

} // namespace frlab
