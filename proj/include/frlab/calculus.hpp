#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "markov.hpp"
#include "spectral.hpp"

namespace frlab {

// Pointwise gradient length with the lazy kernel:
// grad f(x) = sqrt(1/2 sum_y p(x,y) |f(y)-f(x)|^2). The self term vanishes,
// so laziness only scales the result by sqrt(1-alpha).
inline std::vector<double> gradient_length(const MarkovOperator& op,
                                           std::span<const double> f) {
    const WeightedGraph& g = op.graph();
    const int nv = g.vertex_count();
    std::vector<double> out(nv);
    const double off = 1.0 - op.alpha();
    for (int x = 0; x < nv; ++x) {
        double acc = 0.0;
        auto nbrs = g.neighbors(x);
        auto wts = g.weights(x);
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            const double d = f[nbrs[i]] - f[x];
            acc += wts[i] * d * d;
        }
        out[x] = std::sqrt(0.5 * off * acc / g.measure(x));
    }
    return out;
}

// Delta f = (I - P) f.
inline std::vector<double> laplacian(const MarkovOperator& op, std::span<const double> f) {
    std::vector<double> out(f.size());
    op.apply(f, out);
    for (std::size_t x = 0; x < f.size(); ++x) out[x] = f[x] - out[x];
    return out;
}

inline double inner_m(const WeightedGraph& g, std::span<const double> f,
                      std::span<const double> h) {
    double s = 0.0;
    for (int x = 0; x < g.vertex_count(); ++x) s += f[x] * h[x] * g.measure(x);
    return s;
}

inline double lp_norm(const WeightedGraph& g, std::span<const double> f, double p) {
    if (std::isinf(p)) {
        double mx = 0.0;
        for (double v : f) mx = std::max(mx, std::abs(v));
        return mx;
    }
    if (!(p >= 1.0))
        throw validation_error("lp_norm: p must be >= 1");
    double s = 0.0;
    for (int x = 0; x < g.vertex_count(); ++x)
        s += std::pow(std::abs(f[x]), p) * g.measure(x);
    return std::pow(s, 1.0 / p);
}

inline double mean_m(const WeightedGraph& g, std::span<const double> f) {
    double s = 0.0;
    for (int x = 0; x < g.vertex_count(); ++x) s += f[x] * g.measure(x);
    return s / g.total_measure();
}

inline std::vector<double> centered(const WeightedGraph& g, std::span<const double> f) {
    const double mu = mean_m(g, f);
    std::vector<double> out(f.begin(), f.end());
    for (double& v : out) v -= mu;
    return out;
}

// c_k = (-1)^k binom(beta, k), so that (1-s)^beta = sum c_k s^k. c_0 = 1 and
// c_k < 0 for k >= 1 when beta in (0,1); for beta = -1/2 all c_k > 0.
inline std::vector<double> binomial_coeffs(double beta, int K) {
    if (K < 0)
        throw validation_error("binomial_coeffs: negative truncation");
    std::vector<double> c(K + 1);
    c[0] = 1.0;
    for (int k = 0; k < K; ++k)
        c[k + 1] = c[k] * (static_cast<double>(k) - beta) / (static_cast<double>(k) + 1.0);
    return c;
}

enum class FracBackend { spectral, series };

inline const char* backend_name(FracBackend b) {
    return b == FracBackend::spectral ? "spectral" : "series";
}

struct FracResult {
    std::vector<double> value;
    FracBackend backend = FracBackend::spectral;
    double removed_component_norm = 0.0;  // L^2(m) norm of the projected-out kernel part
    int series_K = 0;
    double series_tail = 0.0;  // scalar truncation bound at the restricted spectral radius
};

// Largest |eigenvalue| of P on the mean-zero subspace; used for the series
// tail bound. Power iteration with deflation of the constant eigenvector.
inline double restricted_spectral_radius(const MarkovOperator& op, int iterations = 200) {
    const WeightedGraph& g = op.graph();
    const int nv = g.vertex_count();
    std::vector<double> v(nv), w(nv);
    for (int x = 0; x < nv; ++x)
        v[x] = static_cast<double>((static_cast<unsigned>(x) * 2654435761u) % 1000) / 1000.0 - 0.5;
    double rho = 0.0;
    for (int it = 0; it < iterations; ++it) {
        const double mu = mean_m(g, v);
        for (double& e : v) e -= mu;
        const double norm = std::sqrt(inner_m(g, v, v));
        if (norm == 0.0) return 0.0;
        for (double& e : v) e /= norm;
        op.apply(v, w);
        rho = std::sqrt(inner_m(g, w, w));
        v.swap(w);
    }
    return std::min(rho, 1.0 - 1e-12);
}

// Fractional powers of Delta = I - P through either backend. The finite graph
// has the constant eigenfunction at lambda = 1; the convention is 0^beta = 0
// for beta > 0 and a pseudo-inverse (zero on the kernel) for beta = -1/2, so
// beta = -1/2 requires mean-zero input. With project=false a non-mean-zero
// input is a domain error rather than a silent projection.
class FracEngine {
public:
    static FracEngine spectral(const MarkovOperator& op, const SpectralDecomposition& dec) {
        FracEngine e(op);
        e.dec_ = &dec;
        return e;
    }

    // K = 0 picks the truncation automatically from the tail bound.
    static FracEngine series(const MarkovOperator& op, int K = 0, double tail_tol = 1e-6) {
        FracEngine e(op);
        e.series_K_ = K;
        e.tail_tol_ = tail_tol;
        e.s_max_ = restricted_spectral_radius(op);
        return e;
    }

    bool is_spectral() const { return dec_ != nullptr; }
    const MarkovOperator& op() const { return *op_; }
    FracBackend backend() const {
        return dec_ ? FracBackend::spectral : FracBackend::series;
    }

    FracResult apply(std::span<const double> f, double beta, bool project = true) const {
        const bool inverse = beta == -0.5;
        if (!inverse && !(beta > 0.0 && beta <= 1.0))
            throw validation_error("frac_power: beta must lie in (0,1] or equal -1/2");
        FracResult res;
        std::vector<double> input(f.begin(), f.end());
        if (inverse) {
            const WeightedGraph& g = op_->graph();
            const double mu = mean_m(g, input);
            const double removed = std::abs(mu) * std::sqrt(g.total_measure());
            if (removed > 1e-12 * (1.0 + lp_norm(g, input, 2.0)) && !project)
                throw domain_error("frac_power: beta=-1/2 needs mean-zero input "
                                   "(projection disabled)");
            for (double& v : input) v -= mu;
            res.removed_component_norm = removed;
        }
        if (dec_) {
            res.backend = FracBackend::spectral;
            res.value = dec_->apply_function(input, [&](double s) {
                if (s <= kKernelTol) return 0.0;
                return inverse ? 1.0 / std::sqrt(s) : std::pow(s, beta);
            });
        } else {
            res.backend = FracBackend::series;
            if (!inverse) {
                // Delta^beta kills constants; removing the mean up front keeps
                // the truncated series from carrying a spurious constant part.
                const double mu = mean_m(op_->graph(), input);
                for (double& v : input) v -= mu;
            }
            apply_series(input, beta, res);
        }
        return res;
    }

private:
    explicit FracEngine(const MarkovOperator& op) : op_(&op) {}

    static constexpr double kKernelTol = 1e-12;
    static constexpr int kMaxAutoK = 200000;

    void apply_series(std::span<const double> f, double beta, FracResult& res) const {
        const bool inverse = beta == -0.5;
        int K = series_K_;
        if (K <= 0) K = auto_truncation(beta, s_max_, tail_tol_);
        const auto coeffs = binomial_coeffs(beta, K);

        std::vector<double> power(f.begin(), f.end());
        std::vector<double> acc(f.size());
        std::vector<double> scratch(f.size());
        for (std::size_t x = 0; x < f.size(); ++x) acc[x] = coeffs[0] * power[x];
        for (int k = 1; k <= K; ++k) {
            op_->apply(power, scratch);
            power.swap(scratch);
            const double c = coeffs[k];
            for (std::size_t x = 0; x < f.size(); ++x) acc[x] += c * power[x];
        }
        res.value = std::move(acc);
        res.series_K = K;
        res.series_tail = tail_bound(coeffs, s_max_, inverse);
    }

    // For beta > 0 the coefficients past k=0 share a sign and the partial sums
    // telescope to zero at s=1, so the remainder at s <= 1 is bounded by
    // |sum_{k<=K} c_k| * s^{K+1}. For beta = -1/2 compare with the geometric
    // series: remainder <= c_K s^{K+1}/(1-s).
    static double tail_bound(const std::vector<double>& coeffs, double s_max, bool inverse) {
        const int K = static_cast<int>(coeffs.size()) - 1;
        if (inverse)
            return coeffs[K] * std::pow(s_max, K + 1) / (1.0 - s_max);
        double partial = 0.0;
        for (double c : coeffs) partial += c;
        return std::abs(partial) * std::pow(s_max, K + 1);
    }

    static int auto_truncation(double beta, double s_max, double tol) {
        const bool inverse = beta == -0.5;
        double c = 1.0, partial = 1.0;
        for (int k = 0; k < kMaxAutoK; ++k) {
            c *= (static_cast<double>(k) - beta) / (static_cast<double>(k) + 1.0);
            partial += c;
            const double bound = inverse
                ? std::abs(c) * std::pow(s_max, k + 2) / (1.0 - s_max)
                : std::abs(partial) * std::pow(s_max, k + 2);
            if (bound < tol) return k + 1;
        }
        return kMaxAutoK;
    }

    const MarkovOperator* op_;
    const SpectralDecomposition* dec_ = nullptr;
    int series_K_ = 0;
    double tail_tol_ = 1e-6;
    double s_max_ = 0.0;
};

// Riesz transform grad Delta^{-1/2}. The mean component is projected out and
// reported through FracResult by frac_power; this wrapper returns the values.
inline std::vector<double> riesz_apply(const FracEngine& engine, std::span<const double> f) {
    const FracResult inv = engine.apply(f, -0.5);
    return gradient_length(engine.op(), inv.value);
}

struct RatioReport {
    double p = 2.0;
    double beta = 0.5;
    double grad_norm = 0.0;      // || grad f ||_p
    double frac_norm = 0.0;      // || Delta^beta f ||_p
    double forward_ratio = 0.0;  // grad / frac  (R_p)
    double reverse_ratio = 0.0;  // frac / grad  (RR_p)
    FracBackend backend = FracBackend::spectral;
    double series_tail = 0.0;
};

inline RatioReport ratio_report(const FracEngine& engine, std::span<const double> f,
                                double p, double beta) {
    const MarkovOperator& op = engine.op();
    const WeightedGraph& g = op.graph();
    RatioReport r;
    r.p = p;
    r.beta = beta;
    const auto grad = gradient_length(op, f);
    r.grad_norm = lp_norm(g, grad, p);
    const FracResult frac = engine.apply(f, beta);
    r.frac_norm = lp_norm(g, frac.value, p);
    r.backend = frac.backend;
    r.series_tail = frac.series_tail;
    if (r.frac_norm > 0.0) r.forward_ratio = r.grad_norm / r.frac_norm;
    if (r.grad_norm > 0.0) r.reverse_ratio = r.frac_norm / r.grad_norm;
    return r;
}

inline std::vector<RatioReport> ratio_table(const FracEngine& engine,
                                            const std::vector<std::vector<double>>& family,
                                            double p, double beta) {
    std::vector<RatioReport> out;
    out.reserve(family.size());
    for (const auto& f : family) out.push_back(ratio_report(engine, f, p, beta));
    return out;
}

} // namespace frlab
