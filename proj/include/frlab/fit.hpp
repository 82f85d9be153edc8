#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"

namespace frlab {

struct ScalingFit {
    double exponent = 0.0;      // slope of log y vs log x
    double log_constant = 0.0;  // intercept
    double r_squared = 0.0;
    double exponent_stderr = 0.0;
    double x_min = 0.0;
    double x_max = 0.0;
    std::size_t points = 0;

    // Two-sided interval at roughly 95% coverage.
    double ci_low() const { return exponent - 2.0 * exponent_stderr; }
    double ci_high() const { return exponent + 2.0 * exponent_stderr; }
};

// Least squares on (log x, log y). Requires >= 3 strictly positive points;
// with exactly 3 points the residual-based standard error is still defined
// (one degree of freedom).
inline ScalingFit loglog_fit(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw validation_error("loglog_fit: mismatched lengths");
    if (xs.size() < 3)
        throw validation_error("loglog_fit: needs at least 3 points");

    const std::size_t n = xs.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0) || !std::isfinite(xs[i]) || !std::isfinite(ys[i]))
            throw validation_error("loglog_fit: inputs must be finite and positive");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) { mx += lx[i]; my += ly[i]; }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = lx[i] - mx;
        const double dy = ly[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0.0)
        throw validation_error("loglog_fit: abscissae are all equal");

    ScalingFit fit;
    fit.exponent = sxy / sxx;
    fit.log_constant = my - fit.exponent * mx;
    fit.points = n;
    fit.x_min = *std::min_element(xs.begin(), xs.end());
    fit.x_max = *std::max_element(xs.begin(), xs.end());

    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pred = fit.log_constant + fit.exponent * lx[i];
        const double r = ly[i] - pred;
        ss_res += r * r;
    }
    fit.r_squared = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
    fit.exponent_stderr = std::sqrt(ss_res / (static_cast<double>(n) - 2.0) / sxx);
    if (!std::isfinite(fit.exponent))
        throw validation_error("loglog_fit: non-finite slope");
    return fit;
}

inline ScalingFit loglog_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    return loglog_fit(std::span<const double>(xs), std::span<const double>(ys));
}

} // namespace frlab
