#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <lapacke.h>

#include "errors.hpp"
#include "markov.hpp"

namespace frlab {

// Dense eigendecomposition of S = M^{1/2} P M^{-1/2}, which is symmetric by
// reversibility. Eigenfunctions of P orthonormal in L^2(m) are
// phi_j = M^{-1/2} w_j with w_j the eigenvectors of S.
class SpectralDecomposition {
public:
    SpectralDecomposition(const MarkovOperator& op, int dense_cap = 4000) {
        const WeightedGraph& g = op.graph();
        nv_ = g.vertex_count();
        if (nv_ > dense_cap)
            throw resource_error("SpectralDecomposition: " + std::to_string(nv_) +
                                 " vertices exceed the dense cap of " +
                                 std::to_string(dense_cap));
        alpha_ = op.alpha();
        sqrt_m_.resize(nv_);
        inv_sqrt_m_.resize(nv_);
        for (int x = 0; x < nv_; ++x) {
            sqrt_m_[x] = std::sqrt(g.measure(x));
            inv_sqrt_m_[x] = 1.0 / sqrt_m_[x];
        }

        vectors_.assign(static_cast<std::size_t>(nv_) * nv_, 0.0);
        for (int x = 0; x < nv_; ++x) {
            auto row = vectors_.data() + static_cast<std::size_t>(x) * nv_;
            row[x] = alpha_;
            auto nbrs = g.neighbors(x);
            auto wts = g.weights(x);
            for (std::size_t i = 0; i < nbrs.size(); ++i)
                row[nbrs[i]] += (1.0 - alpha_) * wts[i] / g.measure(x) *
                                sqrt_m_[x] * inv_sqrt_m_[nbrs[i]];
        }
        eigenvalues_.resize(nv_);
        const lapack_int info = LAPACKE_dsyevd(LAPACK_ROW_MAJOR, 'V', 'U', nv_,
                                               vectors_.data(), nv_, eigenvalues_.data());
        if (info != 0)
            throw validation_error("SpectralDecomposition: dsyevd failed, info=" +
                                   std::to_string(info));
        const double lo = 2.0 * alpha_ - 1.0 - 1e-8;
        for (double lam : eigenvalues_)
            if (lam < lo || lam > 1.0 + 1e-8)
                throw validation_error("SpectralDecomposition: eigenvalue out of range");
    }

    int size() const { return nv_; }
    const std::vector<double>& eigenvalues() const { return eigenvalues_; }

    // w_j(x); eigenvectors of the symmetrized operator, ascending eigenvalue order.
    double vector_entry(int x, int j) const {
        return vectors_[static_cast<std::size_t>(x) * nv_ + j];
    }

    // phi_j(x) in L^2(m).
    double eigenfunction_entry(int x, int j) const {
        return vector_entry(x, j) * inv_sqrt_m_[x];
    }

    std::vector<double> eigenfunction(int j) const {
        std::vector<double> phi(nv_);
        for (int x = 0; x < nv_; ++x) phi[x] = eigenfunction_entry(x, j);
        return phi;
    }

    // Coefficients of f in the L^2(m)-orthonormal basis: a_j = <f, phi_j>_m.
    std::vector<double> project(std::span<const double> f) const {
        std::vector<double> lifted(nv_);
        for (int x = 0; x < nv_; ++x) lifted[x] = f[x] * sqrt_m_[x];
        std::vector<double> coef(nv_, 0.0);
        for (int x = 0; x < nv_; ++x) {
            const double fx = lifted[x];
            const double* row = vectors_.data() + static_cast<std::size_t>(x) * nv_;
            for (int j = 0; j < nv_; ++j) coef[j] += fx * row[j];
        }
        return coef;
    }

    std::vector<double> synthesize(std::span<const double> coef) const {
        std::vector<double> out(nv_, 0.0);
        for (int x = 0; x < nv_; ++x) {
            const double* row = vectors_.data() + static_cast<std::size_t>(x) * nv_;
            double acc = 0.0;
            for (int j = 0; j < nv_; ++j) acc += row[j] * coef[j];
            out[x] = acc * inv_sqrt_m_[x];
        }
        return out;
    }

    // Applies fn to 1 - lambda on the eigenbasis: result = sum fn(1-lambda_j) a_j phi_j.
    std::vector<double> apply_function(std::span<const double> f,
                                       const std::function<double(double)>& fn) const {
        auto coef = project(f);
        for (int j = 0; j < nv_; ++j) coef[j] *= fn(1.0 - eigenvalues_[j]);
        return synthesize(coef);
    }

    // Max abs entry of S - W diag(lambda) W^T; O(nv^3), intended for tests.
    double reconstruction_residual(const MarkovOperator& op) const {
        double worst = 0.0;
        for (int x = 0; x < nv_; ++x) {
            for (int y = 0; y < nv_; ++y) {
                double acc = 0.0;
                for (int j = 0; j < nv_; ++j)
                    acc += vector_entry(x, j) * eigenvalues_[j] * vector_entry(y, j);
                const double s_xy = op.entry(x, y) * sqrt_m_[x] * inv_sqrt_m_[y];
                worst = std::max(worst, std::abs(acc - s_xy));
            }
        }
        return worst;
    }

    double trace() const {
        double t = 0.0;
        for (double lam : eigenvalues_) t += lam;
        return t;
    }

private:
    int nv_ = 0;
    double alpha_ = 0.0;
    std::vector<double> eigenvalues_;
    std::vector<double> vectors_;  // row-major; column j is the j-th eigenvector
    std::vector<double> sqrt_m_, inv_sqrt_m_;
};

inline SpectralDecomposition spectral_decompose(const MarkovOperator& op, int dense_cap = 4000) {
    return SpectralDecomposition(op, dense_cap);
}

} // namespace frlab
