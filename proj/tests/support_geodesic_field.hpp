#pragma once

// Test-only oracle metric: the Riemannian metric ghat = g_{V(x)} induced by a
// geodesic field V, here the basic horizontal field lifting a fixed base
// vector of a submersion.  Along integral curves of V, geodesics and Jacobi
// operators of ghat must reproduce the Finsler ones, which gives a classical
// Riemannian route to cross-check the spray-curvature pipeline.

#include "finsler/submersion.hpp"

namespace finsler {

class GeodesicFieldMetric final : public MetricImpl<GeodesicFieldMetric> {
 public:
    GeodesicFieldMetric(const FinslerMetric& inner, const ChartMap& pi, Vec w_base)
        : inner_(inner), pi_(pi), w_(std::move(w_base)) {}

    int dim() const override { return inner_.dim(); }
    MetricKind kind() const override { return MetricKind::custom; }

    // the field itself (double precision)
    Vec field(const Vec& x) const
    {
        std::span<const double> xs(x.data(), x.size());
        std::vector<double> lift = horizontal_lift_t<double>(
            inner_, pi_, xs, {w_.data(), static_cast<size_t>(w_.size())}, seed_at(xs));
        return to_vec(lift);
    }

    // The lift solve and the Hessian each add two dual levels on top of S,
    // so only depths the inner interface can absorb are instantiated; the
    // curvature pipeline never asks beyond D4 here.
    template <class S>
    S f2_impl(std::span<const S> x, std::span<const S> v) const
    {
        if constexpr (dual_depth<S>::value > 4) {
            (void)x;
            (void)v;
            throw std::logic_error("GeodesicFieldMetric: dual depth above 4 unsupported");
        } else {
            const int n = inner_.dim();
            std::vector<double> xr(n);
            for (int i = 0; i < n; ++i) xr[i] = real_of(x[i]);
            std::vector<S> V = horizontal_lift_t<S>(
                inner_, pi_, x, {w_.data(), static_cast<size_t>(w_.size())}, seed_at(xr));
            MatT<S> g = f2_half_hessian_t<S>(inner_, x, std::span<const S>(V));
            S acc(0.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) acc = acc + g(i, j) * v[i] * v[j];
            return acc;
        }
    }

 private:
    std::vector<double> seed_at(std::span<const double> x) const
    {
        Mat J = map_jacobian(pi_, x);
        Vec seed = J.completeOrthogonalDecomposition().solve(w_);
        return to_std(seed);
    }

    const FinslerMetric& inner_;
    const ChartMap& pi_;
    Vec w_;
};

}  // namespace finsler
