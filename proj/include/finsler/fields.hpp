#pragma once

// Metric data fields of the built-in scenarios.

#include <span>

#include "finsler/metric.hpp"

namespace finsler {

// wind (1/2, 0, (sin^2 x1 + 1)/4) over R^3
struct Fig1Wind {
    template <class S>
    void operator()(std::span<const S> x, std::span<S> out) const
    {
        out[0] = S(0.5);
        out[1] = S(0.0);
        S s = sin(x[0]);
        out[2] = (s * s + 1.0) / 4.0;
    }
};

// rotational wind (-x2/2, x1/2, 0) on the ball of radius 3/2
struct Fig2Wind {
    template <class S>
    void operator()(std::span<const S> x, std::span<S> out) const
    {
        out[0] = -0.5 * x[1];
        out[1] = 0.5 * x[0];
        out[2] = S(0.0);
    }
};

// round-sphere chart metric diag(1, sin^2 x1) in polar coordinates
struct SphereChartH {
    template <class S>
    void operator()(std::span<const S> x, MatT<S>& h) const
    {
        h = MatT<S>(2, 2);
        S s = sin(x[0]);
        h(0, 0) = S(1.0);
        h(1, 1) = s * s;
    }
};

// product of the sphere chart with a line: diag(1, sin^2 x1, 1)
struct SphereProductH {
    template <class S>
    void operator()(std::span<const S> x, MatT<S>& h) const
    {
        h = MatT<S>(3, 3);
        S s = sin(x[0]);
        h(0, 0) = S(1.0);
        h(1, 1) = s * s;
        h(2, 2) = S(1.0);
    }
};

using EuclideanMetric = RiemannianMetric<EuclideanH>;

inline EuclideanMetric make_euclidean(int n) { return EuclideanMetric(n, EuclideanH{}); }

}  // namespace finsler
