#pragma once

// Finsler metrics as chart-local norm fields.  Concrete metrics implement a
// single templated F^2(x, v); the virtual interface exposes it at every dual
// depth the tensor pipeline needs (third v-derivatives nested under spray
// curvature reach depth six in the deepest cross-check).

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "finsler/dual.hpp"
#include "finsler/errors.hpp"
#include "finsler/expr.hpp"
#include "finsler/smallsolve.hpp"

namespace finsler {

enum class MetricKind { riemannian, randers, custom };

class FinslerMetric {
 public:
    virtual ~FinslerMetric() = default;
    virtual int dim() const = 0;
    virtual MetricKind kind() const = 0;

#define FINSLER_F2_DECL(S) \
    virtual S f2(std::span<const S> x, std::span<const S> v) const = 0;
    FINSLER_F2_DECL(double)
    FINSLER_F2_DECL(D1)
    FINSLER_F2_DECL(D2)
    FINSLER_F2_DECL(D3)
    FINSLER_F2_DECL(D4)
    FINSLER_F2_DECL(D5)
    FINSLER_F2_DECL(D6)
#undef FINSLER_F2_DECL
};

template <class Derived>
class MetricImpl : public FinslerMetric {
 public:
#define FINSLER_F2_OVERRIDE(S) \
    S f2(std::span<const S> x, std::span<const S> v) const override \
    { return static_cast<const Derived*>(this)->template f2_impl<S>(x, v); }
    FINSLER_F2_OVERRIDE(double)
    FINSLER_F2_OVERRIDE(D1)
    FINSLER_F2_OVERRIDE(D2)
    FINSLER_F2_OVERRIDE(D3)
    FINSLER_F2_OVERRIDE(D4)
    FINSLER_F2_OVERRIDE(D5)
    FINSLER_F2_OVERRIDE(D6)
#undef FINSLER_F2_OVERRIDE
};

// ------------------------------------------------------------------
// Field functors over chart coordinates.

struct EuclideanH {
    template <class S>
    void operator()(std::span<const S> x, MatT<S>& h) const
    {
        const int n = static_cast<int>(x.size());
        h = MatT<S>(n, n);
        for (int i = 0; i < n; ++i) h(i, i) = S(1.0);
    }
};

struct ConstW {
    std::vector<double> w;
    template <class S>
    void operator()(std::span<const S>, std::span<S> out) const
    {
        for (size_t i = 0; i < w.size(); ++i) out[i] = S(w[i]);
    }
};

struct ExprW {
    std::vector<Expr> comps;
    template <class S>
    void operator()(std::span<const S> x, std::span<S> out) const
    {
        for (size_t i = 0; i < comps.size(); ++i) out[i] = comps[i].eval(x);
    }
};

struct ExprH {
    // full symmetric matrix of expressions
    int n = 0;
    std::vector<Expr> entries;  // row-major n*n
    template <class S>
    void operator()(std::span<const S> x, MatT<S>& h) const
    {
        h = MatT<S>(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                h(i, j) = entries[static_cast<size_t>(i) * n + j].eval(x);
    }
};

// ------------------------------------------------------------------
// Riemannian metric: F^2 = v^T h(x) v.

template <class HField>
class RiemannianMetric final : public MetricImpl<RiemannianMetric<HField>> {
 public:
    RiemannianMetric(int n, HField h) : n_(n), h_(std::move(h)) {}
    int dim() const override { return n_; }
    MetricKind kind() const override { return MetricKind::riemannian; }

    template <class S>
    S f2_impl(std::span<const S> x, std::span<const S> v) const
    {
        MatT<S> h;
        h_(x, h);
        S acc(0.0);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                acc = acc + h(i, j) * v[i] * v[j];
        return acc;
    }

 private:
    int n_;
    HField h_;
};

// ------------------------------------------------------------------
// Randers metric from Zermelo data (h, W), h(W, W) < 1.  F solves
// h(v/F - W, v/F - W) = 1; the positive root of the induced quadratic is
//   F = (-h(v,W) + sqrt(h(v,W)^2 + a h(v,v))) / a,   a = 1 - h(W,W),
// computed in the cancellation-free form q/(b + sqrt(b^2 + a q)) when
// h(v,W) > 0.

template <class HField, class WField>
class RandersMetric final : public MetricImpl<RandersMetric<HField, WField>> {
 public:
    RandersMetric(int n, HField h, WField w, bool enforce_wind = true)
        : n_(n), h_(std::move(h)), w_(std::move(w)), enforce_wind_(enforce_wind) {}

    int dim() const override { return n_; }
    MetricKind kind() const override { return MetricKind::randers; }

    template <class S>
    S f2_impl(std::span<const S> x, std::span<const S> v) const
    {
        MatT<S> h;
        h_(x, h);
        std::vector<S> w(n_);
        w_(x, std::span<S>(w));

        S b(0.0), q(0.0), ww(0.0);
        for (int i = 0; i < n_; ++i) {
            for (int j = 0; j < n_; ++j) {
                b = b + h(i, j) * v[i] * w[j];
                q = q + h(i, j) * v[i] * v[j];
                ww = ww + h(i, j) * w[i] * w[j];
            }
        }
        S alpha = 1.0 - ww;
        if (enforce_wind_ && real_of(alpha) <= 1e-9)
            throw WindTooStrong("randers: h(W,W) >= 1 - 1e-9 at evaluation point");
        S s = sqrt(b * b + alpha * q);
        S f = real_of(b) > 0.0 ? q / (b + s) : (s - b) / alpha;
        return f * f;
    }

 private:
    int n_;
    HField h_;
    WField w_;
    bool enforce_wind_;
};

// ------------------------------------------------------------------
// Reverse metric \tilde F(x, v) = F(x, -v); backward distances are forward
// distances of the reverse metric.

class ReverseMetric final : public MetricImpl<ReverseMetric> {
 public:
    explicit ReverseMetric(const FinslerMetric& inner) : inner_(inner) {}
    int dim() const override { return inner_.dim(); }
    MetricKind kind() const override { return inner_.kind(); }

    template <class S>
    S f2_impl(std::span<const S> x, std::span<const S> v) const
    {
        std::vector<S> nv(v.size());
        for (size_t i = 0; i < v.size(); ++i) nv[i] = -v[i];
        return inner_.f2(x, std::span<const S>(nv));
    }

 private:
    const FinslerMetric& inner_;
};

// Overload-resolving helper so templated code can write eval_f2<S>(m, x, v).
template <class S>
S eval_f2(const FinslerMetric& m, std::span<const S> x, std::span<const S> v)
{ return m.f2(x, v); }

// Zermelo factory.  Verifies the wind admissibility h(W, W) < 1 - 1e-9 at the
// probe points before handing out the metric; evaluation keeps enforcing it.
template <class HField, class WField>
RandersMetric<HField, WField> make_randers(int n, HField h, WField w,
                                           std::span<const std::vector<double>> probes)
{
    for (const auto& p : probes) {
        std::span<const double> x(p);
        MatT<double> hm;
        h(x, hm);
        std::vector<double> wv(n);
        w(x, std::span<double>(wv));
        double ww = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) ww += hm(i, j) * wv[i] * wv[j];
        if (ww >= 1.0 - 1e-9)
            throw WindTooStrong("zermelo wind with h(W,W) >= 1 - 1e-9 at a probe point");
    }
    return RandersMetric<HField, WField>(n, std::move(h), std::move(w));
}

}  // namespace finsler
