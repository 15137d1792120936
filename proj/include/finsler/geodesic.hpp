#pragma once

// Geodesic integration in spray form, submanifold patches, orthogonality and
// normal-cone solves, covariant derivatives along curves, endpoint map.

#include <functional>
#include <optional>

#include "finsler/connection.hpp"
#include "finsler/ode.hpp"

namespace finsler {

// ------------------------------------------------------------------
// Smooth maps between chart spaces, evaluable through dual numbers (CRTP like
// FinslerMetric).  Submersions pi and fiber parametrizations both use this.

class ChartMap {
 public:
    virtual ~ChartMap() = default;
    virtual int dim_in() const = 0;
    virtual int dim_out() const = 0;

#define FINSLER_MAP_DECL(S) \
    virtual void map(std::span<const S> in, std::span<S> out) const = 0;
    FINSLER_MAP_DECL(double)
    FINSLER_MAP_DECL(D1)
    FINSLER_MAP_DECL(D2)
    FINSLER_MAP_DECL(D3)
    FINSLER_MAP_DECL(D4)
    FINSLER_MAP_DECL(D5)
    FINSLER_MAP_DECL(D6)
#undef FINSLER_MAP_DECL
};

template <class Derived>
class ChartMapImpl : public ChartMap {
 public:
#define FINSLER_MAP_OVERRIDE(S) \
    void map(std::span<const S> in, std::span<S> out) const override \
    { static_cast<const Derived*>(this)->template map_impl<S>(in, out); }
    FINSLER_MAP_OVERRIDE(double)
    FINSLER_MAP_OVERRIDE(D1)
    FINSLER_MAP_OVERRIDE(D2)
    FINSLER_MAP_OVERRIDE(D3)
    FINSLER_MAP_OVERRIDE(D4)
    FINSLER_MAP_OVERRIDE(D5)
    FINSLER_MAP_OVERRIDE(D6)
#undef FINSLER_MAP_OVERRIDE
};

class ExprMap final : public ChartMapImpl<ExprMap> {
 public:
    ExprMap(int dim_in, std::vector<Expr> comps) : nin_(dim_in), comps_(std::move(comps)) {}
    int dim_in() const override { return nin_; }
    int dim_out() const override { return static_cast<int>(comps_.size()); }

    template <class S>
    void map_impl(std::span<const S> in, std::span<S> out) const
    {
        for (size_t i = 0; i < comps_.size(); ++i) out[i] = comps_[i].eval(in);
    }

    const std::vector<Expr>& components() const { return comps_; }

 private:
    int nin_;
    std::vector<Expr> comps_;
};

template <class S>
void eval_map(const ChartMap& f, std::span<const S> in, std::span<S> out)
{ f.map(in, out); }

Vec map_value(const ChartMap& f, std::span<const double> in);
// Jacobian d f / d in, (dim_out x dim_in).
Mat map_jacobian(const ChartMap& f, std::span<const double> in);

// ------------------------------------------------------------------
// A parametrized submanifold patch with its parameter box.

struct SubmanifoldPatch {
    std::shared_ptr<const ChartMap> param;          // R^k -> R^n (k may be 0)
    std::vector<std::array<double, 2>> param_box;   // k intervals

    int dim() const { return param->dim_in(); }
    int ambient_dim() const { return param->dim_out(); }
    Vec point(std::span<const double> u) const { return map_value(*param, u); }
    // columns are the coordinate tangent vectors; throws RankDeficient if the
    // basis is not full rank
    Mat tangent_basis(std::span<const double> u) const;
};

SubmanifoldPatch make_expr_patch(int k, const std::vector<std::string>& comps,
                                 const std::vector<std::string>& param_names,
                                 std::vector<std::array<double, 2>> box);
SubmanifoldPatch make_point_patch(const Vec& p);

// ------------------------------------------------------------------
// Geodesics.

struct GeodesicPath {
    int n = 0;
    double t0 = 0.0, t1 = 0.0;
    double speed = 0.0;        // F(xdot) at start
    double speed_drift = 0.0;  // max node deviation of F(xdot)
    DensePath path;            // state [x, v]

    Vec x(double t) const;
    Vec v(double t) const;
    void state(double t, std::span<double> x_out, std::span<double> v_out) const;
};

OdeRhs geodesic_rhs(const FinslerMetric& m);

GeodesicPath integrate_geodesic(const FinslerMetric& m, const Vec& x0, const Vec& v0,
                                double t0, double t1, const OdeOptions& opt = {});
// Replay on a recorded step schedule (for clean finite differences).
GeodesicPath integrate_geodesic_schedule(const FinslerMetric& m, const Vec& x0, const Vec& v0,
                                         double t0, std::span<const double> steps);

// ------------------------------------------------------------------
// Orthogonality and the normal cone.

struct OrthogonalityResult {
    bool orthogonal = false;
    double residual = 0.0;
};

constexpr double kOrthTol = 1e-8;

// max_u |g_v(v,u)| / (F(v) |u|_g) over basis columns
OrthogonalityResult is_orthogonal(const FinslerMetric& m, std::span<const double> x,
                                  std::span<const double> v, const Mat& tangent_basis);

// Newton solve of { g_v(v, u_i) = 0, F(v) = 1 } from the seed; damped
// min-norm steps; throws NoConvergence after 50 iterations.
Vec normal_cone_sample(const FinslerMetric& m, std::span<const double> x,
                       const Mat& tangent_basis, const Vec& seed);

// ------------------------------------------------------------------
// Covariant derivative along a curve with a reference vector field.

struct Curve {
    std::function<Vec(double)> pos;
    std::function<Vec(double)> vel;
};

Curve as_curve(const GeodesicPath& g);

struct CurveField {
    std::function<Vec(double)> value;
    std::function<Vec(double)> deriv;  // plain t-derivative of the components
};

// (D X)^k = Xdot^k + X^i gammadot^j Gamma^k_ij(ref(t))
Vec covariant_derivative_along(const FinslerMetric& m, const Curve& c, const CurveField& ref,
                               const CurveField& X, double t);

// ------------------------------------------------------------------
// Endpoint map: follow the geodesic with initial velocity xi for parameter r
// (negative r integrates backward).

Vec endpoint(const FinslerMetric& m, const Vec& p, const Vec& xi, double r,
             const OdeOptions& opt = {});

}  // namespace finsler
