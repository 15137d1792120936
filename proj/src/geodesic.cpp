#include "finsler/geodesic.hpp"

#include <cmath>

namespace finsler {

Vec map_value(const ChartMap& f, std::span<const double> in)
{
    Vec out(f.dim_out());
    f.map(in, std::span<double>(out.data(), out.size()));
    return out;
}

Mat map_jacobian(const ChartMap& f, std::span<const double> in)
{
    const int ni = f.dim_in(), no = f.dim_out();
    Mat J(no, ni);
    std::vector<D1> inl(ni), outl(no);
    for (int j = 0; j < ni; ++j) {
        for (int i = 0; i < ni; ++i) inl[i] = D1(in[i], i == j ? 1.0 : 0.0);
        f.map(std::span<const D1>(inl), std::span<D1>(outl));
        for (int i = 0; i < no; ++i) J(i, j) = outl[i].du;
    }
    return J;
}

Mat SubmanifoldPatch::tangent_basis(std::span<const double> u) const
{
    Mat J = map_jacobian(*param, u);
    if (dim() > 0 && numerical_rank(J, 1e-10) < dim())
        throw RankDeficient("patch tangent basis is rank deficient");
    return J;
}

SubmanifoldPatch make_expr_patch(int k, const std::vector<std::string>& comps,
                                 const std::vector<std::string>& param_names,
                                 std::vector<std::array<double, 2>> box)
{
    std::vector<Expr> exprs;
    exprs.reserve(comps.size());
    for (const auto& c : comps) exprs.push_back(Expr::parse(c, param_names));
    SubmanifoldPatch p;
    p.param = std::make_shared<ExprMap>(k, std::move(exprs));
    p.param_box = std::move(box);
    return p;
}

namespace {

class ConstMap final : public ChartMapImpl<ConstMap> {
 public:
    explicit ConstMap(Vec p) : p_(std::move(p)) {}
    int dim_in() const override { return 0; }
    int dim_out() const override { return static_cast<int>(p_.size()); }
    template <class S>
    void map_impl(std::span<const S>, std::span<S> out) const
    {
        for (int i = 0; i < p_.size(); ++i) out[i] = S(p_[i]);
    }

 private:
    Vec p_;
};

}  // namespace

SubmanifoldPatch make_point_patch(const Vec& p)
{
    SubmanifoldPatch sp;
    sp.param = std::make_shared<ConstMap>(p);
    return sp;
}

// ------------------------------------------------------------------

Vec GeodesicPath::x(double t) const
{
    std::vector<double> s = path.eval(t);
    return to_vec(std::span<const double>(s.data(), n));
}

Vec GeodesicPath::v(double t) const
{
    std::vector<double> s = path.eval(t);
    return to_vec(std::span<const double>(s.data() + n, n));
}

void GeodesicPath::state(double t, std::span<double> x_out, std::span<double> v_out) const
{
    std::vector<double> s = path.eval(t);
    for (int i = 0; i < n; ++i) x_out[i] = s[i];
    for (int i = 0; i < n; ++i) v_out[i] = s[n + i];
}

OdeRhs geodesic_rhs(const FinslerMetric& m)
{
    const int n = m.dim();
    return [&m, n](double, std::span<const double> y, std::span<double> dy) {
        std::span<const double> x = y.subspan(0, n), v = y.subspan(n, n);
        std::vector<double> G = spray_coefficients_t<double>(m, x, v);
        for (int i = 0; i < n; ++i) dy[i] = v[i];
        for (int i = 0; i < n; ++i) dy[n + i] = -2.0 * G[i];
    };
}

namespace {

GeodesicPath finish_geodesic(const FinslerMetric& m, DensePath&& dense, double t0, double t1)
{
    const int n = m.dim();
    GeodesicPath g;
    g.n = n;
    g.t0 = t0;
    g.t1 = t1;
    g.path = std::move(dense);
    const auto& nodes = g.path.nodes();
    g.speed = eval_F(m, std::span<const double>(nodes.front().y.data(), n),
                     std::span<const double>(nodes.front().y.data() + n, n));
    for (const auto& nd : nodes) {
        double f = eval_F(m, std::span<const double>(nd.y.data(), n),
                          std::span<const double>(nd.y.data() + n, n));
        g.speed_drift = std::max(g.speed_drift, std::abs(f - g.speed));
    }
    return g;
}

}  // namespace

GeodesicPath integrate_geodesic(const FinslerMetric& m, const Vec& x0, const Vec& v0,
                                double t0, double t1, const OdeOptions& opt)
{
    require_cone(m, {x0.data(), static_cast<size_t>(x0.size())},
                 {v0.data(), static_cast<size_t>(v0.size())});
    const int n = m.dim();
    std::vector<double> y0(2 * n);
    for (int i = 0; i < n; ++i) y0[i] = x0[i];
    for (int i = 0; i < n; ++i) y0[n + i] = v0[i];
    DensePath dp = integrate_ode(geodesic_rhs(m), t0, t1, y0, opt);
    return finish_geodesic(m, std::move(dp), t0, t1);
}

GeodesicPath integrate_geodesic_schedule(const FinslerMetric& m, const Vec& x0, const Vec& v0,
                                         double t0, std::span<const double> steps)
{
    const int n = m.dim();
    std::vector<double> y0(2 * n);
    for (int i = 0; i < n; ++i) y0[i] = x0[i];
    for (int i = 0; i < n; ++i) y0[n + i] = v0[i];
    DensePath dp = integrate_ode_schedule(geodesic_rhs(m), t0, y0, steps);
    double t1 = dp.t_end();
    return finish_geodesic(m, std::move(dp), t0, t1);
}

// ------------------------------------------------------------------

OrthogonalityResult is_orthogonal(const FinslerMetric& m, std::span<const double> x,
                                  std::span<const double> v, const Mat& basis)
{
    require_cone(m, x, v);
    Mat g = f2_half_hessian(m, x, v);
    double f = std::sqrt(g_inner(g, v, v));
    double worst = 0.0;
    for (int c = 0; c < basis.cols(); ++c) {
        Vec u = basis.col(c);
        double gu = std::sqrt(g_inner(g, {u.data(), static_cast<size_t>(u.size())},
                                      {u.data(), static_cast<size_t>(u.size())}));
        double r = std::abs(g_inner(g, v, {u.data(), static_cast<size_t>(u.size())})) / (f * gu);
        worst = std::max(worst, r);
    }
    return {worst < kOrthTol, worst};
}

namespace {

// residuals [ g_v(v, u_i) ... , F^2(v) - 1 ] with entries at scalar S
template <class S>
std::vector<S> cone_residual(const FinslerMetric& m, std::span<const S> x, std::span<const S> v,
                             const Mat& basis)
{
    const int n = m.dim();
    const int k = static_cast<int>(basis.cols());
    std::vector<S> out(k + 1);
    std::vector<Dual<S>> xl(n), vl(n);
    for (int i = 0; i < n; ++i) xl[i] = Dual<S>(x[i]);
    for (int c = 0; c < k; ++c) {
        for (int i = 0; i < n; ++i) vl[i] = Dual<S>(v[i], S(basis(i, c)));
        Dual<S> r = eval_f2<Dual<S>>(m, xl, vl);
        out[c] = 0.5 * r.du;
    }
    out[k] = eval_f2<S>(m, x, v) - 1.0;
    return out;
}

}  // namespace

Vec normal_cone_sample(const FinslerMetric& m, std::span<const double> x, const Mat& basis,
                       const Vec& seed)
{
    const int n = m.dim();
    const int k = static_cast<int>(basis.cols());
    Vec v = seed;
    double f0 = eval_F(m, x, {v.data(), static_cast<size_t>(v.size())});
    if (!(f0 > kConeDelta)) throw ConeViolation("normal_cone_sample: bad seed");
    v /= f0;

    auto norm_of = [&](const Vec& vv) {
        auto r = cone_residual<double>(m, x, {vv.data(), static_cast<size_t>(vv.size())}, basis);
        double acc = 0.0;
        for (double c : r) acc += c * c;
        return std::sqrt(acc);
    };

    double res = norm_of(v);
    for (int it = 0; it < 50; ++it) {
        if (res < 1e-13) return v;
        // Jacobian of the residual in v
        Mat J(k + 1, n);
        std::vector<D1> xl(n), vl(n);
        for (int i = 0; i < n; ++i) xl[i] = D1(x[i]);
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) vl[i] = D1(v[i], i == j ? 1.0 : 0.0);
            auto r = cone_residual<D1>(m, xl, vl, basis);
            for (int i = 0; i <= k; ++i) J(i, j) = r[i].du;
        }
        auto rv = cone_residual<double>(m, x, {v.data(), static_cast<size_t>(v.size())}, basis);
        Vec rhs(k + 1);
        for (int i = 0; i <= k; ++i) rhs[i] = rv[i];
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(J);
        Vec step = cod.solve(rhs);  // min-norm Newton step
        double scale = 1.0;
        for (int half = 0; half < 30; ++half) {
            Vec cand = v - scale * step;
            double cres = norm_of(cand);
            if (cres < res || cres < 1e-13) {
                v = cand;
                res = cres;
                break;
            }
            scale *= 0.5;  // damping on residual increase
            if (half == 29) throw NoConvergence("normal_cone_sample: damping stalled");
        }
    }
    if (res < 1e-10) return v;
    throw NoConvergence("normal_cone_sample: no convergence after 50 iterations");
}

// ------------------------------------------------------------------

Curve as_curve(const GeodesicPath& g)
{
    return {[g](double t) { return g.x(t); }, [g](double t) { return g.v(t); }};
}

Vec covariant_derivative_along(const FinslerMetric& m, const Curve& c, const CurveField& ref,
                               const CurveField& X, double t)
{
    Vec x = c.pos(t), gdot = c.vel(t), w = ref.value(t);
    require_cone(m, {x.data(), static_cast<size_t>(x.size())},
                 {w.data(), static_cast<size_t>(w.size())});
    ChristoffelValue gamma = christoffel(m, {x, w});
    Vec xv = X.value(t);
    Vec corr = christoffel_contract(gamma, {xv.data(), static_cast<size_t>(xv.size())},
                                    {gdot.data(), static_cast<size_t>(gdot.size())});
    return X.deriv(t) + corr;
}

Vec endpoint(const FinslerMetric& m, const Vec& p, const Vec& xi, double r,
             const OdeOptions& opt)
{
    if (r == 0.0) return p;
    GeodesicPath g = integrate_geodesic(m, p, xi, 0.0, r, opt);
    return g.x(r);
}

}  // namespace finsler
