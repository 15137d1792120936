#include "finsler/jacobi.hpp"

#include <cmath>

namespace finsler {

JacobiOperatorValue jacobi_operator(const FinslerMetric& m, const GeodesicPath& geo, double t)
{
    Vec xt = geo.x(t), vt = geo.v(t);
    return {t, jacobi_operator_matrix(m, {xt.data(), static_cast<size_t>(xt.size())},
                                      {vt.data(), static_cast<size_t>(vt.size())})};
}

Vec JacobiBundle::part(double t, int block) const
{
    std::vector<double> s = path.eval(t);
    Vec out(n);
    for (int i = 0; i < n; ++i) out[i] = s[static_cast<size_t>(block) * n + i];
    return out;
}

GeodesicPath JacobiBundle::geodesic() const
{
    GeodesicPath g;
    g.n = n;
    g.t0 = t0;
    g.t1 = t1;
    std::vector<DensePath::Node> nodes;
    for (const auto& nd : path.nodes()) {
        DensePath::Node out;
        out.t = nd.t;
        out.y.assign(nd.y.begin(), nd.y.begin() + 2 * n);
        out.f.assign(nd.f.begin(), nd.f.begin() + 2 * n);
        nodes.push_back(std::move(out));
    }
    g.path = DensePath::from_nodes(std::move(nodes));
    g.speed = 0.0;
    return g;
}

JacobiBundle integrate_jacobi_bundle(const FinslerMetric& m, const Vec& x0, const Vec& v0,
                                     double t0, double t1, std::span<const JacobiInit> fields,
                                     const Mat& frame0, const OdeOptions& opt)
{
    require_cone(m, {x0.data(), static_cast<size_t>(x0.size())},
                 {v0.data(), static_cast<size_t>(v0.size())});
    const int n = m.dim();
    const int mf = static_cast<int>(fields.size());
    const int nframe = static_cast<int>(frame0.cols());

    std::vector<double> y0(static_cast<size_t>(2 + 2 * mf + nframe) * n);
    for (int i = 0; i < n; ++i) y0[i] = x0[i];
    for (int i = 0; i < n; ++i) y0[n + i] = v0[i];
    for (int a = 0; a < mf; ++a)
        for (int i = 0; i < n; ++i) {
            y0[(2 + 2 * a) * n + i] = fields[a].J0[i];
            y0[(3 + 2 * a) * n + i] = fields[a].U0[i];
        }
    for (int b = 0; b < nframe; ++b)
        for (int i = 0; i < n; ++i) y0[(2 + 2 * mf + b) * n + i] = frame0(i, b);

    OdeRhs rhs = [&m, n, mf, nframe](double, std::span<const double> y, std::span<double> dy) {
        std::span<const double> x = y.subspan(0, n), v = y.subspan(n, n);
        std::vector<double> G = spray_coefficients_t<double>(m, x, v);
        Mat N = nonlinear_connection(m, x, v);
        Mat R;
        if (mf > 0) R = jacobi_operator_matrix(m, x, v);
        for (int i = 0; i < n; ++i) dy[i] = v[i];
        for (int i = 0; i < n; ++i) dy[n + i] = -2.0 * G[i];
        for (int a = 0; a < mf; ++a) {
            std::span<const double> J = y.subspan((2 + 2 * a) * n, n);
            std::span<const double> U = y.subspan((3 + 2 * a) * n, n);
            for (int i = 0; i < n; ++i) {
                double nj = 0.0, nu = 0.0, rj = 0.0;
                for (int j = 0; j < n; ++j) {
                    nj += N(i, j) * J[j];
                    nu += N(i, j) * U[j];
                    rj += R(i, j) * J[j];
                }
                dy[(2 + 2 * a) * n + i] = U[i] - nj;
                dy[(3 + 2 * a) * n + i] = -rj - nu;
            }
        }
        for (int b = 0; b < nframe; ++b) {
            std::span<const double> E = y.subspan((2 + 2 * mf + b) * n, n);
            for (int i = 0; i < n; ++i) {
                double ne = 0.0;
                for (int j = 0; j < n; ++j) ne += N(i, j) * E[j];
                dy[(2 + 2 * mf + b) * n + i] = -ne;
            }
        }
    };

    JacobiBundle b;
    b.n = n;
    b.m = mf;
    b.nframe = nframe;
    b.t0 = t0;
    b.t1 = t1;
    b.path = integrate_ode(rhs, t0, t1, y0, opt);
    return b;
}

JacobiField integrate_jacobi(const FinslerMetric& m, const GeodesicPath& geo, const Vec& J0,
                             const Vec& U0, const OdeOptions& opt)
{
    JacobiInit init{J0, U0};
    auto bundle = std::make_shared<JacobiBundle>(integrate_jacobi_bundle(
        m, geo.x(geo.t0), geo.v(geo.t0), geo.t0, geo.t1, std::span<const JacobiInit>(&init, 1),
        Mat(), opt));
    return {bundle, 0};
}

// ------------------------------------------------------------------

namespace {

// residuals of the normal-cone system at parameter-dependent footpoint:
// [ g_v(v, d(param)/du_a) ..., F^2 - 1 ], entries at scalar S; the patch
// parameter enters through x(u) and the tangent basis.
template <class S>
std::vector<S> patch_cone_residual(const FinslerMetric& m, const SubmanifoldPatch& L,
                                   std::span<const S> u, std::span<const S> v)
{
    const int n = L.ambient_dim();
    const int k = L.dim();
    // footpoint and tangent basis at dual parameter
    std::vector<Dual<S>> ul(k), xl(n);
    std::vector<S> x(n);
    {
        std::vector<S> tmp(n);
        eval_map<S>(*L.param, u, tmp);
        for (int i = 0; i < n; ++i) x[i] = tmp[i];
    }
    std::vector<S> out(k + 1);
    std::vector<Dual<S>> xd(n), vd(n);
    for (int i = 0; i < n; ++i) xd[i] = Dual<S>(x[i]);
    for (int a = 0; a < k; ++a) {
        // tangent vector dparam/du_a
        for (int c = 0; c < k; ++c) ul[c] = Dual<S>(u[c], S(c == a ? 1.0 : 0.0));
        eval_map<Dual<S>>(*L.param, ul, xl);
        // g_v(v, u_a) = 1/2 d/de F^2(v + e u_a)
        for (int i = 0; i < n; ++i) vd[i] = Dual<S>(v[i], xl[i].du);
        Dual<S> r = eval_f2<Dual<S>>(m, std::span<const Dual<S>>(xd),
                                     std::span<const Dual<S>>(vd));
        out[a] = 0.5 * r.du;
    }
    out[k] = eval_f2<S>(m, std::span<const S>(x), v) - 1.0;
    return out;
}

}  // namespace

NormalDerivative cone_normal_derivative(const FinslerMetric& m, const SubmanifoldPatch& L,
                                        std::span<const double> u, std::span<const double> du,
                                        const Vec& xi)
{
    const int n = L.ambient_dim();
    const int k = L.dim();

    // implicit min-norm derivative: dxi = -J^+ dPhi/ds, J = dPhi/dv
    Mat Jv(k + 1, n);
    {
        std::vector<D1> ul(k), vl(n);
        for (int c = 0; c < k; ++c) ul[c] = D1(u[c]);
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) vl[i] = D1(xi[i], i == j ? 1.0 : 0.0);
            auto r = patch_cone_residual<D1>(m, L, ul, vl);
            for (int i = 0; i <= k; ++i) Jv(i, j) = r[i].du;
        }
    }
    Vec dphi(k + 1);
    {
        std::vector<D1> ul(k), vl(n);
        for (int c = 0; c < k; ++c) ul[c] = D1(u[c], du[c]);
        for (int i = 0; i < n; ++i) vl[i] = D1(xi[i]);
        auto r = patch_cone_residual<D1>(m, L, ul, vl);
        for (int i = 0; i <= k; ++i) dphi[i] = r[i].du;
    }
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(Jv);
    NormalDerivative out;
    out.dxi = -cod.solve(dphi);

    // covariant derivative with reference xi along the pushed-forward direction
    Vec p = L.point(u);
    Mat B = map_jacobian(*L.param, u);
    Vec xdir = B * to_vec(du);
    ChristoffelValue gamma = christoffel(m, {p, xi});
    out.nabla = out.dxi + christoffel_contract(gamma, {xi.data(), static_cast<size_t>(n)},
                                               {xdir.data(), static_cast<size_t>(n)});
    return out;
}

ShapeOperatorValue shape_operator(const FinslerMetric& m, const SubmanifoldPatch& L,
                                  std::span<const double> u, const Vec& xi)
{
    const int n = L.ambient_dim();
    const int k = L.dim();
    Vec p = L.point(u);
    Mat B = L.tangent_basis(u);
    auto orth = is_orthogonal(m, {p.data(), static_cast<size_t>(n)},
                              {xi.data(), static_cast<size_t>(n)}, B);
    if (!orth.orthogonal)
        throw NoConvergence("shape_operator: xi is not orthogonal to L");

    Mat nabla(n, k);
    for (int a = 0; a < k; ++a) {
        std::vector<double> du(k, 0.0);
        du[a] = 1.0;
        nabla.col(a) = cone_normal_derivative(m, L, u, du, xi).nabla;
    }

    // tangential projection in g_xi
    Mat g = fundamental_tensor(m, {p.data(), static_cast<size_t>(n)},
                               {xi.data(), static_cast<size_t>(n)});
    Mat ghat = B.transpose() * g * B;  // induced metric on T_pL
    Mat S = ghat.ldlt().solve(B.transpose() * g * nabla);

    Mat gs = ghat * S;
    ShapeOperatorValue out;
    out.S = S;
    out.nabla = nabla;
    out.symmetry_defect = (gs - gs.transpose()).cwiseAbs().maxCoeff();
    return out;
}

// ------------------------------------------------------------------

Mat g_orthonormal_perp(const FinslerMetric& m, std::span<const double> x,
                       std::span<const double> v)
{
    const int n = m.dim();
    Mat g = fundamental_tensor(m, x, v);
    Vec gv = g * to_vec(v);
    Eigen::FullPivLU<Mat> lu(gv.transpose());
    Mat kernel = lu.kernel();  // n x (n-1)
    // Gram-Schmidt in g
    for (int c = 0; c < kernel.cols(); ++c) {
        Vec w = kernel.col(c);
        for (int d = 0; d < c; ++d) {
            Vec e = kernel.col(d);
            w -= (e.transpose() * g * w).value() * e;
        }
        double nrm = std::sqrt((w.transpose() * g * w).value());
        kernel.col(c) = w / nrm;
    }
    return kernel;
}

SelfAdjointSpace l_jacobi_basis(const FinslerMetric& m, const SubmanifoldPatch& L,
                                std::span<const double> u, const Vec& xi, double t0, double t1,
                                const OdeOptions& opt)
{
    const int n = L.ambient_dim();
    const int k = L.dim();
    Vec p = L.point(u);

    std::vector<JacobiInit> inits;
    Mat B(n, 0);
    if (k > 0) {
        B = L.tangent_basis(u);
        ShapeOperatorValue sh = shape_operator(m, L, u, xi);
        for (int a = 0; a < k; ++a)
            inits.push_back({B.col(a), B * sh.S.col(a)});
    }

    // normal-type fields: J = 0, J' spanning the g-orthocomplement of
    // T_pL + span xi
    Mat g = fundamental_tensor(m, {p.data(), static_cast<size_t>(n)},
                               {xi.data(), static_cast<size_t>(n)});
    Mat pairing(k + 1, n);
    for (int a = 0; a < k; ++a) pairing.row(a) = (g * B.col(a)).transpose();
    pairing.row(k) = (g * xi).transpose();
    Eigen::FullPivLU<Mat> lu(pairing);
    Mat kernel = lu.dimensionOfKernel() == 0 ? Mat(n, 0) : Mat(lu.kernel());
    if (kernel.cols() != n - 1 - k)
        throw DimensionDrop("l_jacobi_basis: unexpected normal complement dimension");
    for (int c = 0; c < kernel.cols(); ++c) {
        Vec w = kernel.col(c);
        for (int d = 0; d < c; ++d) {
            Vec e = kernel.col(d);
            w -= (e.transpose() * g * w).value() * e;
        }
        w /= std::sqrt((w.transpose() * g * w).value());
        inits.push_back({Vec::Zero(n), w});
    }

    Mat frame0 = g_orthonormal_perp(m, {p.data(), static_cast<size_t>(n)},
                                    {xi.data(), static_cast<size_t>(n)});

    SelfAdjointSpace space;
    space.bundle = std::make_shared<JacobiBundle>(
        integrate_jacobi_bundle(m, p, xi, t0, t1, inits, frame0, opt));
    space.t0 = t0;
    space.k_tangent = k;
    space.label = SpaceLabel::full_W;
    return space;
}

double self_adjoint_defect(const FinslerMetric& m, const JacobiBundle& b, int a1, int a2,
                           double t)
{
    Vec xt = b.x(t), vt = b.v(t);
    Mat g = f2_half_hessian(m, {xt.data(), static_cast<size_t>(xt.size())},
                            {vt.data(), static_cast<size_t>(vt.size())});
    Vec j1 = b.J(a1, t), j2 = b.J(a2, t), u1 = b.Jp(a1, t), u2 = b.Jp(a2, t);
    auto sp = [](const Vec& v) {
        return std::span<const double>(v.data(), static_cast<size_t>(v.size()));
    };
    return g_inner(g, sp(u1), sp(j2)) - g_inner(g, sp(j1), sp(u2));
}

// ------------------------------------------------------------------

NormalContinuation cone_normal_field(const FinslerMetric& m, const SubmanifoldPatch& L)
{
    return [&m, &L](std::span<const double> u, const Vec& seed) {
        Vec p = L.point(u);
        Mat B = L.dim() > 0 ? L.tangent_basis(u) : Mat(L.ambient_dim(), 0);
        return normal_cone_sample(m, {p.data(), static_cast<size_t>(p.size())}, B, seed);
    };
}

VariationField jacobi_by_variation(const FinslerMetric& m, const SubmanifoldPatch& L,
                                   const ParamCurve& beta, const Vec& xi,
                                   const NormalContinuation& normal, double t0, double t1,
                                   double step)
{
    const int n = L.ambient_dim();

    // tight tolerances + frozen mesh keep the finite differences clean
    OdeOptions tight;
    tight.rtol = 1e-11;
    tight.atol = 1e-13;
    Vec u0 = beta.u(0.0);
    GeodesicPath center =
        integrate_geodesic(m, L.point(std::span<const double>(u0.data(), u0.size())), xi, t0,
                           t1, tight);
    std::vector<double> sched(center.path.schedule().begin(), center.path.schedule().end());

    auto shoot = [&](double s) {
        Vec us = beta.u(s);
        Vec ps = L.point(std::span<const double>(us.data(), us.size()));
        Vec Ns = normal(std::span<const double>(us.data(), us.size()), xi);
        return integrate_geodesic_schedule(m, ps, Ns, t0, sched);
    };
    auto g_ph = std::make_shared<GeodesicPath>(shoot(step));
    auto g_mh = std::make_shared<GeodesicPath>(shoot(-step));
    auto g_ph2 = std::make_shared<GeodesicPath>(shoot(step / 2));
    auto g_mh2 = std::make_shared<GeodesicPath>(shoot(-step / 2));

    VariationField out;
    out.J = [=](double t) {
        Vec d1 = (g_ph->x(t) - g_mh->x(t)) / (2 * step);
        Vec d2 = (g_ph2->x(t) - g_mh2->x(t)) / step;
        return Vec((4.0 * d2 - d1) / 3.0);  // one Richardson level
    };

    // measured initial data of the variation
    Vec du0 = beta.du(0.0);
    Mat B = L.tangent_basis(std::span<const double>(u0.data(), u0.size()));
    out.J0 = B * du0;
    out.U0 = cone_normal_derivative(m, L, std::span<const double>(u0.data(), u0.size()),
                                    std::span<const double>(du0.data(), du0.size()), xi)
                 .nabla;
    (void)n;
    return out;
}

// ------------------------------------------------------------------

Mat basis_matrix(const FinslerMetric& m, const JacobiBundle& b, double t)
{
    Vec xt = b.x(t), vt = b.v(t);
    Mat g = f2_half_hessian(m, {xt.data(), static_cast<size_t>(xt.size())},
                            {vt.data(), static_cast<size_t>(vt.size())});
    Mat M(b.nframe, b.m);
    for (int a = 0; a < b.m; ++a) {
        Vec j = b.J(a, t);
        for (int e = 0; e < b.nframe; ++e) {
            Vec fr = b.frame(e, t);
            M(e, a) = g_inner(g, {j.data(), static_cast<size_t>(j.size())},
                              {fr.data(), static_cast<size_t>(fr.size())});
        }
    }
    return M;
}

FocalReport detect_focal_points(const FinslerMetric& m, const SelfAdjointSpace& space,
                                double w0, double w1)
{
    const JacobiBundle& b = *space.bundle;
    if (b.nframe != b.m)
        throw WindowDegenerate("detect_focal_points: bundle lacks a square frame");

    auto det_at = [&](double t) { return basis_matrix(m, b, t).determinant(); };

    FocalReport rep;
    const int samples = std::max<int>(400, 4 * static_cast<int>(b.path.nodes().size()));
    double scale = 0.0;
    std::vector<double> ts(samples + 1), ds(samples + 1);
    for (int i = 0; i <= samples; ++i) {
        ts[i] = w0 + (w1 - w0) * i / samples;
        ds[i] = det_at(ts[i]);
        scale = std::max(scale, std::abs(ds[i]));
        rep.det_trace.emplace_back(ts[i], ds[i]);
    }
    if (scale < 1e-12)
        throw WindowDegenerate("detect_focal_points: determinant vanishes on the whole window");

    for (int i = 0; i < samples; ++i) {
        if (ds[i] == 0.0 || ds[i] * ds[i + 1] > 0.0) continue;
        double lo = ts[i], hi = ts[i + 1], flo = ds[i];
        while (hi - lo > 1e-9) {
            double mid = 0.5 * (lo + hi);
            double fm = det_at(mid);
            if (fm == 0.0) { lo = hi = mid; break; }
            if (flo * fm < 0.0) hi = mid;
            else { lo = mid; flo = fm; }
        }
        double t_star = 0.5 * (lo + hi);
        Eigen::JacobiSVD<Mat> svd(basis_matrix(m, b, t_star));
        const auto& sv = svd.singularValues();
        int mult = 0;
        for (int c = 0; c < sv.size(); ++c)
            if (sv[c] < 1e-6 * sv[0]) ++mult;
        rep.instants.emplace_back(t_star, std::max(1, mult));
    }

    rep.min_gap = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < rep.instants.size(); ++i)
        rep.min_gap = std::min(rep.min_gap, rep.instants[i].first - rep.instants[i - 1].first);
    return rep;
}

}  // namespace finsler
