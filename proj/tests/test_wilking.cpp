#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "finsler/fields.hpp"
#include "finsler/rng.hpp"
#include "finsler/submersion.hpp"
#include "finsler/wilking.hpp"

using namespace finsler;

namespace {

std::span<const double> sp(const Vec& v)
{ return {v.data(), static_cast<size_t>(v.size())}; }

RandersMetric<EuclideanH, Fig1Wind> fig1_metric()
{ return RandersMetric<EuclideanH, Fig1Wind>(3, EuclideanH{}, Fig1Wind{}); }

RandersMetric<EuclideanH, Fig2Wind> fig2_metric()
{ return RandersMetric<EuclideanH, Fig2Wind>(3, EuclideanH{}, Fig2Wind{}); }

SubmersionSpec fig1_spec()
{
    std::vector<std::string> names{"x1", "x2", "x3"};
    SubmersionSpec spec;
    spec.pi = std::make_shared<ExprMap>(
        3, std::vector<Expr>{Expr::parse("x1", names), Expr::parse("x2", names)});
    spec.base_metric = std::make_shared<RandersMetric<EuclideanH, ConstW>>(
        2, EuclideanH{}, ConstW{{0.5, 0.0}});
    return spec;
}

SubmersionSpec fig2_spec()
{
    std::vector<std::string> names{"x1", "x2", "x3"};
    SubmersionSpec spec;
    spec.pi = std::make_shared<ExprMap>(
        3, std::vector<Expr>{Expr::parse("x1*x1 + x2*x2", names), Expr::parse("x3", names)});
    return spec;
}

// frame over a fig1 vertical-line fiber with its holonomy field
struct Fig1Setup {
    SubmanifoldPatch L;
    std::vector<double> u0;
    Vec p, xi;
    SelfAdjointSpace W;
    WilkingFrame frame;
};

Fig1Setup make_fig1_frame(const FinslerMetric& m, const SubmersionSpec& spec, double t1)
{
    Fig1Setup s{make_expr_patch(1, {"0.2", "-0.1", "u1"}, {"u1"}, {{{-2, 2}}}),
                {0.3},
                Vec(),
                Vec(),
                {},
                {}};
    s.p = s.L.point(s.u0);
    HorizontalLift hl = horizontal_lift_vector(m, spec, s.p, make_vec({0.8, 0.35}));
    s.xi = hl.lift / hl.norm;
    s.W = l_jacobi_basis(m, s.L, s.u0, s.xi, 0, t1);

    Mat B = s.L.tangent_basis(s.u0);
    std::vector<double> du{1.0};
    NormalDerivative nd = basic_normal_derivative(m, spec, s.L, s.u0, du, s.xi);
    JacobiInit vert{B.col(0), nd.nabla};
    s.frame = build_wilking_frame(m, s.W, std::span<const JacobiInit>(&vert, 1), 0, t1);
    return s;
}

}  // namespace

TEST_CASE("wilking frame: flat product has constant distributions and zero O'Neill")
{
    auto eu = make_euclidean(3);
    std::vector<std::string> names{"x1", "x2", "x3"};
    SubmersionSpec spec;
    spec.pi = std::make_shared<ExprMap>(
        3, std::vector<Expr>{Expr::parse("x1", names), Expr::parse("x2", names)});
    spec.base_metric = std::make_shared<EuclideanMetric>(make_euclidean(2));

    auto L = make_expr_patch(1, {"0.1", "0.4", "u1"}, {"u1"}, {{{-2, 2}}});
    std::vector<double> u0{0.0};
    Vec p = L.point(u0);
    Vec xi = make_vec({1, 0, 0});
    auto W = l_jacobi_basis(eu, L, u0, xi, 0, 3);
    JacobiInit vert{make_vec({0, 0, 1}), Vec::Zero(3)};
    auto frame = build_wilking_frame(eu, W, std::span<const JacobiInit>(&vert, 1), 0, 3);

    CHECK(frame.degeneracies.empty());
    for (double t : {0.5, 1.5, 2.9}) {
        CHECK(frame.dim_V(t) == 1);
        std::vector<Vec> J, Jp;
        frame.v_basis(t, J, Jp);
        CHECK((J[0] - make_vec({0, 0, 1})).norm() < 1e-10);
        CHECK(frame.oneill(t, make_vec({0, 1, 0})).norm() < 1e-10);
        CHECK(frame.oneill(t, make_vec({0, 0, 1})).norm() < 1e-10);
    }

    // transversal solutions reduce to straight lines; no conjugate points
    auto rep = transversal_conjugate_points(eu, frame, 0.2, 3.0);
    CHECK(rep.instants.empty());
}

TEST_CASE("wilking frame: fig1 distributions, skew pairing, H-V mapping")
{
    auto fig1 = fig1_metric();
    auto spec = fig1_spec();
    auto s = make_fig1_frame(fig1, spec, 2.0);

    SampleRng rng(5);
    for (double t : {0.2, 0.8, 1.4, 1.9}) {
        CHECK(s.frame.dim_V(t) == 1);
        CHECK(s.frame.velocity_orthogonality(t) < 1e-8);

        std::vector<Vec> J, Jp;
        s.frame.v_basis(t, J, Jp);
        Vec xt = s.frame.vbundle->x(t), vt = s.frame.vbundle->v(t);
        Mat g = fundamental_tensor(fig1, sp(xt), sp(vt));

        Vec probe = to_vec(rng.uniform_vec(3, -1, 1));
        auto split = s.frame.split(t, probe);
        // V perp H and the three-way split reassembles
        CHECK(std::abs(g_inner(g, sp(split.horizontal), sp(J[0]))) < 1e-8);
        CHECK(std::abs(g_inner(g, sp(split.horizontal), sp(vt))) < 1e-8);
        CHECK((split.vertical + split.tangent + split.horizontal - probe).norm() < 1e-10);

        // A maps H into V and V into H; skew pairing
        Vec X = split.horizontal;
        Vec Z = J[0];
        Vec AX = s.frame.oneill(t, X);
        Vec AZ = s.frame.oneill(t, Z);
        auto sAX = s.frame.split(t, AX);
        auto sAZ = s.frame.split(t, AZ);
        CHECK(sAX.horizontal.norm() < 1e-7 * std::max(1.0, AX.norm()));
        CHECK(sAZ.vertical.norm() < 1e-7 * std::max(1.0, AZ.norm()));
        CHECK(std::abs(g_inner(g, sp(AX), sp(Z)) + g_inner(g, sp(X), sp(AZ))) < 1e-6);
    }
}

TEST_CASE("lemma 3.3(b): horizontal parts of W-fields solve the transversal equation")
{
    auto fig1 = fig1_metric();
    auto spec = fig1_spec();
    auto s = make_fig1_frame(fig1, spec, 2.0);
    const double t0 = 0.0;

    for (int pick = 0; pick < s.W.dim(); ++pick) {
        Vec J0 = s.W.bundle->J(pick, t0), U0 = s.W.bundle->Jp(pick, t0);
        auto sp0 = s.frame.split(t0, J0);
        Vec X0 = sp0.horizontal;
        // D^h X = (J')^h - A(J^v)
        auto spU = s.frame.split(t0, U0);
        Vec Y0 = spU.horizontal - s.frame.oneill(t0, sp0.vertical);

        TransversalInit init{X0, Y0};
        JacobiInit extra{J0, U0};
        auto tb = integrate_transversal_jacobi(fig1, s.frame,
                                               std::span<const TransversalInit>(&init, 1), 0,
                                               std::span<const JacobiInit>(&extra, 1));
        double sup = 0.0;
        for (int i = 0; i <= 40; ++i) {
            double t = 2.0 * i / 40.0;
            Vec Jt = tb.extraJ(0, t);
            Vec Jh = tb.split(t, Jt).horizontal;
            sup = std::max(sup, (tb.X(0, t) - Jh).norm());
        }
        CHECK(sup < 1e-5);
    }
}

TEST_CASE("lemma 3.6: the vertical field is the endpoint-map variation field")
{
    auto fig1 = fig1_metric();
    auto spec = fig1_spec();
    auto s = make_fig1_frame(fig1, spec, 1.6);

    Vec w_base = map_jacobian(*spec.pi, sp(s.p)) * s.xi;
    auto basic = basic_normal_field(fig1, spec, s.L, w_base);
    ParamCurve beta{[&](double sArg) { return make_vec({s.u0[0] + sArg}); },
                    [](double) { return make_vec({1.0}); }};
    auto var = jacobi_by_variation(fig1, s.L, beta, s.xi, basic, 0, 1.6);

    double sup = 0.0;
    for (int i = 0; i <= 32; ++i) {
        double t = 1.6 * i / 32.0;
        sup = std::max(sup, (var.J(t) - s.frame.vbundle->J(0, t)).norm());
    }
    CHECK(sup < 1e-5);
}

TEST_CASE("fig2 axis crossing: dim V constant, degenerate basis continues through J'")
{
    auto fig2 = fig2_metric();
    auto spec = fig2_spec();
    auto L = make_expr_patch(1, {"cos(u1)", "sin(u1)", "0"}, {"u1"}, {{{0.0, 6.2832}}});
    std::vector<double> u0{0.0};
    Vec p = L.point(u0);
    // basic normal lifting the base-unit inward direction (-2, 0)
    HorizontalLift hl = horizontal_lift_vector(fig2, spec, p, make_vec({-2.0, 0.0}));
    Vec xi = hl.lift;
    CHECK(std::abs(hl.norm - 1.0) < 1e-10);
    CHECK((xi - make_vec({-1.0, 0.5, 0.0})).norm() < 1e-9);

    auto W = l_jacobi_basis(fig2, L, u0, xi, 0, 2.2);
    Mat B = L.tangent_basis(u0);
    std::vector<double> du{1.0};
    NormalDerivative nd = basic_normal_derivative(fig2, spec, L, u0, du, xi);
    JacobiInit vert{B.col(0), nd.nabla};
    auto frame = build_wilking_frame(fig2, W, std::span<const JacobiInit>(&vert, 1), 0, 2.2);

    REQUIRE(frame.degeneracies.size() == 1);
    const auto& rec = frame.degeneracies[0];
    CHECK(std::abs(rec.t0 - 1.0) < 1e-6);  // flat half-plane picture: axis at t = 1
    CHECK(rec.vanishing == 1);

    // the geodesic actually crosses the axis there
    Vec x_at = frame.vbundle->x(rec.t0);
    CHECK(std::sqrt(x_at[0] * x_at[0] + x_at[1] * x_at[1]) < 1e-7);

    for (double t : {0.2, 0.9, 0.99, 1.0, 1.01, 1.2, 2.1})
        CHECK(frame.dim_V(t) == 1);

    // basis limit at the degeneracy equals J'(t0)
    std::vector<Vec> J, Jp;
    frame.v_basis(rec.t0, J, Jp);
    CHECK((J[0] - rec.Jp0[0]).norm() < 1e-10);
    double scale = rec.Jp0[0].norm();
    for (double dt : {3e-5, 2e-4, 1e-3}) {
        frame.v_basis(rec.t0 + dt, J, Jp);
        CHECK((J[0] - rec.Jp0[0]).norm() < 1e-6 * std::max(1.0, scale) + 2.0 * dt * scale);
        frame.v_basis(rec.t0 - dt, J, Jp);
        CHECK((J[0] - rec.Jp0[0]).norm() < 1e-6 * std::max(1.0, scale) + 2.0 * dt * scale);
    }

    // V stays orthogonal to the velocity through the crossing
    for (double t : {0.5, 0.999, 1.001, 1.8})
        CHECK(frame.velocity_orthogonality(t) < 1e-8);
}

TEST_CASE("fig2: transversal solutions project to base jacobi fields at regular instants")
{
    auto fig2 = fig2_metric();
    auto spec = fig2_spec();
    auto L = make_expr_patch(1, {"cos(u1)", "sin(u1)", "0"}, {"u1"}, {{{0.0, 6.2832}}});
    std::vector<double> u0{0.0};
    Vec p = L.point(u0);
    Vec xi = horizontal_lift_vector(fig2, spec, p, make_vec({-2.0, 0.0})).lift;
    auto W = l_jacobi_basis(fig2, L, u0, xi, 0, 0.8);
    Mat B = L.tangent_basis(u0);
    std::vector<double> du{1.0};
    NormalDerivative nd = basic_normal_derivative(fig2, spec, L, u0, du, xi);
    JacobiInit vert{B.col(0), nd.nabla};
    auto frame = build_wilking_frame(fig2, W, std::span<const JacobiInit>(&vert, 1), 0, 0.8);

    Mat H0 = h0_basis_at(fig2, frame, 0.0);
    REQUIRE(H0.cols() == 1);
    TransversalInit init{H0.col(0), 0.3 * H0.col(0)};
    auto tb = integrate_transversal_jacobi(fig2, frame,
                                           std::span<const TransversalInit>(&init, 1), 0);

    // base metric of the fig2 submersion: diag(1/(4 b1), 1)
    ExprH hbase;
    hbase.n = 2;
    std::vector<std::string> bn{"x1", "x2"};
    const char* entries[4] = {"1/(4*x1)", "0", "0", "1"};
    for (auto* e2 : entries) hbase.entries.push_back(Expr::parse(e2, bn));
    RiemannianMetric<ExprH> base(2, std::move(hbase));

    // base geodesic and the projected initial data
    Vec bp = map_value(*spec.pi, sp(p));
    Mat J0pi = map_jacobian(*spec.pi, sp(p));
    Vec wb = J0pi * xi;
    GeodesicPath bgeo = integrate_geodesic(base, bp, wb, 0, 0.8);

    Vec Y0 = J0pi * init.X0;
    // dX/dt at t0 (exact from the transversal equation), then the chain rule
    Vec dX = init.Y0 + frame.oneill(0.0, init.X0) -
             nonlinear_connection(fig2, sp(p), sp(xi)) * init.X0;
    Vec hess(2);
    {
        std::vector<D1> xl(3), pl(2);
        for (int i = 0; i < 3; ++i) xl[i] = D1(p[i], xi[i]);
        eval_map<D1>(*spec.pi, xl, pl);
        // d/dt dpi(gamma(t)) applied to X0: Hess pi (gammadot, X0)
        std::vector<D2> xl2(3), pl2(2);
        for (int i = 0; i < 3; ++i) xl2[i] = D2(D1(p[i], xi[i]), D1(init.X0[i]));
        eval_map<D2>(*spec.pi, xl2, pl2);
        for (int a = 0; a < 2; ++a) hess[a] = pl2[a].du.du;
    }
    Vec Ydot = hess + J0pi * dX;  // plain t-derivative of dpi(X)
    ChristoffelValue gb = christoffel(base, {bp, wb});
    Vec Y0p = Ydot + christoffel_contract(gb, sp(Y0), sp(wb));

    JacobiField bJ = integrate_jacobi(base, bgeo, Y0, Y0p);
    double sup = 0.0;
    for (int i = 2; i <= 36; ++i) {
        double t = 0.8 * i / 40.0;  // regular instants, away from the axis
        Vec xt = tb.x(t);
        Vec proj = map_jacobian(*spec.pi, sp(xt)) * tb.X(0, t);
        sup = std::max(sup, (proj - bJ.J(t)).norm());
    }
    CHECK(sup < 1e-5);
}

TEST_CASE("fig2: two lifts of one base geodesic match in g-norm and det trace")
{
    auto fig2 = fig2_metric();
    auto spec = fig2_spec();

    auto run = [&](double theta) {
        auto L = make_expr_patch(1, {"cos(u1)", "sin(u1)", "0"}, {"u1"}, {{{0.0, 6.2832}}});
        std::vector<double> u0{theta};
        Vec p = L.point(u0);
        Vec xi = horizontal_lift_vector(fig2, spec, p, make_vec({-2.0, 0.0})).lift;
        auto W = l_jacobi_basis(fig2, L, u0, xi, 0, 1.8);
        Mat B = L.tangent_basis(u0);
        std::vector<double> du{1.0};
        NormalDerivative nd = basic_normal_derivative(fig2, spec, L, u0, du, xi);
        JacobiInit vert{B.col(0), nd.nabla};
        auto frame = build_wilking_frame(fig2, W, std::span<const JacobiInit>(&vert, 1), 0, 1.8);
        Mat H0 = h0_basis_at(fig2, frame, 0.0);
        TransversalInit init{H0.col(0), 0.25 * H0.col(0)};
        auto tb = std::make_shared<TransversalBundle>(integrate_transversal_jacobi(
            fig2, frame, std::span<const TransversalInit>(&init, 1), 1));
        return tb;
    };

    auto ta = run(0.0);
    auto tbnd = run(1.1);

    // identical base projections by construction (rotational symmetry maps one
    // configuration to the other", so dpi X agrees); g-norms must match
    for (double t : {0.1, 0.6, 1.2, 1.7}) {
        Vec xa = ta->x(t), va = ta->v(t), Xa = ta->X(0, t);
        Vec xb = tbnd->x(t), vb = tbnd->v(t), Xb = tbnd->X(0, t);
        Mat ga = f2_half_hessian(fig2, sp(xa), sp(va));
        Mat gb2 = f2_half_hessian(fig2, sp(xb), sp(vb));
        CHECK(std::abs(g_inner(ga, sp(Xa), sp(Xa)) - g_inner(gb2, sp(Xb), sp(Xb))) < 1e-6);

        Mat Ma(1, 1), Mb(1, 1);
        Vec Ea = ta->hframe(0, t), Eb = tbnd->hframe(0, t);
        Ma(0, 0) = g_inner(ga, sp(Xa), sp(Ea));
        Mb(0, 0) = g_inner(gb2, sp(Xb), sp(Eb));
        CHECK(std::abs(std::abs(Ma(0, 0)) - std::abs(Mb(0, 0))) < 1e-6);
    }
}

TEST_CASE("sphere-base product: transversal conjugate instant at pi for two lifts")
{
    RiemannianMetric<SphereProductH> m(3, SphereProductH{});
    std::vector<std::string> names{"x1", "x2", "x3"};
    SubmersionSpec spec;
    spec.pi = std::make_shared<ExprMap>(
        3, std::vector<Expr>{Expr::parse("x1", names), Expr::parse("x2", names)});
    spec.base_metric =
        std::make_shared<RiemannianMetric<SphereChartH>>(2, SphereChartH{});

    auto run = [&](double height) {
        auto L = make_expr_patch(1, {"1.5707963267948966", "0", "u1"}, {"u1"}, {{{-2, 2}}});
        std::vector<double> u0{height};
        Vec p = L.point(u0);
        Vec xi = horizontal_lift_vector(m, spec, p, make_vec({0.0, 1.0})).lift;
        auto W = l_jacobi_basis(m, L, u0, xi, 0, 3.5);
        Mat B = L.tangent_basis(u0);
        std::vector<double> du{1.0};
        NormalDerivative nd = basic_normal_derivative(m, spec, L, u0, du, xi);
        JacobiInit vert{B.col(0), nd.nabla};
        auto frame =
            build_wilking_frame(m, W, std::span<const JacobiInit>(&vert, 1), 0, 3.5);
        return transversal_conjugate_points(m, frame, 0.2, 3.4);
    };

    auto ra = run(0.0);
    auto rb = run(0.7);
    REQUIRE(ra.instants.size() == 1);
    REQUIRE(rb.instants.size() == 1);
    CHECK(std::abs(ra.instants[0].first - M_PI) < 1e-3);
    CHECK(std::abs(ra.instants[0].first - rb.instants[0].first) < 1e-6);
    CHECK(ra.instants[0].second == 1);
}

TEST_CASE("transversal_conjugate_points: degenerate when V fills the complement")
{
    auto eu = make_euclidean(3);
    auto L = make_expr_patch(2, {"u1", "u2", "0"}, {"u1", "u2"}, {{{-2, 2}}, {{-2, 2}}});
    std::vector<double> u0{0.0, 0.0};
    Vec xi = make_vec({0, 0, 1});
    auto W = l_jacobi_basis(eu, L, u0, xi, 0, 2);
    std::vector<JacobiInit> verts;
    for (int a = 0; a < 2; ++a)
        verts.push_back({W.bundle->J(a, 0.0), W.bundle->Jp(a, 0.0)});
    auto frame = build_wilking_frame(eu, W, verts, 0, 2);
    CHECK_THROWS_AS(transversal_conjugate_points(eu, frame, 0.1, 2.0), WindowDegenerate);
}
