#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "finsler/fields.hpp"
#include "finsler/rng.hpp"
#include "finsler/tensors.hpp"

using namespace finsler;

namespace {

// Independent oracle: solve h(v/F - W, v/F - W) = 1 for F by bisection.
double zermelo_root(const Mat& h, const Vec& w, const Vec& v)
{
    auto resid = [&](double f) {
        Vec d = v / f - w;
        return (d.transpose() * h * d).value() - 1.0;
    };
    double lo = 1e-8, hi = 1e8;
    REQUIRE(resid(lo) > 0.0);
    REQUIRE(resid(hi) < 0.0);
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (resid(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

RandersMetric<EuclideanH, ConstW> make_flat_randers(std::vector<double> w)
{
    int n = static_cast<int>(w.size());
    return RandersMetric<EuclideanH, ConstW>(n, EuclideanH{}, ConstW{std::move(w)});
}

RandersMetric<EuclideanH, Fig1Wind> make_fig1_metric()
{ return RandersMetric<EuclideanH, Fig1Wind>(3, EuclideanH{}, Fig1Wind{}); }

RandersMetric<EuclideanH, Fig2Wind> make_fig2_metric()
{ return RandersMetric<EuclideanH, Fig2Wind>(3, EuclideanH{}, Fig2Wind{}); }

}  // namespace

TEST_CASE("dual numbers reproduce closed-form derivatives")
{
    // f(a) = sin(a) * sqrt(a) + a^3 / (1 + cos(a))
    auto f = [](auto a) { return sin(a) * sqrt(a) + pow(a, 3.0) / (1.0 + cos(a)); };
    double a = 0.8;
    D1 r = f(D1(a, 1.0));
    double fp = std::cos(a) * std::sqrt(a) + std::sin(a) / (2 * std::sqrt(a)) +
                (3 * a * a * (1 + std::cos(a)) + a * a * a * std::sin(a)) /
                    ((1 + std::cos(a)) * (1 + std::cos(a)));
    CHECK(r.re == doctest::Approx(f(a)).epsilon(1e-15));
    CHECK(r.du == doctest::Approx(fp).epsilon(1e-14));

    // second derivative of sin via nesting
    D2 r2 = sin(D2(D1(a, 1.0), D1(1.0)));
    CHECK(r2.du.du == doctest::Approx(-std::sin(a)).epsilon(1e-15));
}

TEST_CASE("expression grammar parses, evaluates and differentiates")
{
    auto e = Expr::parse("(sin(x1)*sin(x1)+1)/4 - pow(x2, 2)*0.5", {"x1", "x2"});
    double x1 = 0.7, x2 = -1.3;
    std::vector<double> xs{x1, x2};
    double want = (std::sin(x1) * std::sin(x1) + 1) / 4 - 0.5 * x2 * x2;
    CHECK(e.eval<double>(xs) == doctest::Approx(want).epsilon(1e-15));

    std::vector<D1> xd{D1(x1, 1.0), D1(x2)};
    CHECK(e.eval<D1>(xd).du ==
          doctest::Approx(std::sin(x1) * std::cos(x1) / 2).epsilon(1e-14));

    CHECK_THROWS_AS(Expr::parse("x1 +", {"x1"}), UsageError);
    CHECK_THROWS_AS(Expr::parse("foo(x1)", {"x1"}), UsageError);
    CHECK_THROWS_AS(Expr::parse("pow(x1, x1)", {"x1"}), UsageError);
    CHECK(Expr::parse("sqrt(x1)", {"x1"}).source() == "sqrt(x1)");
}

TEST_CASE("eval_F: euclidean pythagoras and zero vector")
{
    auto m = make_euclidean(3);
    TangentSample s{make_vec({0, 0, 0}), make_vec({3, 4, 0})};
    CHECK(eval_F(m, s) == doctest::Approx(5.0).epsilon(1e-15));
    s.v = make_vec({0, 0, 0});
    CHECK(eval_F(m, s) == 0.0);
    s.v = make_vec({1, std::nan(""), 0});
    CHECK_THROWS_AS(eval_F(m, s), NonFiniteInput);
}

TEST_CASE("eval_F: flat randers non-reversibility matches the root-finding oracle")
{
    auto m = make_flat_randers({0.5, 0.0});
    Vec x = make_vec({0, 0});
    Mat h = Mat::Identity(2, 2);
    Vec w = make_vec({0.5, 0.0});

    Vec vp = make_vec({1, 0});
    Vec vm = make_vec({-1, 0});
    double fp = eval_F(m, {x.data(), 2}, {vp.data(), 2});
    double fm = eval_F(m, {x.data(), 2}, {vm.data(), 2});
    CHECK(fp == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(fm == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fp == doctest::Approx(zermelo_root(h, w, vp)).epsilon(1e-10));
    CHECK(fm == doctest::Approx(zermelo_root(h, w, vm)).epsilon(1e-10));
}

TEST_CASE("eval_F: positive 1-homogeneity on random samples")
{
    auto fig1 = make_fig1_metric();
    SampleRng rng(31337);
    for (int i = 0; i < 500; ++i) {
        Vec x = to_vec(rng.uniform_vec(3, -2, 2));
        Vec v = to_vec(rng.uniform_vec(3, -1, 1));
        if (v.norm() < 0.1) continue;
        double f = eval_F(fig1, {x.data(), 3}, {v.data(), 3});
        Vec v2 = 2.0 * v;
        double f2 = eval_F(fig1, {x.data(), 3}, {v2.data(), 3});
        CHECK(std::abs(f2 - 2 * f) <= 1e-12 * 2 * f);
    }
}

TEST_CASE("fundamental tensor: riemannian case returns h for every v")
{
    ExprH h;
    h.n = 3;
    std::vector<std::string> names{"x1", "x2", "x3"};
    const char* entries[9] = {"1", "0", "0", "0", "1+x1*x1", "0", "0", "0", "1"};
    for (auto* e : entries) h.entries.push_back(Expr::parse(e, names));
    RiemannianMetric<ExprH> m(3, std::move(h));

    SampleRng rng(7);
    for (int i = 0; i < 20; ++i) {
        TangentSample s{to_vec(rng.uniform_vec(3, -1, 1)), to_vec(rng.uniform_vec(3, -1, 1))};
        if (s.v.norm() < 0.1) continue;
        Mat g = fundamental_tensor(m, s);
        Mat want = Mat::Identity(3, 3);
        want(1, 1) = 1 + s.x[0] * s.x[0];
        CHECK((g - want).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("fundamental tensor: euler identity and finite-difference hessian oracle")
{
    auto fig1 = make_fig1_metric();
    Vec x = make_vec({0, 0, 0});
    Vec v = make_vec({1, 0, 0});
    Mat g = fundamental_tensor(fig1, {x.data(), 3}, {v.data(), 3});

    double f = eval_F(fig1, {x.data(), 3}, {v.data(), 3});
    CHECK(std::abs(g_inner(g, {v.data(), 3}, {v.data(), 3}) - f * f) < 1e-10 * f * f);

    // central-difference Hessian of F^2/2 with step eps^(1/3)
    double step = std::cbrt(std::numeric_limits<double>::epsilon());
    auto f2 = [&](const Vec& vv) {
        return fig1.f2(std::span<const double>{x.data(), 3},
                       std::span<const double>{vv.data(), 3});
    };
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Vec vpp = v, vpm = v, vmp = v, vmm = v;
            vpp[i] += step; vpp[j] += step;
            vpm[i] += step; vpm[j] -= step;
            vmp[i] -= step; vmp[j] += step;
            vmm[i] -= step; vmm[j] -= step;
            double fd = (f2(vpp) - f2(vpm) - f2(vmp) + f2(vmm)) / (4 * step * step) / 2.0;
            CHECK(std::abs(g(i, j) - fd) < 1e-6);
        }

    Vec tiny = make_vec({1e-9, 0, 0});
    CHECK_THROWS_AS(fundamental_tensor(fig1, {x.data(), 3}, {tiny.data(), 3}), ConeViolation);
}

TEST_CASE("cartan tensor: riemannian vanishing, euler identity, total symmetry")
{
    auto eu = make_euclidean(3);
    Vec x = make_vec({0.3, -0.2, 0.9});
    Vec v = make_vec({0.5, 1.0, -0.7});
    auto c_eu = cartan_tensor(eu, {x.data(), 3}, {v.data(), 3});
    for (double c : c_eu) CHECK(std::abs(c) < 1e-10);

    auto fig2 = make_fig2_metric();
    SampleRng rng(99);
    for (int rep = 0; rep < 10; ++rep) {
        Vec xx = to_vec(rng.uniform_vec(3, -0.8, 0.8));
        Vec vv = to_vec(rng.uniform_vec(3, -1, 1));
        if (vv.norm() < 0.1) continue;
        std::span<const double> xs{xx.data(), 3}, vs{vv.data(), 3};

        // slot permutations evaluated with independent seed orders
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) {
                    double c0 = cartan_raw(fig2, xs, vs, i, j, k);
                    CHECK(std::abs(cartan_raw(fig2, xs, vs, j, i, k) - c0) < 1e-10);
                    CHECK(std::abs(cartan_raw(fig2, xs, vs, k, j, i) - c0) < 1e-10);
                }

        // C_v(v, ., .) = 0
        auto c = cartan_tensor(fig2, xs, vs);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                double acc = 0.0;
                for (int l = 0; l < 3; ++l) acc += c[l * 9 + a * 3 + b] * vv[l];
                CHECK(std::abs(acc) < 1e-10);
            }
    }
}

TEST_CASE("randers_from_zermelo: defining identity on fig2 wind samples")
{
    auto fig2 = make_fig2_metric();
    Mat h = Mat::Identity(3, 3);
    SampleRng rng(2024);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        Vec x = to_vec(rng.uniform_vec(3, -1, 1));
        if (x.norm() > 1.45) continue;
        Vec v = to_vec(rng.uniform_vec(3, -1, 1));
        if (v.norm() < 0.05) continue;
        double f = eval_F(fig2, {x.data(), 3}, {v.data(), 3});
        Vec w = make_vec({-x[1] / 2, x[0] / 2, 0});
        Vec d = v / f - w;
        worst = std::max(worst, std::abs((d.transpose() * h * d).value() - 1.0));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("randers_from_zermelo: W = 0 collapses to the riemannian norm")
{
    auto m = make_flat_randers({0.0, 0.0, 0.0});
    Vec x = make_vec({0, 0, 0});
    Vec v = make_vec({1.0, -2.0, 2.0});
    CHECK(eval_F(m, {x.data(), 3}, {v.data(), 3}) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("make_randers rejects winds with h(W,W) >= 1")
{
    std::vector<std::vector<double>> probes{{0, 0}};
    CHECK_THROWS_AS(make_randers(2, EuclideanH{}, ConstW{{1.1, 0.0}},
                                 std::span<const std::vector<double>>(probes)),
                    WindTooStrong);
    CHECK_THROWS_AS(make_randers(2, EuclideanH{}, ConstW{{1.0, 0.0}},
                                 std::span<const std::vector<double>>(probes)),
                    WindTooStrong);
    CHECK_NOTHROW(make_randers(2, EuclideanH{}, ConstW{{0.9, 0.0}},
                               std::span<const std::vector<double>>(probes)));
}

TEST_CASE("validate_metric: euclidean passes, overstrong wind fails definiteness")
{
    auto eu = make_euclidean(3);
    SampleRng rng(5);
    std::vector<TangentSample> samples;
    for (int i = 0; i < 200; ++i) {
        Vec v = to_vec(rng.uniform_vec(3, -1, 1));
        if (v.norm() < 0.1) continue;
        samples.push_back({to_vec(rng.uniform_vec(3, -2, 2)), v});
    }
    auto rep = validate_metric(eu, samples);
    CHECK(rep.pass());
    CHECK(rep.homogeneity_defect < 1e-12);
    CHECK(rep.cartan_symmetry_defect < 1e-12);

    // |W| = 1.1: constructed unchecked.  Against the wind the root formula
    // lands on the concave branch of the defining quadratic, where the
    // Hessian is indefinite; the report must show the definiteness failure.
    RandersMetric<EuclideanH, ConstW> bad(2, EuclideanH{}, ConstW{{1.1, 0.0}},
                                          /*enforce_wind=*/false);
    std::vector<TangentSample> against_wind;
    SampleRng rng2(6);
    for (int i = 0; i < 100; ++i) {
        Vec v = make_vec({-1.0, rng2.uniform(-0.5, 0.5)});
        against_wind.push_back({make_vec({0, 0}), v});
    }
    auto bad_rep = validate_metric(bad, against_wind);
    CHECK(bad_rep.min_g_eigenvalue < 0.0);
    CHECK_FALSE(bad_rep.pass());
}

TEST_CASE("validate_metric: fig1 on the [-2,2]^3 box passes")
{
    auto fig1 = make_fig1_metric();
    SampleRng rng(11);
    std::vector<TangentSample> samples;
    for (int i = 0; i < 1000; ++i) {
        Vec v = to_vec(rng.uniform_vec(3, -1, 1));
        if (v.norm() < 0.1) continue;
        samples.push_back({to_vec(rng.uniform_vec(3, -2, 2)), v});
    }
    auto rep = validate_metric(fig1, samples);
    CHECK(rep.pass());
}
