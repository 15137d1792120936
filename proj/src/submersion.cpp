#include "finsler/submersion.hpp"

#include <cmath>

#include "finsler/rng.hpp"

namespace finsler {

Mat dpi_regular(const SubmersionSpec& spec, std::span<const double> x)
{
    Mat J = map_jacobian(*spec.pi, x);
    Eigen::JacobiSVD<Mat> svd(J);
    const auto& s = svd.singularValues();
    if (s[s.size() - 1] < 1e-8 * s[0])
        throw RankDeficient("dpi is rank deficient at this point");
    return J;
}

bool is_regular_point(const SubmersionSpec& spec, std::span<const double> x)
{
    Mat J = map_jacobian(*spec.pi, x);
    Eigen::JacobiSVD<Mat> svd(J);
    const auto& s = svd.singularValues();
    return s[s.size() - 1] >= 1e-8 * s[0];
}

namespace {

// orthonormal kernel basis of dpi (n x (n-k))
Mat kernel_basis(const Mat& J)
{
    Eigen::JacobiSVD<Mat> svd(J, Eigen::ComputeFullV);
    const int n = static_cast<int>(J.cols());
    const int k = static_cast<int>(J.rows());
    return svd.matrixV().rightCols(n - k);
}

std::span<const double> sp(const Vec& v)
{ return {v.data(), static_cast<size_t>(v.size())}; }

}  // namespace

HorizontalLift horizontal_lift_vector(const FinslerMetric& m, const SubmersionSpec& spec,
                                      const Vec& p, const Vec& w)
{
    const int n = spec.total_dim();
    if (w.norm() == 0.0) throw ConeViolation("horizontal lift of the zero vector");
    Mat J = dpi_regular(spec, sp(p));

    // least-squares seed
    Vec seed = J.completeOrthogonalDecomposition().solve(w);
    if (eval_F(m, sp(p), sp(seed)) < kConeDelta * cone_scale(sp(seed))) {
        Vec nudge = kernel_basis(J).col(0);
        seed += 0.1 * w.norm() * nudge;
    }

    std::vector<double> lift = horizontal_lift_t<double>(
        m, *spec.pi, sp(p), sp(w), std::span<const double>(seed.data(), seed.size()));
    HorizontalLift out;
    out.at = p;
    out.base_vector = w;
    out.lift = to_vec(lift);
    out.norm = eval_F(m, sp(p), std::span<const double>(lift));

    out.dpi_residual = (J * out.lift - w).cwiseAbs().maxCoeff();
    Mat K = kernel_basis(J);
    Mat g = f2_half_hessian(m, sp(p), std::span<const double>(lift));
    out.ker_residual = 0.0;
    for (int c = 0; c < K.cols(); ++c) {
        Vec kc = K.col(c);
        out.ker_residual = std::max(
            out.ker_residual,
            std::abs(g_inner(g, std::span<const double>(lift), sp(kc))) / (out.norm * out.norm));
    }
    return out;
}

double induced_base_norm(const FinslerMetric& m, const SubmersionSpec& spec, const Vec& p,
                         const Vec& w)
{
    return horizontal_lift_vector(m, spec, p, w).norm;
}

SubmersionReport check_submersion(const FinslerMetric& m, const SubmersionSpec& spec,
                                  std::span<const Vec> points, int dirs_per_point,
                                  std::uint64_t seed)
{
    if (!spec.base_metric)
        throw UsageError("check_submersion: no declared base metric (use the induced variant)");
    const int k = spec.base_dim();
    SampleRng rng(seed);
    SubmersionReport rep;
    for (const auto& p : points) {
        if (!is_regular_point(spec, sp(p))) {
            ++rep.skipped_singular;
            continue;
        }
        Vec base_pt = map_value(*spec.pi, sp(p));
        for (int d = 0; d < dirs_per_point; ++d) {
            Vec w = to_vec(rng.uniform_vec(k, -1, 1));
            if (w.norm() < 0.2) continue;
            double lifted = induced_base_norm(m, spec, p, w);
            double declared = eval_F(*spec.base_metric, sp(base_pt), sp(w));
            rep.max_defect = std::max(rep.max_defect, std::abs(lifted - declared));
            ++rep.samples;
        }
    }
    return rep;
}

SubmersionReport check_submersion_induced(const FinslerMetric& m, const SubmersionSpec& spec,
                                          std::span<const Vec> points,
                                          const std::function<Vec(const Vec&)>& ref_point,
                                          int dirs_per_point, std::uint64_t seed)
{
    const int k = spec.base_dim();
    SampleRng rng(seed);
    SubmersionReport rep;
    for (const auto& p : points) {
        if (!is_regular_point(spec, sp(p))) {
            ++rep.skipped_singular;
            continue;
        }
        Vec base_pt = map_value(*spec.pi, sp(p));
        Vec q = ref_point(base_pt);
        for (int d = 0; d < dirs_per_point; ++d) {
            Vec w = to_vec(rng.uniform_vec(k, -1, 1));
            if (w.norm() < 0.2) continue;
            double a = induced_base_norm(m, spec, p, w);
            double b = induced_base_norm(m, spec, q, w);
            rep.max_defect = std::max(rep.max_defect, std::abs(a - b));
            ++rep.samples;
        }
    }
    return rep;
}

TransnormalityReport check_transnormality(const FinslerMetric& m, const SubmersionSpec& spec,
                                          const GeodesicPath& geo, int n_samples)
{
    TransnormalityReport rep;
    for (int i = 0; i <= n_samples; ++i) {
        double t = geo.t0 + (geo.t1 - geo.t0) * i / n_samples;
        Vec xt = geo.x(t), vt = geo.v(t);
        if (!is_regular_point(spec, sp(xt))) {
            ++rep.skipped_singular;
            continue;
        }
        Mat J = map_jacobian(*spec.pi, sp(xt));
        Mat K = kernel_basis(J);
        auto orth = is_orthogonal(m, sp(xt), sp(vt), K);
        rep.residuals.emplace_back(t, orth.residual);
        rep.max_residual = std::max(rep.max_residual, orth.residual);
    }
    return rep;
}

BasicFieldReport basic_field_along_fiber(const FinslerMetric& m, const SubmersionSpec& spec,
                                         const SubmanifoldPatch& fiber,
                                         std::span<const double> u0, const Vec& xi,
                                         int n_samples)
{
    if (fiber.dim() != 1)
        throw UsageError("basic_field_along_fiber: only 1-parameter fibers are sampled");
    Vec p0 = fiber.point(u0);
    Vec w = map_jacobian(*spec.pi, sp(p0)) * xi;
    double f0 = eval_F(m, sp(p0), sp(xi));

    BasicFieldReport rep;
    Vec prev = xi;
    auto [lo, hi] = fiber.param_box.at(0);
    for (int i = 0; i <= n_samples; ++i) {
        std::vector<double> u{lo + (hi - lo) * i / n_samples};
        Vec q = fiber.point(u);
        HorizontalLift hl = horizontal_lift_vector(m, spec, q, w);
        rep.values.push_back(hl.lift);
        rep.constancy_defect = std::max(rep.constancy_defect, std::abs(hl.norm - f0));
        rep.max_ker_residual = std::max(rep.max_ker_residual, hl.ker_residual);
        prev = hl.lift;
    }
    return rep;
}

NormalContinuation basic_normal_field(const FinslerMetric& m, const SubmersionSpec& spec,
                                      const SubmanifoldPatch& L, const Vec& w_base)
{
    return [&m, &spec, &L, w_base](std::span<const double> u, const Vec&) {
        Vec q = L.point(u);
        return horizontal_lift_vector(m, spec, q, w_base).lift;
    };
}

NormalDerivative basic_normal_derivative(const FinslerMetric& m, const SubmersionSpec& spec,
                                         const SubmanifoldPatch& L, std::span<const double> u,
                                         std::span<const double> du, const Vec& xi)
{
    const int n = spec.total_dim();
    const int k = L.dim();
    Vec p = L.point(u);
    Vec w = map_jacobian(*spec.pi, sp(p)) * xi;

    // lift at dual parameter along du: the dual parts of the Newton limit are
    // the field derivative
    std::vector<D1> ul(k), xl(n);
    for (int c = 0; c < k; ++c) ul[c] = D1(u[c], du[c]);
    L.param->map(std::span<const D1>(ul), std::span<D1>(xl));
    std::vector<D1> lift = horizontal_lift_t<D1>(
        m, *spec.pi, std::span<const D1>(xl), sp(w),
        std::span<const double>(xi.data(), xi.size()));

    NormalDerivative out;
    out.dxi = Vec(n);
    for (int i = 0; i < n; ++i) out.dxi[i] = lift[i].du;

    Mat B = map_jacobian(*L.param, u);
    Vec xdir = B * to_vec(du);
    ChristoffelValue gamma = christoffel(m, {p, xi});
    out.nabla = out.dxi + christoffel_contract(gamma, sp(xi), sp(xdir));
    return out;
}

LiftedGeodesic horizontal_lift_geodesic(const FinslerMetric& m, const SubmersionSpec& spec,
                                        const Vec& p, const Vec& w, double t0, double t1,
                                        int n_checks)
{
    HorizontalLift hl = horizontal_lift_vector(m, spec, p, w);
    LiftedGeodesic out;
    out.total = integrate_geodesic(m, p, hl.lift, t0, t1);

    const int k = spec.base_dim();
    std::optional<GeodesicPath> base;
    if (spec.base_metric) {
        Vec bp = map_value(*spec.pi, sp(p));
        base = integrate_geodesic(*spec.base_metric, bp, w, t0, t1);
    }

    for (int i = 0; i <= n_checks; ++i) {
        double t = t0 + (t1 - t0) * i / n_checks;
        Vec xt = out.total.x(t), vt = out.total.v(t);
        if (!is_regular_point(spec, sp(xt))) continue;
        Vec proj = map_value(*spec.pi, sp(xt));
        if (base)
            out.tracking_residual =
                std::max(out.tracking_residual, (proj - base->x(t)).cwiseAbs().maxCoeff());

        // residual of the base geodesic equation via exact chain rule:
        // d/dt (dpi gammadot) = Hess pi(gd, gd) + dpi(-2G)
        Mat J = map_jacobian(*spec.pi, sp(xt));
        Vec wt = J * vt;
        if (eval_F(m, sp(xt), sp(vt)) < kConeDelta) continue;
        Vec G = spray(m, sp(xt), sp(vt));
        Vec hess(k);
        {
            std::vector<D2> xl(spec.total_dim()), pl(k);
            for (int i2 = 0; i2 < spec.total_dim(); ++i2)
                xl[i2] = D2(D1(xt[i2], vt[i2]), D1(vt[i2]));
            eval_map<D2>(*spec.pi, xl, pl);
            for (int a = 0; a < k; ++a) hess[a] = pl[a].du.du;
        }
        Vec ddt = hess - 2.0 * (J * G);
        const FinslerMetric* bm = spec.base_metric.get();
        if (bm) {
            Vec bx = base ? base->x(t) : proj;
            if (eval_F(*bm, sp(bx), sp(wt)) > kConeDelta) {
                Vec Gb = spray(*bm, sp(proj), sp(wt));
                out.base_ode_residual =
                    std::max(out.base_ode_residual, (ddt + 2.0 * Gb).cwiseAbs().maxCoeff());
            }
        }
    }
    return out;
}

}  // namespace finsler
