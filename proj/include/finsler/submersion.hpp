#pragma once

// Candidate Finsler submersions: induced base norms as minimal-lift norms,
// horizontal lifts via the KKT system of minimizing F^2 over an affine fiber,
// basic fields, transnormality.

#include "finsler/jacobi.hpp"

namespace finsler {

struct SubmersionSpec {
    std::shared_ptr<const ChartMap> pi;                 // R^n -> R^k
    std::shared_ptr<const FinslerMetric> base_metric;   // optional declared metric

    int total_dim() const { return pi->dim_in(); }
    int base_dim() const { return pi->dim_out(); }
};

// Throws RankDeficient when the smallest singular value of dpi drops below
// 1e-8 times the largest (the regular-instants convention).
Mat dpi_regular(const SubmersionSpec& spec, std::span<const double> x);
bool is_regular_point(const SubmersionSpec& spec, std::span<const double> x);

// ------------------------------------------------------------------
// Horizontal lift: minimizer of F(p, v) subject to dpi_p v = w, solved as the
// KKT system  dpi v = w,  (1/2) grad_v F^2 = dpi^T lambda  in (v, lambda).
// Templated over the scalar so lifts differentiate through dual numbers
// (Newton is superattracting, so dual parts converge right after the values).

template <class S>
std::vector<S> horizontal_lift_t(const FinslerMetric& m, const ChartMap& pi,
                                 std::span<const S> x, std::span<const double> w,
                                 std::span<const double> seed)
{
    const int n = pi.dim_in();
    const int k = pi.dim_out();

    auto residual = [&](const std::vector<S>& vl, const std::vector<S>& lam) {
        std::vector<S> r(n + k);
        // dpi(x) v - w, with dpi evaluated at the (possibly dual) x
        std::vector<Dual<S>> xl(n), pl(k);
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) xl[i] = Dual<S>(x[i], S(i == j ? 1.0 : 0.0));
            eval_map<Dual<S>>(pi, xl, pl);
            for (int a = 0; a < k; ++a) r[a] = r[a] + pl[a].du * vl[j];
        }
        for (int a = 0; a < k; ++a) r[a] = r[a] - w[a];
        // (1/2) dF^2/dv_i - (dpi^T lambda)_i
        std::vector<Dual<S>> xd(n), vd(n);
        for (int i = 0; i < n; ++i) xd[i] = Dual<S>(x[i]);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) vd[j] = Dual<S>(vl[j], S(i == j ? 1.0 : 0.0));
            Dual<S> f2 = eval_f2<Dual<S>>(m, std::span<const Dual<S>>(xd),
                                          std::span<const Dual<S>>(vd));
            r[k + i] = 0.5 * f2.du;
        }
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) xl[i] = Dual<S>(x[i], S(i == j ? 1.0 : 0.0));
            eval_map<Dual<S>>(pi, xl, pl);
            for (int a = 0; a < k; ++a) r[k + j] = r[k + j] - pl[a].du * lam[a];
        }
        return r;
    };

    std::vector<S> vl(n), lam(k, S(0.0));
    for (int i = 0; i < n; ++i) vl[i] = S(seed[i]);

    int settled = 0;
    const int settle_target = dual_depth<S>::value + 1;
    for (int it = 0; it < 80; ++it) {
        std::vector<S> r = residual(vl, lam);
        double rn = 0.0;
        for (const auto& c : r) rn = std::max(rn, std::abs(real_of(c)));
        if (rn < 1e-13) {
            if (++settled > settle_target) break;  // extra sweeps settle the dual parts
        }
        // Jacobian in (v, lambda) by one more dual level
        MatT<S> Jm(n + k, n + k);
        std::vector<Dual<S>> vd(n), ld(k);
        for (int col = 0; col < n + k; ++col) {
            for (int i = 0; i < n; ++i) vd[i] = Dual<S>(vl[i], S(col == i ? 1.0 : 0.0));
            for (int a = 0; a < k; ++a) ld[a] = Dual<S>(lam[a], S(col == n + a ? 1.0 : 0.0));
            // evaluate residual at dual (v, lambda), same x
            std::vector<Dual<S>> xd(n);
            for (int i = 0; i < n; ++i) xd[i] = Dual<S>(x[i]);
            auto rd = [&]() {
                std::vector<Dual<S>> out(n + k);
                std::vector<Dual<Dual<S>>> xl2(n), pl2(k);
                for (int j = 0; j < n; ++j) {
                    for (int i = 0; i < n; ++i)
                        xl2[i] = Dual<Dual<S>>(Dual<S>(x[i]),
                                               Dual<S>(S(i == j ? 1.0 : 0.0)));
                    eval_map<Dual<Dual<S>>>(pi, xl2, pl2);
                    for (int a = 0; a < k; ++a) out[a] = out[a] + pl2[a].du * vd[j];
                }
                for (int a = 0; a < k; ++a) out[a] = out[a] - w[a];
                std::vector<Dual<Dual<S>>> xdd(n), vdd(n);
                for (int i = 0; i < n; ++i) xdd[i] = Dual<Dual<S>>(Dual<S>(x[i]));
                for (int i = 0; i < n; ++i) {
                    for (int j = 0; j < n; ++j)
                        vdd[j] = Dual<Dual<S>>(vd[j], Dual<S>(S(i == j ? 1.0 : 0.0)));
                    Dual<Dual<S>> f2 = eval_f2<Dual<Dual<S>>>(
                        m, std::span<const Dual<Dual<S>>>(xdd),
                        std::span<const Dual<Dual<S>>>(vdd));
                    out[k + i] = 0.5 * f2.du;
                }
                for (int j = 0; j < n; ++j) {
                    for (int i = 0; i < n; ++i)
                        xl2[i] = Dual<Dual<S>>(Dual<S>(x[i]),
                                               Dual<S>(S(i == j ? 1.0 : 0.0)));
                    eval_map<Dual<Dual<S>>>(pi, xl2, pl2);
                    for (int a = 0; a < k; ++a) out[k + j] = out[k + j] - pl2[a].du * ld[a];
                }
                return out;
            }();
            for (int row = 0; row < n + k; ++row) Jm(row, col) = rd[row].du;
        }
        std::vector<S> step = solve_dense(Jm, r);
        for (int i = 0; i < n; ++i) vl[i] = vl[i] - step[i];
        for (int a = 0; a < k; ++a) lam[a] = lam[a] - step[n + a];
    }
    {
        std::vector<S> r = residual(vl, lam);
        double rn = 0.0;
        for (const auto& c : r) rn = std::max(rn, std::abs(real_of(c)));
        if (!(rn < 1e-10)) throw NoConvergence("horizontal_lift: KKT Newton did not converge");
    }
    return vl;
}

struct HorizontalLift {
    Vec at;            // base point p
    Vec base_vector;   // w
    Vec lift;          // v with dpi(v) = w, g_v(v, ker dpi) = 0
    double norm;       // F(p, v) = induced base norm of w
    double dpi_residual;
    double ker_residual;
};

HorizontalLift horizontal_lift_vector(const FinslerMetric& m, const SubmersionSpec& spec,
                                      const Vec& p, const Vec& w);
double induced_base_norm(const FinslerMetric& m, const SubmersionSpec& spec, const Vec& p,
                         const Vec& w);

// ------------------------------------------------------------------
// Submersion property and transnormality reports.

struct SubmersionReport {
    int samples = 0;
    int skipped_singular = 0;
    double max_defect = 0.0;
    bool pass(double tol = 1e-8) const { return samples > 0 && max_defect < tol; }
};

// |induced_base_norm(p, w) - F_base(pi(p), w)| over points and directions
// (requires a declared base metric).
SubmersionReport check_submersion(const FinslerMetric& m, const SubmersionSpec& spec,
                                  std::span<const Vec> points, int dirs_per_point,
                                  std::uint64_t seed);

// Induced mode: cross-fiber constancy |induced(p, w) - induced(ref(pi(p)), w)|.
SubmersionReport check_submersion_induced(const FinslerMetric& m, const SubmersionSpec& spec,
                                          std::span<const Vec> points,
                                          const std::function<Vec(const Vec&)>& ref_point,
                                          int dirs_per_point, std::uint64_t seed);

struct TransnormalityReport {
    std::vector<std::pair<double, double>> residuals;  // (t, orthogonality residual)
    int skipped_singular = 0;
    double max_residual = 0.0;
    bool pass(double tol = 1e-6) const { return max_residual < tol; }
};

// Orthogonality of gammadot(t) to ker dpi at sampled regular instants.
TransnormalityReport check_transnormality(const FinslerMetric& m, const SubmersionSpec& spec,
                                          const GeodesicPath& geo, int n_samples);

// ------------------------------------------------------------------
// Basic fields along a fiber: the unique orthogonal lift of a fixed base
// vector at every fiber point.

struct BasicFieldReport {
    std::vector<Vec> values;
    double constancy_defect = 0.0;  // max |F(xi_q) - F(xi_p)|
    double max_ker_residual = 0.0;
};

BasicFieldReport basic_field_along_fiber(const FinslerMetric& m, const SubmersionSpec& spec,
                                         const SubmanifoldPatch& fiber,
                                         std::span<const double> u0, const Vec& xi,
                                         int n_samples);

// Normal continuation in the basic gauge: at patch parameter u, the
// horizontal lift of dpi(xi_ref) seeded by the neighbor.
NormalContinuation basic_normal_field(const FinslerMetric& m, const SubmersionSpec& spec,
                                      const SubmanifoldPatch& L, const Vec& w_base);

// Derivative of the basic field along a patch direction together with its
// covariant derivative (reference xi); the holonomy Jacobi initial data.
NormalDerivative basic_normal_derivative(const FinslerMetric& m, const SubmersionSpec& spec,
                                         const SubmanifoldPatch& L, std::span<const double> u,
                                         std::span<const double> du, const Vec& xi);

// ------------------------------------------------------------------
// Horizontal lift of a base geodesic with projection tracking.

struct LiftedGeodesic {
    GeodesicPath total;
    double tracking_residual = 0.0;   // sup |pi(gamma(t)) - base(t)| (declared base only)
    double base_ode_residual = 0.0;   // sup |d/dt(dpi gammadot) + 2 G_base|
};

LiftedGeodesic horizontal_lift_geodesic(const FinslerMetric& m, const SubmersionSpec& spec,
                                        const Vec& p, const Vec& w, double t0, double t1,
                                        int n_checks = 25);

}  // namespace finsler
