#pragma once

// Derived tensors of a Finsler metric: fundamental tensor (half v-Hessian of
// F^2), Cartan tensor (quarter third v-derivative), metric-axiom validation.

#include <span>
#include <vector>

#include "finsler/linalg.hpp"
#include "finsler/metric.hpp"

namespace finsler {

// F is smooth only outside the zero section; derivative requests inside the
// guard band are hard errors rather than garbage.
constexpr double kConeDelta = 1e-6;

struct TangentSample {
    Vec x, v;
};

double cone_scale(std::span<const double> v);

// F(x, v); returns 0 for v == 0 exactly, throws NonFiniteInput on bad input.
double eval_F(const FinslerMetric& m, std::span<const double> x, std::span<const double> v);
double eval_F(const FinslerMetric& m, const TangentSample& s);

// Throws ConeViolation unless F(v) > delta * scale.
void require_cone(const FinslerMetric& m, std::span<const double> x, std::span<const double> v);

// Half v-Hessian of F^2 at any scalar depth (no definiteness check).
template <class S>
MatT<S> f2_half_hessian_t(const FinslerMetric& m, std::span<const S> x, std::span<const S> v)
{
    const int n = m.dim();
    std::vector<Dual<Dual<S>>> xl(n), vl(n);
    for (int i = 0; i < n; ++i) xl[i] = Dual<Dual<S>>(Dual<S>(x[i]));
    MatT<S> g(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                Dual<S> inner(v[k], S(i == k ? 1.0 : 0.0));
                vl[k] = Dual<Dual<S>>(inner, Dual<S>(S(j == k ? 1.0 : 0.0)));
            }
            Dual<Dual<S>> r = eval_f2<Dual<Dual<S>>>(m, xl, vl);
            g(i, j) = 0.5 * r.du.du;
            g(j, i) = g(i, j);
        }
    }
    return g;
}

Mat f2_half_hessian(const FinslerMetric& m, std::span<const double> x, std::span<const double> v);

// g_v as a positive-definite matrix; throws DegenerateTensor otherwise.
Mat fundamental_tensor(const FinslerMetric& m, std::span<const double> x, std::span<const double> v);
Mat fundamental_tensor(const FinslerMetric& m, const TangentSample& s);

// g_v(a, b) for two chart vectors.
double g_inner(const Mat& g, std::span<const double> a, std::span<const double> b);

// Unsymmetrized quarter third v-derivative of F^2, slots (i, j, k) seeded in
// the order given; used both to build the tensor and to test total symmetry.
double cartan_raw(const FinslerMetric& m, std::span<const double> x, std::span<const double> v,
                  int i, int j, int k);

// Totally symmetric n^3 array C[i*n*n + j*n + k].
std::vector<double> cartan_tensor(const FinslerMetric& m, std::span<const double> x,
                                  std::span<const double> v);

struct ValidationReport {
    int samples = 0;
    int nonfinite = 0;
    double homogeneity_defect = 0.0;      // max relative |F(lv) - l F(v)| / (l F(v))
    double min_g_eigenvalue = 0.0;        // definiteness margin (worst over samples)
    double cartan_symmetry_defect = 0.0;  // max |C_perm - C| over slot permutations
    double euler_g_defect = 0.0;          // max relative |g_v(v,v) - F^2|
    double euler_cartan_defect = 0.0;     // max |C_v(v, ., .)|

    bool pass() const
    {
        return nonfinite == 0 && homogeneity_defect < 1e-12 && min_g_eigenvalue > 0.0 &&
               cartan_symmetry_defect < 1e-10 && euler_g_defect < 1e-10 &&
               euler_cartan_defect < 1e-10;
    }
};

ValidationReport validate_metric(const FinslerMetric& m, std::span<const TangentSample> samples);

}  // namespace finsler
