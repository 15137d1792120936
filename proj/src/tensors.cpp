#include "finsler/tensors.hpp"

#include <algorithm>
#include <cmath>

namespace finsler {

double cone_scale(std::span<const double> v)
{
    double m = 0.0;
    for (double c : v) m = std::max(m, std::abs(c));
    return std::max(1.0, m);
}

double eval_F(const FinslerMetric& m, std::span<const double> x, std::span<const double> v)
{
    for (double c : x)
        if (!std::isfinite(c)) throw NonFiniteInput("eval_F: non-finite base point");
    bool zero = true;
    for (double c : v) {
        if (!std::isfinite(c)) throw NonFiniteInput("eval_F: non-finite vector");
        if (c != 0.0) zero = false;
    }
    if (zero) return 0.0;
    return std::sqrt(m.f2(x, v));
}

double eval_F(const FinslerMetric& m, const TangentSample& s)
{
    return eval_F(m, std::span<const double>(s.x.data(), s.x.size()),
                  std::span<const double>(s.v.data(), s.v.size()));
}

void require_cone(const FinslerMetric& m, std::span<const double> x, std::span<const double> v)
{
    double f = eval_F(m, x, v);
    if (!(f > kConeDelta * cone_scale(v)))
        throw ConeViolation("derivative requested inside the smoothness-cone guard");
}

Mat f2_half_hessian(const FinslerMetric& m, std::span<const double> x, std::span<const double> v)
{
    MatT<double> g = f2_half_hessian_t<double>(m, x, v);
    Mat out(g.rows, g.cols);
    for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) out(i, j) = g(i, j);
    return out;
}

Mat fundamental_tensor(const FinslerMetric& m, std::span<const double> x, std::span<const double> v)
{
    require_cone(m, x, v);
    Mat g = f2_half_hessian(m, x, v);
    Eigen::SelfAdjointEigenSolver<Mat> es(g);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw DegenerateTensor("fundamental tensor is not positive definite");
    return g;
}

Mat fundamental_tensor(const FinslerMetric& m, const TangentSample& s)
{
    return fundamental_tensor(m, std::span<const double>(s.x.data(), s.x.size()),
                              std::span<const double>(s.v.data(), s.v.size()));
}

double g_inner(const Mat& g, std::span<const double> a, std::span<const double> b)
{
    double acc = 0.0;
    for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) acc += g(i, j) * a[i] * b[j];
    return acc;
}

double cartan_raw(const FinslerMetric& m, std::span<const double> x, std::span<const double> v,
                  int i, int j, int k)
{
    const int n = m.dim();
    std::vector<D3> xl(n), vl(n);
    for (int c = 0; c < n; ++c) xl[c] = D3(D2(D1(x[c])));
    for (int c = 0; c < n; ++c) {
        D1 l1(v[c], i == c ? 1.0 : 0.0);
        D2 l2(l1, D1(j == c ? 1.0 : 0.0));
        vl[c] = D3(l2, D2(D1(k == c ? 1.0 : 0.0)));
    }
    D3 r = eval_f2<D3>(m, xl, vl);
    return 0.25 * r.du.du.du;
}

std::vector<double> cartan_tensor(const FinslerMetric& m, std::span<const double> x,
                                  std::span<const double> v)
{
    require_cone(m, x, v);
    const int n = m.dim();
    std::vector<double> c(static_cast<size_t>(n) * n * n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            for (int k = j; k < n; ++k) {
                double val = cartan_raw(m, x, v, i, j, k);
                int idx[3] = {i, j, k};
                std::sort(idx, idx + 3);
                int a = idx[0], b = idx[1], d = idx[2];
                int perms[6][3] = {{a, b, d}, {a, d, b}, {b, a, d},
                                   {b, d, a}, {d, a, b}, {d, b, a}};
                for (auto& p : perms)
                    c[static_cast<size_t>(p[0]) * n * n + p[1] * n + p[2]] = val;
            }
    return c;
}

ValidationReport validate_metric(const FinslerMetric& m, std::span<const TangentSample> samples)
{
    ValidationReport rep;
    rep.samples = static_cast<int>(samples.size());
    rep.min_g_eigenvalue = std::numeric_limits<double>::infinity();
    const int n = m.dim();
    int probe = 0;
    for (const auto& s : samples) {
        std::span<const double> x(s.x.data(), s.x.size());
        std::span<const double> v(s.v.data(), s.v.size());
        try {
            double f = eval_F(m, x, v);
            if (!(f > kConeDelta * cone_scale(v))) { ++rep.nonfinite; continue; }

            double lam = 1.75 + 0.5 * ((probe++ % 7) / 7.0);
            std::vector<double> lv(n);
            for (int i = 0; i < n; ++i) lv[i] = lam * v[i];
            double fl = eval_F(m, x, lv);
            rep.homogeneity_defect =
                std::max(rep.homogeneity_defect, std::abs(fl - lam * f) / (lam * f));

            Mat g = f2_half_hessian(m, x, v);
            if (!g.allFinite()) { ++rep.nonfinite; continue; }
            Eigen::SelfAdjointEigenSolver<Mat> es(g);
            rep.min_g_eigenvalue = std::min(rep.min_g_eigenvalue, es.eigenvalues().minCoeff());

            double gvv = g_inner(g, v, v);
            rep.euler_g_defect =
                std::max(rep.euler_g_defect, std::abs(gvv - f * f) / (f * f));

            // Total symmetry probed on independently seeded slot orders; the
            // assembled tensor is symmetric by construction and proves nothing.
            int i = probe % n, j = (probe / 2) % n, k = (probe / 3) % n;
            double c0 = cartan_raw(m, x, v, i, j, k);
            double sym = std::max({std::abs(cartan_raw(m, x, v, j, i, k) - c0),
                                   std::abs(cartan_raw(m, x, v, k, j, i) - c0),
                                   std::abs(cartan_raw(m, x, v, i, k, j) - c0)});
            rep.cartan_symmetry_defect = std::max(rep.cartan_symmetry_defect, sym);

            // C_v(v, ., .) = 0 by 0-homogeneity of g.
            double euler_c = 0.0;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    double acc = 0.0;
                    for (int l = 0; l < n; ++l) acc += cartan_raw(m, x, v, l, a, b) * v[l];
                    euler_c = std::max(euler_c, std::abs(acc));
                }
            rep.euler_cartan_defect = std::max(rep.euler_cartan_defect, euler_c);
        } catch (const WindTooStrong&) {
            ++rep.nonfinite;
        } catch (const NonFiniteInput&) {
            ++rep.nonfinite;
        }
    }
    if (rep.samples == 0) rep.min_g_eigenvalue = 0.0;
    return rep;
}

}  // namespace finsler
