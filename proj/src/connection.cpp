#include "finsler/connection.hpp"

#include <cmath>

namespace finsler {

namespace {

void check_conditioning(const FinslerMetric& m, std::span<const double> x,
                        std::span<const double> v)
{
    Mat g = f2_half_hessian(m, x, v);
    Eigen::SelfAdjointEigenSolver<Mat> es(g);
    double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12)
        throw SingularTensor("fundamental tensor numerically non-invertible");
}

}  // namespace

Vec spray(const FinslerMetric& m, std::span<const double> x, std::span<const double> v)
{
    require_cone(m, x, v);
    std::vector<double> g = spray_coefficients_t<double>(m, x, v);
    return to_vec(g);
}

SprayCoefficients spray_coefficients(const FinslerMetric& m, const TangentSample& s)
{
    std::span<const double> x(s.x.data(), s.x.size());
    std::span<const double> v(s.v.data(), s.v.size());
    require_cone(m, x, v);
    check_conditioning(m, x, v);
    return {s, spray(m, x, v)};
}

Mat nonlinear_connection(const FinslerMetric& m, std::span<const double> x,
                         std::span<const double> v)
{
    const int n = m.dim();
    std::vector<D1> xl(n), vl(n);
    for (int i = 0; i < n; ++i) xl[i] = D1(x[i]);
    Mat N(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) vl[i] = D1(v[i], i == j ? 1.0 : 0.0);
        std::vector<D1> G = spray_coefficients_t<D1>(m, xl, vl);
        for (int i = 0; i < n; ++i) N(i, j) = G[i].du;
    }
    return N;
}

ChristoffelValue christoffel(const FinslerMetric& m, const TangentSample& s)
{
    std::span<const double> x(s.x.data(), s.x.size());
    std::span<const double> v(s.v.data(), s.v.size());
    require_cone(m, x, v);
    check_conditioning(m, x, v);
    const int n = m.dim();

    Mat N = nonlinear_connection(m, x, v);

    // x- and v-derivatives of the fundamental tensor
    std::vector<Mat> dgx(n, Mat(n, n)), dgv(n, Mat(n, n));
    std::vector<D1> xl(n), vl(n);
    for (int d = 0; d < n; ++d) {
        for (int i = 0; i < n; ++i) {
            xl[i] = D1(x[i], i == d ? 1.0 : 0.0);
            vl[i] = D1(v[i]);
        }
        MatT<D1> gx = f2_half_hessian_t<D1>(m, xl, vl);
        for (int i = 0; i < n; ++i) xl[i] = D1(x[i]);
        for (int i = 0; i < n; ++i) vl[i] = D1(v[i], i == d ? 1.0 : 0.0);
        MatT<D1> gv = f2_half_hessian_t<D1>(m, xl, vl);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                dgx[d](a, b) = gx(a, b).du;
                dgv[d](a, b) = gv(a, b).du;
            }
    }

    // horizontal derivative: delta_i g_ab = dg_ab/dx_i - N^m_i dg_ab/dv_m
    std::vector<Mat> dg(n, Mat(n, n));
    for (int d = 0; d < n; ++d) {
        dg[d] = dgx[d];
        for (int mth = 0; mth < n; ++mth) dg[d] -= N(mth, d) * dgv[mth];
    }

    Mat g = f2_half_hessian(m, x, v);
    Eigen::LLT<Mat> llt(g);

    ChristoffelValue out;
    out.at = s;
    out.n = n;
    out.gamma.assign(static_cast<size_t>(n) * n * n, 0.0);
    Vec rhs(n);
    for (int j = 0; j < n; ++j)
        for (int k = j; k < n; ++k) {
            for (int sIdx = 0; sIdx < n; ++sIdx)
                rhs[sIdx] = 0.5 * (dg[k](sIdx, j) + dg[j](sIdx, k) - dg[sIdx](j, k));
            Vec gam = llt.solve(rhs);
            for (int l = 0; l < n; ++l) {
                out.gamma[static_cast<size_t>(l) * n * n + j * n + k] = gam[l];
                out.gamma[static_cast<size_t>(l) * n * n + k * n + j] = gam[l];
            }
        }
    return out;
}

Vec christoffel_contract(const ChristoffelValue& c, std::span<const double> a,
                         std::span<const double> b)
{
    const int n = c.n;
    Vec out = Vec::Zero(n);
    for (int l = 0; l < n; ++l) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) acc += a[i] * b[j] * c(l, i, j);
        out[l] = acc;
    }
    return out;
}

Mat jacobi_operator_matrix(const FinslerMetric& m, std::span<const double> x,
                           std::span<const double> v)
{
    require_cone(m, x, v);
    const int n = m.dim();

    std::vector<double> G0 = spray_coefficients_t<double>(m, x, v);

    // first derivatives of G
    Mat Gx(n, n), Jv(n, n);
    {
        std::vector<D1> xl(n), vl(n);
        for (int d = 0; d < n; ++d) {
            for (int i = 0; i < n; ++i) {
                xl[i] = D1(x[i], i == d ? 1.0 : 0.0);
                vl[i] = D1(v[i]);
            }
            std::vector<D1> G = spray_coefficients_t<D1>(m, xl, vl);
            for (int i = 0; i < n; ++i) Gx(i, d) = G[i].du;
            for (int i = 0; i < n; ++i) {
                xl[i] = D1(x[i]);
                vl[i] = D1(v[i], i == d ? 1.0 : 0.0);
            }
            G = spray_coefficients_t<D1>(m, xl, vl);
            for (int i = 0; i < n; ++i) Jv(i, d) = G[i].du;
        }
    }

    // v^j d2G/dx^j dv^k : inner x-seed along v, outer v-seed e_k
    Mat T1m(n, n), T2m(n, n);
    {
        std::vector<D2> xl(n), vl(n);
        for (int k = 0; k < n; ++k) {
            for (int i = 0; i < n; ++i) {
                xl[i] = D2(D1(x[i], v[i]), D1(0.0));
                vl[i] = D2(D1(v[i]), D1(i == k ? 1.0 : 0.0));
            }
            std::vector<D2> G = spray_coefficients_t<D2>(m, xl, vl);
            for (int i = 0; i < n; ++i) T1m(i, k) = G[i].du.du;

            // G^j d2G/dv^j dv^k : inner v-seed along frozen G0
            for (int i = 0; i < n; ++i) {
                xl[i] = D2(D1(x[i]), D1(0.0));
                vl[i] = D2(D1(v[i], G0[i]), D1(i == k ? 1.0 : 0.0));
            }
            G = spray_coefficients_t<D2>(m, xl, vl);
            for (int i = 0; i < n; ++i) T2m(i, k) = G[i].du.du;
        }
    }

    return 2.0 * Gx - T1m + 2.0 * T2m - Jv * Jv;
}

}  // namespace finsler
