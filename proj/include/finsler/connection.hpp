#pragma once

// Spray coefficients, nonlinear connection, Chern Christoffel symbols and the
// Jacobi operator.  Geodesics integrate in spray form; Christoffel symbols
// appear only where reference-vector covariant derivatives are required.

#include <span>
#include <vector>

#include "finsler/linalg.hpp"
#include "finsler/metric.hpp"
#include "finsler/tensors.hpp"

namespace finsler {

// G^i = (1/4) g^{il} ( d2F2/dx^k dv^l v^k - dF2/dx^l ); geodesics solve
// xdd = -2 G(x, xd).  Templated so the curvature pipeline can differentiate
// through it.
template <class S>
std::vector<S> spray_coefficients_t(const FinslerMetric& m, std::span<const S> x,
                                    std::span<const S> v)
{
    const int n = m.dim();
    MatT<S> g = f2_half_hessian_t<S>(m, x, v);

    using T2 = Dual<Dual<S>>;
    using T1 = Dual<S>;
    std::vector<S> rhs(n);
    {
        // mixed term: x lifted along the frozen direction v at the inner
        // level, v_l seeded at the outer level
        std::vector<T2> xl(n), vl(n);
        for (int i = 0; i < n; ++i) xl[i] = T2(T1(x[i], v[i]), T1(S(0.0)));
        for (int l = 0; l < n; ++l) {
            for (int k = 0; k < n; ++k)
                vl[k] = T2(T1(v[k]), T1(S(k == l ? 1.0 : 0.0)));
            T2 r = eval_f2<T2>(m, xl, vl);
            rhs[l] = r.du.du;
        }
    }
    {
        std::vector<T1> xl(n), vl(n);
        for (int i = 0; i < n; ++i) vl[i] = T1(v[i]);
        for (int l = 0; l < n; ++l) {
            for (int i = 0; i < n; ++i) xl[i] = T1(x[i], S(i == l ? 1.0 : 0.0));
            T1 r = eval_f2<T1>(m, xl, vl);
            rhs[l] = rhs[l] - r.du;
        }
    }
    std::vector<S> y = solve_dense(g, rhs);
    for (auto& c : y) c = 0.25 * c;
    return y;
}

struct SprayCoefficients {
    TangentSample at;
    Vec G;
};

// Double-precision entry point; checks the cone guard and the conditioning
// of g (SingularTensor above 1e12).
SprayCoefficients spray_coefficients(const FinslerMetric& m, const TangentSample& s);
Vec spray(const FinslerMetric& m, std::span<const double> x, std::span<const double> v);

// N^i_j = dG^i/dv^j.
Mat nonlinear_connection(const FinslerMetric& m, std::span<const double> x,
                         std::span<const double> v);

struct ChristoffelValue {
    TangentSample at;
    int n = 0;
    std::vector<double> gamma;  // gamma[l*n*n + j*n + k], symmetric in (j, k)
    double operator()(int l, int j, int k) const
    { return gamma[static_cast<size_t>(l) * n * n + j * n + k]; }
};

ChristoffelValue christoffel(const FinslerMetric& m, const TangentSample& s);

// (Gamma(v))(a, b)^k = a^i b^j Gamma^k_ij(v)
Vec christoffel_contract(const ChristoffelValue& c, std::span<const double> a,
                         std::span<const double> b);

// Jacobi operator R^i_k(x, v) from spray curvature:
//   R^i_k = 2 dG^i/dx^k - v^j d2G^i/dx^j dv^k + 2 G^j d2G^i/dv^j dv^k
//           - dG^i/dv^j dG^j/dv^k.
Mat jacobi_operator_matrix(const FinslerMetric& m, std::span<const double> x,
                           std::span<const double> v);

}  // namespace finsler
