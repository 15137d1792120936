#pragma once

// Dense linear solve templated over the scalar type, so that systems whose
// entries are (nested) dual numbers propagate derivatives exactly.  Partial
// pivoting uses the underlying real magnitude.  Dimensions here are tiny
// (n <= 6); anything double-valued and larger goes through Eigen instead.

#include <cmath>
#include <span>
#include <vector>

#include "finsler/dual.hpp"
#include "finsler/errors.hpp"

namespace finsler {

template <class S>
struct MatT {
    int rows = 0, cols = 0;
    std::vector<S> a;

    MatT() = default;
    MatT(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c) {}
    S& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    const S& operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
};

// Solves A x = b in place; A is n x n, b has n entries.
template <class S>
std::vector<S> solve_dense(MatT<S> A, std::vector<S> b)
{
    const int n = A.rows;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::abs(real_of(A(k, k)));
        for (int i = k + 1; i < n; ++i) {
            double m = std::abs(real_of(A(i, k)));
            if (m > best) { best = m; piv = i; }
        }
        if (!(best > 0.0))
            throw SingularTensor("solve_dense: singular matrix");
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (int i = k + 1; i < n; ++i) {
            S f = A(i, k) / A(k, k);
            for (int j = k + 1; j < n; ++j) A(i, j) = A(i, j) - f * A(k, j);
            b[i] = b[i] - f * b[k];
        }
    }
    std::vector<S> x(n);
    for (int i = n - 1; i >= 0; --i) {
        S s = b[i];
        for (int j = i + 1; j < n; ++j) s = s - A(i, j) * x[j];
        x[i] = s / A(i, i);
    }
    return x;
}

}  // namespace finsler
