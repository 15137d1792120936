#pragma once

// Jacobi fields along geodesics.  Fields co-integrate with the geodesic state
// in one ODE system; covariant derivatives convert to plain ones through the
// nonlinear connection, so the stored second component of each field IS the
// covariant derivative J'.

#include <memory>

#include "finsler/geodesic.hpp"

namespace finsler {

struct JacobiOperatorValue {
    double t = 0.0;
    Mat R;  // w -> R_{gammadot(t)}(w) in chart components
};

JacobiOperatorValue jacobi_operator(const FinslerMetric& m, const GeodesicPath& geo, double t);

// ------------------------------------------------------------------
// Co-integrated bundle: geodesic + Jacobi fields + a D-parallel frame.

class JacobiBundle {
 public:
    int n = 0;       // chart dimension
    int m = 0;       // number of Jacobi fields
    int nframe = 0;  // number of parallel frame fields
    double t0 = 0.0, t1 = 0.0;
    DensePath path;  // state [x, v, (J_a, U_a)..., E_b...]

    Vec x(double t) const { return part(t, 0); }
    Vec v(double t) const { return part(t, 1); }
    Vec J(int a, double t) const { return part(t, 2 + 2 * a); }
    Vec Jp(int a, double t) const { return part(t, 3 + 2 * a); }
    Vec frame(int b, double t) const { return part(t, 2 + 2 * m + b); }

    GeodesicPath geodesic() const;  // standalone copy of the (x, v) block

 private:
    Vec part(double t, int block) const;
};

struct JacobiInit {
    Vec J0, U0;
};

// Integrates from (x0, v0) over [t0, t1]; frame0 columns are transported
// D-parallel (they stay g-orthonormal along geodesics when they start so).
JacobiBundle integrate_jacobi_bundle(const FinslerMetric& m, const Vec& x0, const Vec& v0,
                                     double t0, double t1, std::span<const JacobiInit> fields,
                                     const Mat& frame0 = Mat(), const OdeOptions& opt = {});

struct JacobiField {
    std::shared_ptr<const JacobiBundle> bundle;
    int index = 0;
    Vec J(double t) const { return bundle->J(index, t); }
    Vec Jp(double t) const { return bundle->Jp(index, t); }
};

// Single-field convenience (solves J'' + R(J) = 0 with the initial data of
// the given geodesic's start).
JacobiField integrate_jacobi(const FinslerMetric& m, const GeodesicPath& geo, const Vec& J0,
                             const Vec& U0, const OdeOptions& opt = {});

// ------------------------------------------------------------------
// Shape operator of a patch with respect to a unit normal.

struct ShapeOperatorValue {
    Mat S;       // k x k in the patch tangent basis
    Mat nabla;   // n x k: full covariant derivatives nabla_{u_i} xi of the
                 // min-norm normal extension (tangential part realizes S)
    double symmetry_defect = 0.0;  // | ghat S - (ghat S)^T |_max
};

ShapeOperatorValue shape_operator(const FinslerMetric& m, const SubmanifoldPatch& L,
                                  std::span<const double> u, const Vec& xi);

// ------------------------------------------------------------------
// L-Jacobi basis: n-1 fields orthogonal to the geodesic, k of tangential
// type (J = tangent vector, tan J' = S J, normal part of J' zero) and
// n-1-k of normal type (J = 0, J' spanning the g-orthocomplement of
// T_pL + span gammadot).

enum class SpaceLabel { full_W, vertical_V };

struct SelfAdjointSpace {
    std::shared_ptr<JacobiBundle> bundle;
    double t0 = 0.0;
    int k_tangent = 0;
    SpaceLabel label = SpaceLabel::full_W;

    int dim() const { return bundle->m; }
    JacobiField field(int a) const { return {bundle, a}; }
};

SelfAdjointSpace l_jacobi_basis(const FinslerMetric& m, const SubmanifoldPatch& L,
                                std::span<const double> u, const Vec& xi, double t0, double t1,
                                const OdeOptions& opt = {});

// g(J1', J2) - g(J1, J2') at t; constant (= 0 for L-Jacobi bases) in exact
// arithmetic.
double self_adjoint_defect(const FinslerMetric& m, const JacobiBundle& b, int a1, int a2,
                           double t);

// ------------------------------------------------------------------
// Variation-field oracle: central finite difference (one Richardson level)
// of s -> gamma_{N(s)}(t - t0), where N continues xi over beta(s).

using NormalContinuation =
    std::function<Vec(std::span<const double> u, const Vec& seed)>;

// min-norm cone-Newton continuation (the default gauge)
NormalContinuation cone_normal_field(const FinslerMetric& m, const SubmanifoldPatch& L);

struct ParamCurve {
    std::function<Vec(double)> u;    // s -> parameter point
    std::function<Vec(double)> du;   // s -> parameter velocity
};

struct VariationField {
    std::function<Vec(double)> J;  // t -> variation vector
    Vec J0, U0;                    // measured L-Jacobi initial data at t0
};

VariationField jacobi_by_variation(const FinslerMetric& m, const SubmanifoldPatch& L,
                                   const ParamCurve& beta, const Vec& xi,
                                   const NormalContinuation& normal, double t0, double t1,
                                   double step = 1e-4);

// Derivative of the continued normal field along a parameter direction,
// together with the covariant derivative with reference xi (gauge-consistent
// with cone_normal_field / a basic continuation).
struct NormalDerivative {
    Vec dxi;    // d/ds of the field components
    Vec nabla;  // covariant derivative with reference xi
};

NormalDerivative cone_normal_derivative(const FinslerMetric& m, const SubmanifoldPatch& L,
                                        std::span<const double> u, std::span<const double> du,
                                        const Vec& xi);

// ------------------------------------------------------------------
// Focal points: zeros of det[J_1(t) ... J_{n-1}(t)] in the bundle's parallel
// frame, located by sign change + bisection; multiplicity from the rank
// deficiency of the matrix at the zero.

struct FocalReport {
    std::vector<std::pair<double, int>> instants;       // (t, multiplicity)
    std::vector<std::pair<double, double>> det_trace;   // sampled (t, det)
    double min_gap = 0.0;
};

FocalReport detect_focal_points(const FinslerMetric& m, const SelfAdjointSpace& space,
                                double w0, double w1);

// Basis matrix of the space's fields in its parallel frame at t.
Mat basis_matrix(const FinslerMetric& m, const JacobiBundle& b, double t);

// g-orthonormal basis of the g_v-orthogonal complement of v (n-1 columns).
Mat g_orthonormal_perp(const FinslerMetric& m, std::span<const double> x,
                       std::span<const double> v);

}  // namespace finsler
