#pragma once

// Wilking distribution pair (V(t), H(t)) along a geodesic, the O'Neill
// tensor, and the transversal Jacobi (Morse-Sturm) equation.
//
// Conventions: H(t) is the full g_{gammadot}-orthocomplement of V(t), so the
// velocity lies in H; vectors split as V-part + gammadot-part + H0-part with
// H0 = H intersected with the g-orthocomplement of gammadot, and reported
// horizontal projections land in H0.  Near an instant where a basis field
// vanishes, the continuous basis swaps in J(t)/(t - t0), realized by a series
// around t0 within a half-width 1e-4 window.

#include "finsler/jacobi.hpp"

namespace finsler {

struct DegeneracyRecord {
    double t0 = 0.0;
    Mat C;                     // r x r orthogonal basis adaptation (columns = combos)
    int vanishing = 0;         // the last `vanishing` combos have J(t0) = 0
    std::vector<Vec> Jp0;      // J'(t0) per vanishing combo
    std::vector<Vec> RJp0;     // R_{gammadot(t0)} J'(t0) per vanishing combo
};

class WilkingFrame {
 public:
    const FinslerMetric* metric = nullptr;
    std::shared_ptr<JacobiBundle> vbundle;  // geodesic + V basis + parallel frame
    double t0 = 0.0;
    int r = 0;  // dim V
    std::vector<DegeneracyRecord> degeneracies;
    double series_halfwidth = 1e-4;
    double rescale_radius = 1e-2;

    int dim() const { return vbundle->n; }

    // continuous (rescaled) V basis and its covariant derivatives at t
    void v_basis(double t, std::vector<Vec>& J, std::vector<Vec>& Jp) const;

    // numeric dim V(t) from the continuous basis (relative threshold 1e-6)
    int dim_V(double t) const;

    struct Split {
        Vec vertical, horizontal, tangent;  // X = vertical + tangent + horizontal
        Vec v_coords;                       // coordinates of the vertical part
    };
    Split split(double t, const Vec& X) const;

    // O'Neill tensor A(X) = ((X^h)')^v + ((X^v)')^h built from the basis and
    // its g-duality (skew pairing between H and V).
    Vec oneill(double t, const Vec& X) const;

    // residual |g(V_b, gammadot)| diagnostics
    double velocity_orthogonality(double t) const;
};

struct ONeillValue {
    double t;
    Vec applied;
};

ONeillValue oneill_tensor(const WilkingFrame& frame, double t, const Vec& X);

// Builds the frame over [t0, t1] from the geodesic start (p, xi) and the
// vertical initial data; vertical fields must lie in the span of the given
// self-adjoint W data and be orthogonal to the velocity.  DimensionDrop when
// the numeric rank of the continuous basis falls below dim V away from the
// located degeneracies.  The default tolerances run one digit tighter than
// the geodesic default: the 1/(t - t0) rescale near a degeneracy amplifies
// conserved-quantity drift by up to the inverse window width.
WilkingFrame build_wilking_frame(const FinslerMetric& m, const SelfAdjointSpace& W,
                                 std::span<const JacobiInit> vertical_inits, double t0,
                                 double t1, const OdeOptions& opt = {1e-10, 1e-13});

// ------------------------------------------------------------------
// Transversal Jacobi equation (D^h)^2 X + (R X)^h - 3 A^2 X = 0 in chart
// components, co-integrated with the geodesic, the V basis, a D^h-parallel
// H0 frame, and optionally extra plain Jacobi fields for comparisons.

struct TransversalInit {
    Vec X0, Y0;  // Y = D^h X
};

class TransversalBundle {
 public:
    int n = 0, r = 0, q = 0, e = 0, extra = 0;
    double t0 = 0.0, t1 = 0.0;
    DensePath path;
    std::vector<DegeneracyRecord> degeneracies;
    double series_halfwidth = 1e-4, rescale_radius = 1e-2;

    Vec x(double t) const { return part(t, 0); }
    Vec v(double t) const { return part(t, 1); }
    Vec X(int c, double t) const { return part(t, 2 + 2 * r + 2 * c); }
    Vec Y(int c, double t) const { return part(t, 2 + 2 * r + 2 * c + 1); }
    Vec hframe(int c, double t) const { return part(t, 2 + 2 * r + 2 * q + c); }
    Vec extraJ(int a, double t) const { return part(t, 2 + 2 * r + 2 * q + e + 2 * a); }
    Vec extraJp(int a, double t) const { return part(t, 2 + 2 * r + 2 * q + e + 2 * a + 1); }

    void v_basis(double t, std::vector<Vec>& J, std::vector<Vec>& Jp) const;
    WilkingFrame::Split split(double t, const Vec& X) const;
    Vec oneill(double t, const Vec& X) const;

 private:
    friend TransversalBundle integrate_transversal_jacobi(const FinslerMetric&,
                                                          const WilkingFrame&,
                                                          std::span<const TransversalInit>,
                                                          int, std::span<const JacobiInit>,
                                                          const OdeOptions&);
    const FinslerMetric* metric = nullptr;
    Vec part(double t, int block) const;
};

TransversalBundle integrate_transversal_jacobi(const FinslerMetric& m,
                                               const WilkingFrame& frame,
                                               std::span<const TransversalInit> inits,
                                               int n_h_frame,
                                               std::span<const JacobiInit> extra_fields = {},
                                               const OdeOptions& opt = {});

// g-orthonormal basis of H0(t0) = orthocomplement of V(t0) + span gammadot(t0).
Mat h0_basis_at(const FinslerMetric& m, const WilkingFrame& frame, double t);

// Conjugate instants of the transversal equation: zeros of the determinant of
// the H0 solution family with X(t0) = 0, X'(t0) = H0 basis.
struct ConjugateReport {
    std::vector<std::pair<double, int>> instants;
    std::vector<std::pair<double, double>> det_trace;
};

ConjugateReport transversal_conjugate_points(const FinslerMetric& m, const WilkingFrame& frame,
                                             double w0, double w1,
                                             const OdeOptions& opt = {});

}  // namespace finsler
