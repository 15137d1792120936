#include "finsler/wilking.hpp"

#include <cmath>

namespace finsler {

namespace {

std::span<const double> sp(const Vec& v)
{ return {v.data(), static_cast<size_t>(v.size())}; }

// Applies the Lemma-style basis adaptation: plain field values (J_c, J'_c)
// become the continuous basis (rescaled through a nearby degeneracy).
void continuous_basis(const std::vector<Vec>& Jin, const std::vector<Vec>& Jpin, double t,
                      std::span<const DegeneracyRecord> recs, double series_hw,
                      double rescale_radius, std::vector<Vec>& J, std::vector<Vec>& Jp)
{
    const int r = static_cast<int>(Jin.size());
    const DegeneracyRecord* gov = nullptr;
    for (const auto& rec : recs)
        if (std::abs(t - rec.t0) < rescale_radius) gov = &rec;
    if (!gov) {
        J = Jin;
        Jp = Jpin;
        return;
    }
    J.assign(r, Vec());
    Jp.assign(r, Vec());
    const Mat& C = gov->C;
    for (int b = 0; b < r; ++b) {
        Vec j = Vec::Zero(Jin[0].size()), jp = Vec::Zero(Jin[0].size());
        for (int c = 0; c < r; ++c) {
            j += C(c, b) * Jin[c];
            jp += C(c, b) * Jpin[c];
        }
        int vi = b - (r - gov->vanishing);
        if (vi < 0) {
            J[b] = j;
            Jp[b] = jp;
            continue;
        }
        double dt = t - gov->t0;
        if (std::abs(dt) <= series_hw) {
            // J(t)/(t-t0) = J'(t0) - dt^2 R J'(t0)/6 + O(dt^3)
            J[b] = gov->Jp0[vi] - (dt * dt / 6.0) * gov->RJp0[vi];
            Jp[b] = -(dt / 3.0) * gov->RJp0[vi];
        } else {
            J[b] = j / dt;
            Jp[b] = (jp - J[b]) / dt;
        }
    }
}

struct FrameOps {
    const FinslerMetric& m;
    Mat g;
    Vec x, v;
    std::vector<Vec> J, Jp;  // continuous basis
    Mat gram;                // g(J_a, J_b)
    Eigen::LDLT<Mat> gram_ldlt;
    std::vector<Vec> W;      // (J'_b)^h in H0
    double f2v;

    FrameOps(const FinslerMetric& metric, Vec xx, Vec vv, std::vector<Vec> Jc,
             std::vector<Vec> Jpc)
        : m(metric), x(std::move(xx)), v(std::move(vv)), J(std::move(Jc)), Jp(std::move(Jpc))
    {
        g = f2_half_hessian(m, sp(x), sp(v));
        f2v = g_inner(g, sp(v), sp(v));
        const int r = static_cast<int>(J.size());
        gram = Mat(r, r);
        for (int a = 0; a < r; ++a)
            for (int b = 0; b < r; ++b) gram(a, b) = g_inner(g, sp(J[a]), sp(J[b]));
        gram_ldlt.compute(gram);
        W.resize(r);
        for (int b = 0; b < r; ++b) W[b] = horizontal0(Jp[b]);
    }

    Vec v_coords(const Vec& X) const
    {
        const int r = static_cast<int>(J.size());
        Vec rhs(r);
        for (int b = 0; b < r; ++b) rhs[b] = g_inner(g, sp(X), sp(J[b]));
        return r > 0 ? Vec(gram_ldlt.solve(rhs)) : rhs;
    }

    Vec vertical(const Vec& X) const
    {
        Vec c = v_coords(X);
        Vec out = Vec::Zero(X.size());
        for (int b = 0; b < static_cast<int>(J.size()); ++b) out += c[b] * J[b];
        return out;
    }

    Vec tangent(const Vec& X) const
    { return (g_inner(g, sp(X), sp(v)) / f2v) * v; }

    Vec horizontal0(const Vec& X) const { return X - vertical(X) - tangent(X); }

    Vec oneill(const Vec& X) const
    {
        const int r = static_cast<int>(J.size());
        if (r == 0) return Vec::Zero(X.size());
        Vec c = v_coords(X);
        Vec av = Vec::Zero(X.size());
        for (int b = 0; b < r; ++b) av += c[b] * W[b];  // A on the vertical part

        Vec xh = X;
        for (int b = 0; b < r; ++b) xh -= c[b] * J[b];  // keeps the gammadot part
        Vec rhs(r);
        for (int b = 0; b < r; ++b) rhs[b] = -g_inner(g, sp(xh), sp(W[b]));
        Vec a = gram_ldlt.solve(rhs);
        Vec ah = Vec::Zero(X.size());
        for (int b = 0; b < r; ++b) ah += a[b] * J[b];  // A on the horizontal part
        return av + ah;
    }
};

}  // namespace

void WilkingFrame::v_basis(double t, std::vector<Vec>& J, std::vector<Vec>& Jp) const
{
    std::vector<Vec> Jin(r), Jpin(r);
    for (int c = 0; c < r; ++c) {
        Jin[c] = vbundle->J(c, t);
        Jpin[c] = vbundle->Jp(c, t);
    }
    continuous_basis(Jin, Jpin, t, degeneracies, series_halfwidth, rescale_radius, J, Jp);
}

namespace {

FrameOps frame_ops_at(const FinslerMetric& m, const JacobiBundle& b,
                      std::span<const DegeneracyRecord> recs, double shw, double rrad,
                      double t, int r)
{
    std::vector<Vec> Jin(r), Jpin(r), J, Jp;
    for (int c = 0; c < r; ++c) {
        Jin[c] = b.J(c, t);
        Jpin[c] = b.Jp(c, t);
    }
    continuous_basis(Jin, Jpin, t, recs, shw, rrad, J, Jp);
    return FrameOps(m, b.x(t), b.v(t), std::move(J), std::move(Jp));
}

}  // namespace

int WilkingFrame::dim_V(double t) const
{
    std::vector<Vec> J, Jp;
    v_basis(t, J, Jp);
    Mat P(vbundle->nframe, r);
    Vec xt = vbundle->x(t), vt = vbundle->v(t);
    Mat g = f2_half_hessian(*metric, sp(xt), sp(vt));
    for (int b = 0; b < r; ++b)
        for (int a = 0; a < vbundle->nframe; ++a) {
            Vec fr = vbundle->frame(a, t);
            P(a, b) = g_inner(g, sp(J[b]), sp(fr));
        }
    return numerical_rank(P, 1e-6);
}

WilkingFrame::Split WilkingFrame::split(double t, const Vec& X) const
{
    FrameOps ops = frame_ops_at(*metric, *vbundle, degeneracies, series_halfwidth,
                                rescale_radius, t, r);
    Split s;
    s.v_coords = ops.v_coords(X);
    s.vertical = ops.vertical(X);
    s.tangent = ops.tangent(X);
    s.horizontal = X - s.vertical - s.tangent;
    return s;
}

Vec WilkingFrame::oneill(double t, const Vec& X) const
{
    FrameOps ops = frame_ops_at(*metric, *vbundle, degeneracies, series_halfwidth,
                                rescale_radius, t, r);
    return ops.oneill(X);
}

double WilkingFrame::velocity_orthogonality(double t) const
{
    std::vector<Vec> J, Jp;
    v_basis(t, J, Jp);
    Vec xt = vbundle->x(t), vt = vbundle->v(t);
    Mat g = f2_half_hessian(*metric, sp(xt), sp(vt));
    double f = std::sqrt(g_inner(g, sp(vt), sp(vt)));
    double worst = 0.0;
    for (const auto& j : J) {
        double nj = std::sqrt(std::max(g_inner(g, sp(j), sp(j)), 1e-300));
        worst = std::max(worst, std::abs(g_inner(g, sp(j), sp(vt))) / (f * nj));
    }
    return worst;
}

ONeillValue oneill_tensor(const WilkingFrame& frame, double t, const Vec& X)
{
    return {t, frame.oneill(t, X)};
}

// ------------------------------------------------------------------

WilkingFrame build_wilking_frame(const FinslerMetric& m, const SelfAdjointSpace& W,
                                 std::span<const JacobiInit> vertical_inits, double t0,
                                 double t1, const OdeOptions& opt)
{
    const int n = m.dim();
    const int r = static_cast<int>(vertical_inits.size());
    Vec p = W.bundle->x(t0), xi = W.bundle->v(t0);

    // preconditions: vertical data inside the span of W's solutions and
    // orthogonal to the velocity
    {
        Mat A(2 * n, W.dim());
        for (int a = 0; a < W.dim(); ++a) {
            A.block(0, a, n, 1) = W.bundle->J(a, t0);
            A.block(n, a, n, 1) = W.bundle->Jp(a, t0);
        }
        Mat g = fundamental_tensor(m, sp(p), sp(xi));
        for (const auto& init : vertical_inits) {
            Vec stacked(2 * n);
            stacked << init.J0, init.U0;
            Vec resid = stacked - A * A.completeOrthogonalDecomposition().solve(stacked);
            if (resid.norm() > 1e-7 * std::max(1.0, stacked.norm()))
                throw UsageError("build_wilking_frame: vertical field not in the W span");
            if (std::abs(g_inner(g, sp(init.J0), sp(xi))) > 1e-7 ||
                std::abs(g_inner(g, sp(init.U0), sp(xi))) > 1e-7)
                throw UsageError("build_wilking_frame: vertical field not orthogonal");
        }
    }

    Mat frame0 = g_orthonormal_perp(m, sp(p), sp(xi));
    WilkingFrame frame;
    frame.metric = &m;
    frame.t0 = t0;
    frame.r = r;
    frame.vbundle = std::make_shared<JacobiBundle>(
        integrate_jacobi_bundle(m, p, xi, t0, t1, vertical_inits, frame0, opt));

    if (r == 0) return frame;

    // ---- locate degeneracy instants of the plain basis
    const JacobiBundle& b = *frame.vbundle;
    auto sigma_min = [&](double t) {
        Mat P(b.nframe, r);
        Vec xt = b.x(t), vt = b.v(t);
        Mat g = f2_half_hessian(m, sp(xt), sp(vt));
        for (int c = 0; c < r; ++c) {
            Vec j = b.J(c, t);
            for (int a = 0; a < b.nframe; ++a) {
                Vec fr = b.frame(a, t);
                P(a, c) = g_inner(g, sp(j), sp(fr));
            }
        }
        Eigen::JacobiSVD<Mat> svd(P);
        const auto& s = svd.singularValues();
        return std::make_pair(s[s.size() - 1], s[0]);
    };

    const int grid = 800;
    std::vector<double> ts(grid + 1), smin(grid + 1), smax(grid + 1);
    for (int i = 0; i <= grid; ++i) {
        ts[i] = t0 + (t1 - t0) * i / grid;
        std::tie(smin[i], smax[i]) = sigma_min(ts[i]);
    }
    std::vector<double> sorted(smax);
    std::nth_element(sorted.begin(), sorted.begin() + grid / 2, sorted.end());
    const double typical = std::max(sorted[grid / 2], 1e-30);

    for (int i = 1; i < grid; ++i) {
        if (!(smin[i] < 0.02 * typical && smin[i] <= smin[i - 1] && smin[i] <= smin[i + 1]))
            continue;
        // golden-section refinement of the dip
        double lo = ts[i - 1], hi = ts[i + 1];
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = hi - gr * (hi - lo), c = lo + gr * (hi - lo);
        double fa = sigma_min(a).first, fc = sigma_min(c).first;
        while (hi - lo > 1e-11) {
            if (fa < fc) {
                hi = c;
                c = a;
                fc = fa;
                a = hi - gr * (hi - lo);
                fa = sigma_min(a).first;
            } else {
                lo = a;
                a = c;
                fa = fc;
                c = lo + gr * (hi - lo);
                fc = sigma_min(c).first;
            }
        }
        double tstar = 0.5 * (lo + hi);
        auto [sm, sx] = sigma_min(tstar);
        if (sm > 1e-7 * typical) continue;  // near miss, not a zero

        // adapted combos from the right singular vectors at tstar
        Mat P(b.nframe, r);
        Vec xt = b.x(tstar), vt = b.v(tstar);
        Mat g = f2_half_hessian(m, sp(xt), sp(vt));
        for (int c2 = 0; c2 < r; ++c2) {
            Vec j = b.J(c2, tstar);
            for (int a2 = 0; a2 < b.nframe; ++a2) {
                Vec fr = b.frame(a2, tstar);
                P(a2, c2) = g_inner(g, sp(j), sp(fr));
            }
        }
        Eigen::JacobiSVD<Mat> svd(P, Eigen::ComputeFullV);
        const auto& s = svd.singularValues();
        int vanish = 0;
        for (int c2 = 0; c2 < s.size(); ++c2)
            if (s[c2] < 1e-6 * std::max(s[0], typical)) ++vanish;
        if (vanish == 0) continue;

        DegeneracyRecord rec;
        rec.t0 = tstar;
        rec.C = svd.matrixV();
        rec.vanishing = vanish;
        Mat R = jacobi_operator_matrix(m, sp(xt), sp(vt));
        for (int j2 = 0; j2 < vanish; ++j2) {
            Vec jp0 = Vec::Zero(n);
            for (int c2 = 0; c2 < r; ++c2)
                jp0 += rec.C(c2, r - vanish + j2) * b.Jp(c2, tstar);
            rec.Jp0.push_back(jp0);
            rec.RJp0.push_back(R * jp0);
        }
        frame.degeneracies.push_back(std::move(rec));
    }

    // isolation and constant-rank verification on the continuous basis
    for (size_t i = 1; i < frame.degeneracies.size(); ++i)
        if (frame.degeneracies[i].t0 - frame.degeneracies[i - 1].t0 < 1e-6)
            throw DimensionDrop("build_wilking_frame: degeneracies closer than 1e-6");
    if (frame.degeneracies.size() > 1) {
        double gap = std::numeric_limits<double>::infinity();
        for (size_t i = 1; i < frame.degeneracies.size(); ++i)
            gap = std::min(gap,
                           frame.degeneracies[i].t0 - frame.degeneracies[i - 1].t0);
        frame.rescale_radius = std::min(frame.rescale_radius, 0.45 * gap);
    }
    for (int i = 0; i <= grid; ++i)
        if (frame.dim_V(ts[i]) < r)
            throw DimensionDrop("build_wilking_frame: numeric rank of V(t) dropped");

    return frame;
}

// ------------------------------------------------------------------

Vec TransversalBundle::part(double t, int block) const
{
    std::vector<double> s = path.eval(t);
    Vec out(n);
    for (int i = 0; i < n; ++i) out[i] = s[static_cast<size_t>(block) * n + i];
    return out;
}

void TransversalBundle::v_basis(double t, std::vector<Vec>& J, std::vector<Vec>& Jp) const
{
    std::vector<Vec> Jin(r), Jpin(r);
    for (int c = 0; c < r; ++c) {
        Jin[c] = part(t, 2 + 2 * c);
        Jpin[c] = part(t, 3 + 2 * c);
    }
    continuous_basis(Jin, Jpin, t, degeneracies, series_halfwidth, rescale_radius, J, Jp);
}

WilkingFrame::Split TransversalBundle::split(double t, const Vec& X) const
{
    std::vector<Vec> J, Jp;
    v_basis(t, J, Jp);
    FrameOps ops(*metric, x(t), v(t), J, Jp);
    WilkingFrame::Split s;
    s.v_coords = ops.v_coords(X);
    s.vertical = ops.vertical(X);
    s.tangent = ops.tangent(X);
    s.horizontal = X - s.vertical - s.tangent;
    return s;
}

Vec TransversalBundle::oneill(double t, const Vec& X) const
{
    std::vector<Vec> J, Jp;
    v_basis(t, J, Jp);
    FrameOps ops(*metric, x(t), v(t), J, Jp);
    return ops.oneill(X);
}

TransversalBundle integrate_transversal_jacobi(const FinslerMetric& m,
                                               const WilkingFrame& frame,
                                               std::span<const TransversalInit> inits,
                                               int n_h_frame,
                                               std::span<const JacobiInit> extra_fields,
                                               const OdeOptions& opt)
{
    const int n = m.dim();
    const int r = frame.r;
    const int q = static_cast<int>(inits.size());
    const int e = n_h_frame;
    const int xN = static_cast<int>(extra_fields.size());
    const double t0 = frame.t0, t1 = frame.vbundle->t1;

    TransversalBundle tb;
    tb.metric = &m;
    tb.n = n;
    tb.r = r;
    tb.q = q;
    tb.e = e;
    tb.extra = xN;
    tb.t0 = t0;
    tb.t1 = t1;
    tb.degeneracies = frame.degeneracies;
    tb.series_halfwidth = frame.series_halfwidth;
    tb.rescale_radius = frame.rescale_radius;

    std::vector<double> y0(static_cast<size_t>(2 + 2 * r + 2 * q + e + 2 * xN) * n);
    Vec p = frame.vbundle->x(t0), xi = frame.vbundle->v(t0);
    for (int i = 0; i < n; ++i) y0[i] = p[i];
    for (int i = 0; i < n; ++i) y0[n + i] = xi[i];
    for (int c = 0; c < r; ++c) {
        Vec J0 = frame.vbundle->J(c, t0), U0 = frame.vbundle->Jp(c, t0);
        for (int i = 0; i < n; ++i) {
            y0[(2 + 2 * c) * n + i] = J0[i];
            y0[(3 + 2 * c) * n + i] = U0[i];
        }
    }
    for (int c = 0; c < q; ++c)
        for (int i = 0; i < n; ++i) {
            y0[(2 + 2 * r + 2 * c) * n + i] = inits[c].X0[i];
            y0[(2 + 2 * r + 2 * c + 1) * n + i] = inits[c].Y0[i];
        }
    if (e > 0) {
        Mat H0 = h0_basis_at(m, frame, t0);
        if (H0.cols() < e)
            throw DimensionDrop("integrate_transversal_jacobi: H0 frame too small");
        for (int c = 0; c < e; ++c)
            for (int i = 0; i < n; ++i) y0[(2 + 2 * r + 2 * q + c) * n + i] = H0(i, c);
    }
    for (int a = 0; a < xN; ++a)
        for (int i = 0; i < n; ++i) {
            y0[(2 + 2 * r + 2 * q + e + 2 * a) * n + i] = extra_fields[a].J0[i];
            y0[(2 + 2 * r + 2 * q + e + 2 * a + 1) * n + i] = extra_fields[a].U0[i];
        }

    auto recs = tb.degeneracies;
    double shw = tb.series_halfwidth, rrad = tb.rescale_radius;
    OdeRhs rhs = [&m, n, r, q, e, xN, recs, shw, rrad](double t, std::span<const double> y,
                                                       std::span<double> dy) {
        std::span<const double> x = y.subspan(0, n), v = y.subspan(n, n);
        std::vector<double> G = spray_coefficients_t<double>(m, x, v);
        Mat N = nonlinear_connection(m, x, v);
        Mat R = jacobi_operator_matrix(m, x, v);
        for (int i = 0; i < n; ++i) dy[i] = v[i];
        for (int i = 0; i < n; ++i) dy[n + i] = -2.0 * G[i];

        auto mul = [&](const Mat& A, std::span<const double> w, int out_off, double sign) {
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j) acc += A(i, j) * w[j];
                dy[out_off + i] += sign * acc;
            }
        };

        // plain Jacobi blocks (V fields and extras)
        auto jacobi_block = [&](int off) {
            std::span<const double> J = y.subspan(off, n), U = y.subspan(off + n, n);
            for (int i = 0; i < n; ++i) dy[off + i] = U[i];
            for (int i = 0; i < n; ++i) dy[off + n + i] = 0.0;
            mul(N, J, off, -1.0);
            mul(R, J, off + n, -1.0);
            mul(N, U, off + n, -1.0);
        };
        for (int c = 0; c < r; ++c) jacobi_block((2 + 2 * c) * n);
        for (int a = 0; a < xN; ++a) jacobi_block((2 + 2 * r + 2 * q + e + 2 * a) * n);

        if (q == 0 && e == 0) return;

        // continuous V basis at this instant from the live state
        std::vector<Vec> Jin(r), Jpin(r), Jc, Jpc;
        for (int c = 0; c < r; ++c) {
            Jin[c] = to_vec(y.subspan((2 + 2 * c) * n, n));
            Jpin[c] = to_vec(y.subspan((3 + 2 * c) * n, n));
        }
        continuous_basis(Jin, Jpin, t, recs, shw, rrad, Jc, Jpc);
        FrameOps ops(m, to_vec(x), to_vec(v), std::move(Jc), std::move(Jpc));

        for (int c = 0; c < q; ++c) {
            int off = (2 + 2 * r + 2 * c) * n;
            Vec X = to_vec(y.subspan(off, n)), Y = to_vec(y.subspan(off + n, n));
            Vec AX = ops.oneill(X);
            Vec AY = ops.oneill(Y);
            Vec A2X = ops.oneill(AX);
            Vec RX = R * X;
            Vec RXh = ops.horizontal0(RX);
            for (int i = 0; i < n; ++i) {
                dy[off + i] = Y[i] + AX[i];
                dy[off + n + i] = -RXh[i] + 3.0 * A2X[i] + AY[i];
            }
            mul(N, {y.data() + off, static_cast<size_t>(n)}, off, -1.0);
            mul(N, {y.data() + off + n, static_cast<size_t>(n)}, off + n, -1.0);
        }
        for (int c = 0; c < e; ++c) {
            int off = (2 + 2 * r + 2 * q + c) * n;
            Vec E = to_vec(y.subspan(off, n));
            Vec AE = ops.oneill(E);
            for (int i = 0; i < n; ++i) dy[off + i] = AE[i];
            mul(N, {y.data() + off, static_cast<size_t>(n)}, off, -1.0);
        }
    };

    tb.path = integrate_ode(rhs, t0, t1, y0, opt);
    return tb;
}

Mat h0_basis_at(const FinslerMetric& m, const WilkingFrame& frame, double t)
{
    const int n = m.dim();
    const int r = frame.r;
    Vec xt = frame.vbundle->x(t), vt = frame.vbundle->v(t);
    Mat g = fundamental_tensor(m, sp(xt), sp(vt));
    Mat perp = g_orthonormal_perp(m, sp(xt), sp(vt));  // n x (n-1)

    std::vector<Vec> J, Jp;
    frame.v_basis(t, J, Jp);
    FrameOps ops(m, xt, vt, J, Jp);

    // project out the vertical parts, then pick the most independent columns
    // in the g-inner product (pivoted QR in Cholesky coordinates)
    Mat proj(n, perp.cols());
    for (int c = 0; c < perp.cols(); ++c) proj.col(c) = ops.horizontal0(perp.col(c));
    Eigen::LLT<Mat> llt(g);
    Mat L = llt.matrixL();
    Mat Z = L.transpose() * proj;
    Eigen::ColPivHouseholderQR<Mat> qr(Z);
    int keep = std::min<int>(n - 1 - r, static_cast<int>(qr.rank()));
    Mat Q = qr.householderQ();
    Mat Zkeep = Q.leftCols(keep);
    Mat out = L.transpose().triangularView<Eigen::Upper>().solve(Zkeep);
    return out;
}

namespace {

Mat transversal_matrix(const FinslerMetric& m, const TransversalBundle& tb, double t)
{
    Vec xt = tb.x(t), vt = tb.v(t);
    Mat g = f2_half_hessian(m, sp(xt), sp(vt));
    Mat M(tb.e, tb.q);
    for (int c = 0; c < tb.q; ++c) {
        Vec X = tb.X(c, t);
        for (int a = 0; a < tb.e; ++a) {
            Vec E = tb.hframe(a, t);
            M(a, c) = g_inner(g, sp(X), sp(E));
        }
    }
    return M;
}

}  // namespace

ConjugateReport transversal_conjugate_points(const FinslerMetric& m, const WilkingFrame& frame,
                                             double w0, double w1, const OdeOptions& opt)
{
    const int n = m.dim();
    const int q = n - 1 - frame.r;
    Mat H0 = h0_basis_at(m, frame, frame.t0);
    std::vector<TransversalInit> inits;
    for (int c = 0; c < q; ++c) inits.push_back({Vec::Zero(n), H0.col(c)});
    TransversalBundle tb = integrate_transversal_jacobi(m, frame, inits, q, {}, opt);
    if (tb.q == 0) throw WindowDegenerate("transversal_conjugate_points: H0 is trivial");

    auto det_at = [&](double t) { return transversal_matrix(m, tb, t).determinant(); };

    ConjugateReport rep;
    const int samples = 600;
    double scale = 0.0;
    std::vector<double> ts(samples + 1), ds(samples + 1);
    for (int i = 0; i <= samples; ++i) {
        ts[i] = w0 + (w1 - w0) * i / samples;
        ds[i] = det_at(ts[i]);
        scale = std::max(scale, std::abs(ds[i]));
        rep.det_trace.emplace_back(ts[i], ds[i]);
    }
    if (scale < 1e-12)
        throw WindowDegenerate("transversal_conjugate_points: determinant vanishes on window");
    for (int i = 0; i < samples; ++i) {
        if (ds[i] == 0.0 || ds[i] * ds[i + 1] > 0.0) continue;
        double lo = ts[i], hi = ts[i + 1], flo = ds[i];
        while (hi - lo > 1e-9) {
            double mid = 0.5 * (lo + hi);
            double fm = det_at(mid);
            if (fm == 0.0) { lo = hi = mid; break; }
            if (flo * fm < 0.0) hi = mid;
            else { lo = mid; flo = fm; }
        }
        double tstar = 0.5 * (lo + hi);
        Eigen::JacobiSVD<Mat> svd(transversal_matrix(m, tb, tstar));
        const auto& sv = svd.singularValues();
        int mult = 0;
        for (int c = 0; c < sv.size(); ++c)
            if (sv[c] < 1e-6 * sv[0]) ++mult;
        rep.instants.emplace_back(tstar, std::max(1, mult));
    }
    return rep;
}

}  // namespace finsler
