#include "finsler/ode.hpp"

#include <algorithm>
#include <cmath>

namespace finsler {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

// Where the cubic-Hermite defect is near its maximum on [0, 1].
constexpr double kDefectProbe = 0.21132486540518711;

void hermite(double s, double h, std::span<const double> y0, std::span<const double> f0,
             std::span<const double> y1, std::span<const double> f1, std::span<double> out)
{
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
}

void hermite_deriv(double s, double h, std::span<const double> y0, std::span<const double> f0,
                   std::span<const double> y1, std::span<const double> f1, std::span<double> out)
{
    const double s2 = s * s;
    const double d00 = (6 * s2 - 6 * s) / h, d10 = 3 * s2 - 4 * s + 1;
    const double d01 = (-6 * s2 + 6 * s) / h, d11 = 3 * s2 - 2 * s;
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = d00 * y0[i] + d10 * f0[i] + d01 * y1[i] + d11 * f1[i];
}

struct Stepper {
    const OdeRhs& rhs;
    int n;
    std::vector<double> k2, k3, k4, k5, k6, ytmp, yerr, defect, yd;

    explicit Stepper(const OdeRhs& r, int n_)
        : rhs(r), n(n_), k2(n_), k3(n_), k4(n_), k5(n_), k6(n_), ytmp(n_), yerr(n_),
          defect(n_), yd(n_) {}

    // One RK step from (t, y, f=k1) with step h; fills ynew, fnew (FSAL) and
    // returns the scaled error norm.
    double step(double t, std::span<const double> y, std::span<const double> k1, double h,
                std::vector<double>& ynew, std::vector<double>& fnew, const OdeOptions& opt)
    {
        for (int i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        rhs(t + c2 * h, ytmp, k2);
        for (int i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * h, ytmp, k3);
        for (int i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * h, ytmp, k4);
        for (int i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * h, ytmp, k5);
        for (int i = 0; i < n; ++i)
            ytmp[i] = y[i] +
                      h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(t + h, ytmp, k6);
        for (int i = 0; i < n; ++i)
            ynew[i] = y[i] +
                      h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        rhs(t + h, ynew, fnew);
        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                            e7 * fnew[i]);
            double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err += (e / sc) * (e / sc);
        }
        return std::sqrt(err / n);
    }

    // Scaled interpolation-defect norm at the probe point, times |h|.
    double defect_norm(double t, double h, std::span<const double> y0,
                       std::span<const double> f0, std::span<const double> y1,
                       std::span<const double> f1, const OdeOptions& opt)
    {
        hermite(kDefectProbe, h, y0, f0, y1, f1, ytmp);
        rhs(t + kDefectProbe * h, ytmp, defect);
        hermite_deriv(kDefectProbe, h, y0, f0, y1, f1, yd);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            double sc = opt.atol + opt.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
            double d = (yd[i] - defect[i]) / sc;
            acc += d * d;
        }
        return std::abs(h) * std::sqrt(acc / n) / 3.0;
    }
};

double initial_step_guess(const OdeRhs& rhs, double t0, std::span<const double> y0,
                          std::span<const double> f0, double dir, const OdeOptions& opt)
{
    const int n = static_cast<int>(y0.size());
    double dny = 0.0, dnf = 0.0;
    for (int i = 0; i < n; ++i) {
        double sc = opt.atol + opt.rtol * std::abs(y0[i]);
        dny += (y0[i] / sc) * (y0[i] / sc);
        dnf += (f0[i] / sc) * (f0[i] / sc);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
    std::vector<double> y1(n), f1(n);
    for (int i = 0; i < n; ++i) y1[i] = y0[i] + dir * h * f0[i];
    rhs(t0 + dir * h, y1, f1);
    double der2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double sc = opt.atol + opt.rtol * std::abs(y0[i]);
        double d = (f1[i] - f0[i]) / sc;
        der2 += d * d;
    }
    der2 = std::sqrt(der2) / h;
    double der12 = std::max(der2, std::sqrt(dnf));
    double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    return std::min(100.0 * h, h1);
}

}  // namespace

DensePath DensePath::from_nodes(std::vector<Node> nodes)
{
    DensePath p;
    p.nodes_ = std::move(nodes);
    for (size_t i = 1; i < p.nodes_.size(); ++i)
        p.steps_.push_back(p.nodes_[i].t - p.nodes_[i - 1].t);
    return p;
}

void DensePath::eval(double t, std::span<double> out) const
{
    int k = locate(t);
    const Node& a = nodes_[k];
    const Node& b = nodes_[k + 1];
    double h = b.t - a.t;
    double s = h == 0.0 ? 0.0 : (t - a.t) / h;
    hermite(std::clamp(s, 0.0, 1.0), h, a.y, a.f, b.y, b.f, out);
}

std::vector<double> DensePath::eval(double t) const
{
    std::vector<double> out(state_size());
    eval(t, out);
    return out;
}

void DensePath::eval_derivative(double t, std::span<double> out) const
{
    int k = locate(t);
    const Node& a = nodes_[k];
    const Node& b = nodes_[k + 1];
    double h = b.t - a.t;
    double s = h == 0.0 ? 0.0 : (t - a.t) / h;
    hermite_deriv(std::clamp(s, 0.0, 1.0), h, a.y, a.f, b.y, b.f, out);
}

int DensePath::locate(double t) const
{
    const bool fwd = nodes_.back().t >= nodes_.front().t;
    int lo = 0, hi = static_cast<int>(nodes_.size()) - 2;
    while (lo < hi) {
        int mid = (lo + hi + 1) / 2;
        bool before = fwd ? nodes_[mid].t <= t : nodes_[mid].t >= t;
        if (before) lo = mid;
        else hi = mid - 1;
    }
    return lo;
}

DensePath integrate_ode(const OdeRhs& rhs, double t0, double t1, std::span<const double> y0,
                        const OdeOptions& opt)
{
    const int n = static_cast<int>(y0.size());
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    DensePath path;
    if (span == 0.0) {
        std::vector<double> f(n);
        rhs(t0, y0, f);
        path.nodes_.push_back({t0, std::vector<double>(y0.begin(), y0.end()), f});
        path.nodes_.push_back(path.nodes_.front());
        return path;
    }

    Stepper st(rhs, n);
    std::vector<double> y(y0.begin(), y0.end()), f(n), ynew(n), fnew(n);
    double t = t0;
    rhs(t, y, f);
    double h = opt.initial_step > 0.0 ? opt.initial_step
                                      : initial_step_guess(rhs, t0, y, f, dir, opt);
    h = std::min(h, span);
    path.nodes_.push_back({t, y, f});

    long steps = 0;
    while (dir * (t1 - t) > 0.0) {
        if (++steps > opt.max_steps) throw StepFailure("integrate_ode: step budget exhausted");
        if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t)))
            throw StepFailure("integrate_ode: step size underflow");
        bool last = false;
        if (dir * (t + dir * h * 1.01 - t1) >= 0.0) {
            h = std::abs(t1 - t);
            last = true;
        }
        double hs = dir * h;
        double err = st.step(t, y, f, hs, ynew, fnew, opt);
        if (!std::isfinite(err)) {
            h *= 0.25;
            continue;
        }
        bool ok = err <= 1.0;
        if (ok && opt.defect_control) {
            double d = st.defect_norm(t, hs, y, f, ynew, fnew, opt);
            if (!(d <= 3.0)) ok = false;
        }
        if (ok) {
            t += hs;
            if (last) t = t1;
            y.swap(ynew);
            f.swap(fnew);
            path.nodes_.push_back({t, y, f});
            path.steps_.push_back(hs);
            double fac = err <= 1e-30 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            h = std::min(h * fac, span);
        } else {
            double fac = err > 1.0 ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.7;
            h *= fac;
        }
    }
    return path;
}

DensePath integrate_ode_schedule(const OdeRhs& rhs, double t0, std::span<const double> y0,
                                 std::span<const double> steps)
{
    const int n = static_cast<int>(y0.size());
    Stepper st(rhs, n);
    OdeOptions opt;  // tolerances unused on replay
    std::vector<double> y(y0.begin(), y0.end()), f(n), ynew(n), fnew(n);
    double t = t0;
    rhs(t, y, f);
    DensePath path;
    path.nodes_.push_back({t, y, f});
    for (double hs : steps) {
        st.step(t, y, f, hs, ynew, fnew, opt);
        t += hs;
        y.swap(ynew);
        f.swap(fnew);
        path.nodes_.push_back({t, y, f});
        path.steps_.push_back(hs);
    }
    return path;
}

}  // namespace finsler
