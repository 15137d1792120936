#pragma once

// Adaptive Dormand-Prince 5(4) integrator with dense cubic-Hermite output.
// A step is accepted only if both the embedded error estimate and the
// interpolation defect (sampled where the Hermite error peaks) pass, so dense
// queries honor the same tolerance as the nodes.  A recorded step schedule
// can be replayed on neighboring initial data; finite differences of
// endpoints then see maximally correlated integration error.

#include <functional>
#include <span>
#include <vector>

#include "finsler/errors.hpp"

namespace finsler {

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

struct OdeOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double initial_step = 0.0;  // 0 = automatic
    long max_steps = 2000000;
    bool defect_control = true;
};

class DensePath {
 public:
    struct Node {
        double t;
        std::vector<double> y;
        std::vector<double> f;
    };

    const std::vector<Node>& nodes() const { return nodes_; }
    double t_begin() const { return nodes_.front().t; }
    double t_end() const { return nodes_.back().t; }
    int state_size() const { return static_cast<int>(nodes_.front().y.size()); }

    // Cubic-Hermite state at t (clamped to the integration span).
    void eval(double t, std::span<double> out) const;
    std::vector<double> eval(double t) const;
    // Time derivative of the interpolant.
    void eval_derivative(double t, std::span<double> out) const;

    const std::vector<double>& schedule() const { return steps_; }

    static DensePath from_nodes(std::vector<Node> nodes);

    friend DensePath integrate_ode(const OdeRhs&, double, double, std::span<const double>,
                                   const OdeOptions&);
    friend DensePath integrate_ode_schedule(const OdeRhs&, double, std::span<const double>,
                                            std::span<const double>);

 private:
    int locate(double t) const;
    std::vector<Node> nodes_;
    std::vector<double> steps_;
};

DensePath integrate_ode(const OdeRhs& rhs, double t0, double t1, std::span<const double> y0,
                        const OdeOptions& opt = {});

// Replays a fixed step sequence (signed steps, as recorded by schedule()).
DensePath integrate_ode_schedule(const OdeRhs& rhs, double t0, std::span<const double> y0,
                                 std::span<const double> steps);

}  // namespace finsler
