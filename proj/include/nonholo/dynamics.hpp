#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nonholo/exterior.hpp"
#include "nonholo/symexpr.hpp"

namespace nonholo {

/// Time-stamped states over a chart, with optional reparametrization column
/// and recorded invariant values.
struct Trajectory {
    Chart chart;
    std::vector<double> times;              // strictly increasing
    std::vector<std::vector<double>> states; // one row per sample, chart order
    std::vector<double> s_values;           // nonempty for reparametrized runs
    std::string system;
    std::string integrator = "rk4";
    double step = 0.0;

    std::size_t size() const { return times.size(); }
    Point state_at(std::size_t i) const;
};

/// Evaluation fault encountered mid-run.
struct Singularity {
    double t;
    Point state;
    std::string what;
};

/// Integration outcome; `fault` is set when the run stopped early, with the
/// partial trajectory retained.
struct Integration {
    Trajectory trajectory;
    std::optional<Singularity> fault;
};

/// Classical fixed-step fourth-order Runge-Kutta on xdot = (B grad H)(x).
/// The vector field is formed symbolically once and compiled for the inner
/// loop.
Integration integrate(const Bivector& b, const Expr& hamiltonian, const Point& x0, double t_end,
                      double dt);

/// Closed-form/quadrature reference solution of the reduced contact flow:
/// x = x0 + a t, u1 = a, u2 = A sqrt(1+(x0+at)^2), y and z by adaptive
/// Simpson quadrature (tolerance 1e-10) of their rate integrands.
struct ContactState {
    double x, y, z, u1, u2;
};
ContactState contact_oracle(double x0, double y0, double z0, double a, double A, double t);

/// Cumulative trapezoidal reconstruction of fiber coordinates along a
/// trajectory; each rule maps a fiber name to its rate over the chart.
Trajectory reconstruct_fiber(const Trajectory& traj,
                             const std::vector<std::pair<std::string, Expr>>& rules,
                             const Point& initial);

/// Drift bookkeeping for named invariants along a trajectory.
struct InvariantReport {
    struct Row {
        std::string name;
        Expr expression;
        double initial;
        double max_abs_drift;
        double max_rel_drift;
    };
    std::vector<Row> rows;
};

InvariantReport invariant_report(const Trajectory& traj,
                                 const std::vector<std::pair<std::string, Expr>>& invariants);

/// Integrates xdot = ((1/f) B grad H)(x) in the rescaled parameter s and
/// accumulates physical time through dt/ds = 1/f(x(s)). Both parameters are
/// recorded per sample. f must stay positive along the run.
Integration reparametrized_flow(const Bivector& b, const Expr& hamiltonian, const Expr& f,
                                const Point& x0, double s_end, double ds);

/// Linear interpolation of a (reparametrized) trajectory at physical time t
/// using its accumulated time column.
std::vector<double> sample_at_time(const Trajectory& traj, double t);

/// Trajectory CSV: header t[,s],<chart vars...>[,extras...], one row per
/// sample, 17 significant digits.
std::string trajectory_csv(const Trajectory& traj,
                           const std::vector<std::pair<std::string, Expr>>& invariants,
                           const std::vector<std::pair<std::string, std::vector<double>>>& extra_columns = {});

} // namespace nonholo
