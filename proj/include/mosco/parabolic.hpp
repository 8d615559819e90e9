#pragma once

#include "mosco/fem.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mosco {

/// Uniform grid t_k = t_begin + k tau, tau = (t_end - t_begin) / steps.
struct TimeGrid {
    double t_begin{0.0};
    double t_end{1.0};
    int steps{1};

    TimeGrid() = default;
    TimeGrid(double t_final, int m) : TimeGrid(0.0, t_final, m) {}
    TimeGrid(double t0, double t1, int m);

    double tau() const { return (t_end - t_begin) / steps; }
    double node(int k) const { return k == steps ? t_end : t_begin + k * tau(); }
    double length() const { return t_end - t_begin; }
    int num_nodes() const { return steps + 1; }

    /// Composite trapezoid weights over the nodes.
    std::vector<double> trapezoid_weights() const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Nodal values of a discrete trajectory, read as continuous and
/// piecewise linear in time.
struct Trajectory {
    SpacePtr space;
    TimeGrid grid;
    std::vector<Vector> nodes;

    FEField field(int k) const { return FEField(space, nodes[static_cast<std::size_t>(k)]); }
    /// Linear interpolation in time; constant extension outside the grid.
    Vector at(double t) const;
};

/// Trajectory with the same value at every node.
Trajectory constant_trajectory(SpacePtr space, const TimeGrid& grid, const Vector& value);

struct ParabolicProblem {
    SpacePtr space;
    CoefficientSet coeffs;
    SpaceTimeFunction f;
    FEField u0;
    TimeGrid grid;
    double theta{1.0};

    void validate() const;
};

/// theta-scheme
///   (M/tau + theta A(t_{k+1})) u^{k+1} = (M/tau - (1-theta) A(t_k)) u^k
///                                       + theta b(t_{k+1}) + (1-theta) b(t_k)
/// with linear solves at tol 1e-10. Solver failures are rethrown naming the step.
Trajectory solve_parabolic(const ParabolicProblem& p);

inline constexpr double parabolic_solve_tol = 1e-10;

/// sqrt(sum_k w_k ||u^k||_V^2) with trapezoid weights.
double l2v_norm(const Trajectory& u, const NormSet& norms);
/// sqrt(sum_k w_k ||b(t_k)||_{V'}^2), the discrete L2(V') norm of the source.
double l2vdual_norm(const ParabolicProblem& p, const NormSet& norms);

struct EnergyReport {
    double alpha{0.0};
    std::vector<double> lhs;
    std::vector<double> rhs;
    std::vector<double> margin;  // rhs - lhs
    int violation{-1};           // first node with lhs > rhs + 1e-10 (1 + rhs)

    bool ok() const { return violation < 0; }
};

/// Discrete energy inequality for implicit Euler:
///   |u^k|_H^2 + alpha sum_{j<=k} tau |u^j|_V^2 <= |u0|_H^2 + alpha^{-1} sum_{j<=k} tau |b^j|_{V'}^2.
/// alpha defaults to the discrete coercivity constant sampled at the grid nodes;
/// requires theta = 1 and a form that is coercive without shift.
EnergyReport energy_estimate_check(const Trajectory& u, const ParabolicProblem& p,
                                   std::optional<double> alpha = std::nullopt);

struct TestProfile {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
};

/// |-int (u|v) phi' + int a(t;u,v) phi - (u0|v) phi(0) - int <f,v> phi| with
/// trapezoid quadrature at the grid nodes. phi must vanish at the final time.
double weak_residual(const Trajectory& u, const ParabolicProblem& p, const FEField& v, const TestProfile& phi);

/// Defect of (u(b)|v(b)) - (u(a)|v(a)) = int_a^b <u',v> + <v',u> for node indices
/// a <= b, integrated exactly for piecewise linear trajectories.
double integration_by_parts_check(const Trajectory& u, const Trajectory& v, int a, int b);

// ---------------------------------------------------------------------------
// Text export

/// Per-vertex field file: `field <nv>` then one value per line.
void write_field_file(const std::string& path, const FunctionSpace& space, const Vector& dofs);
Vector read_field_file(const std::string& path, const FunctionSpace& space);

/// Writes mesh.mesh2d, u_00000.field ... and trajectory.txt (`traj T M n_dofs`).
void write_trajectory(const std::string& dir, const Trajectory& u);

}  // namespace mosco
