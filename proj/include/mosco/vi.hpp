#pragma once

#include "mosco/parabolic.hpp"

#include <vector>

namespace mosco {

/// Nodal lower-bound obstacle set K = {v : v >= psi at every dof}.
struct ObstacleConstraint {
    SpacePtr space;
    Vector psi;

    ObstacleConstraint() = default;
    ObstacleConstraint(SpacePtr s, Vector obstacle);
    ObstacleConstraint(const FEField& obstacle) : ObstacleConstraint(obstacle.space, obstacle.coeffs) {}

    bool contains(const Vector& v, double tol = 0.0) const;
};

/// Nodewise max(w, psi).
FEField project_H(const ObstacleConstraint& k, const FEField& w);

struct VIProblem {
    SpacePtr space;
    CoefficientSet coeffs;
    SpaceTimeFunction f;
    FEField u0;
    TimeGrid grid;
    ObstacleConstraint constraint;

    void validate() const;
};

struct PgsOptions {
    double tol_change{1e-10};
    double tol_complementarity{1e-8};
    long max_sweeps{100000};
    double omega{1.0};  // over-relaxation factor in (0, 2)
};

struct LcpStats {
    long sweeps{0};
    int outer{0};
    double complementarity{0.0};
};

/// Finds u >= psi with r = K u - rhs >= 0 and r_i (u_i - psi_i) = 0.
/// Projected Gauss-Seidel (SOR when omega != 1) on the symmetric part of K; a nonsymmetric remainder
/// N is moved to the right-hand side by outer Richardson iteration.
/// The complementarity residual is max_i |min(r_i / K_ii, u_i - psi_i)|.
Vector solve_lcp(const SparseMatrix& k, const Vector& rhs, const Vector& psi, Vector start,
                 const PgsOptions& opts = {}, LcpStats* stats = nullptr);

double complementarity_residual(const SparseMatrix& k, const Vector& rhs, const Vector& psi, const Vector& u);

/// Implicit Euler with one obstacle LCP per step:
///   K = M/tau + A(t_{k+1}),  rhs = M u^k / tau + b(t_{k+1}).
Trajectory solve_parabolic_vi(const VIProblem& p, const PgsOptions& opts = {}, std::vector<LcpStats>* stats = nullptr);

struct FeasibilityReport {
    double min_margin{0.0};
    std::vector<std::pair<int, int>> violations;  // (time node, dof) with u - psi < -1e-12

    bool feasible() const { return violations.empty(); }
};

FeasibilityReport feasibility_report(const Trajectory& u, const ObstacleConstraint& k);

/// int <v', v-u> + <A u, v-u> - <f, v-u> dt + 1/2 |v(0) - u0|_H^2, with v
/// piecewise linear in time (exact on each interval) and trapezoid quadrature
/// for the remaining terms. v must be feasible at every node.
double weak_vi_residual(const Trajectory& u, const VIProblem& p, const Trajectory& v);

}  // namespace mosco
