#pragma once

#include "mosco/mosco.hpp"

#include <limits>
#include <string>
#include <vector>

namespace mosco {

enum class StudyKind { dirichlet, neumann, vi };

std::string_view to_string(StudyKind kind);
StudyKind study_kind_from_string(std::string_view s);

enum class Verdict { decreasing_to_floor, stagnant };

std::string_view to_string(Verdict v);

struct StudyConfig {
    DomainFamily family;
    StudyKind kind{StudyKind::dirichlet};
    CoefficientSet coeffs;
    SpaceTimeFunction f;
    SpaceTimeFunction u0;
    /// Optional data perturbations: f_n = f + param_n g, u0_n = u0 + param_n g0.
    SpaceTimeFunction f_perturbation;
    SpaceTimeFunction u0_perturbation;
    TimeGrid grid;
    double theta{1.0};

    /// VI only: the domain is family.limit, psi_n = psi + param_n, psi = psi + limit_param
    /// and u0_n = max(u0, psi_n) nodewise.
    SpaceTimeFunction obstacle;
    BoundaryCondition vi_bc{BoundaryCondition::neumann};
    PgsOptions pgs;

    /// Sup-in-time errors use nodes with t >= sup_from (weak-data variant); NaN means the whole grid.
    double sup_from{std::numeric_limits<double>::quiet_NaN()};
    int sample_cells{128};
    bool compute_defect{true};
    int jobs{1};
};

struct StudyRow {
    int n{0};
    double param{0.0};
    double err_L2H1{0.0};  // L2(0,T;H1(D)); pair norm for Neumann, V-norm for VI
    double err_CL2{0.0};   // sup over time nodes of the L2(D) (VI: H) distance
    double err_grad{0.0};  // L2(0,T;L2(D,R^2)) distance of the gradients
    double err_L2L2{0.0};  // L2(0,T;L2(D)) distance of the values
    double defect{std::numeric_limits<double>::quiet_NaN()};  // m1_defect_time of the limit run into V_n
    double solution_norm{0.0};                                  // l2(H1) norm of u_n
    double min_margin{std::numeric_limits<double>::quiet_NaN()};
    double weak_residual{std::numeric_limits<double>::quiet_NaN()};  // weak_vi_residual(u_n, u_n)
    double handle_flux{std::numeric_limits<double>::quiet_NaN()};    // dumbbell only
};

struct RateFit {
    double rate{std::numeric_limits<double>::quiet_NaN()};
    double r2{std::numeric_limits<double>::quiet_NaN()};
    int points{0};

    bool defined() const { return points >= 3; }
};

struct NormSeries {
    std::string name;
    std::vector<double> values;
    Verdict verdict{Verdict::stagnant};
    RateFit fit;
};

struct ConvergenceReport {
    StudyKind kind{StudyKind::dirichlet};
    std::vector<StudyRow> rows;
    double floor{0.0};       // self-distance of the limit run plus 1e-10 scale
    double self_distance{0.0};
    double scale{0.0};       // largest norm of the limit run
    double limit_norm{0.0};  // l2(H1) norm of the limit run
    double limit_handle_flux{std::numeric_limits<double>::quiet_NaN()};
    std::vector<NormSeries> series;  // err_L2H1, err_CL2, err_grad (+ err_L2L2 for Neumann, defect when computed)
    Verdict verdict{Verdict::stagnant};  // over the err_* series

    const NormSeries& find(std::string_view name) const;
};

ConvergenceReport run_dirichlet_study(const StudyConfig& cfg);
ConvergenceReport run_neumann_study(const StudyConfig& cfg);
ConvergenceReport run_vi_study(const StudyConfig& cfg);
ConvergenceReport run_study(const StudyConfig& cfg);

/// Least-squares slope of log(error) against log(param) over the points with
/// error > floor; undefined (NaN) with fewer than 3 such points.
RateFit fit_rate(const std::vector<double>& params, const std::vector<double>& errors, double floor = 0.0);

/// decreasing_to_floor when every step taken from a value above 3 floor
/// strictly decreases (or lands within 3 floor) and the last value is within
/// 3 floor or below half the first; stagnant otherwise.
Verdict classify(const std::vector<double>& errors, double floor);

}  // namespace mosco
