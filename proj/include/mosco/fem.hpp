#pragma once

#include "mosco/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mosco {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Evaluable space-time function (x, t) -> real.
using SpaceTimeFunction = std::function<double(Point, double)>;

class AssemblyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iterative or eigen-iteration failure. Carries the last residual seen.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Analytic presets

/// Named analytic scalar function with numeric parameters.
///
///   constant      {c}
///   affine_x      {c0, c1, c2}            c0 + c1 x + c2 y
///   affine_t      {c0, c1}                c0 + c1 t
///   harmonic_t    {c0, amp, omega}        c0 + amp sin(omega t)
///   product       {c0, c1, c2, d0, amp, omega}  affine_x * harmonic_t
///   bump          {x0, y0, radius, height}  smooth compactly supported bump
///   sin_product   {amp, decay}            amp sin(pi x) sin(pi y) exp(-decay t)
///   cos_product   {offset, amp}           offset + amp cos(pi x) cos(pi y)
///   angle_ramp    {amp}                   amp r^2 theta / (2 pi), theta in [0, 2 pi)
struct ScalarPreset {
    enum class Kind { constant, affine_x, affine_t, harmonic_t, product, bump, sin_product, cos_product, angle_ramp };

    Kind kind{Kind::constant};
    std::vector<double> params{0.0};

    double operator()(Point x, double t) const;
    bool time_dependent() const;

    static ScalarPreset constant(double c) { return {Kind::constant, {c}}; }
    static ScalarPreset affine_x(double c0, double c1, double c2) { return {Kind::affine_x, {c0, c1, c2}}; }
    static ScalarPreset affine_t(double c0, double c1) { return {Kind::affine_t, {c0, c1}}; }
    static ScalarPreset harmonic_t(double c0, double amp, double omega)
    {
        return {Kind::harmonic_t, {c0, amp, omega}};
    }
    static ScalarPreset bump(Point center, double radius, double height)
    {
        return {Kind::bump, {center.x, center.y, radius, height}};
    }
    static ScalarPreset sin_product(double amp, double decay) { return {Kind::sin_product, {amp, decay}}; }
    static ScalarPreset cos_product(double offset, double amp) { return {Kind::cos_product, {offset, amp}}; }
    static ScalarPreset angle_ramp(double amp) { return {Kind::angle_ramp, {amp}}; }

    /// Validates the parameter count for the kind.
    static ScalarPreset make(std::string_view kind, std::vector<double> params);
};

std::string_view to_string(ScalarPreset::Kind kind);

/// Coefficients of the form
///   a(t;u,v) = \int [a_ij d_j u + a_i u] d_i v + b_i d_i u v + c0 u v dx
/// together with the declared ellipticity alpha, bound M and shift lambda.
struct CoefficientSet {
    std::array<ScalarPreset, 4> diffusion{ScalarPreset::constant(1.0), ScalarPreset::constant(0.0),
                                          ScalarPreset::constant(0.0), ScalarPreset::constant(1.0)};  // a11 a12 a21 a22
    std::array<ScalarPreset, 2> advection{ScalarPreset::constant(0.0), ScalarPreset::constant(0.0)};  // a_i
    std::array<ScalarPreset, 2> drift{ScalarPreset::constant(0.0), ScalarPreset::constant(0.0)};      // b_i
    ScalarPreset reaction{ScalarPreset::constant(0.0)};                                               // c0
    double alpha{1.0};
    double bound{1.0};
    double shift{0.0};

    static CoefficientSet laplacian(double scale = 1.0);
    bool time_dependent() const;
    bool symmetric() const;  // a_i == b_i == 0 and a12 == a21 presets

    /// Samples (x, t) on the mesh quadrature points at `times`; checks
    /// a_ij xi xi >= alpha |xi|^2 for 64 random unit xi and |coeff| <= bound.
    /// Throws PreconditionError naming the first violation.
    void check_hypotheses(const Mesh& mesh, std::span<const double> times, unsigned seed) const;
};

// ---------------------------------------------------------------------------
// Spaces and fields

enum class BoundaryCondition { dirichlet, neumann };

std::string_view to_string(BoundaryCondition bc);
BoundaryCondition boundary_condition_from_string(std::string_view s);

/// P1 space. Dirichlet eliminates every boundary vertex (outer, hole and crack
/// lips); Neumann keeps all vertices, so seam pairs get distinct dofs.
class FunctionSpace {
public:
    FunctionSpace(MeshPtr mesh, BoundaryCondition bc);

    const Mesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }
    BoundaryCondition bc() const { return bc_; }
    int n_dofs() const { return static_cast<int>(vertex_of_dof_.size()); }
    /// -1 for eliminated vertices.
    int dof(int vertex) const { return dof_of_vertex_[static_cast<std::size_t>(vertex)]; }
    int vertex(int dof) const { return vertex_of_dof_[static_cast<std::size_t>(dof)]; }

    /// Dof vector -> per-vertex values (eliminated vertices are 0).
    Vector to_vertex_values(const Vector& dofs) const;
    Vector from_vertex_values(const Vector& values) const;

private:
    MeshPtr mesh_;
    BoundaryCondition bc_;
    std::vector<int> dof_of_vertex_;
    std::vector<int> vertex_of_dof_;
};

using SpacePtr = std::shared_ptr<const FunctionSpace>;

SpacePtr make_space(MeshPtr mesh, BoundaryCondition bc);

struct FEField {
    SpacePtr space;
    Vector coeffs;

    FEField() = default;
    FEField(SpacePtr s, Vector c);
    static FEField zero(SpacePtr s);
};

/// Nodal interpolation; seam vertices are evaluated an infinitesimal step into
/// their own lip so functions that jump across a crack are captured.
FEField interpolate(SpacePtr space, const SpaceTimeFunction& f, double t = 0.0);

/// P1 value and gradient of a field at a located point.
double evaluate(const FEField& u, const Location& loc);
Point gradient(const FEField& u, int triangle);

// ---------------------------------------------------------------------------
// Assembly

/// Matrix entry (k,l) = a(t; phi_l, phi_k), 3-point degree-2 quadrature.
SparseMatrix assemble_form(const FunctionSpace& space, const CoefficientSet& coeffs, double t);
SparseMatrix assemble_mass(const FunctionSpace& space);
/// Gradient Gram matrix \int grad phi_l . grad phi_k.
SparseMatrix assemble_stiffness(const FunctionSpace& space);
Vector assemble_load(const FunctionSpace& space, const SpaceTimeFunction& f, double t);

/// Full (pre-elimination) vertex-indexed matrix of the form.
SparseMatrix assemble_form_all_vertices(const Mesh& mesh, const CoefficientSet& coeffs, double t);

/// Coordinate text export `i j value`.
void write_coordinate(std::ostream& os, const SparseMatrix& a);

// ---------------------------------------------------------------------------
// Linear solve

struct SolveStats {
    int iterations{0};
    double relative_residual{0.0};
};

/// BiCGStab with a diagonal preconditioner; ||Ax - b|| <= tol ||b||.
/// Throws SolverError on breakdown, a zero row, or more than 10 n iterations.
Vector solve_linear(const SparseMatrix& a, const Vector& b, double tol, SolveStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Norms

/// Mass, stiffness and Riesz (stiffness + mass) matrices of one space. The
/// V-norm is ||u||_V^2 = ||grad u||^2 + ||u||^2 for both boundary conditions.
class NormSet {
public:
    explicit NormSet(SpacePtr space);

    const SpacePtr& space() const { return space_; }
    const SparseMatrix& mass() const { return mass_; }
    const SparseMatrix& stiffness() const { return stiffness_; }
    const SparseMatrix& riesz() const { return riesz_; }

    double h_norm(const Vector& u) const;
    double v_norm(const Vector& u) const;
    double h_inner(const Vector& u, const Vector& v) const;
    /// Discrete dual norm of a load vector: sqrt(b^T (S + M)^{-1} b).
    double dual_norm(const Vector& b) const;

private:
    SpacePtr space_;
    SparseMatrix mass_;
    SparseMatrix stiffness_;
    SparseMatrix riesz_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> riesz_factor_;
};

/// H^1(Omega) error of a field against an exact solution, degree-4 quadrature.
struct ExactErrors {
    double l2{0.0};
    double h1_semi{0.0};
    double h1() const;
};
ExactErrors error_vs_exact(const FEField& u, const SpaceTimeFunction& value,
                           const std::function<Point(Point, double)>& grad, double t);

// ---------------------------------------------------------------------------
// Form constants

struct FormConstants {
    double bound{0.0};   // M_est
    double alpha{0.0};   // alpha_est
    double lambda{0.0};  // lambda_est
};

/// Sampled estimates of the continuity bound and the coercivity pair (alpha, lambda)
/// at times t_s = t_max * s / n_samples, s = 0..n_samples-1.
FormConstants estimate_form_constants(const FunctionSpace& space, const CoefficientSet& coeffs, int n_samples,
                                      unsigned seed, double t_max = 1.0);
/// Same with an explicit list of sample times.
FormConstants estimate_form_constants(const FunctionSpace& space, const CoefficientSet& coeffs,
                                      std::span<const double> times, unsigned seed);

}  // namespace mosco
