#include "mosco/fem.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>

namespace mosco {

namespace {

constexpr double pi = std::numbers::pi;

struct QuadPoint {
    std::array<double, 3> bary;
    double weight;  // fraction of the triangle area
};

// degree-2 rule at interior points
constexpr std::array<QuadPoint, 3> quad2{{
    {{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0}, 1.0 / 3.0},
    {{1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}, 1.0 / 3.0},
    {{1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}, 1.0 / 3.0},
}};

// degree-4 Dunavant rule
constexpr double qa = 0.445948490915965, qb = 0.108103018168070;
constexpr double qc = 0.091576213509771, qd = 0.816847572980459;
constexpr double wa = 0.223381589678011, wc = 0.109951743655322;
constexpr std::array<QuadPoint, 6> quad4{{
    {{qa, qa, qb}, wa},
    {{qa, qb, qa}, wa},
    {{qb, qa, qa}, wa},
    {{qc, qc, qd}, wc},
    {{qc, qd, qc}, wc},
    {{qd, qc, qc}, wc},
}};

struct ElementGeometry {
    std::array<Point, 3> p;
    std::array<Point, 3> grad;  // gradients of the barycentric basis
    double area;

    Point at(const std::array<double, 3>& l) const
    {
        return {l[0] * p[0].x + l[1] * p[1].x + l[2] * p[2].x, l[0] * p[0].y + l[1] * p[1].y + l[2] * p[2].y};
    }
};

ElementGeometry geometry(const Mesh& mesh, int t)
{
    const auto& tri = mesh.triangles()[static_cast<std::size_t>(t)];
    ElementGeometry g{};
    for (int i = 0; i < 3; ++i) g.p[static_cast<std::size_t>(i)] = mesh.vertices()[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
    g.area = mesh.signed_area(t);
    const double inv = 1.0 / (2.0 * g.area);
    for (int i = 0; i < 3; ++i) {
        const Point pj = g.p[static_cast<std::size_t>((i + 1) % 3)];
        const Point pk = g.p[static_cast<std::size_t>((i + 2) % 3)];
        g.grad[static_cast<std::size_t>(i)] = {(pj.y - pk.y) * inv, (pk.x - pj.x) * inv};
    }
    return g;
}

double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }

void check_finite(double v, int t, double time, const char* what)
{
    if (!std::isfinite(v)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "non-finite %s at element %d, t = %.17g", what, t, time);
        throw AssemblyError(buf);
    }
}

// Element-level form assembly with a generic scatter.
template <typename Scatter>
void assemble_elements(const Mesh& mesh, const CoefficientSet& c, double t, Scatter scatter)
{
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto g = geometry(mesh, e);
        double local[3][3] = {};
        for (const auto& q : quad2) {
            const Point x = g.at(q.bary);
            const double w = q.weight * g.area;
            const double a11 = c.diffusion[0](x, t), a12 = c.diffusion[1](x, t);
            const double a21 = c.diffusion[2](x, t), a22 = c.diffusion[3](x, t);
            const Point adv{c.advection[0](x, t), c.advection[1](x, t)};
            const Point drift{c.drift[0](x, t), c.drift[1](x, t)};
            const double c0 = c.reaction(x, t);
            for (double v : {a11, a12, a21, a22, adv.x, adv.y, drift.x, drift.y, c0}) check_finite(v, e, t, "coefficient");
            for (int k = 0; k < 3; ++k) {      // test function v = phi_k
                for (int l = 0; l < 3; ++l) {  // trial function u = phi_l
                    const Point gu = g.grad[static_cast<std::size_t>(l)];
                    const Point gv = g.grad[static_cast<std::size_t>(k)];
                    const Point agu{a11 * gu.x + a12 * gu.y, a21 * gu.x + a22 * gu.y};
                    const double phu = q.bary[static_cast<std::size_t>(l)];
                    const double phv = q.bary[static_cast<std::size_t>(k)];
                    local[k][l] += w * (dot(agu, gv) + phu * dot(adv, gv) + dot(drift, gu) * phv + c0 * phu * phv);
                }
            }
        }
        scatter(e, local);
    }
}

SparseMatrix to_dofs(const FunctionSpace& space, const std::vector<Eigen::Triplet<double>>& vertex_triplets)
{
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(vertex_triplets.size());
    for (const auto& tr : vertex_triplets) {
        const int r = space.dof(tr.row());
        const int c = space.dof(tr.col());
        if (r >= 0 && c >= 0) trip.emplace_back(r, c, tr.value());
    }
    SparseMatrix a(space.n_dofs(), space.n_dofs());
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    return a;
}

std::vector<Eigen::Triplet<double>> form_triplets(const Mesh& mesh, const CoefficientSet& coeffs, double t)
{
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
    assemble_elements(mesh, coeffs, t, [&](int e, const double (&local)[3][3]) {
        const auto& tri = mesh.triangles()[static_cast<std::size_t>(e)];
        for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l)
                trip.emplace_back(tri[static_cast<std::size_t>(k)], tri[static_cast<std::size_t>(l)], local[k][l]);
    });
    return trip;
}

Eigen::MatrixXd dense(const SparseMatrix& a) { return Eigen::MatrixXd(a); }

// smallest generalized eigenvalue of the symmetric pencil (a, b), b SPD
double min_generalized_eigenvalue(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, b, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw SolverError("generalized eigensolve failed", 0.0);
    return es.eigenvalues().minCoeff();
}

}  // namespace

// ---------------------------------------------------------------------------
// Presets

double ScalarPreset::operator()(Point x, double t) const
{
    const auto& p = params;
    switch (kind) {
    case Kind::constant: return p[0];
    case Kind::affine_x: return p[0] + p[1] * x.x + p[2] * x.y;
    case Kind::affine_t: return p[0] + p[1] * t;
    case Kind::harmonic_t: return p[0] + p[1] * std::sin(p[2] * t);
    case Kind::product: return (p[0] + p[1] * x.x + p[2] * x.y) * (p[3] + p[4] * std::sin(p[5] * t));
    case Kind::bump: {
        const double s = std::hypot(x.x - p[0], x.y - p[1]) / p[2];
        if (s >= 1.0) return 0.0;
        return p[3] * std::exp(1.0 - 1.0 / (1.0 - s * s));
    }
    case Kind::sin_product: return p[0] * std::sin(pi * x.x) * std::sin(pi * x.y) * std::exp(-p[1] * t);
    case Kind::cos_product: return p[0] + p[1] * std::cos(pi * x.x) * std::cos(pi * x.y);
    case Kind::angle_ramp: {
        double theta = std::atan2(x.y, x.x);
        if (theta < 0) theta += 2.0 * pi;
        return p[0] * (x.x * x.x + x.y * x.y) * theta / (2.0 * pi);
    }
    }
    return 0.0;
}

bool ScalarPreset::time_dependent() const
{
    switch (kind) {
    case Kind::affine_t: return params[1] != 0.0;
    case Kind::harmonic_t: return params[1] != 0.0 && params[2] != 0.0;
    case Kind::product: return params[4] != 0.0 && params[5] != 0.0;
    case Kind::sin_product: return params[1] != 0.0;
    default: return false;
    }
}

std::string_view to_string(ScalarPreset::Kind kind)
{
    using K = ScalarPreset::Kind;
    switch (kind) {
    case K::constant: return "constant";
    case K::affine_x: return "affine_x";
    case K::affine_t: return "affine_t";
    case K::harmonic_t: return "harmonic_t";
    case K::product: return "product";
    case K::bump: return "bump";
    case K::sin_product: return "sin_product";
    case K::cos_product: return "cos_product";
    case K::angle_ramp: return "angle_ramp";
    }
    return "constant";
}

ScalarPreset ScalarPreset::make(std::string_view kind, std::vector<double> params)
{
    using K = ScalarPreset::Kind;
    struct Entry {
        std::string_view name;
        K kind;
        std::size_t n;
    };
    static constexpr Entry table[] = {
        {"constant", K::constant, 1},     {"affine_x", K::affine_x, 3},       {"affine_t", K::affine_t, 2},        {"harmonic_t", K::harmonic_t, 3},
        {"product", K::product, 6},       {"bump", K::bump, 4},               {"sin_product", K::sin_product, 2},
        {"cos_product", K::cos_product, 2}, {"angle_ramp", K::angle_ramp, 1},
    };
    for (const auto& e : table) {
        if (e.name != kind) continue;
        if (params.size() != e.n)
            throw PreconditionError("preset '" + std::string(kind) + "' expects " + std::to_string(e.n) +
                                    " parameters, got " + std::to_string(params.size()));
        for (double v : params)
            if (!std::isfinite(v)) throw PreconditionError("preset '" + std::string(kind) + "' has a non-finite parameter");
        if (e.kind == K::bump && !(params[2] > 0)) throw PreconditionError("bump radius must be positive");
        return {e.kind, std::move(params)};
    }
    throw PreconditionError("unknown preset '" + std::string(kind) + "'");
}

CoefficientSet CoefficientSet::laplacian(double scale)
{
    CoefficientSet c;
    c.diffusion = {ScalarPreset::constant(scale), ScalarPreset::constant(0.0), ScalarPreset::constant(0.0),
                   ScalarPreset::constant(scale)};
    c.alpha = scale;
    c.bound = scale;
    return c;
}

bool CoefficientSet::time_dependent() const
{
    auto td = [](const ScalarPreset& p) { return p.time_dependent(); };
    return std::any_of(diffusion.begin(), diffusion.end(), td) || std::any_of(advection.begin(), advection.end(), td) ||
           std::any_of(drift.begin(), drift.end(), td) || reaction.time_dependent();
}

bool CoefficientSet::symmetric() const
{
    auto zero = [](const ScalarPreset& p) {
        return std::all_of(p.params.begin(), p.params.end(), [](double v) { return v == 0.0; }) ||
               (p.kind == ScalarPreset::Kind::constant && p.params[0] == 0.0);
    };
    const bool same_offdiag = diffusion[1].kind == diffusion[2].kind && diffusion[1].params == diffusion[2].params;
    return same_offdiag && zero(advection[0]) && zero(advection[1]) && zero(drift[0]) && zero(drift[1]);
}

void CoefficientSet::check_hypotheses(const Mesh& mesh, std::span<const double> times, unsigned seed) const
{
    std::mt19937 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<Point> xi(64);
    for (auto& v : xi) {
        v = {normal(rng), normal(rng)};
        const double n = std::hypot(v.x, v.y);
        v = (1.0 / n) * v;
    }
    for (double t : times) {
        for (int e = 0; e < mesh.num_triangles(); ++e) {
            const auto g = geometry(mesh, e);
            for (const auto& q : quad2) {
                const Point x = g.at(q.bary);
                const double a11 = diffusion[0](x, t), a12 = diffusion[1](x, t);
                const double a21 = diffusion[2](x, t), a22 = diffusion[3](x, t);
                for (const auto& v : xi) {
                    const double form = a11 * v.x * v.x + (a12 + a21) * v.x * v.y + a22 * v.y * v.y;
                    if (form < alpha * (1 - 1e-12))
                        throw PreconditionError("ellipticity a_ij xi_i xi_j >= alpha violated at element " +
                                                std::to_string(e) + ", t = " + std::to_string(t));
                }
                for (double v : {a11, a12, a21, a22, advection[0](x, t), advection[1](x, t), drift[0](x, t),
                                 drift[1](x, t), reaction(x, t)})
                    if (!(std::abs(v) <= bound))
                        throw PreconditionError("coefficient magnitude exceeds declared bound M at element " +
                                                std::to_string(e) + ", t = " + std::to_string(t));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Spaces

std::string_view to_string(BoundaryCondition bc) { return bc == BoundaryCondition::dirichlet ? "dirichlet" : "neumann"; }

BoundaryCondition boundary_condition_from_string(std::string_view s)
{
    if (s == "dirichlet") return BoundaryCondition::dirichlet;
    if (s == "neumann") return BoundaryCondition::neumann;
    throw PreconditionError("unknown boundary condition '" + std::string(s) + "'");
}

FunctionSpace::FunctionSpace(MeshPtr mesh, BoundaryCondition bc) : mesh_(std::move(mesh)), bc_(bc)
{
    if (!mesh_) throw PreconditionError("function space needs a mesh");
    const int nv = mesh_->num_vertices();
    dof_of_vertex_.assign(static_cast<std::size_t>(nv), -1);
    for (int v = 0; v < nv; ++v) {
        if (bc_ == BoundaryCondition::dirichlet && mesh_->boundary_vertices()[static_cast<std::size_t>(v)]) continue;
        dof_of_vertex_[static_cast<std::size_t>(v)] = static_cast<int>(vertex_of_dof_.size());
        vertex_of_dof_.push_back(v);
    }
}

Vector FunctionSpace::to_vertex_values(const Vector& dofs) const
{
    Vector out = Vector::Zero(mesh_->num_vertices());
    for (int d = 0; d < n_dofs(); ++d) out[vertex(d)] = dofs[d];
    return out;
}

Vector FunctionSpace::from_vertex_values(const Vector& values) const
{
    Vector out(n_dofs());
    for (int d = 0; d < n_dofs(); ++d) out[d] = values[vertex(d)];
    return out;
}

SpacePtr make_space(MeshPtr mesh, BoundaryCondition bc)
{
    return std::make_shared<const FunctionSpace>(std::move(mesh), bc);
}

FEField::FEField(SpacePtr s, Vector c) : space(std::move(s)), coeffs(std::move(c))
{
    if (!space || coeffs.size() != space->n_dofs()) throw PreconditionError("field length does not match the space");
    if (!coeffs.allFinite()) throw PreconditionError("field has non-finite values");
}

FEField FEField::zero(SpacePtr s)
{
    const int n = s->n_dofs();
    return FEField(std::move(s), Vector::Zero(n));
}

FEField interpolate(SpacePtr space, const SpaceTimeFunction& f, double t)
{
    const Mesh& mesh = space->mesh();
    std::vector<int> incident(static_cast<std::size_t>(mesh.num_vertices()), -1);
    for (int e = 0; e < mesh.num_triangles(); ++e)
        for (int v : mesh.triangles()[static_cast<std::size_t>(e)])
            if (incident[static_cast<std::size_t>(v)] < 0) incident[static_cast<std::size_t>(v)] = e;
    Vector c(space->n_dofs());
    for (int d = 0; d < space->n_dofs(); ++d) {
        const int v = space->vertex(d);
        Point p = mesh.vertices()[static_cast<std::size_t>(v)];
        if (mesh.lip_side(v) != LipSide::none) p = p + 1e-9 * (mesh.centroid(incident[static_cast<std::size_t>(v)]) - p);
        c[d] = f(p, t);
    }
    return FEField(std::move(space), std::move(c));
}

double evaluate(const FEField& u, const Location& loc)
{
    const auto& tri = u.space->mesh().triangles()[static_cast<std::size_t>(loc.triangle)];
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
        const int d = u.space->dof(tri[static_cast<std::size_t>(i)]);
        if (d >= 0) s += loc.bary[static_cast<std::size_t>(i)] * u.coeffs[d];
    }
    return s;
}

Point gradient(const FEField& u, int triangle)
{
    const auto g = geometry(u.space->mesh(), triangle);
    const auto& tri = u.space->mesh().triangles()[static_cast<std::size_t>(triangle)];
    Point s{};
    for (int i = 0; i < 3; ++i) {
        const int d = u.space->dof(tri[static_cast<std::size_t>(i)]);
        if (d >= 0) s = s + u.coeffs[d] * g.grad[static_cast<std::size_t>(i)];
    }
    return s;
}

// ---------------------------------------------------------------------------
// Assembly

SparseMatrix assemble_form(const FunctionSpace& space, const CoefficientSet& coeffs, double t)
{
    return to_dofs(space, form_triplets(space.mesh(), coeffs, t));
}

SparseMatrix assemble_form_all_vertices(const Mesh& mesh, const CoefficientSet& coeffs, double t)
{
    const auto trip = form_triplets(mesh, coeffs, t);
    SparseMatrix a(mesh.num_vertices(), mesh.num_vertices());
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    return a;
}

SparseMatrix assemble_mass(const FunctionSpace& space)
{
    const Mesh& mesh = space.mesh();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const double a = mesh.signed_area(e);
        const auto& tri = mesh.triangles()[static_cast<std::size_t>(e)];
        for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l)
                trip.emplace_back(tri[static_cast<std::size_t>(k)], tri[static_cast<std::size_t>(l)],
                                  a / 12.0 * (k == l ? 2.0 : 1.0));
    }
    return to_dofs(space, trip);
}

SparseMatrix assemble_stiffness(const FunctionSpace& space)
{
    const Mesh& mesh = space.mesh();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto g = geometry(mesh, e);
        const auto& tri = mesh.triangles()[static_cast<std::size_t>(e)];
        for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l)
                trip.emplace_back(tri[static_cast<std::size_t>(k)], tri[static_cast<std::size_t>(l)],
                                  g.area * dot(g.grad[static_cast<std::size_t>(k)], g.grad[static_cast<std::size_t>(l)]));
    }
    return to_dofs(space, trip);
}

Vector assemble_load(const FunctionSpace& space, const SpaceTimeFunction& f, double t)
{
    const Mesh& mesh = space.mesh();
    Vector b = Vector::Zero(space.n_dofs());
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto g = geometry(mesh, e);
        const auto& tri = mesh.triangles()[static_cast<std::size_t>(e)];
        for (const auto& q : quad2) {
            const double fx = f(g.at(q.bary), t);
            check_finite(fx, e, t, "source");
            for (int k = 0; k < 3; ++k) {
                const int d = space.dof(tri[static_cast<std::size_t>(k)]);
                if (d >= 0) b[d] += q.weight * g.area * fx * q.bary[static_cast<std::size_t>(k)];
            }
        }
    }
    return b;
}

void write_coordinate(std::ostream& os, const SparseMatrix& a)
{
    char buf[64];
    for (int r = 0; r < a.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
            std::snprintf(buf, sizeof buf, "%.17g", it.value());
            os << it.row() << ' ' << it.col() << ' ' << buf << '\n';
        }
}

// ---------------------------------------------------------------------------
// Linear solve

Vector solve_linear(const SparseMatrix& a, const Vector& b, double tol, SolveStats* stats)
{
    if (!(tol > 0)) throw PreconditionError("solve_linear: tol must be positive");
    if (a.rows() != a.cols() || a.rows() != b.size()) throw PreconditionError("solve_linear: dimension mismatch");
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        if (stats) *stats = {};
        return Vector::Zero(b.size());
    }
    for (int r = 0; r < a.outerSize(); ++r) {
        bool nonzero = false;
        for (SparseMatrix::InnerIterator it(a, r); it && !nonzero; ++it) nonzero = it.value() != 0.0;
        if (!nonzero) throw SolverError("solve_linear: zero row " + std::to_string(r) + " (singular matrix)", 1.0);
    }
    Eigen::BiCGSTAB<SparseMatrix, Eigen::DiagonalPreconditioner<double>> solver;
    solver.setMaxIterations(10 * static_cast<int>(a.rows()));
    solver.setTolerance(tol);
    solver.compute(a);
    Vector x = solver.solve(b);
    const double res = x.allFinite() ? (a * x - b).norm() / bnorm : std::numeric_limits<double>::infinity();
    if (stats) *stats = {static_cast<int>(solver.iterations()), res};
    if (!(res <= tol))
        throw SolverError("solve_linear: BiCGStab did not reach tolerance after " +
                              std::to_string(solver.iterations()) + " iterations (relative residual " +
                              std::to_string(res) + ")",
                          res);
    return x;
}

// ---------------------------------------------------------------------------
// Norms

NormSet::NormSet(SpacePtr space)
    : space_(std::move(space)), mass_(assemble_mass(*space_)), stiffness_(assemble_stiffness(*space_))
{
    riesz_ = stiffness_ + mass_;
    riesz_factor_.compute(Eigen::SparseMatrix<double>(riesz_));
    if (riesz_factor_.info() != Eigen::Success) throw SolverError("Riesz matrix factorization failed", 0.0);
}

double NormSet::h_inner(const Vector& u, const Vector& v) const { return u.dot(mass_ * v); }
double NormSet::h_norm(const Vector& u) const { return std::sqrt(std::max(0.0, u.dot(mass_ * u))); }
double NormSet::v_norm(const Vector& u) const { return std::sqrt(std::max(0.0, u.dot(riesz_ * u))); }

double NormSet::dual_norm(const Vector& b) const
{
    const Vector r = riesz_factor_.solve(b);
    return std::sqrt(std::max(0.0, b.dot(r)));
}

double ExactErrors::h1() const { return std::sqrt(l2 * l2 + h1_semi * h1_semi); }

ExactErrors error_vs_exact(const FEField& u, const SpaceTimeFunction& value,
                           const std::function<Point(Point, double)>& grad, double t)
{
    const Mesh& mesh = u.space->mesh();
    double l2 = 0.0, semi = 0.0;
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto g = geometry(mesh, e);
        const Point gu = gradient(u, e);
        for (const auto& q : quad4) {
            const Point x = g.at(q.bary);
            const double uh = evaluate(u, Location{e, q.bary});
            const Point ge = grad(x, t);
            const double w = q.weight * g.area;
            l2 += w * (uh - value(x, t)) * (uh - value(x, t));
            semi += w * ((gu.x - ge.x) * (gu.x - ge.x) + (gu.y - ge.y) * (gu.y - ge.y));
        }
    }
    return {std::sqrt(l2), std::sqrt(semi)};
}

// ---------------------------------------------------------------------------
// Form constants

FormConstants estimate_form_constants(const FunctionSpace& space, const CoefficientSet& coeffs, int n_samples,
                                      unsigned seed, double t_max)
{
    if (n_samples < 1) throw PreconditionError("estimate_form_constants: n_samples must be >= 1");
    std::vector<double> times;
    for (int s = 0; s < n_samples; ++s) times.push_back(t_max * s / n_samples);
    return estimate_form_constants(space, coeffs, times, seed);
}

FormConstants estimate_form_constants(const FunctionSpace& space, const CoefficientSet& coeffs,
                                      std::span<const double> times, unsigned seed)
{
    if (times.empty()) throw PreconditionError("estimate_form_constants: need at least one sample time");
    constexpr int max_dense = 3000;
    if (space.n_dofs() > max_dense)
        throw SolverError("estimate_form_constants: dense eigensolve limited to " + std::to_string(max_dense) + " dofs",
                          0.0);
    constexpr int pairs_per_time = 16;
    constexpr double coercive_floor = 1e-8;

    const Eigen::MatrixXd mass = dense(assemble_mass(space));
    const Eigen::MatrixXd riesz = dense(assemble_stiffness(space)) + mass;
    const Eigen::LLT<Eigen::MatrixXd> riesz_llt(riesz);

    std::mt19937 rng(seed);
    std::normal_distribution<double> normal;
    auto random_unit = [&]() {
        Eigen::VectorXd u(space.n_dofs());
        for (int i = 0; i < u.size(); ++i) u[i] = normal(rng);
        return Eigen::VectorXd(u / std::sqrt(u.dot(riesz * u)));
    };

    FormConstants out;
    double mu_min = std::numeric_limits<double>::infinity();   // coercivity w.r.t. the V-norm
    double nu_min = std::numeric_limits<double>::infinity();   // w.r.t. the H-norm
    std::vector<Eigen::MatrixXd> syms;
    for (double t : times) {
        const Eigen::MatrixXd a = dense(assemble_form(space, coeffs, t));
        for (int s = 0; s < pairs_per_time; ++s) {
            const Eigen::VectorXd u = random_unit();
            const Eigen::VectorXd v = random_unit();
            out.bound = std::max(out.bound, std::abs(v.dot(a * u)));
        }
        Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
        mu_min = std::min(mu_min, min_generalized_eigenvalue(sym, riesz));
        nu_min = std::min(nu_min, min_generalized_eigenvalue(sym, mass));
        syms.push_back(std::move(sym));
    }
    if (mu_min > coercive_floor) {
        out.alpha = mu_min;
        out.lambda = 0.0;
        return out;
    }
    // shift by one unit past the H-spectrum bottom
    out.lambda = std::max(0.0, -nu_min) + 1.0;
    out.alpha = std::numeric_limits<double>::infinity();
    for (const auto& sym : syms)
        out.alpha = std::min(out.alpha, min_generalized_eigenvalue(sym + out.lambda * mass, riesz));
    return out;
}

}  // namespace mosco
