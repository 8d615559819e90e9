#include "mosco/fem.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <sstream>

using namespace mosco;

namespace {

MeshPtr unit_square(double h) { return std::make_shared<const Mesh>(generate_rectangle(0, 1, 0, 1, h)); }

double max_abs_diff(const SparseMatrix& a, const SparseMatrix& b)
{
    return (Eigen::MatrixXd(a) - Eigen::MatrixXd(b)).cwiseAbs().maxCoeff();
}

// Gauss-Legendre tensor rule on a triangle via the Duffy map; independent of the
// assembly quadrature.
double triangle_integral(Point p0, Point p1, Point p2, const std::function<double(Point)>& g)
{
    static const double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                0.9061798459386640};
    static const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                                0.2369268850561891};
    const double area2 = std::abs((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
    double s = 0.0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const double u = 0.5 * (x[i] + 1), v = 0.5 * (x[j] + 1);
            const double l1 = u, l2 = (1 - u) * v;  // Duffy: Jacobian (1-u)
            const Point p = p0 + l1 * (p1 - p0) + l2 * (p2 - p0);
            s += 0.25 * w[i] * w[j] * (1 - u) * g(p);
        }
    return s * area2;
}

}  // namespace

TEST(Presets, ValuesAndValidation)
{
    EXPECT_EQ(ScalarPreset::affine_x(1, 2, 3)({1, 1}, 0), 6.0);
    EXPECT_NEAR(ScalarPreset::harmonic_t(1, 2, 3)({0, 0}, 0.5), 1 + 2 * std::sin(1.5), 1e-15);
    EXPECT_EQ(ScalarPreset::bump({0, 0}, 0.5, 2.0)({0, 0}, 0), 2.0);
    EXPECT_EQ(ScalarPreset::bump({0, 0}, 0.5, 2.0)({0.6, 0}, 0), 0.0);
    EXPECT_NEAR(ScalarPreset::angle_ramp(1.0)({0, -1}, 0), 0.75, 1e-15);
    EXPECT_THROW(ScalarPreset::make("affine_x", {1, 2}), PreconditionError);
    EXPECT_THROW(ScalarPreset::make("nope", {1}), PreconditionError);
    EXPECT_EQ(ScalarPreset::make("product", {1, 0, 0, 1, 1, 1}).kind, ScalarPreset::Kind::product);
}

TEST(Space, DofMaps)
{
    const auto mesh = std::make_shared<const Mesh>(generate_cracked_disk(0.5, 0.1));
    const auto neu = make_space(mesh, BoundaryCondition::neumann);
    const auto dir = make_space(mesh, BoundaryCondition::dirichlet);
    EXPECT_EQ(neu->n_dofs(), mesh->num_vertices());
    int interior = 0;
    for (bool b : mesh->boundary_vertices()) interior += b ? 0 : 1;
    EXPECT_EQ(dir->n_dofs(), interior);
    for (const auto& s : mesh->seams()) {
        EXPECT_NE(neu->dof(s.upper), neu->dof(s.lower));
        EXPECT_EQ(dir->dof(s.upper), -1);
    }
}

TEST(Mass, ElementMatrixClosedForm)
{
    const auto mesh = std::make_shared<const Mesh>(
        Mesh({{0, 0}, {2, 0}, {0, 1}}, {{0, 1, 2}}, {{0, 1, BoundaryTag::outer}, {1, 2, BoundaryTag::outer}, {2, 0, BoundaryTag::outer}}, {}, 3.0));
    const SparseMatrix m = assemble_mass(*make_space(mesh, BoundaryCondition::neumann));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(m.coeff(i, j), 1.0 / 12 * (i == j ? 2 : 1), 1e-15);
    // the general form with c0 = 1 is the same matrix
    CoefficientSet c;
    c.diffusion = {ScalarPreset::constant(0), ScalarPreset::constant(0), ScalarPreset::constant(0),
                   ScalarPreset::constant(0)};
    c.reaction = ScalarPreset::constant(1);
    EXPECT_LT(max_abs_diff(assemble_form(*make_space(mesh, BoundaryCondition::neumann), c, 0.0), m), 1e-15);
}

TEST(Mass, TotalIsAreaAndSpd)
{
    const auto mesh = std::make_shared<const Mesh>(generate_cracked_disk(0.25, 0.1));
    const SparseMatrix m = assemble_mass(*make_space(mesh, BoundaryCondition::neumann));
    EXPECT_NEAR(Eigen::MatrixXd(m).sum(), mesh->total_area(), 1e-12);

    const auto small = make_space(unit_square(1.0 / 8), BoundaryCondition::dirichlet);
    ASSERT_EQ(small->n_dofs(), 49);
    const Eigen::MatrixXd md(assemble_mass(*small));
    EXPECT_LT((md - md.transpose()).cwiseAbs().maxCoeff(), 1e-16);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(md);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Form, LaplacianRowSumsVanish)
{
    const auto mesh = unit_square(0.1);
    const SparseMatrix a = assemble_form_all_vertices(*mesh, CoefficientSet::laplacian(), 0.0);
    const Eigen::VectorXd rows = Eigen::MatrixXd(a).rowwise().sum();
    EXPECT_LT(rows.cwiseAbs().maxCoeff(), 1e-13);
    // five-point structure: interior diagonal 4, off-diagonal -1 on axis neighbours
    const auto space = make_space(mesh, BoundaryCondition::dirichlet);
    const SparseMatrix ad = assemble_form(*space, CoefficientSet::laplacian(), 0.0);
    for (int d = 0; d < space->n_dofs(); ++d) EXPECT_NEAR(ad.coeff(d, d), 4.0, 1e-12);
}

TEST(Form, LinearInCoefficients)
{
    const auto space = make_space(unit_square(0.2), BoundaryCondition::neumann);
    CoefficientSet c1, c2, sum;
    c1.diffusion = {ScalarPreset::affine_x(1, 0.2, 0), ScalarPreset::constant(0.1), ScalarPreset::constant(-0.2),
                    ScalarPreset::affine_x(2, 0, 0.3)};
    c1.advection = {ScalarPreset::affine_x(0.1, 0.2, 0.3), ScalarPreset::constant(0.4)};
    c1.drift = {ScalarPreset::constant(-0.3), ScalarPreset::affine_x(0, 1, 0)};
    c1.reaction = ScalarPreset::affine_x(0.5, 0, 1);
    c2.diffusion = {ScalarPreset::affine_x(0.5, 0, 0.1), ScalarPreset::constant(0.2), ScalarPreset::constant(0.3),
                    ScalarPreset::affine_x(1, 0.4, 0)};
    c2.advection = {ScalarPreset::affine_x(0, 0, 1), ScalarPreset::constant(-0.1)};
    c2.drift = {ScalarPreset::constant(0.7), ScalarPreset::affine_x(0.2, 0, 0)};
    c2.reaction = ScalarPreset::affine_x(-1, 0.5, 0);
    auto add = [](const ScalarPreset& a, const ScalarPreset& b) {
        auto pa = a.kind == ScalarPreset::Kind::constant ? std::vector<double>{a.params[0], 0, 0} : a.params;
        auto pb = b.kind == ScalarPreset::Kind::constant ? std::vector<double>{b.params[0], 0, 0} : b.params;
        return ScalarPreset::affine_x(pa[0] + pb[0], pa[1] + pb[1], pa[2] + pb[2]);
    };
    for (int i = 0; i < 4; ++i) sum.diffusion[static_cast<std::size_t>(i)] = add(c1.diffusion[static_cast<std::size_t>(i)], c2.diffusion[static_cast<std::size_t>(i)]);
    for (int i = 0; i < 2; ++i) {
        sum.advection[static_cast<std::size_t>(i)] = add(c1.advection[static_cast<std::size_t>(i)], c2.advection[static_cast<std::size_t>(i)]);
        sum.drift[static_cast<std::size_t>(i)] = add(c1.drift[static_cast<std::size_t>(i)], c2.drift[static_cast<std::size_t>(i)]);
    }
    sum.reaction = add(c1.reaction, c2.reaction);
    const SparseMatrix a1 = assemble_form(*space, c1, 0.0), a2 = assemble_form(*space, c2, 0.0);
    const SparseMatrix as = assemble_form(*space, sum, 0.0);
    EXPECT_LT(max_abs_diff(as, a1 + a2), 1e-14);
    EXPECT_FALSE(c1.symmetric());
    EXPECT_GT((Eigen::MatrixXd(a1) - Eigen::MatrixXd(a1).transpose()).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Form, DirichletIsPrincipalSubmatrix)
{
    const auto mesh = std::make_shared<const Mesh>(generate_cracked_disk(0.5, 0.1));
    CoefficientSet c;
    c.drift = {ScalarPreset::constant(0.3), ScalarPreset::constant(-0.2)};
    c.reaction = ScalarPreset::constant(1.0);
    const auto dir = make_space(mesh, BoundaryCondition::dirichlet);
    const auto neu = make_space(mesh, BoundaryCondition::neumann);
    const Eigen::MatrixXd ad(assemble_form(*dir, c, 0.0));
    const Eigen::MatrixXd an(assemble_form(*neu, c, 0.0));
    double diff = 0.0;
    for (int i = 0; i < dir->n_dofs(); ++i)
        for (int j = 0; j < dir->n_dofs(); ++j)
            diff = std::max(diff, std::abs(ad(i, j) - an(neu->dof(dir->vertex(i)), neu->dof(dir->vertex(j)))));
    EXPECT_EQ(diff, 0.0);
}

TEST(Form, SeamsAreNotCoupled)
{
    const auto mesh = std::make_shared<const Mesh>(generate_cracked_disk(0.25, 0.1));
    const auto neu = make_space(mesh, BoundaryCondition::neumann);
    const SparseMatrix s = assemble_stiffness(*neu);
    for (const auto& p : mesh->seams()) EXPECT_EQ(s.coeff(neu->dof(p.upper), neu->dof(p.lower)), 0.0);
}

TEST(Form, ScalesLinearlyInTime)
{
    const auto space = make_space(unit_square(0.2), BoundaryCondition::dirichlet);
    CoefficientSet c = CoefficientSet::laplacian();
    c.diffusion[0] = c.diffusion[3] = ScalarPreset::affine_t(1.0, 1.0);
    EXPECT_TRUE(c.time_dependent());
    EXPECT_LT(max_abs_diff(assemble_form(*space, c, 1.0), 2.0 * assemble_form(*space, c, 0.0)), 1e-14);
}

TEST(Form, NonFiniteCoefficientIsReported)
{
    const auto space = make_space(unit_square(0.5), BoundaryCondition::neumann);
    CoefficientSet c;
    c.reaction = ScalarPreset::constant(std::nan(""));
    try {
        assemble_form(*space, c, 0.25);
        FAIL();
    } catch (const AssemblyError& e) {
        EXPECT_NE(std::string(e.what()).find("element 0"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("t = 0.25"), std::string::npos);
    }
}

TEST(Load, ZeroOneAndLinearAgainstOracle)
{
    const auto mesh = unit_square(0.125);
    const auto neu = make_space(mesh, BoundaryCondition::neumann);
    EXPECT_EQ(assemble_load(*neu, [](Point, double) { return 0.0; }, 0).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_NEAR(assemble_load(*neu, [](Point, double) { return 1.0; }, 0).sum(), 1.0, 1e-13);

    const Vector b = assemble_load(*neu, [](Point x, double) { return x.x; }, 0);
    Vector oracle = Vector::Zero(neu->n_dofs());
    for (int e = 0; e < mesh->num_triangles(); ++e) {
        const auto& tri = mesh->triangles()[static_cast<std::size_t>(e)];
        const Point p0 = mesh->vertices()[static_cast<std::size_t>(tri[0])];
        const Point p1 = mesh->vertices()[static_cast<std::size_t>(tri[1])];
        const Point p2 = mesh->vertices()[static_cast<std::size_t>(tri[2])];
        const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
        for (int k = 0; k < 3; ++k) {
            auto phi = [&](Point p) {
                const double l1 = ((p.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p.y - p0.y)) / det;
                const double l2 = ((p1.x - p0.x) * (p.y - p0.y) - (p.x - p0.x) * (p1.y - p0.y)) / det;
                return k == 0 ? 1 - l1 - l2 : (k == 1 ? l1 : l2);
            };
            oracle[neu->dof(tri[static_cast<std::size_t>(k)])] +=
                triangle_integral(p0, p1, p2, [&](Point p) { return p.x * phi(p); });
        }
    }
    EXPECT_LT((b - oracle).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Solve, IdentitySpdAndSingular)
{
    SparseMatrix id(5, 5);
    id.setIdentity();
    const Vector b = Vector::LinSpaced(5, 1, 5);
    EXPECT_LT((solve_linear(id, b, 1e-12) - b).norm(), 1e-14);

    std::mt19937 rng(11);
    std::normal_distribution<double> n;
    Eigen::MatrixXd r(20, 20);
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) r(i, j) = n(rng);
    const Eigen::MatrixXd spd = r * r.transpose() + 20.0 * Eigen::MatrixXd::Identity(20, 20);
    Vector rhs(20);
    for (int i = 0; i < 20; ++i) rhs[i] = n(rng);
    const SparseMatrix a = spd.sparseView();
    SolveStats st;
    const Vector x = solve_linear(a, rhs, 1e-12, &st);
    const Vector oracle = spd.partialPivLu().solve(rhs);
    EXPECT_LT((x - oracle).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE(st.relative_residual, 1e-12);

    SparseMatrix sing = a;
    sing.row(3) *= 0.0;
    EXPECT_THROW(solve_linear(sing, rhs, 1e-10), SolverError);
    EXPECT_EQ(solve_linear(a, Vector::Zero(20), 1e-10).norm(), 0.0);
}

TEST(Norms, RieszDualNormMatchesDenseOracle)
{
    const auto space = make_space(unit_square(0.25), BoundaryCondition::neumann);
    const NormSet norms(space);
    Vector b = Vector::LinSpaced(space->n_dofs(), -1, 2);
    const Eigen::MatrixXd r(norms.riesz());
    EXPECT_NEAR(norms.dual_norm(b), std::sqrt(b.dot(r.ldlt().solve(b))), 1e-12);
    Vector ones = Vector::Ones(space->n_dofs());
    EXPECT_NEAR(norms.h_norm(ones), 1.0, 1e-13);
    EXPECT_NEAR(norms.v_norm(ones), 1.0, 1e-13);
}

TEST(Norms, ExactErrorConvergesForSmoothFunction)
{
    auto f = [](Point x, double) { return std::sin(3 * x.x) * std::cos(2 * x.y); };
    auto g = [](Point x, double) { return Point{3 * std::cos(3 * x.x) * std::cos(2 * x.y), -2 * std::sin(3 * x.x) * std::sin(2 * x.y)}; };
    double prev = 1e9;
    for (double h : {0.2, 0.1, 0.05}) {
        const auto space = make_space(unit_square(h), BoundaryCondition::neumann);
        const double e = error_vs_exact(interpolate(space, f), f, g, 0.0).h1();
        EXPECT_LT(e, 0.6 * prev);
        prev = e;
    }
}

TEST(Interpolate, CapturesJumpAcrossCrack)
{
    const auto mesh = std::make_shared<const Mesh>(generate_cracked_disk(0.0, 0.1));
    const auto space = make_space(mesh, BoundaryCondition::neumann);
    const FEField u = interpolate(space, ScalarPreset::angle_ramp(1.0));
    for (const auto& s : mesh->seams()) {
        const double r2 = std::pow(mesh->vertices()[static_cast<std::size_t>(s.upper)].x, 2);
        EXPECT_NEAR(u.coeffs[space->dof(s.upper)], 0.0, 1e-8);
        EXPECT_NEAR(u.coeffs[space->dof(s.lower)], r2, 1e-8);
    }
}

TEST(FormConstants, LaplacianNeumann)
{
    const auto space = make_space(unit_square(0.2), BoundaryCondition::neumann);
    const auto k = estimate_form_constants(*space, CoefficientSet::laplacian(), 2, 7u);
    EXPECT_LE(k.alpha, 1.0 + 1e-10);
    EXPECT_NEAR(k.lambda, 1.0, 1e-8);
    EXPECT_LE(k.bound, 1.0 + 1e-12);

    // sampled coercivity a(u,u) + lambda |u|_H^2 >= alpha |u|_V^2
    const NormSet norms(space);
    const SparseMatrix a = assemble_form(*space, CoefficientSet::laplacian(), 0.0);
    std::mt19937 rng(5);
    std::normal_distribution<double> n;
    for (int s = 0; s < 50; ++s) {
        Vector u(space->n_dofs());
        for (int i = 0; i < u.size(); ++i) u[i] = n(rng);
        EXPECT_GE(u.dot(a * u) + k.lambda * std::pow(norms.h_norm(u), 2),
                  k.alpha * std::pow(norms.v_norm(u), 2) * (1 - 1e-10));
    }
}

TEST(FormConstants, NegativeReactionNeedsShift)
{
    const auto space = make_space(unit_square(0.2), BoundaryCondition::neumann);
    CoefficientSet c = CoefficientSet::laplacian();
    c.reaction = ScalarPreset::constant(-5.0);
    const auto k = estimate_form_constants(*space, c, 1, 7u);
    EXPECT_GE(k.lambda, 5.0);
    EXPECT_GT(k.alpha, 0.0);
}

TEST(FormConstants, ScalingAndDirichletCoercive)
{
    const auto space = make_space(unit_square(0.2), BoundaryCondition::neumann);
    const auto k1 = estimate_form_constants(*space, CoefficientSet::laplacian(1.0), 3, 42u);
    const auto k2 = estimate_form_constants(*space, CoefficientSet::laplacian(2.0), 3, 42u);
    EXPECT_LE(k2.bound, 2.0 + 1e-12);
    EXPECT_NEAR(k2.bound, 2.0 * k1.bound, 1e-12 * k1.bound);

    const auto dir = make_space(unit_square(0.2), BoundaryCondition::dirichlet);
    const auto kd = estimate_form_constants(*dir, CoefficientSet::laplacian(), 1, 1u);
    EXPECT_EQ(kd.lambda, 0.0);
    EXPECT_GT(kd.alpha, 0.5);  // Poincare: 2 pi^2 / (2 pi^2 + 1)
    EXPECT_LT(kd.alpha, 1.0);
}

TEST(Hypotheses, EllipticityAndBound)
{
    const Mesh m = generate_rectangle(0, 1, 0, 1, 0.25);
    const double times[] = {0.0, 0.5};
    CoefficientSet c = CoefficientSet::laplacian();
    EXPECT_NO_THROW(c.check_hypotheses(m, times, 1u));
    c.alpha = 1.5;
    EXPECT_THROW(c.check_hypotheses(m, times, 1u), PreconditionError);
    c = CoefficientSet::laplacian();
    c.reaction = ScalarPreset::constant(3.0);
    EXPECT_THROW(c.check_hypotheses(m, times, 1u), PreconditionError);
}

TEST(Export, CoordinateText)
{
    SparseMatrix id(2, 2);
    id.setIdentity();
    std::ostringstream os;
    write_coordinate(os, id);
    EXPECT_EQ(os.str(), "0 0 1\n1 1 1\n");
}
