#include "mosco/mosco.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mosco {

namespace {

constexpr std::array<std::array<double, 3>, 3> quad_bary{{
    {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
    {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
    {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0},
}};

Point at_bary(const Mesh& m, int t, const std::array<double, 3>& l)
{
    const auto& tri = m.triangles()[static_cast<std::size_t>(t)];
    Point p{};
    for (int i = 0; i < 3; ++i) p = p + l[static_cast<std::size_t>(i)] * m.vertices()[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
    return p;
}

// gradients of the barycentric basis on triangle t
std::array<Point, 3> basis_gradients(const Mesh& m, int t)
{
    const auto& tri = m.triangles()[static_cast<std::size_t>(t)];
    std::array<Point, 3> p;
    for (int i = 0; i < 3; ++i) p[static_cast<std::size_t>(i)] = m.vertices()[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
    const double inv = 1.0 / (2.0 * m.signed_area(t));
    std::array<Point, 3> g;
    for (int i = 0; i < 3; ++i) {
        const Point pj = p[static_cast<std::size_t>((i + 1) % 3)], pk = p[static_cast<std::size_t>((i + 2) % 3)];
        g[static_cast<std::size_t>(i)] = {(pj.y - pk.y) * inv, (pk.x - pj.x) * inv};
    }
    return g;
}

std::vector<int> incident_triangle(const Mesh& m)
{
    std::vector<int> inc(static_cast<std::size_t>(m.num_vertices()), -1);
    for (int t = 0; t < m.num_triangles(); ++t)
        for (int v : m.triangles()[static_cast<std::size_t>(t)])
            if (inc[static_cast<std::size_t>(v)] < 0) inc[static_cast<std::size_t>(v)] = t;
    return inc;
}

void require_same_kind(const FunctionSpace& s, EmbeddingKind kind)
{
    if (kind == EmbeddingKind::dirichlet_zero_extension && s.bc() != BoundaryCondition::dirichlet)
        throw PreconditionError("zero extension is only valid for Dirichlet spaces; use the Neumann pair embedding");
}

double bump(double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }

}  // namespace

// ---------------------------------------------------------------------------

SampleGrid SampleGrid::disk(double radius, int cells)
{
    if (!(radius > 0) || cells < 2) throw PreconditionError("sample grid needs radius > 0 and at least 2 cells");
    SampleGrid g;
    g.radius = radius;
    const double h = 2.0 * radius / cells;
    for (int j = 0; j < cells; ++j)
        for (int i = 0; i < cells; ++i) {
            const Point p{-radius + (i + 0.5) * h, -radius + (j + 0.5) * h};
            if (p.x * p.x + p.y * p.y < radius * radius) g.points.push_back(p);
        }
    const double w = std::numbers::pi * radius * radius / static_cast<double>(g.points.size());
    g.weights.assign(g.points.size(), w);
    return g;
}

double SampleGrid::total_weight() const
{
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

std::string_view to_string(EmbeddingKind kind)
{
    return kind == EmbeddingKind::dirichlet_zero_extension ? "dirichlet_zero_extension" : "neumann_pair";
}

Embedding::Embedding(MeshPtr mesh, const SampleGrid& grid) : mesh_(std::move(mesh)), grid_(&grid)
{
    for (const auto& v : mesh_->vertices())
        if (std::hypot(v.x, v.y) > grid.radius * (1 + 1e-12))
            throw PreconditionError("mesh leaves the hold-all ball of the sample grid");
    locations_.reserve(grid.size());
    for (const Point& p : grid.points) locations_.push_back(mesh_->locate(p).value_or(Location{}));
}

EmbeddedField embed(const FEField& u, const Embedding& e, EmbeddingKind kind)
{
    require_same_kind(*u.space, kind);
    if (u.space->mesh_ptr() != e.mesh() && !(u.space->mesh() == *e.mesh()))
        throw PreconditionError("embedding was built for a different mesh");
    const Mesh& m = u.space->mesh();
    std::vector<Point> grads(static_cast<std::size_t>(m.num_triangles()));
    for (int t = 0; t < m.num_triangles(); ++t) grads[static_cast<std::size_t>(t)] = gradient(u, t);
    const auto n = static_cast<Eigen::Index>(e.locations().size());
    EmbeddedField out{kind, Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const Location& loc = e.locations()[static_cast<std::size_t>(i)];
        if (loc.triangle < 0) continue;
        out.values[i] = evaluate(u, loc);
        out.grad_x[i] = grads[static_cast<std::size_t>(loc.triangle)].x;
        out.grad_y[i] = grads[static_cast<std::size_t>(loc.triangle)].y;
    }
    return out;
}

double EmbeddedDistance::full() const { return std::sqrt(value * value + gradient * gradient); }

EmbeddedDistance distance(const EmbeddedField& a, const EmbeddedField& b, const SampleGrid& grid)
{
    if (a.values.size() != b.values.size() || a.values.size() != static_cast<Eigen::Index>(grid.size()))
        throw PreconditionError("embedded fields live on different sample grids");
    double v = 0.0, g = 0.0;
    for (Eigen::Index i = 0; i < a.values.size(); ++i) {
        const double w = grid.weights[static_cast<std::size_t>(i)];
        const double dv = a.values[i] - b.values[i];
        const double dx = a.grad_x[i] - b.grad_x[i], dy = a.grad_y[i] - b.grad_y[i];
        v += w * dv * dv;
        g += w * (dx * dx + dy * dy);
    }
    return {std::sqrt(v), std::sqrt(g)};
}

double norm(const EmbeddedField& a, const SampleGrid& grid)
{
    const auto n = a.values.size();
    const EmbeddedField zero{a.kind, Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
    return distance(a, zero, grid).full();
}

// ---------------------------------------------------------------------------

Vector transfer_nodal(const FEField& u, const FunctionSpace& target)
{
    const Mesh& src = u.space->mesh();
    const Mesh& dst = target.mesh();
    const auto inc = incident_triangle(dst);
    Vector out = Vector::Zero(target.n_dofs());
    for (int d = 0; d < target.n_dofs(); ++d) {
        const int v = target.vertex(d);
        const Point p = dst.vertices()[static_cast<std::size_t>(v)];
        std::optional<Location> loc;
        if (dst.lip_side(v) != LipSide::none) {
            const Point hint = p + 1e-6 * (dst.centroid(inc[static_cast<std::size_t>(v)]) - p);
            loc = src.locate_from(p, hint);
        } else {
            loc = src.locate(p);
        }
        if (loc) out[d] = evaluate(u, *loc);
    }
    return out;
}

Vector transfer_riesz(const FEField& u, const FunctionSpace& target)
{
    const Mesh& src = u.space->mesh();
    const Mesh& dst = target.mesh();
    std::vector<Point> src_grads(static_cast<std::size_t>(src.num_triangles()));
    for (int t = 0; t < src.num_triangles(); ++t) src_grads[static_cast<std::size_t>(t)] = gradient(u, t);

    Vector rhs = Vector::Zero(target.n_dofs());
    for (int t = 0; t < dst.num_triangles(); ++t) {
        const auto g = basis_gradients(dst, t);
        const auto& tri = dst.triangles()[static_cast<std::size_t>(t)];
        const double w = dst.signed_area(t) / 3.0;
        for (const auto& l : quad_bary) {
            const auto loc = src.locate(at_bary(dst, t, l));
            if (!loc) continue;
            const double val = evaluate(u, *loc);
            const Point gu = src_grads[static_cast<std::size_t>(loc->triangle)];
            for (int k = 0; k < 3; ++k) {
                const int d = target.dof(tri[static_cast<std::size_t>(k)]);
                if (d < 0) continue;
                const Point gk = g[static_cast<std::size_t>(k)];
                rhs[d] += w * (gu.x * gk.x + gu.y * gk.y + val * l[static_cast<std::size_t>(k)]);
            }
        }
    }
    const SparseMatrix r = assemble_stiffness(target) + assemble_mass(target);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(r);
    if (solver.info() != Eigen::Success) throw SolverError("Riesz smoothing factorization failed", 0.0);
    return solver.solve(rhs);
}

double m1_defect(const FEField& u, const FunctionSpace& target, const ObstacleConstraint* constraint,
                 const DefectContext& ctx)
{
    require_same_kind(*u.space, ctx.kind);
    require_same_kind(target, ctx.kind);
    if (constraint && constraint->psi.size() != target.n_dofs())
        throw PreconditionError("constraint does not live on the target space");
    const EmbeddedField eu = embed(u, *ctx.source, ctx.kind);
    auto candidate = [&](Vector w) {
        if (constraint) w = w.cwiseMax(constraint->psi);
        const FEField f(std::make_shared<const FunctionSpace>(target), std::move(w));
        return distance(eu, embed(f, *ctx.target, ctx.kind), *ctx.grid).full();
    };
    const double nodal = candidate(transfer_nodal(u, target));
    if (nodal == 0.0) return 0.0;
    return std::min(nodal, candidate(transfer_riesz(u, target)));
}

double m1_defect_time(const Trajectory& u, const FunctionSpace& target, const ObstacleConstraint* constraint,
                      const DefectContext& ctx)
{
    const auto w = u.grid.trapezoid_weights();
    double s = 0.0;
    for (int k = 0; k < u.grid.num_nodes(); ++k) {
        const double d = m1_defect(u.field(k), target, constraint, ctx);
        s += w[static_cast<std::size_t>(k)] * d * d;
    }
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------

double stretch_map(double t_final, double delta, double t) { return (t_final + 2.0 * delta) / t_final * t - delta; }

Trajectory stretch_time(const Trajectory& u, double delta)
{
    if (!(delta >= 0)) throw PreconditionError("stretch_time: delta must be >= 0");
    if (delta == 0.0) return u;
    Trajectory out = u;
    out.grid = TimeGrid(u.grid.t_begin - delta, u.grid.t_end + delta, u.grid.steps);
    return out;
}

Trajectory resample(const Trajectory& u, const TimeGrid& grid)
{
    Trajectory out{u.space, grid, {}};
    for (int k = 0; k < grid.num_nodes(); ++k) out.nodes.push_back(u.at(grid.node(k)));
    return out;
}

double l2v_distance(const Trajectory& a, const Trajectory& b, const NormSet& norms)
{
    if (!(a.grid == b.grid)) throw PreconditionError("l2v_distance: time grids differ");
    const auto w = a.grid.trapezoid_weights();
    double s = 0.0;
    for (std::size_t k = 0; k < a.nodes.size(); ++k) s += w[k] * std::pow(norms.v_norm(a.nodes[k] - b.nodes[k]), 2);
    return std::sqrt(s);
}

Trajectory mollify_time(const Trajectory& u, double epsilon)
{
    const double tau = u.grid.tau();
    if (!(epsilon >= tau)) throw PreconditionError("mollify_time: epsilon must be at least the time step");
    std::vector<double> kernel;
    const int reach = static_cast<int>(std::ceil(epsilon / tau));
    for (int j = -reach; j <= reach; ++j) kernel.push_back(bump(j * tau / epsilon));
    double total = 0.0;
    for (double c : kernel) total += c;
    for (double& c : kernel) c /= total;

    const int last = u.grid.steps;
    Trajectory out{u.space, u.grid, {}};
    for (int k = 0; k <= last; ++k) {
        Vector acc = Vector::Zero(u.nodes.front().size());
        for (int j = -reach; j <= reach; ++j) {
            const double c = kernel[static_cast<std::size_t>(j + reach)];
            if (c == 0.0) continue;
            acc += c * u.nodes[static_cast<std::size_t>(std::clamp(k + j, 0, last))];
        }
        out.nodes.push_back(std::move(acc));
    }
    return out;
}

double smooth_step(double s)
{
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
    return a / (a + b);
}

Trajectory pou_recovery(SpacePtr space, const std::vector<std::pair<double, Vector>>& snapshots, const TimeGrid& grid,
                        const ObstacleConstraint* constraint)
{
    if (snapshots.empty()) throw PreconditionError("pou_recovery: no snapshots");
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
        if (snapshots[i].second.size() != space->n_dofs()) throw PreconditionError("pou_recovery: snapshot size");
        if (i > 0 && !(snapshots[i].first > snapshots[i - 1].first))
            throw PreconditionError("pou_recovery: snapshot times must be strictly increasing");
        if (constraint && !constraint->contains(snapshots[i].second))
            throw PreconditionError("pou_recovery: snapshot " + std::to_string(i) + " is infeasible");
    }
    Trajectory out{std::move(space), grid, {}};
    for (int k = 0; k < grid.num_nodes(); ++k) {
        const double t = grid.node(k);
        if (t <= snapshots.front().first) {
            out.nodes.push_back(snapshots.front().second);
            continue;
        }
        if (t >= snapshots.back().first) {
            out.nodes.push_back(snapshots.back().second);
            continue;
        }
        std::size_t i = 0;
        while (snapshots[i + 1].first <= t) ++i;
        const double s = (t - snapshots[i].first) / (snapshots[i + 1].first - snapshots[i].first);
        const double g = smooth_step(s);
        out.nodes.push_back((1.0 - g) * snapshots[i].second + g * snapshots[i + 1].second);
    }
    return out;
}

// ---------------------------------------------------------------------------

double capacity(const std::vector<int>& target_vertices, const FunctionSpace& background)
{
    if (background.bc() != BoundaryCondition::dirichlet)
        throw PreconditionError("capacity needs a Dirichlet background space");
    if (target_vertices.empty()) return 0.0;
    const int n = background.n_dofs();
    std::vector<bool> in_target(static_cast<std::size_t>(n), false);
    for (int v : target_vertices) {
        if (v < 0 || v >= background.mesh().num_vertices()) throw PreconditionError("capacity: vertex out of range");
        const int d = background.dof(v);
        if (d < 0) throw PreconditionError("capacity: target touches the boundary of the hold-all domain");
        in_target[static_cast<std::size_t>(d)] = true;
    }
    const SparseMatrix k = assemble_stiffness(background) + assemble_mass(background);

    // equality-constrained start: xi = 1 on the target, K-harmonic elsewhere
    std::vector<int> free_index(static_cast<std::size_t>(n), -1);
    int nf = 0;
    for (int d = 0; d < n; ++d)
        if (!in_target[static_cast<std::size_t>(d)]) free_index[static_cast<std::size_t>(d)] = nf++;
    Vector xi = Vector::Ones(n);
    if (nf > 0) {
        std::vector<Eigen::Triplet<double>> trip;
        Vector rhs = Vector::Zero(nf);
        for (int r = 0; r < n; ++r) {
            const int fr = free_index[static_cast<std::size_t>(r)];
            if (fr < 0) continue;
            for (SparseMatrix::InnerIterator it(k, r); it; ++it) {
                const int fc = free_index[static_cast<std::size_t>(it.col())];
                if (fc >= 0)
                    trip.emplace_back(fr, fc, it.value());
                else
                    rhs[fr] -= it.value();
            }
        }
        Eigen::SparseMatrix<double> kff(nf, nf);
        kff.setFromTriplets(trip.begin(), trip.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(kff);
        if (solver.info() != Eigen::Success) throw SolverError("capacity: factorization failed", 0.0);
        const Vector xf = solver.solve(rhs);
        for (int d = 0; d < n; ++d)
            if (free_index[static_cast<std::size_t>(d)] >= 0) xi[d] = xf[free_index[static_cast<std::size_t>(d)]];
    }
    Vector psi = Vector::Constant(n, -1e300);
    for (int d = 0; d < n; ++d)
        if (in_target[static_cast<std::size_t>(d)]) psi[d] = 1.0;
    PgsOptions opts;
    opts.omega = 1.5;
    opts.tol_change = 1e-12;
    xi = solve_lcp(k, Vector::Zero(n), psi, xi, opts);
    return xi.dot(k * xi);
}

}  // namespace mosco
