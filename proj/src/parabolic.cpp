#include "mosco/parabolic.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mosco {

TimeGrid::TimeGrid(double t0, double t1, int m) : t_begin(t0), t_end(t1), steps(m)
{
    if (!(std::isfinite(t0) && std::isfinite(t1) && t1 > t0)) throw PreconditionError("time grid needs t_end > t_begin");
    if (m < 1) throw PreconditionError("time grid needs at least one step");
}

std::vector<double> TimeGrid::trapezoid_weights() const
{
    std::vector<double> w(static_cast<std::size_t>(num_nodes()), tau());
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

Vector Trajectory::at(double t) const
{
    if (t <= grid.t_begin) return nodes.front();
    if (t >= grid.t_end) return nodes.back();
    const double s = (t - grid.t_begin) / grid.tau();
    const int k = std::min(static_cast<int>(s), grid.steps - 1);
    const double r = s - k;
    return (1.0 - r) * nodes[static_cast<std::size_t>(k)] + r * nodes[static_cast<std::size_t>(k + 1)];
}

Trajectory constant_trajectory(SpacePtr space, const TimeGrid& grid, const Vector& value)
{
    Trajectory u{std::move(space), grid, {}};
    u.nodes.assign(static_cast<std::size_t>(grid.num_nodes()), value);
    return u;
}

void ParabolicProblem::validate() const
{
    if (!space) throw PreconditionError("parabolic problem needs a space");
    if (u0.space != space && (!u0.space || u0.space->n_dofs() != space->n_dofs()))
        throw PreconditionError("u0 does not live on the problem space");
    if (!(theta >= 0.5 && theta <= 1.0)) throw PreconditionError("theta must lie in [1/2, 1]");
    if (!f) throw PreconditionError("parabolic problem needs a source");
}

Trajectory solve_parabolic(const ParabolicProblem& p)
{
    p.validate();
    const FunctionSpace& space = *p.space;
    const TimeGrid& g = p.grid;
    const double tau = g.tau();
    const SparseMatrix mass = assemble_mass(space);
    const bool frozen = !p.coeffs.time_dependent();

    Trajectory out{p.space, g, {}};
    out.nodes.reserve(static_cast<std::size_t>(g.num_nodes()));
    out.nodes.push_back(p.u0.coeffs);

    SparseMatrix a_prev = assemble_form(space, p.coeffs, g.node(0));
    Vector b_prev = assemble_load(space, p.f, g.node(0));
    SparseMatrix lhs;
    if (frozen) lhs = SparseMatrix((1.0 / tau) * mass + p.theta * a_prev);
    for (int k = 0; k < g.steps; ++k) {
        const double t1 = g.node(k + 1);
        const SparseMatrix a_next = frozen ? a_prev : assemble_form(space, p.coeffs, t1);
        const Vector b_next = assemble_load(space, p.f, t1);
        const Vector& u = out.nodes.back();
        Vector rhs = (1.0 / tau) * (mass * u) + p.theta * b_next;
        if (p.theta < 1.0) rhs += (1.0 - p.theta) * (b_prev - a_prev * u);
        if (!frozen) lhs = SparseMatrix((1.0 / tau) * mass + p.theta * a_next);
        try {
            out.nodes.push_back(solve_linear(lhs, rhs, parabolic_solve_tol));
        } catch (const SolverError& e) {
            throw SolverError("time step " + std::to_string(k + 1) + ": " + e.what(), e.residual());
        }
        a_prev = a_next;
        b_prev = b_next;
    }
    return out;
}

double l2v_norm(const Trajectory& u, const NormSet& norms)
{
    const auto w = u.grid.trapezoid_weights();
    double s = 0.0;
    for (std::size_t k = 0; k < u.nodes.size(); ++k) s += w[k] * std::pow(norms.v_norm(u.nodes[k]), 2);
    return std::sqrt(s);
}

double l2vdual_norm(const ParabolicProblem& p, const NormSet& norms)
{
    const auto w = p.grid.trapezoid_weights();
    double s = 0.0;
    for (int k = 0; k < p.grid.num_nodes(); ++k)
        s += w[static_cast<std::size_t>(k)] *
             std::pow(norms.dual_norm(assemble_load(*p.space, p.f, p.grid.node(k))), 2);
    return std::sqrt(s);
}

EnergyReport energy_estimate_check(const Trajectory& u, const ParabolicProblem& p, std::optional<double> alpha)
{
    p.validate();
    if (p.theta != 1.0) throw PreconditionError("energy estimate check requires theta = 1");
    const NormSet norms(p.space);
    EnergyReport rep;
    if (alpha) {
        rep.alpha = *alpha;
    } else {
        std::vector<double> times;
        if (p.coeffs.time_dependent())
            for (int k = 1; k < p.grid.num_nodes(); ++k) times.push_back(p.grid.node(k));
        else
            times.push_back(p.grid.node(0));
        const auto k = estimate_form_constants(*p.space, p.coeffs, times, 1u);
        if (k.lambda != 0.0)
            throw PreconditionError("energy estimate check needs a form coercive without shift (lambda_est = " +
                                    std::to_string(k.lambda) + "); pre-shift the problem");
        rep.alpha = k.alpha;
    }
    if (!(rep.alpha > 0)) throw PreconditionError("energy estimate check needs alpha > 0");

    const double tau = p.grid.tau();
    const double h0 = std::pow(norms.h_norm(u.nodes.front()), 2);
    double dissipated = 0.0, supplied = 0.0;
    for (int k = 0; k < p.grid.num_nodes(); ++k) {
        if (k > 0) {
            dissipated += tau * std::pow(norms.v_norm(u.nodes[static_cast<std::size_t>(k)]), 2);
            supplied += tau * std::pow(norms.dual_norm(assemble_load(*p.space, p.f, p.grid.node(k))), 2);
        }
        const double lhs = std::pow(norms.h_norm(u.nodes[static_cast<std::size_t>(k)]), 2) + rep.alpha * dissipated;
        const double rhs = h0 + supplied / rep.alpha;
        rep.lhs.push_back(lhs);
        rep.rhs.push_back(rhs);
        rep.margin.push_back(rhs - lhs);
        if (rep.violation < 0 && lhs > rhs + 1e-10 * (1.0 + rhs)) rep.violation = k;
    }
    return rep;
}

double weak_residual(const Trajectory& u, const ParabolicProblem& p, const FEField& v, const TestProfile& phi)
{
    p.validate();
    if (v.coeffs.size() != p.space->n_dofs()) throw PreconditionError("test function does not live on the space");
    const TimeGrid& g = u.grid;
    const double phi_end = phi.value(g.t_end);
    if (std::abs(phi_end) > 1e-12) throw PreconditionError("test profile must vanish at the final time");
    const SparseMatrix mass = assemble_mass(*p.space);
    const Vector mv = mass * v.coeffs;
    const bool frozen = !p.coeffs.time_dependent();
    SparseMatrix a = assemble_form(*p.space, p.coeffs, g.node(0));
    const auto w = g.trapezoid_weights();

    double total = -p.u0.coeffs.dot(mv) * phi.value(g.t_begin);
    for (int k = 0; k < g.num_nodes(); ++k) {
        const double t = g.node(k);
        if (!frozen && k > 0) a = assemble_form(*p.space, p.coeffs, t);
        const Vector& uk = u.nodes[static_cast<std::size_t>(k)];
        // a(t; u, v) = v^T A u
        const double form = v.coeffs.dot(a * uk);
        const double load = assemble_load(*p.space, p.f, t).dot(v.coeffs);
        total += w[static_cast<std::size_t>(k)] * (-uk.dot(mv) * phi.derivative(t) + (form - load) * phi.value(t));
    }
    return std::abs(total);
}

double integration_by_parts_check(const Trajectory& u, const Trajectory& v, int a, int b)
{
    if (!(u.grid == v.grid)) throw PreconditionError("integration by parts check needs identical time grids");
    if (!u.space || !v.space || u.space->n_dofs() != v.space->n_dofs())
        throw PreconditionError("integration by parts check needs a shared space");
    if (a < 0 || b > u.grid.steps || a > b) throw PreconditionError("node indices out of range");
    const SparseMatrix mass = assemble_mass(*u.space);
    auto inner = [&](const Vector& x, const Vector& y) { return x.dot(mass * y); };
    const auto& un = u.nodes;
    const auto& vn = v.nodes;
    double integral = 0.0;
    for (int k = a; k < b; ++k) {
        const auto i = static_cast<std::size_t>(k);
        // u' is constant on the interval and v is linear: midpoint rule is exact
        const Vector du = un[i + 1] - un[i];
        const Vector dv = vn[i + 1] - vn[i];
        integral += 0.5 * (inner(du, vn[i] + vn[i + 1]) + inner(dv, un[i] + un[i + 1]));
    }
    const auto ia = static_cast<std::size_t>(a), ib = static_cast<std::size_t>(b);
    return std::abs(inner(un[ib], vn[ib]) - inner(un[ia], vn[ia]) - integral);
}

void write_field_file(const std::string& path, const FunctionSpace& space, const Vector& dofs)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    const Vector values = space.to_vertex_values(dofs);
    os << "field " << values.size() << '\n';
    char buf[64];
    for (int i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", values[i]);
        os << buf << '\n';
    }
    if (!os) throw std::runtime_error("write failed for " + path);
}

Vector read_field_file(const std::string& path, const FunctionSpace& space)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::string tag;
    long n = -1;
    if (!(is >> tag >> n) || tag != "field" || n != space.mesh().num_vertices())
        throw PreconditionError(path + ": bad field header");
    Vector values(n);
    std::string tok;
    for (long i = 0; i < n; ++i) {
        if (!(is >> tok)) throw PreconditionError(path + ": truncated field file");
        char* end = nullptr;
        values[i] = std::strtod(tok.c_str(), &end);
        if (*end != '\0' || !std::isfinite(values[i])) throw PreconditionError(path + ": bad value '" + tok + "'");
    }
    return space.from_vertex_values(values);
}

void write_trajectory(const std::string& dir, const Trajectory& u)
{
    std::filesystem::create_directories(dir);
    write_mesh_file(dir + "/mesh.mesh2d", u.space->mesh());
    char name[32];
    for (std::size_t k = 0; k < u.nodes.size(); ++k) {
        std::snprintf(name, sizeof name, "/u_%05zu.field", k);
        write_field_file(dir + name, *u.space, u.nodes[k]);
    }
    std::ofstream os(dir + "/trajectory.txt");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", u.grid.length());
    os << "traj " << buf << ' ' << u.grid.steps << ' ' << u.space->n_dofs() << '\n';
    if (!os) throw std::runtime_error("cannot write trajectory manifest in " + dir);
}

}  // namespace mosco
