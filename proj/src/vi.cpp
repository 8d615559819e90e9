#include "mosco/vi.hpp"

#include <cmath>
#include <limits>

namespace mosco {

ObstacleConstraint::ObstacleConstraint(SpacePtr s, Vector obstacle) : space(std::move(s)), psi(std::move(obstacle))
{
    if (!space || psi.size() != space->n_dofs()) throw PreconditionError("obstacle does not live on the space");
    if (!psi.allFinite()) throw PreconditionError("obstacle has non-finite values");
}

bool ObstacleConstraint::contains(const Vector& v, double tol) const { return ((v - psi).array() >= -tol).all(); }

FEField project_H(const ObstacleConstraint& k, const FEField& w)
{
    if (!w.space || w.space->n_dofs() != k.space->n_dofs()) throw PreconditionError("project_H: space mismatch");
    return FEField(w.space, w.coeffs.cwiseMax(k.psi));
}

void VIProblem::validate() const
{
    if (!space) throw PreconditionError("VI problem needs a space");
    if (!constraint.space || constraint.psi.size() != space->n_dofs())
        throw PreconditionError("obstacle does not live on the problem space");
    if (u0.coeffs.size() != space->n_dofs()) throw PreconditionError("u0 does not live on the problem space");
    if (!f) throw PreconditionError("VI problem needs a source");
    if (!constraint.contains(u0.coeffs)) throw PreconditionError("u0 violates the obstacle");
}

double complementarity_residual(const SparseMatrix& k, const Vector& rhs, const Vector& psi, const Vector& u)
{
    const Vector r = k * u - rhs;
    double worst = 0.0;
    for (int i = 0; i < u.size(); ++i) {
        const double kii = k.coeff(i, i);
        worst = std::max(worst, std::abs(std::min(r[i] / kii, u[i] - psi[i])));
    }
    return worst;
}

namespace {

// PGS sweeps on symmetric ks until the update is small; returns sweeps used.
long pgs(const SparseMatrix& ks, const Vector& diag, const Vector& rhs, const Vector& psi, Vector& u, double tol,
         long budget, double omega)
{
    for (long sweep = 1; sweep <= budget; ++sweep) {
        double change = 0.0;
        for (int i = 0; i < u.size(); ++i) {
            double ri = -rhs[i];
            for (SparseMatrix::InnerIterator it(ks, i); it; ++it) ri += it.value() * u[it.col()];
            const double next = std::max(psi[i], u[i] - omega * ri / diag[i]);
            change = std::max(change, std::abs(next - u[i]));
            u[i] = next;
        }
        if (change <= tol) return sweep;
    }
    return budget + 1;
}

}  // namespace

Vector solve_lcp(const SparseMatrix& k, const Vector& rhs, const Vector& psi, Vector start, const PgsOptions& opts,
                 LcpStats* stats)
{
    const long n = k.rows();
    if (k.cols() != n || rhs.size() != n || psi.size() != n || start.size() != n)
        throw PreconditionError("solve_lcp: dimension mismatch");
    if (!(opts.omega > 0 && opts.omega < 2)) throw PreconditionError("solve_lcp: omega must lie in (0, 2)");
    const SparseMatrix kt = k.transpose();
    const SparseMatrix ks = 0.5 * (k + kt);
    const SparseMatrix skew = 0.5 * (k - kt);
    const bool symmetric = skew.cwiseAbs().sum() == 0.0;
    Vector diag = ks.diagonal();
    for (long i = 0; i < n; ++i)
        if (!(diag[i] > 0)) throw SolverError("solve_lcp: non-positive diagonal at row " + std::to_string(i), 0.0);

    Vector u = start.cwiseMax(psi);
    LcpStats st;
    while (true) {
        const Vector previous = u;
        const Vector shifted = symmetric ? rhs : Vector(rhs - skew * u);
        const long used = pgs(ks, diag, shifted, psi, u, opts.tol_change, opts.max_sweeps - st.sweeps, opts.omega);
        st.sweeps += std::min(used, opts.max_sweeps - st.sweeps);
        ++st.outer;
        st.complementarity = complementarity_residual(k, rhs, psi, u);
        const double outer_change = (u - previous).cwiseAbs().maxCoeff();
        const bool inner_ok = used <= opts.max_sweeps;
        if (inner_ok && (symmetric || outer_change <= opts.tol_change) &&
            st.complementarity <= opts.tol_complementarity)
            break;
        if (st.sweeps >= opts.max_sweeps) {
            if (stats) *stats = st;
            throw SolverError("projected Gauss-Seidel did not converge in " + std::to_string(opts.max_sweeps) +
                                  " sweeps (complementarity residual " + std::to_string(st.complementarity) + ")",
                              st.complementarity);
        }
    }
    if (stats) *stats = st;
    return u;
}

Trajectory solve_parabolic_vi(const VIProblem& p, const PgsOptions& opts, std::vector<LcpStats>* stats)
{
    p.validate();
    const FunctionSpace& space = *p.space;
    const TimeGrid& g = p.grid;
    const double tau = g.tau();
    const SparseMatrix mass = assemble_mass(space);
    const bool frozen = !p.coeffs.time_dependent();
    SparseMatrix k;
    if (frozen) k = SparseMatrix((1.0 / tau) * mass + assemble_form(space, p.coeffs, g.node(1)));

    Trajectory out{p.space, g, {}};
    out.nodes.reserve(static_cast<std::size_t>(g.num_nodes()));
    out.nodes.push_back(p.u0.coeffs);
    if (stats) stats->clear();
    for (int step = 0; step < g.steps; ++step) {
        const double t1 = g.node(step + 1);
        if (!frozen) k = SparseMatrix((1.0 / tau) * mass + assemble_form(space, p.coeffs, t1));
        const Vector rhs = (1.0 / tau) * (mass * out.nodes.back()) + assemble_load(space, p.f, t1);
        LcpStats st;
        try {
            out.nodes.push_back(solve_lcp(k, rhs, p.constraint.psi, out.nodes.back(), opts, &st));
        } catch (const SolverError& e) {
            throw SolverError("time step " + std::to_string(step + 1) + ": " + e.what(), e.residual());
        }
        if (stats) stats->push_back(st);
    }
    return out;
}

FeasibilityReport feasibility_report(const Trajectory& u, const ObstacleConstraint& k)
{
    if (!u.space || u.space->n_dofs() != k.psi.size()) throw PreconditionError("feasibility_report: space mismatch");
    FeasibilityReport rep;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < u.nodes.size(); ++t) {
        const Vector margin = u.nodes[t] - k.psi;
        for (int i = 0; i < margin.size(); ++i) {
            rep.min_margin = std::min(rep.min_margin, margin[i]);
            if (margin[i] < -1e-12) rep.violations.emplace_back(static_cast<int>(t), i);
        }
    }
    return rep;
}

double weak_vi_residual(const Trajectory& u, const VIProblem& p, const Trajectory& v)
{
    p.validate();
    if (!(u.grid == v.grid) || !(u.grid == p.grid)) throw PreconditionError("weak_vi_residual: time grids differ");
    if (u.space->n_dofs() != p.space->n_dofs() || v.space->n_dofs() != p.space->n_dofs())
        throw PreconditionError("weak_vi_residual: space mismatch");
    for (std::size_t t = 0; t < v.nodes.size(); ++t)
        if (!p.constraint.contains(v.nodes[t]))
            throw PreconditionError("weak_vi_residual: test trajectory leaves the obstacle set at node " +
                                    std::to_string(t));
    const SparseMatrix mass = assemble_mass(*p.space);
    const TimeGrid& g = p.grid;
    const auto w = g.trapezoid_weights();
    const bool frozen = !p.coeffs.time_dependent();
    SparseMatrix a = assemble_form(*p.space, p.coeffs, g.node(0));

    double total = 0.0;
    for (int k = 0; k < g.num_nodes(); ++k) {
        const auto i = static_cast<std::size_t>(k);
        if (!frozen && k > 0) a = assemble_form(*p.space, p.coeffs, g.node(k));
        const Vector e = v.nodes[i] - u.nodes[i];
        // <A u, e> = a(t; u, e) = e^T A u
        total += w[i] * (e.dot(a * u.nodes[i]) - assemble_load(*p.space, p.f, g.node(k)).dot(e));
        if (k + 1 < g.num_nodes()) {
            const Vector dv = v.nodes[i + 1] - v.nodes[i];  // tau * v'
            const Vector e_next = v.nodes[i + 1] - u.nodes[i + 1];
            total += 0.5 * dv.dot(mass * (e + e_next));
        }
    }
    const Vector d0 = v.nodes.front() - p.u0.coeffs;
    return total + 0.5 * d0.dot(mass * d0);
}

}  // namespace mosco
