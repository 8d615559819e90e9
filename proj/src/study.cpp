#include "mosco/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace mosco {

namespace {

SpaceTimeFunction perturbed(const SpaceTimeFunction& f, const SpaceTimeFunction& g, double s)
{
    if (!g || s == 0.0) return f;
    return [f, g, s](Point x, double t) { return f(x, t) + s * g(x, t); };
}

/// Runs body(i) for i in [0, count) on at most `jobs` threads; rethrows the
/// exception of the smallest failing index.
template <class Body>
void parallel_for(int count, int jobs, Body body)
{
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    auto guarded = [&](int i) {
        try {
            body(i);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    };
    const int workers = std::clamp(jobs, 1, std::max(count, 1));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) guarded(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int i = next++; i < count; i = next++) guarded(i);
            });
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Rethrows the active exception with "n = <n>: " (n = 0: "limit: ") prefixed, keeping its type.
[[noreturn]] void rethrow_annotated(int n)
{
    const std::string prefix = n == 0 ? std::string("limit: ") : "n = " + std::to_string(n) + ": ";
    try {
        throw;
    } catch (const SolverError& e) {
        throw SolverError(prefix + e.what(), e.residual());
    } catch (const AssemblyError& e) {
        throw AssemblyError(prefix + e.what());
    } catch (const PreconditionError& e) {
        throw PreconditionError(prefix + e.what());
    } catch (const GeometryError& e) {
        throw GeometryError(prefix + e.what());
    }
}

void require_data(const StudyConfig& cfg)
{
    if (!cfg.f || !cfg.u0) throw PreconditionError("study: f and u0 are required");
    if (!cfg.family.limit || cfg.family.members.empty()) throw PreconditionError("study: family has no members");
    if (cfg.family.params.size() != cfg.family.members.size())
        throw PreconditionError("study: one family parameter per member is required");
    if (!(cfg.sample_cells >= 8)) throw PreconditionError("study: sample_cells must be at least 8");
}

std::vector<double> sup_mask_weights(const StudyConfig& cfg)
{
    std::vector<double> use;
    for (int k = 0; k < cfg.grid.num_nodes(); ++k)
        use.push_back(std::isnan(cfg.sup_from) || cfg.grid.node(k) >= cfg.sup_from - 1e-12 ? 1.0 : 0.0);
    return use;
}

/// Mean of d_x u over the handle, i.e. the average flux through its cross-sections.
double handle_flux(const FEField& u)
{
    const Mesh& m = u.space->mesh();
    constexpr double half = 0.5 * dumbbell_handle_length;
    double s = 0.0;
    for (int t = 0; t < m.num_triangles(); ++t) {
        if (std::abs(m.centroid(t).x) >= half) continue;
        s += std::abs(m.signed_area(t)) * gradient(u, t).x;
    }
    return s / dumbbell_handle_length;
}

double time_l2(const std::vector<double>& w, const std::vector<double>& sq)
{
    double s = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * sq[k];
    return std::sqrt(s);
}

struct Errors {
    double l2h1{0.0}, cl2{0.0}, grad{0.0}, l2l2{0.0};
};

// ---------------------------------------------------------------------------
// Domain studies

struct DomainRun {
    Trajectory u;
    std::vector<EmbeddedField> embedded;
};

BoundaryCondition domain_bc(StudyKind kind)
{
    return kind == StudyKind::dirichlet ? BoundaryCondition::dirichlet : BoundaryCondition::neumann;
}

EmbeddingKind embedding_kind(StudyKind kind)
{
    return kind == StudyKind::dirichlet ? EmbeddingKind::dirichlet_zero_extension : EmbeddingKind::neumann_pair;
}

DomainRun solve_domain(const StudyConfig& cfg, MeshPtr mesh, double param, const Embedding& e)
{
    const auto space = make_space(std::move(mesh), domain_bc(cfg.kind));
    ParabolicProblem p{space, cfg.coeffs, perturbed(cfg.f, cfg.f_perturbation, param),
                       interpolate(space, perturbed(cfg.u0, cfg.u0_perturbation, param), cfg.grid.t_begin),
                       cfg.grid, cfg.theta};
    DomainRun run{solve_parabolic(p), {}};
    for (int k = 0; k < cfg.grid.num_nodes(); ++k)
        run.embedded.push_back(embed(run.u.field(k), e, embedding_kind(cfg.kind)));
    return run;
}

Errors domain_errors(const StudyConfig& cfg, const DomainRun& a, const DomainRun& b, const SampleGrid& grid)
{
    const auto w = cfg.grid.trapezoid_weights();
    const auto use = sup_mask_weights(cfg);
    std::vector<double> full, grad, value;
    Errors e;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const auto d = distance(a.embedded[k], b.embedded[k], grid);
        value.push_back(d.value * d.value);
        grad.push_back(d.gradient * d.gradient);
        full.push_back(d.value * d.value + d.gradient * d.gradient);
        if (use[k] > 0) e.cl2 = std::max(e.cl2, d.value);
    }
    e.l2h1 = time_l2(w, full);
    e.grad = time_l2(w, grad);
    e.l2l2 = time_l2(w, value);
    return e;
}

double embedded_l2h1_norm(const StudyConfig& cfg, const DomainRun& a, const SampleGrid& grid)
{
    const auto w = cfg.grid.trapezoid_weights();
    std::vector<double> sq;
    for (const auto& f : a.embedded) sq.push_back(std::pow(norm(f, grid), 2));
    return time_l2(w, sq);
}

double embedded_sup_norm(const DomainRun& a, const SampleGrid& grid)
{
    double s = 0.0;
    for (const auto& f : a.embedded) {
        const EmbeddedField values_only{f.kind, f.values, Vector::Zero(f.values.size()), Vector::Zero(f.values.size())};
        s = std::max(s, norm(values_only, grid));
    }
    return s;
}

double sample_radius(const DomainFamily& fam)
{
    double r = fam.limit->holdall_radius();
    for (const auto& m : fam.members) r = std::max(r, m->holdall_radius());
    return r;
}

ConvergenceReport run_domain_study(const StudyConfig& cfg)
{
    require_data(cfg);
    const DomainFamily& fam = cfg.family;
    const SampleGrid grid = SampleGrid::disk(sample_radius(fam), cfg.sample_cells);
    const Embedding limit_embedding(fam.limit, grid);
    const DomainRun limit = [&] {
        try {
            return solve_domain(cfg, fam.limit, fam.limit_param, limit_embedding);
        } catch (...) {
            rethrow_annotated(0);
        }
    }();
    const int count = fam.size();

    ConvergenceReport rep;
    rep.kind = cfg.kind;
    rep.rows.resize(static_cast<std::size_t>(count));
    double self = 0.0;

    // index count is the limit solved again through the member path
    parallel_for(count + 1, cfg.jobs, [&](int i) {
        const bool is_self = i == count;
        try {
            const MeshPtr mesh = is_self ? fam.limit : fam.members[static_cast<std::size_t>(i)];
            const double param = is_self ? fam.limit_param : fam.params[static_cast<std::size_t>(i)];
            const Embedding e(mesh, grid);
            const DomainRun run = solve_domain(cfg, mesh, param, e);
            const Errors err = domain_errors(cfg, run, limit, grid);
            if (is_self) {
                self = std::max({err.l2h1, err.cl2, err.grad, err.l2l2});
                return;
            }
            StudyRow& row = rep.rows[static_cast<std::size_t>(i)];
            row.n = i + 1;
            row.param = param;
            row.err_L2H1 = err.l2h1;
            row.err_CL2 = err.cl2;
            row.err_grad = err.grad;
            row.err_L2L2 = err.l2l2;
            row.solution_norm = embedded_l2h1_norm(cfg, run, grid);
            if (cfg.compute_defect) {
                const DefectContext ctx{&grid, &limit_embedding, &e, embedding_kind(cfg.kind)};
                row.defect = m1_defect_time(limit.u, *run.u.space, nullptr, ctx);
            }
            if (fam.kind == FamilyKind::dumbbell) {
                std::vector<double> sq;
                for (int k = 0; k < cfg.grid.num_nodes(); ++k) sq.push_back(std::pow(handle_flux(run.u.field(k)), 2));
                row.handle_flux = time_l2(cfg.grid.trapezoid_weights(), sq);
            }
        } catch (...) {
            rethrow_annotated(is_self ? 0 : i + 1);
        }
    });

    rep.self_distance = self;
    rep.limit_norm = embedded_l2h1_norm(cfg, limit, grid);
    rep.scale = std::max(rep.limit_norm, embedded_sup_norm(limit, grid));
    if (fam.kind == FamilyKind::dumbbell) {
        std::vector<double> sq;
        for (int k = 0; k < cfg.grid.num_nodes(); ++k) sq.push_back(std::pow(handle_flux(limit.u.field(k)), 2));
        rep.limit_handle_flux = time_l2(cfg.grid.trapezoid_weights(), sq);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// VI study

struct ViRun {
    VIProblem problem;
    Trajectory u;
};

ViRun solve_vi(const StudyConfig& cfg, const SpacePtr& space, double shift, double param)
{
    const FEField psi = interpolate(space, [&](Point x, double t) { return cfg.obstacle(x, t) + shift; });
    const FEField u0 = interpolate(space, perturbed(cfg.u0, cfg.u0_perturbation, param), cfg.grid.t_begin);
    VIProblem p{space, cfg.coeffs, perturbed(cfg.f, cfg.f_perturbation, param),
                FEField(space, u0.coeffs.cwiseMax(psi.coeffs)), cfg.grid, ObstacleConstraint(psi)};
    Trajectory u = solve_parabolic_vi(p, cfg.pgs);
    return {std::move(p), std::move(u)};
}

Errors vi_errors(const StudyConfig& cfg, const Trajectory& a, const Trajectory& b, const NormSet& norms)
{
    const auto w = cfg.grid.trapezoid_weights();
    const auto use = sup_mask_weights(cfg);
    std::vector<double> full, grad, value;
    Errors e;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const Vector d = a.nodes[k] - b.nodes[k];
        const double v2 = d.dot(norms.mass() * d);
        const double g2 = d.dot(norms.stiffness() * d);
        value.push_back(v2);
        grad.push_back(g2);
        full.push_back(v2 + g2);
        if (use[k] > 0) e.cl2 = std::max(e.cl2, std::sqrt(std::max(v2, 0.0)));
    }
    e.l2h1 = time_l2(w, full);
    e.grad = time_l2(w, grad);
    e.l2l2 = time_l2(w, value);
    return e;
}

// ---------------------------------------------------------------------------

void finish_report(ConvergenceReport& rep, const StudyConfig& cfg)
{
    rep.floor = rep.self_distance + 1e-10 * std::max(rep.scale, 1.0);
    std::vector<double> params;
    for (const auto& r : rep.rows) params.push_back(r.param);
    auto add = [&](std::string name, auto member) {
        NormSeries s{std::move(name), {}, Verdict::stagnant, {}};
        for (const auto& r : rep.rows) s.values.push_back(r.*member);
        s.verdict = classify(s.values, rep.floor);
        s.fit = fit_rate(params, s.values, rep.floor);
        rep.series.push_back(std::move(s));
    };
    add("err_L2H1", &StudyRow::err_L2H1);
    add("err_CL2", &StudyRow::err_CL2);
    add("err_grad", &StudyRow::err_grad);
    if (cfg.kind != StudyKind::dirichlet) add("err_L2L2", &StudyRow::err_L2L2);
    rep.verdict = Verdict::decreasing_to_floor;
    for (const auto& s : rep.series)
        if (s.verdict == Verdict::stagnant) rep.verdict = Verdict::stagnant;
    if (cfg.compute_defect && cfg.kind != StudyKind::vi) add("defect", &StudyRow::defect);
}

}  // namespace

std::string_view to_string(StudyKind kind)
{
    switch (kind) {
    case StudyKind::dirichlet: return "dirichlet";
    case StudyKind::neumann: return "neumann";
    case StudyKind::vi: return "vi";
    }
    return "dirichlet";
}

StudyKind study_kind_from_string(std::string_view s)
{
    if (s == "dirichlet") return StudyKind::dirichlet;
    if (s == "neumann") return StudyKind::neumann;
    if (s == "vi") return StudyKind::vi;
    throw PreconditionError("unknown study kind '" + std::string(s) + "'");
}

std::string_view to_string(Verdict v)
{
    return v == Verdict::decreasing_to_floor ? "decreasing-to-floor" : "stagnant";
}

const NormSeries& ConvergenceReport::find(std::string_view name) const
{
    for (const auto& s : series)
        if (s.name == name) return s;
    throw PreconditionError("report has no series '" + std::string(name) + "'");
}

ConvergenceReport run_dirichlet_study(const StudyConfig& cfg)
{
    if (cfg.kind != StudyKind::dirichlet) throw PreconditionError("run_dirichlet_study: kind must be dirichlet");
    auto rep = run_domain_study(cfg);
    finish_report(rep, cfg);
    return rep;
}

ConvergenceReport run_neumann_study(const StudyConfig& cfg)
{
    if (cfg.kind != StudyKind::neumann) throw PreconditionError("run_neumann_study: kind must be neumann");
    auto rep = run_domain_study(cfg);
    finish_report(rep, cfg);
    return rep;
}

ConvergenceReport run_vi_study(const StudyConfig& cfg)
{
    if (cfg.kind != StudyKind::vi) throw PreconditionError("run_vi_study: kind must be vi");
    require_data(cfg);
    if (!cfg.obstacle) throw PreconditionError("run_vi_study: obstacle is required");
    const DomainFamily& fam = cfg.family;
    const auto space = make_space(fam.limit, cfg.vi_bc);
    const NormSet norms(space);
    const ViRun limit = [&] {
        try {
            return solve_vi(cfg, space, fam.limit_param, fam.limit_param);
        } catch (...) {
            rethrow_annotated(0);
        }
    }();
    const int count = fam.size();

    ConvergenceReport rep;
    rep.kind = cfg.kind;
    rep.rows.resize(static_cast<std::size_t>(count));
    double self = 0.0;
    parallel_for(count + 1, cfg.jobs, [&](int i) {
        const bool is_self = i == count;
        try {
            const double param = is_self ? fam.limit_param : fam.params[static_cast<std::size_t>(i)];
            const ViRun run = solve_vi(cfg, space, param, param);
            const Errors err = vi_errors(cfg, run.u, limit.u, norms);
            if (is_self) {
                self = std::max({err.l2h1, err.cl2, err.grad, err.l2l2});
                return;
            }
            StudyRow& row = rep.rows[static_cast<std::size_t>(i)];
            row.n = i + 1;
            row.param = param;
            row.err_L2H1 = err.l2h1;
            row.err_CL2 = err.cl2;
            row.err_grad = err.grad;
            row.err_L2L2 = err.l2l2;
            row.solution_norm = l2v_norm(run.u, norms);
            row.min_margin = feasibility_report(run.u, run.problem.constraint).min_margin;
            row.weak_residual = weak_vi_residual(run.u, run.problem, run.u);
        } catch (...) {
            rethrow_annotated(is_self ? 0 : i + 1);
        }
    });

    rep.self_distance = self;
    rep.limit_norm = l2v_norm(limit.u, norms);
    double sup = 0.0;
    for (const auto& x : limit.u.nodes) sup = std::max(sup, norms.h_norm(x));
    rep.scale = std::max(rep.limit_norm, sup);
    finish_report(rep, cfg);
    return rep;
}

ConvergenceReport run_study(const StudyConfig& cfg)
{
    switch (cfg.kind) {
    case StudyKind::dirichlet: return run_dirichlet_study(cfg);
    case StudyKind::neumann: return run_neumann_study(cfg);
    case StudyKind::vi: return run_vi_study(cfg);
    }
    throw PreconditionError("unknown study kind");
}

RateFit fit_rate(const std::vector<double>& params, const std::vector<double>& errors, double floor)
{
    if (params.size() != errors.size()) throw PreconditionError("fit_rate: params and errors differ in length");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!(errors[i] > floor) || !(params[i] > 0)) continue;
        xs.push_back(std::log(params[i]));
        ys.push_back(std::log(errors[i]));
    }
    RateFit fit;
    fit.points = static_cast<int>(xs.size());
    if (fit.points < 3) return fit;
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0.0) {
        fit.points = 0;
        return fit;
    }
    fit.rate = sxy / sxx;
    fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return fit;
}

Verdict classify(const std::vector<double>& errors, double floor)
{
    if (errors.empty()) return Verdict::stagnant;
    const double cut = 3.0 * floor;
    for (double e : errors)
        if (!(e >= 0.0)) return Verdict::stagnant;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        if (errors[i] <= cut) continue;
        if (!(errors[i + 1] < errors[i]) && errors[i + 1] > cut) return Verdict::stagnant;
    }
    const double last = errors.back();
    return last <= cut || last < 0.5 * errors.front() ? Verdict::decreasing_to_floor : Verdict::stagnant;
}

}  // namespace mosco
