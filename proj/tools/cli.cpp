#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mosco::cli {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// JSON access

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || item.key() == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
}

const json& require(const json& j, const char* key, const std::string& where)
{
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    return j.at(key);
}

double number(const json& j, const char* key, const std::string& where)
{
    const json& v = require(j, key, where);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& where)
{
    return j.contains(key) ? number(j, key, where) : fallback;
}

int integer(const json& j, const char* key, const std::string& where)
{
    const json& v = require(j, key, where);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    return v.get<int>();
}

int integer_or(const json& j, const char* key, int fallback, const std::string& where)
{
    return j.contains(key) ? integer(j, key, where) : fallback;
}

std::string text(const json& j, const char* key, const std::string& where)
{
    const json& v = require(j, key, where);
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

std::vector<double> numbers(const json& j, const char* key, const std::string& where)
{
    const json& v = require(j, key, where);
    if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(where + "." + key + ": expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

SpaceTimeFunction preset_or_null(const json& j, const char* key)
{
    if (!j.contains(key)) return {};
    return parse_preset(j.at(key));
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : base / p; }

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& s)
{
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    out << s;
    if (!out) throw std::runtime_error("write failed for '" + p.string() + "'");
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------
// Timings

class StageClock {
public:
    void mark(const std::string& stage)
    {
        const auto now = std::chrono::steady_clock::now();
        lines_ += stage + " " + fmt(std::chrono::duration<double>(now - last_).count()) + "\n";
        last_ = now;
    }
    const std::string& text() const { return lines_; }

private:
    std::chrono::steady_clock::time_point last_{std::chrono::steady_clock::now()};
    std::string lines_;
};

json manifest_head(const char* command, const json& echo)
{
    json m;
    m["tool"] = "mosco_lab";
    m["version"] = tool_version;
    m["command"] = command;
    m["config"] = echo;
    m["input_hashes"] = json::object();
    m["input_hashes"]["config"] = hash_string(echo.dump());
    m["timings_file"] = "timings.txt";
    return m;
}

json echo_config(json cfg)
{
    cfg["seed"] = effective_seed(cfg);
    return cfg;
}

std::vector<double> hypothesis_times(const TimeGrid& g)
{
    return {g.node(0), g.node(g.steps / 2), g.node(g.steps)};
}

/// Central differences of a preset, for exact-solution gradients.
std::function<Point(Point, double)> numeric_gradient(SpaceTimeFunction f)
{
    return [f = std::move(f)](Point x, double t) {
        constexpr double e = 1e-6;
        return Point{(f({x.x + e, x.y}, t) - f({x.x - e, x.y}, t)) / (2 * e),
                     (f({x.x, x.y + e}, t) - f({x.x, x.y - e}, t)) / (2 * e)};
    };
}

void add_mesh_hash(json& manifest, const json& mesh_cfg, const fs::path& base)
{
    if (mesh_cfg.is_object() && mesh_cfg.contains("file"))
        manifest["input_hashes"]["mesh_file"] = hash_string(read_file(resolve(mesh_cfg.at("file").get<std::string>(), base)));
}

}  // namespace

// ---------------------------------------------------------------------------

std::uint64_t fnv1a(std::string_view bytes)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_string(std::string_view bytes)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
    return buf;
}

ScalarPreset parse_preset(const json& j)
{
    if (j.is_number()) return ScalarPreset::constant(j.get<double>());
    check_keys(j, {"kind", "params"}, "preset");
    return ScalarPreset::make(text(j, "kind", "preset"), numbers(j, "params", "preset"));
}

json preset_to_json(const ScalarPreset& p) { return {{"kind", std::string(to_string(p.kind))}, {"params", p.params}}; }

CoefficientSet parse_coefficients(const json& j)
{
    const std::string w = "coefficients";
    check_keys(j, {"diffusion", "advection", "drift", "reaction", "alpha", "bound", "shift"}, w);
    CoefficientSet c = CoefficientSet::laplacian();
    if (j.contains("diffusion")) {
        const json& d = j.at("diffusion");
        if (d.is_array()) {
            if (d.size() != 4) throw ConfigError(w + ".diffusion: expected 4 presets (a11 a12 a21 a22)");
            for (std::size_t i = 0; i < 4; ++i) c.diffusion[i] = parse_preset(d[i]);
        } else {
            c.diffusion = {parse_preset(d), ScalarPreset::constant(0.0), ScalarPreset::constant(0.0), parse_preset(d)};
        }
    }
    for (auto [key, target] : {std::pair{"advection", &c.advection}, std::pair{"drift", &c.drift}}) {
        if (!j.contains(key)) continue;
        const json& v = j.at(key);
        if (!v.is_array() || v.size() != 2) throw ConfigError(w + "." + key + ": expected 2 presets");
        (*target)[0] = parse_preset(v[0]);
        (*target)[1] = parse_preset(v[1]);
    }
    if (j.contains("reaction")) c.reaction = parse_preset(j.at("reaction"));
    c.alpha = number_or(j, "alpha", c.alpha, w);
    c.bound = number_or(j, "bound", c.bound, w);
    c.shift = number_or(j, "shift", c.shift, w);
    return c;
}

TimeGrid parse_time(const json& j)
{
    check_keys(j, {"T", "steps", "t0"}, "time");
    return TimeGrid(number_or(j, "t0", 0.0, "time"), number(j, "T", "time"), integer(j, "steps", "time"));
}

BoundaryCondition parse_bc(const json& j)
{
    if (!j.is_string()) throw ConfigError("bc: expected \"dirichlet\" or \"neumann\"");
    try {
        return boundary_condition_from_string(j.get<std::string>());
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bc: ") + e.what());
    }
}

PgsOptions parse_pgs(const json& j)
{
    const std::string w = "pgs";
    check_keys(j, {"tol_change", "tol_complementarity", "max_sweeps", "omega"}, w);
    PgsOptions o;
    o.tol_change = number_or(j, "tol_change", o.tol_change, w);
    o.tol_complementarity = number_or(j, "tol_complementarity", o.tol_complementarity, w);
    o.max_sweeps = integer_or(j, "max_sweeps", static_cast<int>(o.max_sweeps), w);
    o.omega = number_or(j, "omega", o.omega, w);
    return o;
}

MeshPtr build_mesh(const json& j, const fs::path& base_dir)
{
    const std::string w = "mesh";
    if (j.is_object() && j.contains("file")) {
        check_keys(j, {"file"}, w);
        return std::make_shared<const Mesh>(read_mesh_file(resolve(text(j, "file", w), base_dir).string()));
    }
    const std::string gen = text(j, "generator", w);
    if (gen == "cracked_disk") {
        check_keys(j, {"generator", "delta", "h"}, w);
        return std::make_shared<const Mesh>(generate_cracked_disk(number(j, "delta", w), number(j, "h", w)));
    }
    if (gen == "unit_disk") {
        check_keys(j, {"generator", "h"}, w);
        return std::make_shared<const Mesh>(generate_unit_disk(number(j, "h", w)));
    }
    if (gen == "fixed_hole") {
        check_keys(j, {"generator", "radius", "h"}, w);
        return std::make_shared<const Mesh>(generate_fixed_hole(number(j, "radius", w), number(j, "h", w)));
    }
    if (gen == "dumbbell") {
        check_keys(j, {"generator", "width", "h"}, w);
        return std::make_shared<const Mesh>(generate_dumbbell(number(j, "width", w), number(j, "h", w)));
    }
    if (gen == "rectangle") {
        check_keys(j, {"generator", "x0", "x1", "y0", "y1", "h"}, w);
        return std::make_shared<const Mesh>(generate_rectangle(number_or(j, "x0", 0, w), number_or(j, "x1", 1, w),
                                                               number_or(j, "y0", 0, w), number_or(j, "y1", 1, w),
                                                               number(j, "h", w)));
    }
    throw ConfigError(w + ": unknown generator '" + gen + "'");
}

DomainFamily build_family(const json& j, const fs::path& base_dir)
{
    const std::string w = "family";
    const std::string kind = text(j, "kind", w);
    if (kind == "cracked_disk") {
        check_keys(j, {"kind", "n_max", "deltas", "h"}, w);
        const auto deltas = j.contains("deltas") ? numbers(j, "deltas", w) : geometric_deltas(integer_or(j, "n_max", 6, w));
        return make_cracked_disk_family(deltas, number(j, "h", w));
    }
    if (kind == "fixed_hole") {
        check_keys(j, {"kind", "radius", "n_max", "h"}, w);
        return make_fixed_hole_family(number(j, "radius", w), integer_or(j, "n_max", 6, w), number(j, "h", w));
    }
    if (kind == "dumbbell") {
        check_keys(j, {"kind", "widths", "n_max", "h"}, w);
        const auto widths = j.contains("widths") ? numbers(j, "widths", w) : geometric_deltas(integer_or(j, "n_max", 6, w));
        return make_dumbbell_family(widths, number(j, "h", w));
    }
    if (kind == "repeated") {
        check_keys(j, {"kind", "mesh", "params", "n_max"}, w);
        const auto params = j.contains("params") ? numbers(j, "params", w) : geometric_deltas(integer_or(j, "n_max", 6, w));
        return make_repeated_family(build_mesh(require(j, "mesh", w), base_dir), params);
    }
    throw ConfigError(w + ": unknown kind '" + kind + "'");
}

unsigned effective_seed(const json& cfg)
{
    if (const char* env = std::getenv("MOSCO_LAB_SEED"); env && *env) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (*end != '\0') throw ConfigError("MOSCO_LAB_SEED must be a non-negative integer");
        return static_cast<unsigned>(v);
    }
    if (cfg.is_object() && cfg.contains("seed")) {
        if (!cfg.at("seed").is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
        return cfg.at("seed").get<unsigned>();
    }
    return 1u;
}

StudyConfig parse_study(const json& cfg, const fs::path& base_dir)
{
    const std::string w = "study config";
    check_keys(cfg,
               {"study", "family", "coefficients", "f", "u0", "f_perturbation", "u0_perturbation", "obstacle",
                "vi_bc", "time", "theta", "sample_cells", "compute_defect", "sup_from", "pgs", "seed",
                "check_hypotheses", "description"},
               w);
    StudyConfig s;
    try {
        s.kind = study_kind_from_string(text(cfg, "study", w));
    } catch (const PreconditionError& e) {
        throw ConfigError(e.what());
    }
    s.family = build_family(require(cfg, "family", w), base_dir);
    if (cfg.contains("coefficients")) s.coeffs = parse_coefficients(cfg.at("coefficients"));
    s.f = parse_preset(require(cfg, "f", w));
    s.u0 = parse_preset(require(cfg, "u0", w));
    s.f_perturbation = preset_or_null(cfg, "f_perturbation");
    s.u0_perturbation = preset_or_null(cfg, "u0_perturbation");
    s.obstacle = preset_or_null(cfg, "obstacle");
    if (s.kind == StudyKind::vi && !s.obstacle) throw ConfigError(w + ": vi study needs an obstacle");
    if (cfg.contains("vi_bc")) s.vi_bc = parse_bc(cfg.at("vi_bc"));
    s.grid = parse_time(require(cfg, "time", w));
    s.theta = number_or(cfg, "theta", 1.0, w);
    s.sample_cells = integer_or(cfg, "sample_cells", s.sample_cells, w);
    if (cfg.contains("compute_defect")) {
        if (!cfg.at("compute_defect").is_boolean()) throw ConfigError(w + ".compute_defect: expected a boolean");
        s.compute_defect = cfg.at("compute_defect").get<bool>();
    }
    if (cfg.contains("sup_from")) s.sup_from = number(cfg, "sup_from", w);
    if (cfg.contains("pgs")) s.pgs = parse_pgs(cfg.at("pgs"));
    return s;
}

json load_config(const fs::path& path)
{
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
    if (j.is_object() && j.contains("tool") && j.contains("config")) return j.at("config");
    return j;
}

std::string report_csv(const ConvergenceReport& r)
{
    std::string s = "n,param,err_L2H1,err_CL2,err_grad,floor,verdict\n";
    for (const auto& row : r.rows)
        s += std::to_string(row.n) + "," + fmt(row.param) + "," + fmt(row.err_L2H1) + "," + fmt(row.err_CL2) + "," +
             fmt(row.err_grad) + "," + fmt(r.floor) + "," + std::string(to_string(r.verdict)) + "\n";
    return s;
}

json report_json(const ConvergenceReport& r)
{
    json j;
    j["kind"] = std::string(to_string(r.kind));
    j["floor"] = r.floor;
    j["self_distance"] = r.self_distance;
    j["scale"] = r.scale;
    j["limit_norm"] = r.limit_norm;
    j["limit_handle_flux"] = finite_or_null(r.limit_handle_flux);
    j["verdict"] = std::string(to_string(r.verdict));
    j["series"] = json::array();
    for (const auto& s : r.series)
        j["series"].push_back({{"name", s.name},
                               {"verdict", std::string(to_string(s.verdict))},
                               {"rate", finite_or_null(s.fit.rate)},
                               {"r2", finite_or_null(s.fit.r2)},
                               {"points", s.fit.points},
                               {"values", s.values}});
    j["rows"] = json::array();
    for (const auto& row : r.rows)
        j["rows"].push_back({{"n", row.n},
                             {"param", row.param},
                             {"err_L2H1", row.err_L2H1},
                             {"err_CL2", row.err_CL2},
                             {"err_grad", row.err_grad},
                             {"err_L2L2", row.err_L2L2},
                             {"defect", finite_or_null(row.defect)},
                             {"solution_norm", row.solution_norm},
                             {"min_margin", finite_or_null(row.min_margin)},
                             {"weak_residual", finite_or_null(row.weak_residual)},
                             {"handle_flux", finite_or_null(row.handle_flux)}});
    return j;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_mesh(const json& mesh_cfg, const fs::path& out)
{
    const MeshPtr mesh = build_mesh(mesh_cfg, fs::current_path());
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_mesh_file(out.string(), *mesh);
    return exit_ok;
}

int cmd_solve(const fs::path& config, const fs::path& out)
{
    StageClock clock;
    const json cfg = load_config(config);
    const fs::path base = config.parent_path();
    const std::string w = "solve config";
    check_keys(cfg,
               {"problem", "mesh", "bc", "coefficients", "f", "u0", "obstacle", "time", "theta", "exact", "pgs",
                "estimate_constants", "check_hypotheses", "seed", "description"},
               w);
    const json echo = echo_config(cfg);
    const unsigned seed = effective_seed(cfg);
    const std::string problem = cfg.contains("problem") ? text(cfg, "problem", w) : "parabolic";
    if (problem != "parabolic" && problem != "vi") throw ConfigError(w + ": problem must be parabolic or vi");

    const MeshPtr mesh = build_mesh(require(cfg, "mesh", w), base);
    const auto space = make_space(mesh, cfg.contains("bc") ? parse_bc(cfg.at("bc")) : BoundaryCondition::dirichlet);
    const CoefficientSet coeffs = cfg.contains("coefficients") ? parse_coefficients(cfg.at("coefficients"))
                                                               : CoefficientSet::laplacian();
    const TimeGrid grid = parse_time(require(cfg, "time", w));
    const ScalarPreset f = parse_preset(require(cfg, "f", w));
    const FEField u0 = interpolate(space, parse_preset(require(cfg, "u0", w)), grid.t_begin);
    if (cfg.value("check_hypotheses", true)) coeffs.check_hypotheses(*mesh, hypothesis_times(grid), seed);
    clock.mark("setup");

    json results;
    Trajectory u;
    if (problem == "parabolic") {
        ParabolicProblem p{space, coeffs, f, u0, grid, number_or(cfg, "theta", 1.0, w)};
        u = solve_parabolic(p);
    } else {
        const FEField psi = interpolate(space, parse_preset(require(cfg, "obstacle", w)), grid.t_begin);
        VIProblem p{space, coeffs, f, u0, grid, ObstacleConstraint(psi)};
        std::vector<LcpStats> stats;
        u = solve_parabolic_vi(p, cfg.contains("pgs") ? parse_pgs(cfg.at("pgs")) : PgsOptions{}, &stats);
        long sweeps = 0;
        double worst = 0.0;
        for (const auto& s : stats) {
            sweeps += s.sweeps;
            worst = std::max(worst, s.complementarity);
        }
        results["pgs_sweeps"] = sweeps;
        results["max_complementarity"] = worst;
        results["min_margin"] = feasibility_report(u, p.constraint).min_margin;
    }
    clock.mark("solve");

    const NormSet norms(space);
    results["n_dofs"] = space->n_dofs();
    results["steps"] = grid.steps;
    results["l2v_norm"] = l2v_norm(u, norms);
    double max_abs = 0.0;
    for (const auto& x : u.nodes) max_abs = std::max(max_abs, x.size() ? x.cwiseAbs().maxCoeff() : 0.0);
    results["max_abs"] = max_abs;
    if (cfg.contains("exact")) {
        const ScalarPreset exact = parse_preset(cfg.at("exact"));
        const auto grad = numeric_gradient(exact);
        const auto wts = grid.trapezoid_weights();
        double h1 = 0.0, l2 = 0.0, sup = 0.0;
        for (int k = 0; k < grid.num_nodes(); ++k) {
            const auto e = error_vs_exact(u.field(k), exact, grad, grid.node(k));
            h1 += wts[static_cast<std::size_t>(k)] * e.h1() * e.h1();
            l2 += wts[static_cast<std::size_t>(k)] * e.l2 * e.l2;
            sup = std::max(sup, e.l2);
        }
        results["exact_err_L2H1"] = std::sqrt(h1);
        results["exact_err_L2L2"] = std::sqrt(l2);
        results["exact_err_CL2"] = sup;
    }
    if (cfg.value("estimate_constants", false)) {
        const auto fc = estimate_form_constants(*space, coeffs, 4, seed, std::max(grid.t_end, 1e-12));
        results["form_constants"] = {{"bound", fc.bound}, {"alpha", fc.alpha}, {"lambda", fc.lambda}};
    }
    clock.mark("metrics");

    fs::create_directories(out);
    write_trajectory(out.string(), u);
    json manifest = manifest_head("solve", echo);
    add_mesh_hash(manifest, cfg.at("mesh"), base);
    std::vector<std::string> outputs{"mesh.mesh2d", "trajectory.txt"};
    for (int k = 0; k <= grid.steps; ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "u_%05d.field", k);
        outputs.emplace_back(name);
    }
    outputs.emplace_back("manifest.json");
    outputs.emplace_back("timings.txt");
    manifest["outputs"] = outputs;
    manifest["results"] = results;
    write_text(out / "manifest.json", manifest.dump(2) + "\n");
    clock.mark("write");
    write_text(out / "timings.txt", clock.text());
    return exit_ok;
}

int cmd_study(const fs::path& config, const fs::path& out, int jobs)
{
    StageClock clock;
    const json cfg = load_config(config);
    const fs::path base = config.parent_path();
    StudyConfig s = parse_study(cfg, base);
    s.jobs = jobs;
    const json echo = echo_config(cfg);
    if (cfg.value("check_hypotheses", true))
        s.coeffs.check_hypotheses(*s.family.limit, hypothesis_times(s.grid), effective_seed(cfg));
    clock.mark("setup");

    const ConvergenceReport r = run_study(s);
    clock.mark("study");

    fs::create_directories(out);
    write_text(out / "report.csv", report_csv(r));
    json manifest = manifest_head("study", echo);
    if (cfg.at("family").contains("mesh")) add_mesh_hash(manifest, cfg.at("family").at("mesh"), base);
    manifest["outputs"] = {"report.csv", "manifest.json", "timings.txt"};
    manifest["results"] = report_json(r);
    write_text(out / "manifest.json", manifest.dump(2) + "\n");
    clock.mark("write");
    write_text(out / "timings.txt", clock.text());
    return exit_ok;
}

int run(int argc, char** argv)
{
    CLI::App app{"Domain-perturbation experiments for parabolic equations and variational inequalities"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    auto* mesh = app.add_subcommand("mesh", "Generate a mesh file");
    mesh->set_help_flag("--help", "Print this help message and exit");
    std::string family, mesh_out;
    double delta = 0, h = 0, radius = 0, width = 0, x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    mesh->add_option("--family", family, "cracked_disk | unit_disk | fixed_hole | dumbbell | rectangle")->required();
    mesh->add_option("--h", h, "Mesh size")->required();
    auto* o_delta = mesh->add_option("--delta", delta, "Slit start (cracked_disk)");
    auto* o_radius = mesh->add_option("--radius", radius, "Hole radius (fixed_hole)");
    auto* o_width = mesh->add_option("--width", width, "Handle width (dumbbell)");
    mesh->add_option("--x0", x0);
    mesh->add_option("--x1", x1);
    mesh->add_option("--y0", y0);
    mesh->add_option("--y1", y1);
    mesh->add_option("--out", mesh_out, "Output .mesh2d path")->required();

    auto* solve = app.add_subcommand("solve", "Run one parabolic or VI solve");
    std::string solve_cfg, solve_out;
    solve->add_option("--config", solve_cfg, "JSON config")->required();
    solve->add_option("--out", solve_out, "Output directory")->required();

    auto* study = app.add_subcommand("study", "Run a convergence study");
    std::string study_cfg, study_out;
    int jobs = 1;
    study->add_option("--config", study_cfg, "JSON config (or a manifest)")->required();
    study->add_option("--out", study_out, "Output directory")->required();
    study->add_option("--jobs", jobs, "Concurrent per-n solves")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*mesh) {
            json cfg{{"generator", family}, {"h", h}};
            auto need = [&](CLI::Option* o, const char* key, double v) {
                if (o->count() == 0) throw ConfigError("mesh --family " + family + " requires --" + key);
                cfg[key] = v;
            };
            if (family == "cracked_disk") need(o_delta, "delta", delta);
            if (family == "fixed_hole") need(o_radius, "radius", radius);
            if (family == "dumbbell") need(o_width, "width", width);
            if (family == "rectangle") cfg.update({{"x0", x0}, {"x1", x1}, {"y0", y0}, {"y1", y1}});
            return cmd_mesh(cfg, mesh_out);
        }
        if (*solve) return cmd_solve(solve_cfg, solve_out);
        return cmd_study(study_cfg, study_out, jobs);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_usage;
    } catch (const GeometryError& e) {
        std::cerr << "geometry error: " << e.what() << "\n";
        return exit_usage;
    } catch (const PreconditionError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return exit_usage;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_usage;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << " (residual " << e.residual() << ")\n";
        return exit_numerical;
    } catch (const AssemblyError& e) {
        std::cerr << "assembly failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numerical;
    }
}

}  // namespace mosco::cli
