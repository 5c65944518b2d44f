#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "steklov/asymptotics.hpp"
#include "steklov/ball_spectrum.hpp"
#include "steklov/fem_tbc_solver.hpp"
#include "steklov/first_passage.hpp"

#ifndef STEKLOV_VERSION
#define STEKLOV_VERSION "unknown"
#endif

namespace steklov::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const char* version() { return STEKLOV_VERSION; }

namespace {

const std::vector<std::string> kShapes = {"disk",     "ellipse",  "square",   "triangle", "polygon",
                                          "sphere",   "spheroid", "cylinder", "revolved", "mesh"};

std::vector<Vec2> parse_points(const std::string& text) {
    std::vector<Vec2> pts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        std::replace(item.begin(), item.end(), ',', ' ');
        std::istringstream is(item);
        Vec2 v;
        std::string rest;
        if (!(is >> v.x >> v.y) || (is >> rest)) throw UsageError("bad point '" + item + "', expected 'x,y'");
        pts.push_back(v);
    }
    return pts;
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != s.size()) throw UsageError("bad number '" + s + "'");
    return v;
}

// ---------------------------------------------------------------------------
// provenance

std::string csv_header(const RunConfig& c) {
    std::ostringstream o;
    o << "# steklov " << version() << " command=" << c.command << '\n';
    std::istringstream in(c.config_echo);
    std::string line;
    while (std::getline(in, line)) o << "# " << line << '\n';
    return o.str();
}

json provenance(const RunConfig& c) {
    json cfg = json::object();
    std::istringstream in(c.config_echo);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string v = line.substr(eq + 1);
        if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) v = v.substr(1, v.size() - 2);
        cfg[line.substr(0, eq)] = v;
    }
    return {{"tool", "steklov"}, {"version", version()}, {"command", c.command}, {"config", cfg}};
}

std::ofstream open_out(const RunConfig& c, const std::string& name) {
    fs::create_directories(c.out);
    const fs::path path = fs::path(c.out) / name;
    std::ofstream f(path);
    if (!f) throw UsageError("cannot write " + path.string());
    f.precision(17);
    return f;
}

void write_json(const RunConfig& c, const std::string& name, json body) {
    json doc;
    doc["provenance"] = provenance(c);
    for (auto& [k, v] : body.items()) doc[k] = v;
    open_out(c, name) << doc.dump(2) << '\n';
}

bool want_json(const RunConfig& c) { return c.format != "csv"; }
bool want_csv(const RunConfig& c) { return c.format != "json"; }

// ---------------------------------------------------------------------------

FemMode fem_mode(const RunConfig& c, const Mesh& m) {
    return m.ambient == Ambient::Axisym3D ? FemMode::axisym(c.m) : FemMode::planar();
}

Mesh make_mesh(const RunConfig& c) {
    if (c.shape == "mesh") {
        Mesh m = read_mesh_file(c.mesh_file);
        validate_mesh(m);
        return m;
    }
    return build_mesh(c.domain(), c.h_max);
}

// default start: the obstacle node highest on the symmetry axis
Vec2 north_pole(const Mesh& m) {
    Vec2 best{0.0, -1e300};
    for (const auto& e : m.boundary_edges) {
        if (e.tag != BoundaryTag::Inner) continue;
        for (int v : {e.a, e.b})
            if (std::abs(m.nodes[v].x) < 1e-12 && m.nodes[v].y > best.y) best = m.nodes[v];
    }
    if (best.y == -1e300) throw GeometryError("obstacle does not meet the symmetry axis; give --x0");
    return best;
}

// ---------------------------------------------------------------------------

int cmd_mesh(const RunConfig& c, std::ostream& log) {
    const Mesh m = make_mesh(c);
    auto f = open_out(c, "mesh.msh");
    write_mesh(f, m);
    // the mesh format has no comment syntax, so provenance goes next to it
    std::ostringstream sum;
    sum << std::hex << mesh_checksum(m);
    write_json(c, "mesh.json",
               {{"mesh", "mesh.msh"},
                {"nodes", m.nodes.size()},
                {"triangles", m.triangles.size()},
                {"h_max", m.h_max},
                {"min_angle_degrees", m.min_angle_degrees()},
                {"checksum", sum.str()}});
    log << "nodes " << m.nodes.size() << ", triangles " << m.triangles.size() << ", h_max " << m.h_max
        << ", min angle " << m.min_angle_degrees() << " deg, checksum " << std::hex << mesh_checksum(m) << std::dec
        << '\n';
    return 0;
}

int cmd_solve(const RunConfig& c, std::ostream& log) {
    const Mesh m = make_mesh(c);
    const SteklovSpectrum s = steklov_solve(m, fem_mode(c, m), c.p, SolveOptions{c.n_max, c.k, false});
    if (want_json(c)) {
        std::ostringstream js;
        write_spectrum_json(js, s);
        write_json(c, "spectrum.json", {{"spectrum", json::parse(js.str())}});
    }
    if (want_csv(c)) {
        auto f = open_out(c, "spectrum.csv");
        f << csv_header(c);
        write_spectrum_csv(f, s);
        auto g = open_out(c, "traces.csv");
        g << csv_header(c);
        write_traces_csv(g, s);
    }
    log << "p = " << c.p << ", mode " << s.mode.name() << '\n';
    for (int k = 0; k < s.size(); ++k) log << "mu_" << k << " = " << std::setprecision(10) << s.eigenvalues[k] << '\n';
    return 0;
}

int cmd_sweep(const RunConfig& c, std::ostream& log) {
    const Mesh m = make_mesh(c);
    std::vector<double> grid = parse_grid(c.p_grid);
    std::sort(grid.begin(), grid.end(), std::greater<>());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    SweepOptions opt;
    opt.k_max = c.k;
    opt.threads = c.threads;
    const SweepResult r = p_sweep(m, fem_mode(c, m), c.n_max, grid, opt);
    if (want_csv(c)) {
        auto f = open_out(c, "sweep.csv");
        f << csv_header(c);
        write_sweep_csv(f, r);
    }
    if (want_json(c)) {
        std::ostringstream js;
        write_reports_json(js, r.reports);
        write_json(c, "sweep.json",
                   {{"p_grid", r.p_grid},
                    {"mu0", r.mu0},
                    {"min_overlap", r.min_overlap},
                    {"any_flagged", r.any_flagged},
                    {"reports", json::parse(js.str())}});
    }
    log << grid.size() << " p values, " << c.k << " branches, min overlap " << r.min_overlap << '\n';
    if (r.any_flagged) log << "warning: some branch steps fell below the overlap threshold\n";
    return 0;
}

int cmd_asympt(const RunConfig& c, std::ostream& log) {
    const Mesh m = make_mesh(c);
    const int count = c.count > 0 ? c.count : c.k;
    const SteklovSpectrum s0 = steklov_solve(m, fem_mode(c, m), 0.0, SolveOptions{c.n_max, count + 2, false});
    const auto reps = small_p_reports(s0, count);
    std::ostringstream js;
    write_reports_json(js, reps);
    write_json(c, "asympt.json", {{"reports", json::parse(js.str())}});
    for (const auto& r : reps) {
        log << "k=" << r.k << " mu0=" << std::setprecision(6) << r.mu0 << ' ' << to_string(r.regime);
        switch (r.regime) {
            case Regime::Log2D:
            case Regime::Sqrt3D:
            case Regime::PLogP4D: log << " a=" << r.a; break;
            case Regime::PLogP2D: log << " d=" << r.d_coef; break;
            case Regime::Linear: log << " b=" << r.b; break;
        }
        if (r.ambiguous) log << " (ambiguous, alternative " << to_string(r.alternative) << ')';
        log << '\n';
    }
    return 0;
}

int cmd_fpt(const RunConfig& c, std::ostream& log) {
    if (!c.axisymmetric()) throw UsageError("fpt needs a three-dimensional (axisymmetric) obstacle");
    const Mesh m = make_mesh(c);
    if (m.ambient != Ambient::Axisym3D) throw UsageError("fpt needs a three-dimensional (axisymmetric) mesh");
    const Vec2 x0 = c.x0.empty() ? north_pole(m) : parse_points(c.x0).at(0);
    const SteklovSpectrum s0 = steklov_solve(m, FemMode::axisym(0), 0.0, SolveOptions{c.n_max, 1 << 20, false});
    const FptModes modes = fpt_modes(s0, x0, c.q, c.K);
    const std::vector<double> t = parse_grid(c.t_grid);
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1])) throw UsageError("time grid must be increasing");

    const FptCurve U = pdf_U_longtime(modes, c.D, c.ell, t);
    const FptCurve H = pdf_Hq_longtime(modes, c.D, c.q, t);
    const FptCurve S = survival_Sq(modes, c.D, c.q, t);
    const double s_inf = survival_Sq_infinity(modes, c.q);

    if (want_csv(c)) {
        for (const FptCurve* cv : {&U, &H, &S}) {
            auto f = open_out(c, "fpt_" + cv->kind + ".csv");
            f << csv_header(c);
            write_fpt_csv(f, *cv);
        }
    }
    json ms = json::array();
    for (const auto& md : modes.modes)
        ms.push_back({{"k", md.k}, {"mu", md.mu}, {"a", md.a}, {"v_x0", md.v_x0}, {"integral", md.integral}});
    json body = {{"x0", {modes.x0.x, modes.x0.y}},
                 {"x0_distance", modes.x0_distance},
                 {"modes", ms},
                 {"modes_available", modes.available},
                 {"truncation_reached", modes.truncation_reached},
                 {"S_q_infinity", s_inf},
                 {"U_tail_coefficient", pdf_U_tail(modes, c.D, c.ell)},
                 {"Hq_tail_coefficient", pdf_Hq_tail(modes, c.D, c.q)},
                 {"last_mode_ratio", {{"U", U.last_mode_ratio}, {"Hq", H.last_mode_ratio}, {"Sq", S.last_mode_ratio}}},
                 {"flagged", {{"U", U.flagged}, {"Hq", H.flagged}, {"Sq", S.flagged}}}};
    const bool sphere = c.shape == "sphere" && c.cy == 0.0;
    if (sphere) body["sphere_closed_form"] = {{"S_q_infinity", sphere_Sq_infinity(c.R, c.q)}};
    if (want_json(c)) write_json(c, "fpt.json", body);

    log << modes.modes.size() << " modes (of " << modes.available << "), start (" << modes.x0.x << ", " << modes.x0.y
        << ")\n";
    log << "S_q(inf) = " << std::setprecision(6) << s_inf;
    if (sphere) log << "  (sphere closed form " << sphere_Sq_infinity(c.R, c.q) << ')';
    log << '\n';
    if (U.flagged || H.flagged || S.flagged) log << "warning: truncated sums violate sign or monotonicity\n";
    return 0;
}

struct Check {
    std::string name;
    double value;
    double tol;
    bool pass() const { return std::isfinite(value) && value <= tol; }
};

int cmd_validate(const RunConfig& c, std::ostream& log) {
    const bool table1 = c.table1 || !c.identities;
    const bool ident = c.identities || !c.table1;
    std::vector<Check> checks;
    json body;

    if (table1) {
        // exterior of the unit disk centred at (0, 0.25)
        const BallValidationReport r0 = validate_against_ball(2, 1.0, {0.0, 0.25}, c.L, c.h_max, c.n_max, 0.0, 11);
        const BallValidationReport r1 = validate_against_ball(2, 1.0, {0.0, 0.25}, c.L, c.h_max, c.n_max, 1.0, 11);
        checks.push_back({"table1 p=0 mu_0", std::abs(r0.computed[0]), 1e-8});
        double rel = 0.0, rmse = 0.0;
        for (int k = 1; k <= 10; ++k) rel = std::max(rel, r0.rel_error[k]);
        checks.push_back({"table1 p=0 max rel error k=1..10", rel, 2e-3});
        checks.push_back({"table1 p=1 |mu_0 - 1.4296|", std::abs(r1.computed[0] - 1.4296), 1e-3});
        checks.push_back({"table1 p=1 |mu_9 - 5.1225|", std::abs(r1.computed[9] - 5.1225), 3e-3});
        for (const auto* r : {&r0, &r1})
            for (double e : r->rmse) rmse = std::max(rmse, e);
        checks.push_back({"table1 max eigenfunction RMSE", rmse, 0.012});
        if (want_csv(c)) {
            auto f = open_out(c, "table1.csv");
            f << csv_header(c);
            f << "k,exact_p0,computed_p0,rmse_p0,exact_p1,computed_p1,rmse_p1\n";
            for (std::size_t k = 0; k < r0.exact.size(); ++k)
                f << k << ',' << r0.exact[k] << ',' << r0.computed[k] << ',' << r0.rmse[k] << ',' << r1.exact[k] << ','
                  << r1.computed[k] << ',' << r1.rmse[k] << '\n';
        }
        body["table1"] = {{"p0", {{"exact", r0.exact}, {"computed", r0.computed}, {"rmse", r0.rmse}}},
                          {"p1", {{"exact", r1.exact}, {"computed", r1.computed}, {"rmse", r1.rmse}}}};
    }

    if (ident) {
        // closed-form balls: Q_n against a central difference of mu_n
        double worst = 0.0;
        for (int d = 2; d <= 5; ++d)
            for (int n = 0; n <= 5; ++n)
                for (double p : {1e-2, 1.0, 10.0}) {
                    const BallSpec ball{d, 1.0};
                    const double h = 1e-4 * p;
                    const double fd = (mu_exterior(ball, n, p + h) - mu_exterior(ball, n, p - h)) / (2.0 * h);
                    worst = std::max(worst, std::abs(fd - q_norm(ball, n, p)) / std::abs(q_norm(ball, n, p)));
                }
        checks.push_back({"ball derivative identity", worst, 1e-6});

        const Mesh m = make_mesh(c);
        SteklovSolver solver(m, fem_mode(c, m), c.n_max);
        const double p = c.p > 0.0 ? c.p : 0.05;
        const int count = std::min(c.k, 6);
        const auto res = check_identities(solver.solve(p, count), solver.solve(0.0, count), &solver, count);
        double i1 = 0, ray = 0, i3 = 0, der = 0, i4 = 0;
        json rows = json::array();
        for (const auto& r : res) {
            i1 = std::max(i1, r.identity1);
            ray = std::max(ray, r.rayleigh);
            i3 = std::max(i3, r.identity3);
            der = std::max(der, r.derivative);
            i4 = std::max(i4, r.identity4);
            rows.push_back({{"k", r.k},
                            {"identity1", r.identity1},
                            {"rayleigh", r.rayleigh},
                            {"identity3", r.identity3},
                            {"identity4", r.identity4},
                            {"derivative", r.derivative}});
        }
        checks.push_back({"boundary-mean identity", i1, 1e-6});
        checks.push_back({"Rayleigh identity", ray, 1e-9});
        checks.push_back({"two-rate identity", i3, 1e-8});
        checks.push_back({"p-derivative identity", der, 1e-5});
        checks.push_back({"low-mode projection identity", i4, 1e-3});
        body["identities"] = {{"p", p}, {"residuals", rows}};
    }

    bool ok = true;
    json cj = json::array();
    for (const auto& k : checks) {
        ok = ok && k.pass();
        cj.push_back({{"name", k.name}, {"value", k.value}, {"tolerance", k.tol}, {"pass", k.pass()}});
        log << (k.pass() ? "PASS " : "FAIL ") << k.name << ": " << std::setprecision(3) << k.value << " (tol " << k.tol
            << ")\n";
    }
    body["checks"] = cj;
    body["pass"] = ok;
    if (want_json(c)) write_json(c, "validate.json", body);
    return ok ? 0 : 5;
}

int cmd_mc(const RunConfig& c, std::ostream& log) {
    McOptions o;
    o.L = c.R;
    o.q = c.q;
    o.ell = c.ell;
    o.D = c.D;
    o.walkers = c.walkers;
    o.dt = c.dt;
    o.t_max = c.t_max;
    o.far_radius = c.far_radius;
    o.seed = c.seed;
    o.threads = c.threads;
    const McReport r = mc_validate_sphere(o);
    if (want_csv(c)) {
        auto f = open_out(c, "mc_cdf.csv");
        f << csv_header(c);
        f << "t,cdf_U,cdf_U_exact,cdf_Hq,cdf_Hq_exact\n";
        for (std::size_t i = 0; i < r.t_grid.size(); ++i)
            f << r.t_grid[i] << ',' << r.cdf_U[i] << ',' << r.cdf_U_exact[i] << ',' << r.cdf_Hq[i] << ','
              << r.cdf_Hq_exact[i] << '\n';
    }
    if (want_json(c))
        write_json(c, "mc.json",
                   {{"walkers", o.walkers},
                    {"escaped", r.escaped},
                    {"reacted", r.reacted},
                    {"escape_fraction", r.escape_fraction},
                    {"escape_sigma", r.escape_sigma},
                    {"S_q_infinity_exact", r.escape_exact},
                    {"escape_z", r.escape_z},
                    {"ks_U", r.ks_U},
                    {"ks_Hq", r.ks_Hq},
                    {"steps", r.steps},
                    {"escape_within_3_sigma", r.escape_ok()}});
    log << "escape fraction " << std::setprecision(6) << r.escape_fraction << " +- " << r.escape_sigma << ", exact "
        << r.escape_exact << ", z = " << r.escape_z << '\n';
    log << "KS distance: T_ell " << r.ks_U << ", reaction time " << r.ks_Hq << "  (" << r.steps << " steps, "
        << r.seconds << " s)\n";
    return r.escape_ok() ? 0 : 5;
}

}  // namespace

// ---------------------------------------------------------------------------

bool RunConfig::axisymmetric() const {
    return shape == "sphere" || shape == "spheroid" || shape == "cylinder" || shape == "revolved" ||
           (shape == "mesh" && read_mesh_file(mesh_file).ambient == Ambient::Axisym3D);
}

DomainSpec RunConfig::domain() const {
    DomainSpec s;
    if (shape == "disk") s = DomainSpec::disk(R, {cx, cy}, L);
    else if (shape == "ellipse") s = DomainSpec::ellipse(a, b, {cx, cy}, L);
    else if (shape == "square") s = DomainSpec::square(side, L);
    else if (shape == "triangle") s = DomainSpec::triangle(side, L);
    else if (shape == "polygon") s = DomainSpec::polygon(parse_points(vertices), L);
    else if (shape == "sphere") s = DomainSpec::ball(Ambient::Axisym3D, R, L);
    else if (shape == "spheroid") s = DomainSpec::spheroid(a, b, L);
    else if (shape == "cylinder") s = DomainSpec::capped_cylinder(radius, height, L);
    else if (shape == "revolved") s = DomainSpec::rotated_polygon(parse_points(vertices), L);
    else throw UsageError("shape '" + shape + "' has no built-in description");
    if (s.ambient == Ambient::Axisym3D) s.center_offset = {0.0, cy};
    s.validate();
    return s;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> g;
    if (text.rfind("log:", 0) == 0 || text.rfind("lin:", 0) == 0) {
        std::vector<std::string> f;
        std::stringstream ss(text.substr(4));
        std::string item;
        while (std::getline(ss, item, ':')) f.push_back(item);
        if (f.size() != 3) throw UsageError("grid '" + text + "' must look like log:a:b:n");
        const double a = parse_double(f[0]), b = parse_double(f[1]);
        const double nd = parse_double(f[2]);
        const int n = int(nd);
        if (n < 1 || double(n) != nd) throw UsageError("grid point count must be a positive integer");
        const bool lg = text[1] == 'o';
        if (lg && !(a > 0.0 && b > 0.0)) throw UsageError("log grid ends must be positive");
        for (int i = 0; i < n; ++i) {
            const double s = n == 1 ? 0.0 : double(i) / (n - 1);
            g.push_back(lg ? a * std::pow(b / a, s) : a + (b - a) * s);
        }
    } else {
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) g.push_back(parse_double(item));
    }
    if (g.empty()) throw UsageError("empty grid");
    return g;
}

RunConfig parse_and_validate(const std::vector<std::string>& args) {
    RunConfig c;
    CLI::App app{"Exterior Steklov spectra and first-passage statistics", "steklov"};
    app.set_version_flag("--version", std::string(version()));
    app.set_config("--config", "", "TOML/INI file with option values (flags take precedence)");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1, 1);

    const struct {
        const char* name;
        const char* help;
    } cmds[] = {{"mesh", "write the mesh of the exterior region"},
                {"solve", "exterior Steklov eigenpairs at one p"},
                {"sweep", "eigenvalue branches over a p grid"},
                {"asympt", "small-p regime classification and coefficients"},
                {"fpt", "first-passage densities and survival from the p = 0 spectrum"},
                {"validate", "disk reference table and identity checks"},
                {"mc", "Monte Carlo check of the sphere survival limit"}};
    for (const auto& cm : cmds) app.add_subcommand(cm.name, cm.help)->fallthrough();

    app.add_option("--shape", c.shape, "obstacle")->check(CLI::IsMember(kShapes))->capture_default_str();
    app.add_option("--R", c.R, "disk or sphere radius")->capture_default_str();
    app.add_option("--a", c.a, "ellipse/spheroid semi-axis along x or r")->capture_default_str();
    app.add_option("--b", c.b, "ellipse/spheroid semi-axis along y or z")->capture_default_str();
    app.add_option("--side", c.side, "square/triangle side")->capture_default_str();
    app.add_option("--radius", c.radius, "cylinder radius")->capture_default_str();
    app.add_option("--height", c.height, "cylinder height")->capture_default_str();
    app.add_option("--cx", c.cx, "obstacle centre x")->capture_default_str();
    app.add_option("--cy", c.cy, "obstacle centre y (z when axisymmetric)")->capture_default_str();
    app.add_option("--vertices", c.vertices, "polygon or revolved profile: 'x,y;x,y;...'");
    app.add_option("--mesh-file", c.mesh_file, "steklov-mesh v1 file for --shape mesh");
    app.add_option("--L", c.L, "radius of the artificial boundary")->capture_default_str();
    app.add_option("--h-max", c.h_max, "largest mesh edge")->capture_default_str();
    app.add_option("--n-max", c.n_max, "truncation order of the transparent condition")->capture_default_str();
    app.add_option("--k", c.k, "number of eigenpairs / branches")->capture_default_str();
    app.add_option("--m", c.m, "azimuthal mode (axisymmetric)")->capture_default_str();
    app.add_option("--p", c.p, "rate p >= 0")->capture_default_str();
    app.add_option("--p-grid", c.p_grid, "log:a:b:n, lin:a:b:n or a comma list")->capture_default_str();
    app.add_option("--count", c.count, "modes to classify (default --k)")->capture_default_str();
    app.add_option("--q", c.q, "reactivity")->capture_default_str();
    app.add_option("--D", c.D, "diffusion coefficient")->capture_default_str();
    app.add_option("--ell", c.ell, "local-time threshold")->capture_default_str();
    app.add_option("--x0", c.x0, "start 'r,z' on the obstacle (default: top of the axis)");
    app.add_option("--K", c.K, "modes in the sums (negative: automatic)")->capture_default_str();
    app.add_option("--t-grid", c.t_grid, "time grid")->capture_default_str();
    app.add_option("--walkers", c.walkers, "Monte Carlo walkers")->capture_default_str();
    app.add_option("--seed", c.seed, "Monte Carlo seed")->capture_default_str();
    app.add_option("--dt", c.dt, "smallest Monte Carlo step, units of R^2/D")->capture_default_str();
    app.add_option("--t-max", c.t_max, "Monte Carlo time window, units of R^2/D")->capture_default_str();
    app.add_option("--far-radius", c.far_radius, "Monte Carlo far sphere, units of R")->capture_default_str();
    app.add_option("--threads", c.threads, "worker threads (0: STEKLOV_THREADS or hardware)")->capture_default_str();
    app.add_flag("--table1", c.table1, "validate: disk reference table only");
    app.add_flag("--identities", c.identities, "validate: identity checks only");
    app.add_option("--out", c.out, "output directory")->capture_default_str();
    app.add_option("--format", c.format, "json, csv or both")
        ->check(CLI::IsMember({"json", "csv", "both"}))
        ->capture_default_str();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::Success& e) {
        std::ostringstream o, err;
        app.exit(e, o, err);
        throw HelpRequested(o.str() + err.str());
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }
    for (const auto* sub : app.get_subcommands()) c.command = sub->get_name();

    // echo without the config path so reruns from the echo are identical
    std::istringstream echo(app.config_to_str(true, false));
    std::string line;
    while (std::getline(echo, line)) {
        if (line.empty() || line[0] == '[' || line.rfind("config", 0) == 0) continue;
        line.erase(std::remove(line.begin(), line.end(), ' '), line.end());
        c.config_echo += line + '\n';
    }

    if (!(c.L > 0.0) || !std::isfinite(c.L)) throw UsageError("--L must be positive");
    if (!(c.h_max > 0.0 && c.h_max < c.L / 4.0)) throw UsageError("--h-max must lie in (0, L/4)");
    if (c.n_max < 1 || c.n_max > 256) throw UsageError("--n-max must lie in [1, 256]");
    if (c.k < 1) throw UsageError("--k must be >= 1");
    if (c.m < 0) throw UsageError("--m must be >= 0");
    if (!(c.p >= 0.0) || !std::isfinite(c.p)) throw UsageError("--p must be >= 0");
    if (!(c.q >= 0.0) || !(c.D > 0.0) || !(c.ell >= 0.0)) throw UsageError("need q >= 0, D > 0, ell >= 0");
    if (c.walkers < 1) throw UsageError("--walkers must be >= 1");
    if (c.threads < 0) throw UsageError("--threads must be >= 0");
    if (c.shape == "mesh") {
        if (c.mesh_file.empty()) throw UsageError("--shape mesh needs --mesh-file");
        if (!fs::exists(c.mesh_file)) throw UsageError("mesh file '" + c.mesh_file + "' not found");
    } else if (c.command != "mc") {
        (void)c.domain();  // geometry consistency, including L against the circumradius
    }
    if (c.command == "sweep") (void)parse_grid(c.p_grid);
    if (c.command == "fpt") (void)parse_grid(c.t_grid);
    return c;
}

int dispatch(const RunConfig& c, std::ostream& log) {
    if (c.command == "mesh") return cmd_mesh(c, log);
    if (c.command == "solve") return cmd_solve(c, log);
    if (c.command == "sweep") return cmd_sweep(c, log);
    if (c.command == "asympt") return cmd_asympt(c, log);
    if (c.command == "fpt") return cmd_fpt(c, log);
    if (c.command == "validate") return cmd_validate(c, log);
    if (c.command == "mc") return cmd_mc(c, log);
    throw UsageError("unknown command '" + c.command + "'");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        const RunConfig c = parse_and_validate(args);
        return dispatch(c, out);
    } catch (const HelpRequested& h) {
        out << h.what();
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 4;
    }
}

}  // namespace steklov::cli
