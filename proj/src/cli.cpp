#include "ma3d/cli.hpp"

#include "ma3d/bench.hpp"
#include "ma3d/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

namespace ma3d {

namespace {

struct Options {
    std::string domain = "cube";
    double h = 1.0;
    double voxel = 0.25;
    int degree = 5;
    int smoothness = 1;
    int dprime = 0;
    double a = 27.0;
    double mu = 1e4;
    std::string case_name;
    std::string algorithm = "alg2";
    std::string init = "cbrt";
    int max_iters = 100;
    int grid = 51;
    std::string out;
    std::string format;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string log_history;
    bool no_stop = false;
    // bench
    std::string study = "refine";
    std::vector<double> levels{1.0, 0.5};
    std::vector<double> a_values{6.0, 9.0, 27.0};
    std::vector<double> p_values{12.6, 15.1, 16.4, 17.1, 17.7, 26.0, 26.5, 27.0, 27.5};
    // mesh
    std::string save;
};

void add_domain_flags(CLI::App* cmd, Options& o)
{
    cmd->set_help_flag("--help", "print this help message and exit");  // -h is taken by --h
    cmd->add_option("--domain", o.domain, "cube | letter-l | letter-c | letter-s | mesh:<path>");
    cmd->add_option("--h", o.h, "mesh size (cell edge length)");
    cmd->add_option("--voxel", o.voxel, "voxel edge length of the letter domains");
    cmd->add_option("--threads", o.threads, "worker thread cap (default: MA3D_THREADS, then all cores)");
    cmd->add_option("--out", o.out, "output file (default: standard output)");
}

void add_solver_flags(CLI::App* cmd, Options& o, bool mae)
{
    cmd->add_option("--degree", o.degree, "spline degree D");
    cmd->add_option("--smoothness", o.smoothness, "smoothness r (0, 1 or 2)");
    cmd->add_option("--dprime", o.dprime, "collocation degree D' (default D+1)");
    cmd->add_option("--mu", o.mu, "interior equation weight");
    cmd->add_option("--case", o.case_name, "test case: u3ds1 .. u3ds9, aliases s1-s4, ns1, ns2, or quadratic");
    cmd->add_option("--grid", o.grid, "evaluation lattice points per axis");
    cmd->add_option("--format", o.format, "csv | json");
    cmd->add_option("--seed", o.seed, "seed for sampled diagnostics");
    if (!mae) return;
    cmd->add_option("--a", o.a, "iteration parameter a");
    cmd->add_option("--algorithm", o.algorithm, "alg1 | alg2");
    cmd->add_option("--init", o.init, "initial guess: cbrt | p=<value>");
    cmd->add_option("--max-iters", o.max_iters, "iteration budget");
    cmd->add_flag("--no-stop", o.no_stop, "ignore the defect-increase stop rule and run max-iters steps");
}

/// Collects every configuration problem before anything is allocated.
std::vector<std::string> validate(const Options& o, bool mae, bool solver)
{
    std::vector<std::string> errs;
    auto check = [&](bool ok, const std::string& msg) {
        if (!ok) errs.push_back(msg);
    };
    try {
        parse_domain(o.domain, o.h, o.voxel);
    } catch (const Error& e) {
        errs.push_back(e.what());
    }
    check(o.h > 0.0, "h must be positive");
    check(o.voxel > 0.0, "voxel must be positive");
    check(o.threads >= 0, "threads must be nonnegative");
    if (!solver) return errs;

    check(o.degree >= 1 && o.degree <= kMaxSplineDegree,
          "degree must be in [1, " + std::to_string(kMaxSplineDegree) + "]");
    check(o.smoothness >= 0 && o.smoothness <= 2, "smoothness must be 0, 1 or 2");
    check(o.smoothness <= o.degree, "smoothness cannot exceed the degree");
    if (o.dprime != 0) {
        check(o.dprime > o.degree, "collocation degree must exceed spline degree");
        check(o.dprime <= kMaxLatticeDegree, "dprime must be at most " + std::to_string(kMaxLatticeDegree));
    }
    check(o.mu > 0.0, "mu must be positive");
    check(o.grid >= 2, "grid must be at least 2");
    check(o.format.empty() || o.format == "csv" || o.format == "json", "format must be csv or json");
    if (!o.case_name.empty()) {
        try {
            find_case(o.case_name);
        } catch (const Error& e) {
            errs.push_back(e.what());
        }
    }
    if (!mae) return errs;
    check(o.a > 0.0, "a must be positive");
    check(o.max_iters >= 0, "max-iters must be nonnegative");
    try {
        parse_algorithm(o.algorithm);
    } catch (const Error& e) {
        errs.push_back(e.what());
    }
    try {
        InitialGuess::parse(o.init);
    } catch (const Error& e) {
        errs.push_back(e.what());
    }
    return errs;
}

RunSpec to_run_spec(const Options& o)
{
    RunSpec s;
    s.domain = parse_domain(o.domain, o.h, o.voxel);
    s.case_name = o.case_name;
    s.degree = o.degree;
    s.smoothness = o.smoothness;
    s.dprime = o.dprime;
    s.a = o.a;
    s.mu = o.mu;
    s.max_iters = o.max_iters;
    s.grid = o.grid;
    s.seed = o.seed;
    s.algorithm = parse_algorithm(o.algorithm);
    s.init = InitialGuess::parse(o.init);
    s.stop_on_defect_increase = !o.no_stop;
    return s;
}

/// Writes to --out when given, otherwise to `out`.
template <class Fn>
void emit(const Options& o, std::ostream& out, Fn&& fn)
{
    if (o.out.empty()) {
        fn(out);
        return;
    }
    std::ofstream file(o.out);
    if (!file) throw ValidationError("cannot open output file " + o.out);
    fn(file);
}

void report_warnings(const ResultRow& row, std::ostream& err)
{
    for (const auto& w : row.warnings) err << "warning: " << w << '\n';
    if (!row.failure.empty()) err << "run failed: " << row.failure << '\n';
}

int cmd_mesh(const Options& o, std::ostream& out)
{
    const auto spec = parse_domain(o.domain, o.h, o.voxel);
    const TetMesh mesh = build_domain(spec);
    if (!o.save.empty()) save_mesh(mesh, o.save);
    nlohmann::json j = {
        {"domain", spec.name()},
        {"h", mesh.h()},
        {"vertices", mesh.num_vertices()},
        {"tets", mesh.num_tets()},
        {"boundary_faces", mesh.boundary_faces().size()},
        {"interior_faces", mesh.interior_faces().size()},
        {"volume", mesh.volume()},
        {"quality", mesh.quality()},
        {"bbox_lo", {mesh.bounding_box().lo.x(), mesh.bounding_box().lo.y(), mesh.bounding_box().lo.z()}},
        {"bbox_hi", {mesh.bounding_box().hi.x(), mesh.bounding_box().hi.y(), mesh.bounding_box().hi.z()}},
    };
    if (!o.save.empty()) j["saved_to"] = o.save;
    emit(o, out, [&](std::ostream& s) { s << j.dump(2) << '\n'; });
    return kExitOk;
}

int cmd_solve(const Options& o, bool mae, std::ostream& out, std::ostream& err)
{
    RunSpec spec = to_run_spec(o);
    if (spec.case_name.empty()) spec.case_name = mae ? "u3ds3" : "quadratic";
    const ResultRow row = mae ? run_mae(spec) : run_poisson(spec);
    report_warnings(row, err);
    const std::string format = o.format.empty() ? "json" : o.format;
    emit(o, out, [&](std::ostream& s) {
        if (format == "csv") {
            write_csv(s, {row});
        } else {
            write_json(s, row, mae);
        }
    });
    if (mae && !o.log_history.empty()) {
        std::ofstream file(o.log_history);
        if (!file) throw ValidationError("cannot open history file " + o.log_history);
        write_history_csv(file, row);
    }
    return kExitOk;
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err)
{
    StudySpec spec;
    spec.kind = parse_study(o.study);
    spec.base = to_run_spec(o);
    if (spec.base.case_name.empty()) spec.base.case_name = "u3ds3";
    spec.a_values = o.a_values;
    spec.p_values = o.p_values;
    spec.h_values = o.levels;
    const auto rows = study(spec);
    for (const auto& r : rows) report_warnings(r, err);
    const std::string format = o.format.empty() ? "csv" : o.format;
    emit(o, out, [&](std::ostream& s) {
        if (format == "json") {
            write_json(s, rows, true);
        } else {
            write_csv(s, rows);
        }
    });
    bool any_failed = false;
    for (const auto& r : rows) any_failed = any_failed || !r.failure.empty();
    return any_failed ? kExitSolver : kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    Options o;
    CLI::App app{"Spline collocation solver for the Monge-Ampere and Poisson Dirichlet problems", "ma3d"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print this help message and exit");

    auto* poisson = app.add_subcommand("solve-poisson", "solve Lap u = Lap(u_case) with Dirichlet data");
    add_domain_flags(poisson, o);
    add_solver_flags(poisson, o, false);

    auto* mae = app.add_subcommand("solve-mae", "solve det D^2 u = f with Algorithm 1 or 2");
    add_domain_flags(mae, o);
    add_solver_flags(mae, o, true);
    mae->add_option("--log-history", o.log_history, "write the per-iteration series as CSV to this file");

    auto* bench = app.add_subcommand("bench", "batch studies: a-sweep, init-sweep, alg-compare, refine");
    add_domain_flags(bench, o);
    add_solver_flags(bench, o, true);
    bench->add_option("--study", o.study, "a-sweep | init-sweep | alg-compare | refine");
    bench->add_option("--levels", o.levels, "mesh sizes for the refine study")->delimiter(',');
    bench->add_option("--a-values", o.a_values, "values of a for the a-sweep")->delimiter(',');
    bench->add_option("--p-values", o.p_values, "constant initial values for the init-sweep")->delimiter(',');

    auto* mesh = app.add_subcommand("mesh", "build a domain mesh, print statistics, optionally save it");
    add_domain_flags(mesh, o);
    mesh->add_option("--save", o.save, "write the mesh in text format");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitValidation;
    }

    const bool is_mae = mae->parsed() || bench->parsed();
    const bool is_solver = !mesh->parsed();
    auto errs = validate(o, is_mae, is_solver);
    if (bench->parsed()) {
        try {
            parse_study(o.study);
        } catch (const Error& e) {
            errs.push_back(e.what());
        }
        if (o.levels.empty()) errs.push_back("refine study needs at least one level");
    }
    if (!errs.empty()) {
        err << "error: invalid configuration\n";
        for (const auto& e : errs) err << "  " << e << '\n';
        return kExitValidation;
    }
    if (o.threads > 0) set_thread_cap(o.threads);

    try {
        if (mesh->parsed()) return cmd_mesh(o, out);
        if (poisson->parsed()) return cmd_solve(o, false, out, err);
        if (mae->parsed()) return cmd_solve(o, true, out, err);
        return cmd_bench(o, out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const Error& e) {
        err << "solver error: " << e.what() << '\n';
        return kExitSolver;
    }
}

} // namespace ma3d
