#include "ma3d/bench.hpp"

#include "ma3d/smoothness.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ostream>

namespace ma3d {

namespace {

/// u = phi(|x|^2) with grad = g1 x and Hessian = g1 I + g2 x x^T.
TestCase radial(std::string name, std::function<double(double)> phi, std::function<double(double)> g1,
                std::function<double(double)> g2, ScalarField f)
{
    TestCase tc;
    tc.name = std::move(name);
    tc.exact.u = [phi](const Vec3& p) { return phi(p.squaredNorm()); };
    tc.exact.grad = [g1](const Vec3& p) -> Vec3 {
        const double s = p.squaredNorm();
        return s == 0.0 ? Vec3::Zero() : Vec3(g1(s) * p);
    };
    tc.exact.hess = [g1, g2](const Vec3& p) -> Mat3 {
        const double s = p.squaredNorm();
        return g1(s) * Mat3::Identity() + g2(s) * p * p.transpose();
    };
    tc.f = std::move(f);
    tc.g = tc.exact.u;
    return tc;
}

TestCase diagonal_quadratic(std::string name, Vec3 w, double f)
{
    TestCase tc;
    tc.name = std::move(name);
    tc.exact.u = [w](const Vec3& p) { return 0.5 * p.cwiseProduct(p).dot(w); };
    tc.exact.grad = [w](const Vec3& p) -> Vec3 { return w.cwiseProduct(p); };
    tc.exact.hess = [w](const Vec3&) -> Mat3 { return w.asDiagonal(); };
    tc.f = [f](const Vec3&) { return f; };
    tc.g = tc.exact.u;
    return tc;
}

std::vector<TestCase> build_catalog()
{
    std::vector<TestCase> c;

    c.push_back(diagonal_quadratic("u3ds1", Vec3(1, 5, 15), 75.0));
    c.back().aliases = {"s1"};
    c.back().note = "(x^2 + 5y^2 + 15z^2)/2, Hessian eigenvalues 1, 5, 15";

    c.push_back(diagonal_quadratic("u3ds2", Vec3(1, 10, 100), 1000.0));
    c.back().note = "(x^2 + 10y^2 + 100z^2)/2";

    c.push_back(radial(
        "u3ds3", [](double s) { return std::exp(s / 2); }, [](double s) { return std::exp(s / 2); },
        [](double s) { return std::exp(s / 2); },
        [](const Vec3& p) {
            const double s = p.squaredNorm();
            return (1 + s) * std::exp(1.5 * s);
        }));
    c.back().aliases = {"s2"};
    c.back().note = "exp(|x|^2 / 2)";

    c.push_back(radial(
        "u3ds4", [](double s) { return std::exp(s / 3); }, [](double s) { return 2.0 / 3.0 * std::exp(s / 3); },
        [](double s) { return 4.0 / 9.0 * std::exp(s / 3); },
        [](const Vec3& p) {
            const double s = p.squaredNorm();
            return 8.0 / 27.0 * (1 + 2 * s / 3) * std::exp(s);
        }));
    c.back().note = "exp(|x|^2 / 3); f = (8/27)(1 + 2|x|^2/3) exp(|x|^2)";

    c.push_back(radial(
        "u3ds5", [](double s) { return -std::sqrt(6 - s); }, [](double s) { return 1 / std::sqrt(6 - s); },
        [](double s) { return std::pow(6 - s, -1.5); },
        [](const Vec3& p) { return 6 * std::pow(6 - p.squaredNorm(), -2.5); }));
    c.back().aliases = {"s3"};
    c.back().note = "-sqrt(6 - |x|^2)";

    c.push_back(radial(
        "u3ds6", [](double s) { return -std::sqrt(3 - s); }, [](double s) { return 1 / std::sqrt(3 - s); },
        [](double s) { return std::pow(3 - s, -1.5); },
        [](const Vec3& p) { return 3 * std::pow(3 - p.squaredNorm(), -2.5); }));
    c.back().aliases = {"ns1"};
    c.back().singular = true;
    c.back().note = "-sqrt(3 - |x|^2); f is unbounded at the corner (1,1,1)";

    const double r3 = std::sqrt(3.0);
    c.push_back(radial(
        "u3ds7", [r3](double s) { return (s - 1) / (2 * r3); }, [r3](double) { return 1 / r3; },
        [](double) { return 0.0; }, [r3](const Vec3&) { return 1 / (3 * r3); }));
    c.back().note = "-(1 - |x|^2)/(2 sqrt 3); intended for the unit ball (external mesh)";

    TestCase s8;
    s8.name = "u3ds8";
    s8.aliases = {"s4"};
    s8.exact.u = [](const Vec3& p) {
        return p.squaredNorm() / 2 - std::sin(p.x()) - std::sin(p.y()) - std::sin(p.z());
    };
    s8.exact.grad = [](const Vec3& p) -> Vec3 {
        return {p.x() - std::cos(p.x()), p.y() - std::cos(p.y()), p.z() - std::cos(p.z())};
    };
    s8.exact.hess = [](const Vec3& p) -> Mat3 {
        return Vec3(1 + std::sin(p.x()), 1 + std::sin(p.y()), 1 + std::sin(p.z())).asDiagonal();
    };
    s8.f = [](const Vec3& p) { return (1 + std::sin(p.x())) * (1 + std::sin(p.y())) * (1 + std::sin(p.z())); };
    s8.g = s8.exact.u;
    s8.note = "|x|^2/2 - sin x - sin y - sin z; f = (1 + sin x)(1 + sin y)(1 + sin z)";
    c.push_back(std::move(s8));

    c.push_back(radial(
        "u3ds9", [](double s) { return std::pow(s, 0.75) / 3; }, [](double s) { return 0.5 * std::pow(s, -0.25); },
        [](double s) { return -0.25 * std::pow(s, -1.25); },
        [](const Vec3& p) { return std::pow(p.squaredNorm(), -0.75) / 16; }));
    c.back().aliases = {"ns2"};
    c.back().singular = true;
    c.back().note = "|x|^(3/2) / 3; f = |x|^(-3/2) / 16 is unbounded at the origin";
    return c;
}

std::vector<TestCase> build_all()
{
    auto all = build_catalog();
    all.push_back(diagonal_quadratic("quadratic", Vec3(2, 2, 2), 8.0));
    all.back().note = "x^2 + y^2 + z^2, exactly representable for D >= 2";
    return all;
}

} // namespace

ScalarField TestCase::laplacian() const
{
    return [h = exact.hess](const Vec3& p) { return h(p).trace(); };
}

const std::vector<TestCase>& catalog()
{
    static const std::vector<TestCase> cases = build_catalog();
    return cases;
}

const std::vector<TestCase>& all_cases()
{
    static const std::vector<TestCase> cases = build_all();
    return cases;
}

const TestCase& find_case(const std::string& name)
{
    for (const auto& tc : all_cases()) {
        if (tc.name == name) return tc;
        for (const auto& a : tc.aliases)
            if (a == name) return tc;
    }
    std::string known;
    for (const auto& tc : all_cases()) known += (known.empty() ? "" : ", ") + tc.name;
    throw ValidationError("unknown test case '" + name + "' (known: " + known + ")");
}

double convergence_rate(double coarse, double fine)
{
    if (coarse == fine) return 0.0;
    return std::log2(coarse / fine);
}

std::vector<RateStep> rate_table(const std::vector<ErrorReport>& levels)
{
    if (levels.size() < 2) throw ValidationError("rate table needs at least two refinement levels");
    std::vector<RateStep> out;
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
        out.push_back({convergence_rate(levels[i].l2, levels[i + 1].l2),
                       convergence_rate(levels[i].h1, levels[i + 1].h1),
                       convergence_rate(levels[i].linf, levels[i + 1].linf)});
    }
    return out;
}

namespace {

void describe(const RunSpec& spec, ResultRow& row)
{
    row.case_name = spec.case_name;
    for (const auto& tc : all_cases()) {
        if (tc.name == spec.case_name
            || std::find(tc.aliases.begin(), tc.aliases.end(), spec.case_name) != tc.aliases.end()) {
            row.case_name = tc.name;  // canonical name for aliases
        }
    }
    row.domain = spec.domain.name();
    row.h = spec.domain.h;
    row.degree = spec.degree;
    row.smoothness = spec.smoothness;
    row.dprime = spec.dprime > 0 ? spec.dprime : spec.degree + 1;
    row.a = spec.a;
    row.mu = spec.mu;
    row.algorithm = to_string(spec.algorithm);
    row.init = spec.init.name();
}

std::shared_ptr<const SplineSpace> build_space(const RunSpec& spec)
{
    const int dprime = spec.dprime > 0 ? spec.dprime : spec.degree + 1;
    if (dprime <= spec.degree) throw ValidationError("collocation degree must exceed spline degree");
    auto mesh = std::make_shared<const TetMesh>(build_domain(spec.domain));
    return assemble_smoothness(mesh, spec.degree, spec.smoothness);
}

std::unique_ptr<MaeSolver> build_solver(const RunSpec& spec, const TestCase& tc)
{
    MaeProblem problem;
    problem.space = build_space(spec);
    problem.f = tc.f;
    problem.g = tc.g;
    problem.a = spec.a;
    problem.dprime = spec.dprime;
    problem.max_iters = spec.max_iters;
    problem.initial = spec.init;
    problem.ls.mu = spec.mu;
    problem.history_grid = spec.history_grid;
    problem.stop_on_defect_increase = spec.stop_on_defect_increase;
    return std::make_unique<MaeSolver>(std::move(problem));
}

/// One run on an existing solver; only the RunSettings fields of spec are used.
ResultRow execute(const MaeSolver& solver, const RunSpec& spec, const TestCase& tc)
{
    const auto start = std::chrono::steady_clock::now();
    ResultRow row;
    describe(spec, row);
    row.dofs = solver.problem().space->num_dofs();
    const RunSettings settings{spec.algorithm, spec.init, spec.a, spec.max_iters, spec.stop_on_defect_increase,
                               std::nullopt};
    const auto run = solver.run(settings, spec.record_history_errors ? &tc.exact : nullptr);
    row.iters = run.iterations();
    row.stop_reason = to_string(run.stop_reason);
    row.warnings = run.warnings;
    row.history = run.history;
    if (!run.history.empty()) row.kc_residual_inf = run.history.back().kc_residual_inf;
    row.smoothness_residual = smoothness_residual(run.final, 200, spec.seed);
    row.errors = error_norms(run.final, tc.exact, spec.grid);
    row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

ResultRow failed_row(const RunSpec& spec, const Error& e)
{
    ResultRow row;
    describe(spec, row);
    row.stop_reason = "failed";
    row.failure = e.what();
    if (const auto* aborted = dynamic_cast<const MaeAborted*>(&e)) row.history = aborted->history();
    return row;
}

} // namespace

ResultRow run_mae(const RunSpec& spec)
{
    const auto start = std::chrono::steady_clock::now();
    const auto& tc = find_case(spec.case_name);
    const auto solver = build_solver(spec, tc);
    auto row = execute(*solver, spec, tc);
    // Include assembly and factorization in the reported time.
    row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

ResultRow run_poisson(const RunSpec& spec)
{
    const auto start = std::chrono::steady_clock::now();
    const auto& tc = find_case(spec.case_name);
    ResultRow row;
    describe(spec, row);
    row.algorithm = "poisson";
    row.a = 0.0;
    row.init = "";
    const auto space = build_space(spec);
    row.dofs = space->num_dofs();
    SolveConfig cfg;
    cfg.mu = spec.mu;
    SolveReport report;
    const auto s = poisson_solve(space, tc.laplacian(), tc.g, row.dprime, cfg, &report);
    row.stop_reason = "solved";
    row.warnings = space->warnings;
    for (const auto& w : report.warnings) row.warnings.push_back(w);
    if (report.exceeds_eps1) {
        row.warnings.push_back("achieved ||Kc - f||_inf = " + format_number(report.kc_residual_inf)
                               + " exceeds eps1 = " + format_number(cfg.eps1));
    }
    row.kc_residual_inf = report.kc_residual_inf;
    row.smoothness_residual = smoothness_residual(s, 200, spec.seed);
    row.errors = error_norms(s, tc.exact, spec.grid);
    row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

StudyKind parse_study(const std::string& text)
{
    if (text == "a-sweep") return StudyKind::ASweep;
    if (text == "init-sweep") return StudyKind::InitSweep;
    if (text == "alg-compare") return StudyKind::AlgCompare;
    if (text == "refine") return StudyKind::Refine;
    throw ValidationError("study must be one of a-sweep, init-sweep, alg-compare, refine (got '" + text + "')");
}

std::string to_string(StudyKind k)
{
    switch (k) {
    case StudyKind::ASweep: return "a-sweep";
    case StudyKind::InitSweep: return "init-sweep";
    case StudyKind::AlgCompare: return "alg-compare";
    case StudyKind::Refine: return "refine";
    }
    return "unknown";
}

std::vector<ResultRow> study(const StudySpec& spec)
{
    std::vector<ResultRow> rows;
    const auto& tc = find_case(spec.base.case_name);

    if (spec.kind == StudyKind::Refine) {
        for (double h : spec.h_values) {
            RunSpec s = spec.base;
            s.domain.h = h;
            try {
                rows.push_back(run_mae(s));
            } catch (const Error& e) {
                rows.push_back(failed_row(s, e));
            }
            const auto n = rows.size();
            if (n >= 2 && rows[n - 1].failure.empty() && rows[n - 2].failure.empty()) {
                rows[n - 1].rate_l2 = convergence_rate(rows[n - 2].errors.l2, rows[n - 1].errors.l2);
                rows[n - 1].rate_h1 = convergence_rate(rows[n - 2].errors.h1, rows[n - 1].errors.h1);
            }
        }
        return rows;
    }

    // The remaining studies vary only per-run settings and share one factorization.
    std::vector<RunSpec> configs;
    switch (spec.kind) {
    case StudyKind::ASweep:
        for (double a : spec.a_values) {
            configs.push_back(spec.base);
            configs.back().a = a;
        }
        break;
    case StudyKind::InitSweep:
        for (double p : spec.p_values) {
            for (auto alg : {Algorithm::Alg1, Algorithm::Alg2}) {
                configs.push_back(spec.base);
                configs.back().init = InitialGuess::constant(p);
                configs.back().algorithm = alg;
            }
        }
        break;
    case StudyKind::AlgCompare:
        for (auto alg : {Algorithm::Alg1, Algorithm::Alg2}) {
            configs.push_back(spec.base);
            configs.back().algorithm = alg;
        }
        break;
    case StudyKind::Refine: break;
    }

    std::unique_ptr<MaeSolver> solver;
    try {
        solver = build_solver(spec.base, tc);
    } catch (const Error& e) {
        for (const auto& c : configs) rows.push_back(failed_row(c, e));
        return rows;
    }
    for (const auto& c : configs) {
        try {
            rows.push_back(execute(*solver, c, tc));
        } catch (const Error& e) {
            rows.push_back(failed_row(c, e));
        }
    }
    return rows;
}

std::string format_number(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

namespace {

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

std::string optional_number(double x) { return std::isnan(x) ? std::string() : format_number(x); }

nlohmann::json number_or_null(double x)
{
    if (!std::isfinite(x)) return nullptr;
    return x;
}

nlohmann::json history_json(const IterationRecord& r)
{
    nlohmann::json j = {
        {"iter", r.iter},
        {"defect_inf", number_or_null(r.defect_inf)},
        {"running_avg_min", number_or_null(r.running_avg_min)},
        {"laplacian_inf", number_or_null(r.laplacian_inf)},
        {"u_inf", number_or_null(r.u_inf)},
        {"kc_residual_inf", number_or_null(r.kc_residual_inf)},
        {"convexity",
         {{"min_trace", number_or_null(r.convexity.min_trace)},
          {"min_det", number_or_null(r.convexity.min_det)},
          {"min_eigenvalue", number_or_null(r.convexity.min_eigenvalue)},
          {"fraction_psd", number_or_null(r.convexity.fraction_psd)},
          {"amgm_margin", number_or_null(r.convexity.amgm_margin)},
          {"samples", r.convexity.samples}}},
    };
    if (r.errors) {
        j["errors"] = {{"l2", number_or_null(r.errors->l2)},
                       {"h1", number_or_null(r.errors->h1)},
                       {"linf", number_or_null(r.errors->linf)},
                       {"grid", r.errors->grid}};
    }
    j["rho_hat"] = r.rho_hat ? number_or_null(*r.rho_hat) : nlohmann::json(nullptr);
    return j;
}

} // namespace

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows)
{
    out << "case,domain,h,D,r,dprime,a,algorithm,iters,l2,h1,linf,rate_l2,rate_h1,runtime_s,stop_reason,init\n";
    for (const auto& r : rows) {
        const bool ok = r.failure.empty();
        out << csv_field(r.case_name) << ',' << csv_field(r.domain) << ',' << format_number(r.h) << ','
            << r.degree << ',' << r.smoothness << ',' << r.dprime << ',' << format_number(r.a) << ','
            << r.algorithm << ',' << r.iters << ',' << (ok ? format_number(r.errors.l2) : "") << ','
            << (ok ? format_number(r.errors.h1) : "") << ',' << (ok ? format_number(r.errors.linf) : "") << ','
            << optional_number(r.rate_l2) << ',' << optional_number(r.rate_h1) << ',' << format_number(r.runtime)
            << ',' << csv_field(r.stop_reason) << ',' << csv_field(r.init) << '\n';
    }
}

namespace {

nlohmann::json row_json(const ResultRow& r, bool with_history)
{
    nlohmann::json j = {
        {"case", r.case_name},
        {"domain", r.domain},
        {"h", r.h},
        {"D", r.degree},
        {"r", r.smoothness},
        {"dprime", r.dprime},
        {"a", r.a},
        {"mu", r.mu},
        {"algorithm", r.algorithm},
        {"init", r.init},
        {"iters", r.iters},
        {"dofs", r.dofs},
        {"l2", number_or_null(r.errors.l2)},
        {"h1", number_or_null(r.errors.h1)},
        {"linf", number_or_null(r.errors.linf)},
        {"grid", r.errors.grid},
        {"points_inside", r.errors.points_inside},
        {"rate_l2", number_or_null(r.rate_l2)},
        {"rate_h1", number_or_null(r.rate_h1)},
        {"kc_residual_inf", number_or_null(r.kc_residual_inf)},
        {"smoothness_residual", number_or_null(r.smoothness_residual)},
        {"runtime_s", r.runtime},
        {"stop_reason", r.stop_reason},
        {"defect_location", "interior collocation points"},
        {"warnings", r.warnings},
    };
    if (!r.failure.empty()) j["failure"] = r.failure;
    if (with_history) {
        nlohmann::json h = nlohmann::json::array();
        for (const auto& rec : r.history) h.push_back(history_json(rec));
        j["history"] = std::move(h);
    }
    return j;
}

} // namespace

void write_json(std::ostream& out, const std::vector<ResultRow>& rows, bool with_history)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) arr.push_back(row_json(r, with_history));
    out << arr.dump(2) << '\n';
}

void write_json(std::ostream& out, const ResultRow& row, bool with_history)
{
    out << row_json(row, with_history).dump(2) << '\n';
}

void write_history_csv(std::ostream& out, const ResultRow& row)
{
    out << "iter,defect_inf,running_avg_min,laplacian_inf,u_inf,kc_residual_inf,min_trace,min_det,"
           "min_eigenvalue,fraction_psd,rho_hat,l2,h1,linf\n";
    for (const auto& r : row.history) {
        out << r.iter << ',' << format_number(r.defect_inf) << ',' << format_number(r.running_avg_min) << ','
            << format_number(r.laplacian_inf) << ',' << format_number(r.u_inf) << ','
            << format_number(r.kc_residual_inf) << ',' << format_number(r.convexity.min_trace) << ','
            << format_number(r.convexity.min_det) << ',' << format_number(r.convexity.min_eigenvalue) << ','
            << format_number(r.convexity.fraction_psd) << ',' << (r.rho_hat ? format_number(*r.rho_hat) : "")
            << ',' << (r.errors ? format_number(r.errors->l2) : "") << ','
            << (r.errors ? format_number(r.errors->h1) : "") << ','
            << (r.errors ? format_number(r.errors->linf) : "") << '\n';
    }
}

} // namespace ma3d
