#include "ma3d/mae.hpp"

#include "ma3d/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>

namespace ma3d {

InitialGuess InitialGuess::parse(const std::string& text)
{
    if (text == "cbrt") return cube_root();
    if (text.rfind("p=", 0) == 0) {
        double p = 0.0;
        const char* first = text.data() + 2;
        const char* last = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(first, last, p);
        if (ec == std::errc() && ptr == last && first != last && std::isfinite(p)) return constant(p);
    }
    throw ValidationError("initial guess must be 'cbrt' or 'p=<number>' (got '" + text + "')");
}

namespace {

std::string shortest(double x)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

} // namespace

std::string InitialGuess::name() const
{
    if (kind == Kind::CubeRoot) return "cbrt";
    return "p=" + shortest(p);
}

std::string to_string(Algorithm a) { return a == Algorithm::Alg1 ? "alg1" : "alg2"; }

std::string to_string(StopReason r)
{
    switch (r) {
    case StopReason::DefectIncrease: return "defect-increase";
    case StopReason::MaxIters: return "max-iters";
    case StopReason::Converged: return "converged";
    }
    return "unknown";
}

Algorithm parse_algorithm(const std::string& text)
{
    if (text == "alg1") return Algorithm::Alg1;
    if (text == "alg2") return Algorithm::Alg2;
    throw ValidationError("algorithm must be alg1 or alg2 (got '" + text + "')");
}

namespace {

std::string large_a_warning(double a)
{
    return "a = " + shortest(a) + " exceeds 27; the AM-GM admissibility bound no longer applies";
}

} // namespace

std::vector<std::string> MaeProblem::validate() const
{
    if (!space) throw ValidationError("Monge-Ampere problem has no spline space");
    if (!f || !g) throw ValidationError("Monge-Ampere problem needs both f and g");
    if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("iteration parameter a must be positive");
    if (max_iters < 0) throw ValidationError("max_iters must be nonnegative");
    if (collocation_degree() <= space->degree) throw ValidationError("collocation degree must exceed spline degree");
    if (!(ls.mu > 0.0)) throw ValidationError("interior weight mu must be positive");
    if (history_grid < 2) throw ValidationError("history grid needs N >= 2");
    if (!(rho_A > 0.0)) throw ValidationError("rho constant A must be positive");
    std::vector<std::string> warnings;
    if (a > 27.0) warnings.push_back(large_a_warning(a));
    return warnings;
}

MaeSolver::MaeSolver(MaeProblem problem) : problem_(std::move(problem))
{
    problem_.validate();
    warnings_ = problem_.space->warnings;
    sys_ = assemble(*problem_.space, problem_.collocation_degree(), problem_.f, problem_.g);
    ls_ = std::make_unique<LeastSquaresSolver>(sys_, problem_.space->H, problem_.ls);
}

Eigen::VectorXd MaeSolver::initial(SolveReport* report) const { return initial(problem_.initial, report); }

Eigen::VectorXd MaeSolver::initial(const InitialGuess& guess, SolveReport* report) const
{
    Eigen::VectorXd rhs(sys_.fvec.size());
    for (Eigen::Index i = 0; i < rhs.size(); ++i) {
        rhs[i] = guess.kind == InitialGuess::Kind::CubeRoot ? realcbrt(27.0 * sys_.fvec[i]) : guess.p;
    }
    return ls_->solve(rhs, sys_.Gvec, report);
}

PointValues MaeSolver::evaluate(const Eigen::VectorXd& c) const
{
    const auto& space = *problem_.space;
    const auto& pts = sys_.points.interior;
    const int nb = space.block_size();
    PointValues v;
    v.laplacian.resize(static_cast<Eigen::Index>(pts.size()));
    v.det.resize(static_cast<Eigen::Index>(pts.size()));
    v.hessian.resize(pts.size());
    std::vector<double> absval(pts.size());
    parallel_for(pts.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const auto& p = pts[i];
            const std::span<const double> block(c.data() + space.dof_offset(p.tet), static_cast<std::size_t>(nb));
            const auto d = eval_polynomial(block, space.degree, space.mesh->frame(p.tet), p.bary);
            v.hessian[i] = d.hessian;
            v.laplacian[static_cast<Eigen::Index>(i)] = d.hessian.trace();
            v.det[static_cast<Eigen::Index>(i)] = hessian_det(d.hessian);
            absval[i] = std::abs(d.value);
        }
    });
    for (double x : absval) v.u_inf = std::max(v.u_inf, x);
    return v;
}

Eigen::VectorXd MaeSolver::rhs(const PointValues& v, double a) const
{
    Eigen::VectorXd r(v.det.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double lap = v.laplacian[i];
        r[i] = realcbrt(lap * lap * lap + a * (sys_.fvec[i] - v.det[i]));
    }
    return r;
}

Eigen::VectorXd MaeSolver::picard(const Eigen::VectorXd& c, SolveReport* report) const
{
    return ls_->solve(rhs(evaluate(c)), sys_.Gvec, report);
}

double MaeSolver::defect(const PointValues& v) const
{
    if (v.det.size() == 0) return 0.0;
    return (sys_.fvec - v.det).lpNorm<Eigen::Infinity>();
}

RunSettings MaeSolver::settings(Algorithm alg) const
{
    return {alg, problem_.initial, problem_.a, problem_.max_iters, problem_.stop_on_defect_increase, std::nullopt};
}

MaeRun MaeSolver::run(Algorithm alg, const ExactSolution* exact) const { return run(settings(alg), exact); }

MaeRun MaeSolver::run(const RunSettings& cfg, const ExactSolution* exact) const
{
    if (!(cfg.a > 0.0) || !std::isfinite(cfg.a)) throw ValidationError("iteration parameter a must be positive");
    if (cfg.max_iters < 0) throw ValidationError("max_iters must be nonnegative");
    const auto start = std::chrono::steady_clock::now();
    const auto& space_ptr = problem_.space;
    std::vector<IterationRecord> history;
    std::vector<std::string> warnings = warnings_;
    if (cfg.a > 27.0) warnings.push_back(large_a_warning(cfg.a));
    const double f_inf = sys_.fvec.size() ? sys_.fvec.lpNorm<Eigen::Infinity>() : 0.0;
    bool eps1_warned = false;

    auto solve = [&](auto&& fn, SolveReport& rep) -> Eigen::VectorXd {
        try {
            Eigen::VectorXd c = fn(rep);
            if (!c.allFinite()) throw SolverError("Poisson solve produced non-finite coefficients");
            for (const auto& w : rep.warnings) {
                if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
            }
            if (rep.exceeds_eps1 && !eps1_warned) {
                warnings.push_back("achieved ||Kc - f||_inf exceeds eps1 = " + shortest(problem_.ls.eps1));
                eps1_warned = true;
            }
            return c;
        } catch (const MaeAborted&) {
            throw;
        } catch (const Error& e) {
            throw MaeAborted(e.what(), history);
        }
    };

    Eigen::VectorXd running_sum;
    auto record = [&](int k, const Eigen::VectorXd& c, const PointValues& v, const SolveReport& rep) {
        IterationRecord r;
        r.iter = k;
        r.defect_inf = defect(v);
        if (running_sum.size() == 0) running_sum = Eigen::VectorXd::Zero(v.det.size());
        running_sum += sys_.fvec - v.det;
        r.running_avg_min = running_sum.size() ? running_sum.minCoeff() / (k + 1) : 0.0;
        r.laplacian_inf = v.laplacian.size() ? v.laplacian.lpNorm<Eigen::Infinity>() : 0.0;
        r.u_inf = v.u_inf;
        r.kc_residual_inf = rep.kc_residual_inf;
        r.convexity = convexity_report(v.hessian);
        if (exact) {
            const Spline s(space_ptr, c);
            r.errors = error_norms(s, *exact, problem_.history_grid);
            r.rho_hat = rho_diagnostic(s, *exact, problem_.f, problem_.rho_A, sys_.points.interior);
        }
        history.push_back(std::move(r));
    };

    SolveReport rep;
    Eigen::VectorXd c;
    if (cfg.start) {
        if (cfg.start->size() != problem_.space->num_dofs()) {
            throw ValidationError("start vector length does not match the spline space");
        }
        c = *cfg.start;
        if (sys_.fvec.size()) rep.kc_residual_inf = (sys_.K * c - sys_.fvec).lpNorm<Eigen::Infinity>();
    } else {
        c = solve([&](SolveReport& r) { return initial(cfg.initial, &r); }, rep);
    }
    PointValues v = evaluate(c);
    record(0, c, v, rep);
    double d = history.back().defect_inf;

    StopReason reason = StopReason::MaxIters;
    for (int k = 1; k <= cfg.max_iters; ++k) {
        SolveReport step;
        const Eigen::VectorXd target = rhs(v, cfg.a);
        Eigen::VectorXd next = solve([&](SolveReport& r) { return ls_->solve(target, sys_.Gvec, &r); }, step);
        if (cfg.algorithm == Algorithm::Alg2) next = 0.5 * next + 0.5 * c;
        PointValues nv = evaluate(next);
        const double nd = defect(nv);
        if (cfg.stop_on_defect_increase && !(nd <= d)) {
            reason = StopReason::DefectIncrease;
            break;
        }
        const double change = (next - c).lpNorm<Eigen::Infinity>();
        c = std::move(next);
        v = std::move(nv);
        d = nd;
        record(k, c, v, step);
        if (d <= 1e-13 * (1.0 + f_inf) || change <= 1e-12 * (1.0 + c.lpNorm<Eigen::Infinity>())) {
            reason = StopReason::Converged;
            break;
        }
    }

    MaeRun out{Spline(space_ptr, std::move(c)), cfg.algorithm, std::move(history), reason, std::move(warnings), 0.0};
    out.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

Spline initial_guess(const MaeProblem& problem)
{
    MaeSolver solver(problem);
    return Spline(problem.space, solver.initial());
}

ScalarField mae_rhs(const Spline& u, ScalarField f, double a)
{
    return [u, f = std::move(f), a](const Vec3& p) {
        const auto d = u.eval(p);
        const double lap = d.hessian.trace();
        return realcbrt(lap * lap * lap + a * (f(p) - hessian_det(d.hessian)));
    };
}

MaeRun run_alg1(const MaeProblem& problem, const ExactSolution* exact)
{
    return MaeSolver(problem).run(Algorithm::Alg1, exact);
}

MaeRun run_alg2(const MaeProblem& problem, const ExactSolution* exact)
{
    return MaeSolver(problem).run(Algorithm::Alg2, exact);
}

ConvexityReport convexity_report(const std::vector<Mat3>& hessians)
{
    ConvexityReport r;
    r.samples = static_cast<long>(hessians.size());
    if (hessians.empty()) return r;
    constexpr double inf = std::numeric_limits<double>::infinity();
    r.min_trace = r.min_det = r.min_eigenvalue = r.amgm_margin = inf;
    long psd = 0;
    for (const auto& h : hessians) {
        const double tr = h.trace();
        const double det = hessian_det(h);
        const auto ev = symmetric_eigenvalues(h);
        r.min_trace = std::min(r.min_trace, tr);
        r.min_det = std::min(r.min_det, det);
        r.min_eigenvalue = std::min(r.min_eigenvalue, ev[2]);
        if (ev[2] >= -1e-12 * std::max(1.0, std::abs(ev[0]))) {
            ++psd;
            r.amgm_margin = std::min(r.amgm_margin, (tr * tr * tr / 27.0 - det) / (1.0 + std::abs(tr * tr * tr)));
        }
    }
    r.fraction_psd = static_cast<double>(psd) / static_cast<double>(hessians.size());
    if (psd == 0) r.amgm_margin = 0.0;
    return r;
}

ConvexityReport convexity_report(const Spline& s, const std::vector<CollocationPoint>& samples)
{
    std::vector<Mat3> h(samples.size());
    parallel_for(samples.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) h[i] = s.eval(samples[i].tet, samples[i].bary).hessian;
    });
    return convexity_report(h);
}

namespace {

double row_sum_norm(const Mat3& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

} // namespace

double rho_diagnostic(const Spline& uk, const ExactSolution& exact, const ScalarField& f, double A,
                      const std::vector<CollocationPoint>& samples)
{
    std::vector<double> first(samples.size()), second(samples.size());
    parallel_for(samples.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const auto& p = samples[i];
            const Mat3 hk = uk.eval(p.tet, p.bary).hessian;
            const Mat3 hs = exact.hess(p.x);
            const double fx = f(p.x);
            const double lk = hk.trace(), ls = hs.trace();
            const double wk = realcbrt(lk * lk * lk + 27.0 * (fx - hessian_det(hk)));
            const double ws = realcbrt(ls * ls * ls + 27.0 * (fx - hessian_det(hs)));
            const double den = wk * wk + wk * ws + ws * ws;
            first[i] = std::abs((lk * lk + lk * ls + ls * ls) / den);
            double worst = 0.0;
            for (double t : {0.0, 0.5, 1.0}) {
                const double n = row_sum_norm(((1.0 - t) * hk + t * hs) / den);
                worst = std::max(worst, n * n);
            }
            second[i] = worst;
        }
    });
    double t1 = 0.0, t2 = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        t1 = std::max(t1, first[i]);
        t2 = std::max(t2, second[i]);
    }
    return t1 + 81.0 / A * t2;
}

} // namespace ma3d
