#pragma once

#include "ma3d/collocation.hpp"
#include "ma3d/norms.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ma3d {

/// Right-hand side of the initial Poisson solve: cbrt(27 f) or a constant p.
struct InitialGuess {
    enum class Kind { CubeRoot, Constant };
    Kind kind = Kind::CubeRoot;
    double p = 0.0;

    static InitialGuess cube_root() { return {}; }
    static InitialGuess constant(double p) { return {Kind::Constant, p}; }
    /// "cbrt" or "p=<value>".
    static InitialGuess parse(const std::string& text);
    std::string name() const;
};

enum class Algorithm { Alg1, Alg2 };
enum class StopReason { DefectIncrease, MaxIters, Converged };

std::string to_string(Algorithm a);
std::string to_string(StopReason r);
Algorithm parse_algorithm(const std::string& text);

/// det D^2 u = f in the domain, u = g on the boundary.
struct MaeProblem {
    std::shared_ptr<const SplineSpace> space;
    ScalarField f;
    ScalarField g;
    double a = 27.0;
    int dprime = 0;  // 0 selects degree + 1
    int max_iters = 100;
    InitialGuess initial;
    SolveConfig ls;
    double rho_A = 1.0;    // constant A of the rho diagnostic
    int history_grid = 21; // lattice for per-iteration errors (needs an exact solution)
    /// When false the run always performs max_iters steps (fixed-budget studies).
    bool stop_on_defect_increase = true;

    int collocation_degree() const { return dprime > 0 ? dprime : space->degree + 1; }
    /// Throws ValidationError on a bad configuration; returns soft warnings.
    std::vector<std::string> validate() const;
};

struct ConvexityReport {
    double min_trace = 0.0;
    double min_det = 0.0;
    double min_eigenvalue = 0.0;
    double fraction_psd = 0.0;
    /// min over PSD samples of (trace^3/27 - det) / (1 + |trace|^3); nonnegative by AM-GM.
    double amgm_margin = 0.0;
    long samples = 0;
};

struct IterationRecord {
    int iter = 0;
    double defect_inf = 0.0;        // max |f - det D^2 u_k| over interior collocation points
    double running_avg_min = 0.0;   // min over points of mean_{j<=k} (f - det D^2 u_j)
    double laplacian_inf = 0.0;
    double u_inf = 0.0;
    double kc_residual_inf = 0.0;   // feasibility of the Poisson solve producing u_k
    ConvexityReport convexity;
    std::optional<ErrorReport> errors;
    std::optional<double> rho_hat;
};

struct MaeRun {
    Spline final;
    Algorithm algorithm = Algorithm::Alg1;
    std::vector<IterationRecord> history;  // accepted iterates, history[k] describes u_k
    StopReason stop_reason = StopReason::MaxIters;
    std::vector<std::string> warnings;
    double runtime = 0.0;

    int iterations() const { return history.empty() ? 0 : history.back().iter; }
};

/// Thrown when a Poisson solve fails mid-run; carries the history so far.
class MaeAborted : public SolverError {
public:
    MaeAborted(const std::string& what, std::vector<IterationRecord> history)
        : SolverError(what), history_(std::move(history)) {}
    const std::vector<IterationRecord>& history() const noexcept { return history_; }

private:
    std::vector<IterationRecord> history_;
};

/// Values of an iterate at the interior collocation points.
struct PointValues {
    Eigen::VectorXd laplacian;
    Eigen::VectorXd det;
    std::vector<Mat3> hessian;
    double u_inf = 0.0;
};

/// Settings that may change between runs sharing one factorization.
struct RunSettings {
    Algorithm algorithm = Algorithm::Alg2;
    InitialGuess initial;
    double a = 27.0;
    int max_iters = 100;
    bool stop_on_defect_increase = true;
    /// Coefficients of u_0; replaces the initial Poisson solve when set.
    std::optional<Eigen::VectorXd> start;
};

/// Collocation system, factorization and per-point data shared by all
/// iterations of one problem. The stacked least-squares matrix is factored
/// once; every Picard step is a solve with a new interior right-hand side.
class MaeSolver {
public:
    explicit MaeSolver(MaeProblem problem);

    const MaeProblem& problem() const noexcept { return problem_; }
    const CollocationSystem& system() const noexcept { return sys_; }
    const LeastSquaresSolver& least_squares() const noexcept { return *ls_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    Eigen::VectorXd initial(SolveReport* report = nullptr) const;
    Eigen::VectorXd initial(const InitialGuess& guess, SolveReport* report = nullptr) const;
    PointValues evaluate(const Eigen::VectorXd& c) const;
    /// realcbrt((Laplacian)^3 + a (f - det)) at the interior points.
    Eigen::VectorXd rhs(const PointValues& v) const { return rhs(v, problem_.a); }
    Eigen::VectorXd rhs(const PointValues& v, double a) const;
    /// One Poisson solve with the iteration right-hand side of c.
    Eigen::VectorXd picard(const Eigen::VectorXd& c, SolveReport* report = nullptr) const;
    double defect(const PointValues& v) const;

    /// Settings of the problem with the given algorithm.
    RunSettings settings(Algorithm alg) const;
    MaeRun run(Algorithm alg, const ExactSolution* exact = nullptr) const;
    MaeRun run(const RunSettings& settings, const ExactSolution* exact = nullptr) const;

private:
    MaeProblem problem_;
    CollocationSystem sys_;
    std::unique_ptr<LeastSquaresSolver> ls_;
    std::vector<std::string> warnings_;
};

Spline initial_guess(const MaeProblem& problem);

/// Iteration right-hand side as a field: realcbrt((Lap u)^3 + a (f - det D^2 u)).
ScalarField mae_rhs(const Spline& u, ScalarField f, double a);

MaeRun run_alg1(const MaeProblem& problem, const ExactSolution* exact = nullptr);
MaeRun run_alg2(const MaeProblem& problem, const ExactSolution* exact = nullptr);

ConvexityReport convexity_report(const std::vector<Mat3>& hessians);
ConvexityReport convexity_report(const Spline& s, const std::vector<CollocationPoint>& samples);

/// Contraction-factor estimate for the Picard map at u_k, with sup norms
/// taken over the sample points and the cofactor term maximised over
/// t in {0, 1/2, 1}. Diagnostic only.
double rho_diagnostic(const Spline& uk, const ExactSolution& exact, const ScalarField& f, double A,
                      const std::vector<CollocationPoint>& samples);

} // namespace ma3d
