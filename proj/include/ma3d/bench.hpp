#pragma once

#include "ma3d/mae.hpp"
#include "ma3d/norms.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace ma3d {

/// Exact solution of det D^2 u = f with u = g on the boundary.
struct TestCase {
    std::string name;
    std::vector<std::string> aliases;
    ExactSolution exact;
    ScalarField f;   // det D^2 u, derived by hand
    ScalarField g;   // u itself
    bool singular = false;
    std::string note;

    /// Laplacian of u, the right-hand side for Poisson runs.
    ScalarField laplacian() const;
};

/// The nine Monge-Ampere test cases u3ds1 .. u3ds9.
const std::vector<TestCase>& catalog();
/// Catalog cases plus auxiliary ones (currently "quadratic": x^2 + y^2 + z^2).
const std::vector<TestCase>& all_cases();
/// Looks up by name or alias; throws ValidationError listing the valid names.
const TestCase& find_case(const std::string& name);

/// log2(coarse / fine); zero when both are equal.
double convergence_rate(double coarse, double fine);

struct RateStep {
    double l2 = 0.0;
    double h1 = 0.0;
    double linf = 0.0;
};

/// Rates between consecutive refinement levels (size = levels - 1). Needs >= 2 levels.
std::vector<RateStep> rate_table(const std::vector<ErrorReport>& levels);

/// One solver configuration.
struct RunSpec {
    DomainSpec domain;
    std::string case_name = "u3ds3";
    int degree = 5;
    int smoothness = 1;
    int dprime = 0;  // 0 selects degree + 1
    double a = 27.0;
    double mu = 1e4;
    int max_iters = 100;
    int grid = 51;
    int history_grid = 21;
    bool record_history_errors = true;
    bool stop_on_defect_increase = true;
    std::uint64_t seed = 1;  // smoothness-residual sampling
    Algorithm algorithm = Algorithm::Alg2;
    InitialGuess init;
};

struct ResultRow {
    std::string case_name;
    std::string domain;
    double h = 0.0;
    int degree = 0;
    int smoothness = 0;
    int dprime = 0;
    double a = 0.0;
    double mu = 0.0;
    std::string algorithm;  // alg1, alg2 or poisson
    std::string init;
    int iters = 0;
    long dofs = 0;
    ErrorReport errors;
    double rate_l2 = std::numeric_limits<double>::quiet_NaN();
    double rate_h1 = std::numeric_limits<double>::quiet_NaN();
    double runtime = 0.0;
    double kc_residual_inf = std::numeric_limits<double>::quiet_NaN();      // of the final solve
    double smoothness_residual = std::numeric_limits<double>::quiet_NaN();  // sampled C^r jump
    std::string stop_reason;
    std::string failure;  // empty on success
    std::vector<std::string> warnings;
    std::vector<IterationRecord> history;
};

/// Builds mesh and space, runs the Monge-Ampere solver and measures errors.
ResultRow run_mae(const RunSpec& spec);
/// Poisson collocation solve of Lap u = Lap(u_case) with the case's boundary data.
ResultRow run_poisson(const RunSpec& spec);

enum class StudyKind { ASweep, InitSweep, AlgCompare, Refine };
StudyKind parse_study(const std::string& text);
std::string to_string(StudyKind k);

struct StudySpec {
    StudyKind kind = StudyKind::Refine;
    RunSpec base;
    std::vector<double> a_values{6.0, 9.0, 27.0};
    std::vector<double> p_values{12.6, 15.1, 16.4, 17.1, 17.7, 26.0, 26.5, 27.0, 27.5};
    std::vector<double> h_values{1.0, 0.5};
};

/// Runs a batch. A failing configuration yields a row with `failure` set and
/// the batch continues. Refine rows carry rates against the previous level.
std::vector<ResultRow> study(const StudySpec& spec);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double x);

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_json(std::ostream& out, const std::vector<ResultRow>& rows, bool with_history = true);
/// A single row as a JSON object.
void write_json(std::ostream& out, const ResultRow& row, bool with_history = true);
/// Per-iteration series (defect, rho, convexity) as CSV.
void write_history_csv(std::ostream& out, const ResultRow& row);

} // namespace ma3d
