#include "ma3d/collocation.hpp"
#include "ma3d/smoothness.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace ma3d;

namespace {

std::shared_ptr<const SplineSpace> cube_space(double h, int degree = 5, int r = 1)
{
    return assemble_smoothness(std::make_shared<const TetMesh>(build_box_grid(Box{}, h)), degree, r);
}

double max_error(const Spline& s, const ScalarField& u, int samples = 500)
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int n = 0; n < samples; ++n) {
        const Vec3 p(unit(rng), unit(rng), unit(rng));
        worst = std::max(worst, std::abs(s.value(p) - u(p)));
    }
    return worst;
}

bool on_cube_surface(const Vec3& x)
{
    for (int i = 0; i < 3; ++i)
        if (std::abs(x(i)) < 1e-12 || std::abs(x(i) - 1.0) < 1e-12) return true;
    return false;
}

} // namespace

TEST(CollocationPoints, LatticeCounts)
{
    for (double h : {1.0, 0.5}) {
        for (int dp : {6, 7}) {
            const TetMesh mesh = build_box_grid(Box{}, h);
            const auto pts = collocation_points(mesh, dp);
            const long m = std::lround(dp / h);
            EXPECT_EQ(static_cast<long>(pts.interior.size()), (m - 1) * (m - 1) * (m - 1));
            EXPECT_EQ(static_cast<long>(pts.interior.size() + pts.boundary.size()), (m + 1) * (m + 1) * (m + 1));
            std::set<std::array<long, 3>> seen;
            auto key = [&](const Vec3& x) {
                return std::array<long, 3>{std::lround(x.x() * m), std::lround(x.y() * m), std::lround(x.z() * m)};
            };
            for (const auto& p : pts.interior) {
                EXPECT_FALSE(on_cube_surface(p.x));
                EXPECT_TRUE(seen.insert(key(p.x)).second);
                EXPECT_LT((mesh.frame(p.tet).point(p.bary) - p.x).norm(), 1e-13);
                EXPECT_EQ(mesh.locate(p.x)->tet, p.tet);
            }
            for (const auto& p : pts.boundary) {
                EXPECT_TRUE(on_cube_surface(p.x));
                EXPECT_TRUE(seen.insert(key(p.x)).second);
            }
        }
    }
}

TEST(CollocationPoints, Deterministic)
{
    const TetMesh mesh = build_letter_domain(DomainKind::LetterL, 0.5, 1.0);
    const auto a = collocation_points(mesh, 6);
    const auto b = collocation_points(mesh, 6);
    ASSERT_EQ(a.interior.size(), b.interior.size());
    for (std::size_t n = 0; n < a.interior.size(); ++n) EXPECT_EQ(a.interior[n].x, b.interior[n].x);
}

TEST(Assemble, RejectsLowCollocationDegree)
{
    const auto space = cube_space(1.0);
    auto one = [](const Vec3&) { return 1.0; };
    EXPECT_THROW(assemble(*space, 5, one, one), ValidationError);
    EXPECT_THROW(assemble(*space, 3, one, one), ValidationError);
}

TEST(Assemble, RowsMatchBasisEvaluation)
{
    const auto space = cube_space(0.5);
    auto f = [](const Vec3& x) { return x.x() + 2.0 * x.y(); };
    auto g = [](const Vec3& x) { return x.z(); };
    const auto sys = assemble(*space, 6, f, g);
    EXPECT_EQ(sys.K.rows(), static_cast<long>(sys.points.interior.size()));
    EXPECT_EQ(sys.Bmat.rows(), static_cast<long>(sys.points.boundary.size()));
    const Eigen::VectorXd c = interpolate(*space, [](const Vec3& x) { return x.x() * x.x() * x.y() + x.z(); });
    const Eigen::VectorXd lap = sys.K * c;
    const Eigen::VectorXd val = sys.Bmat * c;
    for (std::size_t n = 0; n < sys.points.interior.size(); ++n) {
        const Vec3& x = sys.points.interior[n].x;
        EXPECT_NEAR(lap(static_cast<long>(n)), 2.0 * x.y(), 1e-9);
        EXPECT_NEAR(sys.fvec(static_cast<long>(n)), f(x), 1e-15);
    }
    for (std::size_t n = 0; n < sys.points.boundary.size(); ++n) {
        const Vec3& x = sys.points.boundary[n].x;
        EXPECT_NEAR(val(static_cast<long>(n)), x.x() * x.x() * x.y() + x.z(), 1e-12);
        EXPECT_NEAR(sys.Gvec(static_cast<long>(n)), x.z(), 1e-15);
    }
}

TEST(PoissonSolve, QuadraticIsExact)
{
    const auto space = cube_space(0.5);
    auto u = [](const Vec3& x) { return x.squaredNorm(); };
    SolveReport rep;
    const Spline s = poisson_solve(space, [](const Vec3&) { return 6.0; }, u, 6, {}, &rep);
    EXPECT_LT(rep.kc_residual_inf, 1e-10);
    EXPECT_FALSE(rep.exceeds_eps1);
    EXPECT_LT(max_error(s, u), 1e-9);
}

TEST(PoissonSolve, ConcaveQuadraticIsExact)
{
    const auto space = cube_space(1.0);
    auto u = [](const Vec3& x) { return -x.squaredNorm(); };
    SolveReport rep;
    const Spline s = poisson_solve(space, [](const Vec3&) { return -6.0; }, u, 6, {}, &rep);
    EXPECT_LT(rep.kc_residual_inf, 1e-10);
    EXPECT_LT(max_error(s, u), 1e-9);
}

TEST(PoissonSolve, DegreeFivePolynomialIsExact)
{
    const auto space = cube_space(0.5);
    auto u = [](const Vec3& x) { return std::pow(x.x(), 3) * x.y() * x.z() - x.y() * x.y() * x.z() + 0.5; };
    auto f = [](const Vec3& x) { return 6.0 * x.x() * x.y() * x.z() - 2.0 * x.z(); };
    const Spline s = poisson_solve(space, f, u, 6);
    EXPECT_LT(max_error(s, u), 1e-9);
}

TEST(PoissonSolve, ZeroDataGivesZero)
{
    const auto space = cube_space(0.5);
    auto zero = [](const Vec3&) { return 0.0; };
    const Spline s = poisson_solve(space, zero, zero, 6);
    EXPECT_LT(s.coeffs().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PoissonSolve, LetterDomainPolynomial)
{
    const auto mesh = std::make_shared<const TetMesh>(build_letter_domain(DomainKind::LetterL, 0.5, 1.0));
    const auto space = assemble_smoothness(mesh, 5, 1);
    auto u = [](const Vec3& x) { return x.x() * x.x() - 2.0 * x.y() * x.z() + x.z() * x.z() * x.z(); };
    const Spline s = poisson_solve(space, [](const Vec3& x) { return 2.0 + 6.0 * x.z(); }, u, 6);
    for (const Vec3 p : {Vec3(0.5, 0.5, 0.5), Vec3(1.5, 0.2, 0.9), Vec3(0.3, 1.7, 0.1)})
        EXPECT_NEAR(s.value(p), u(p), 1e-9);
}

TEST(LeastSquares, NormalEquationOptimality)
{
    const auto space = cube_space(0.5);
    auto u = [](const Vec3& x) { return std::exp(x.x() + 2.0 * x.y()) * std::cos(x.z()); };
    auto f = [&](const Vec3& x) { return 4.0 * u(x); };
    const auto sys = assemble(*space, 6, f, u);
    const LeastSquaresSolver ls(sys, space->H);
    SolveReport rep;
    const Eigen::VectorXd c = ls.solve(sys.fvec, sys.Gvec, &rep);
    EXPECT_LT(rep.normal_residual, 1e-8);
    // independent check with the unscaled stacked system
    const Eigen::VectorXd b = ls.stacked_rhs(sys.fvec, sys.Gvec);
    const Eigen::VectorXd ne = ls.stacked().transpose() * (ls.stacked() * c - b);
    EXPECT_LT(ne.lpNorm<Eigen::Infinity>() / (ls.stacked().transpose() * b).lpNorm<Eigen::Infinity>(), 1e-8);
    EXPECT_EQ(rep.columns, space->num_dofs());
    EXPECT_LT(max_error(Spline(space, c), u), 1e-3);
}

TEST(LeastSquares, FactorReuseMatchesFreshSolve)
{
    const auto space = cube_space(1.0);
    auto g = [](const Vec3& x) { return std::sin(x.x()) + x.y(); };
    auto f1 = [](const Vec3& x) { return 1.0 + x.x(); };
    auto f2 = [](const Vec3& x) { return std::cos(3.0 * x.z()); };
    const auto sys1 = assemble(*space, 6, f1, g);
    const auto sys2 = assemble(*space, 6, f2, g);
    const LeastSquaresSolver ls(sys1, space->H);
    const Eigen::VectorXd a = ls.solve(sys2.fvec, sys2.Gvec);
    const Eigen::VectorXd b = solve_ls(sys2, space->H, {});
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + b.cwiseAbs().maxCoeff()));
    EXPECT_THROW(ls.solve(Eigen::VectorXd::Zero(3), sys2.Gvec), ValidationError);
}

// Raising mu can only lower the weighted 2-norm of K c - f. The sup norm is
// reported as well; on inconsistent data it may drift by a few ppm.
TEST(LeastSquares, InteriorResidualShrinksAsMuGrows)
{
    const auto space = cube_space(1.0);
    auto u = [](const Vec3& x) { return std::exp(x.squaredNorm() / 2.0); };
    auto f = [&](const Vec3& x) { return (3.0 + x.squaredNorm()) * u(x); };
    const auto sys = assemble(*space, 6, f, u);
    double prev2 = std::numeric_limits<double>::infinity();
    double prev_inf = prev2;
    for (double mu : {1e2, 1e4, 1e6}) {
        SolveConfig cfg;
        cfg.mu = mu;
        SolveReport rep;
        const Eigen::VectorXd c = solve_ls(sys, space->H, cfg, &rep);
        const double r2 = (sys.K * c - sys.fvec).norm();
        EXPECT_LE(r2, prev2 * (1.0 + 1e-10)) << "mu " << mu;
        EXPECT_LE(rep.kc_residual_inf, prev_inf * (1.0 + 1e-4)) << "mu " << mu;
        prev2 = r2;
        prev_inf = rep.kc_residual_inf;
    }
}

TEST(LeastSquares, ConsistentDataIndependentOfMu)
{
    const auto space = cube_space(0.5);
    auto u = [](const Vec3& x) { return x.x() * x.y() * x.z() + x.x() * x.x(); };
    const auto sys = assemble(*space, 6, [](const Vec3&) { return 2.0; }, u);
    SolveConfig lo, hi;
    lo.mu = 1e4;
    hi.mu = 1e6;
    SolveReport ra, rb;
    const Eigen::VectorXd a = solve_ls(sys, space->H, lo, &ra);
    const Eigen::VectorXd b = solve_ls(sys, space->H, hi, &rb);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LE(ra.kc_residual_inf, 1e-6);
    EXPECT_LE(rb.kc_residual_inf, 1e-6);
}

TEST(LeastSquares, RejectsNonPositiveMu)
{
    const auto space = cube_space(1.0);
    auto one = [](const Vec3&) { return 1.0; };
    const auto sys = assemble(*space, 6, one, one);
    SolveConfig cfg;
    cfg.mu = 0.0;
    EXPECT_THROW(LeastSquaresSolver(sys, space->H, cfg), ValidationError);
}
