#include "ma3d/smoothness.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ma3d;
using ma3d::testing::face_jump;
using ma3d::testing::project_to_kernel;

namespace {

std::shared_ptr<const TetMesh> cube_mesh(double h)
{
    return std::make_shared<const TetMesh>(build_box_grid(Box{}, h));
}

} // namespace

class SmoothnessSweep : public ::testing::TestWithParam<std::tuple<int, int>> {};

TEST_P(SmoothnessSweep, KernelOfHIsCr)
{
    const auto [degree, r] = GetParam();
    const auto space = assemble_smoothness(cube_mesh(1.0), degree, r);
    EXPECT_EQ(space->H.cols(), space->num_dofs());
    std::mt19937_64 rng(static_cast<unsigned>(97 * degree + r));
    std::normal_distribution<double> g;
    Eigen::VectorXd c(space->num_dofs());
    for (auto& x : c.reshaped()) x = g(rng);

    const Spline rough(space, c);
    EXPECT_GT(face_jump(rough, 0, rng), 1e-3);
    EXPECT_GT(smoothness_residual(rough), 1e-3);

    const Eigen::VectorXd p = project_to_kernel(space->H, c);
    ASSERT_GT(p.norm(), 1e-3 * c.norm()) << "kernel should be nontrivial";
    EXPECT_LT((space->H * p).cwiseAbs().maxCoeff(), 1e-10);
    const Spline smooth(space, p);
    const double scale = 1.0 + p.cwiseAbs().maxCoeff();
    EXPECT_LT(face_jump(smooth, r, rng), 1e-9 * scale * std::pow(degree, 2 * r));
    EXPECT_LT(smoothness_residual(smooth, 500, 3), 1e-9 * scale * std::pow(degree, 2 * r));
}

TEST_P(SmoothnessSweep, GlobalPolynomialSatisfiesConditions)
{
    const auto [degree, r] = GetParam();
    const auto space = assemble_smoothness(cube_mesh(0.5), degree, r);
    auto u = [d = degree](const Vec3& x) { return std::pow(x.x() + 0.5 * x.y() - x.z() + 0.3, d) + x.y() * x.z(); };
    const Eigen::VectorXd c = interpolate(*space, u);
    EXPECT_LT((space->H * c).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + c.cwiseAbs().maxCoeff()));
    const Spline s(space, c);
    std::mt19937_64 rng(1);
    EXPECT_LT(face_jump(s, r, rng), 1e-12 * (1.0 + c.cwiseAbs().maxCoeff()) * std::pow(degree, 2 * r));
    EXPECT_NEAR(s.value(Vec3(0.3, 0.6, 0.2)), u(Vec3(0.3, 0.6, 0.2)), 1e-11);
}

INSTANTIATE_TEST_SUITE_P(Degrees5To9, SmoothnessSweep,
                         ::testing::Combine(::testing::Range(5, 10), ::testing::Values(1, 2)));

TEST(Smoothness, ContinuousOnlyForRZero)
{
    const auto space = assemble_smoothness(cube_mesh(1.0), 3, 0);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    Eigen::VectorXd c(space->num_dofs());
    for (auto& x : c.reshaped()) x = g(rng);
    const Spline s(space, project_to_kernel(space->H, c));
    EXPECT_LT(face_jump(s, 0, rng), 1e-11);
    EXPECT_GT(face_jump(s, 1, rng), 1e-4);
}

TEST(Smoothness, LetterDomainRowsVanishOnPolynomials)
{
    const auto mesh = std::make_shared<const TetMesh>(build_letter_domain(DomainKind::LetterS, 1.0, 1.0));
    const auto space = assemble_smoothness(mesh, 5, 1);
    const Eigen::VectorXd c = interpolate(*space, [](const Vec3& x) { return x.squaredNorm() * x.x(); });
    EXPECT_LT((space->H * c).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Smoothness, ValidationAndWarnings)
{
    const auto mesh = cube_mesh(1.0);
    EXPECT_THROW(assemble_smoothness(mesh, 5, 3), ValidationError);
    EXPECT_THROW(assemble_smoothness(mesh, 5, -1), ValidationError);
    EXPECT_THROW(assemble_smoothness(mesh, 1, 2), ValidationError);
    EXPECT_THROW(assemble_smoothness(mesh, kMaxSplineDegree + 1, 1), ValidationError);
    EXPECT_FALSE(assemble_smoothness(mesh, 5, 1)->warnings.empty());
    EXPECT_TRUE(assemble_smoothness(mesh, 9, 1)->warnings.empty());
    EXPECT_FALSE(assemble_smoothness(mesh, 9, 2)->warnings.empty());
}
