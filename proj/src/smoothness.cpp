#include "ma3d/smoothness.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ma3d {

namespace {

/// Local positions of the sorted face vertices inside a tet, plus the opposite vertex.
std::array<int, 4> face_roles(const std::array<int, 4>& tet, const std::array<int, 3>& face, int opposite)
{
    std::array<int, 4> roles{};
    for (std::size_t r = 0; r < 3; ++r) {
        const auto it = std::find(tet.begin(), tet.end(), face[r]);
        roles[r] = static_cast<int>(it - tet.begin());
    }
    roles[3] = opposite;
    return roles;
}

int local_index(const MultiIndexSet& set, const std::array<int, 4>& roles, const std::array<int, 4>& by_role)
{
    std::array<int, 4> local{};
    for (std::size_t r = 0; r < 4; ++r) local[static_cast<std::size_t>(roles[r])] = by_role[r];
    return set.index_of(local[0], local[1], local[2]);
}

} // namespace

std::shared_ptr<const SplineSpace> assemble_smoothness(std::shared_ptr<const TetMesh> mesh, int degree,
                                                       int smoothness)
{
    if (smoothness < 0 || smoothness > 2) {
        throw ValidationError("smoothness r must be 0, 1 or 2 (got " + std::to_string(smoothness) + ")");
    }
    if (degree < 1 || degree > kMaxSplineDegree) {
        throw ValidationError("spline degree must be in [1, " + std::to_string(kMaxSplineDegree) + "]");
    }
    if (smoothness > degree) throw ValidationError("smoothness r cannot exceed the degree");

    auto space = std::make_shared<SplineSpace>();
    space->mesh = std::move(mesh);
    space->degree = degree;
    space->smoothness = smoothness;
    if (degree < 6 * smoothness + 3) {
        space->warnings.push_back("degree " + std::to_string(degree) + " is below 6r+3 = "
                                  + std::to_string(6 * smoothness + 3)
                                  + "; approximation order of the C^r space is not guaranteed");
    }

    const auto& m = *space->mesh;
    const auto& set = multi_indices(degree);
    std::vector<Eigen::Triplet<double>> triplets;
    int row = 0;
    for (const auto& face : m.interior_faces()) {
        const auto& side0 = face.sides[0];
        const auto& side1 = face.sides[1];
        const auto& tet0 = m.tet(side0.tet);
        const auto& tet1 = m.tet(side1.tet);
        const auto roles0 = face_roles(tet0, face.verts, side0.local);
        const auto roles1 = face_roles(tet1, face.verts, side1.local);

        // Barycentrics of the far vertex of side 1 relative to side 0, in role order.
        const Vec3& far = m.vertices()[static_cast<std::size_t>(tet1[static_cast<std::size_t>(side1.local)])];
        const Bary local_beta = m.frame(side0.tet).barycentric(far);
        std::array<double, 4> beta{};
        for (std::size_t r = 0; r < 4; ++r) beta[r] = local_beta[static_cast<std::size_t>(roles0[r])];

        const int off0 = space->dof_offset(side0.tet);
        const int off1 = space->dof_offset(side1.tet);
        for (int order = 0; order <= smoothness; ++order) {
            const auto& gamma_set = multi_indices(order);
            std::vector<double> weights(static_cast<std::size_t>(gamma_set.size()));
            eval_basis(order, Bary{beta[0], beta[1], beta[2], beta[3]}, weights);
            const int rest = degree - order;
            for (int i = rest; i >= 0; --i) {
                for (int j = rest - i; j >= 0; --j) {
                    const int k = rest - i - j;
                    triplets.emplace_back(row, off1 + local_index(set, roles1, {i, j, k, order}), -1.0);
                    for (int g = 0; g < gamma_set.size(); ++g) {
                        const auto& gm = gamma_set[g];
                        const double w = weights[static_cast<std::size_t>(g)];
                        if (w == 0.0) continue;
                        triplets.emplace_back(
                            row, off0 + local_index(set, roles0, {i + gm.i, j + gm.j, k + gm.k, gm.l}), w);
                    }
                    ++row;
                }
            }
        }
    }
    space->H.resize(row, space->num_dofs());
    space->H.setFromTriplets(triplets.begin(), triplets.end());
    space->H.makeCompressed();
    return space;
}

double smoothness_residual(const Spline& s, int samples, std::uint64_t seed)
{
    const auto& space = s.space();
    const auto& m = *space.mesh;
    const auto& faces = m.interior_faces();
    if (faces.empty() || samples <= 0) return 0.0;

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, faces.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int n = 0; n < samples; ++n) {
        const auto& face = faces[pick(rng)];
        double u = unit(rng), v = unit(rng);
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        const auto& vs = m.vertices();
        const Vec3 p = (1.0 - u - v) * vs[static_cast<std::size_t>(face.verts[0])]
                     + u * vs[static_cast<std::size_t>(face.verts[1])] + v * vs[static_cast<std::size_t>(face.verts[2])];
        const Vec3 e1 = vs[static_cast<std::size_t>(face.verts[1])] - vs[static_cast<std::size_t>(face.verts[0])];
        const Vec3 e2 = vs[static_cast<std::size_t>(face.verts[2])] - vs[static_cast<std::size_t>(face.verts[0])];
        const Vec3 normal = e1.cross(e2).normalized();

        std::array<DerivBundle, 2> sides;
        for (std::size_t sd = 0; sd < 2; ++sd) {
            const int t = face.sides[sd].tet;
            sides[sd] = s.eval(t, m.frame(t).barycentric(p));
        }
        worst = std::max(worst, std::abs(sides[0].value - sides[1].value));
        if (space.smoothness >= 1) {
            worst = std::max(worst, std::abs((sides[0].gradient - sides[1].gradient).dot(normal)));
        }
        if (space.smoothness >= 2) {
            worst = std::max(worst, std::abs(normal.dot((sides[0].hessian - sides[1].hessian) * normal)));
        }
    }
    return worst;
}

} // namespace ma3d
