#include "ma3d/spline.hpp"

#include <Eigen/LU>

#include <map>
#include <mutex>

namespace ma3d {

Spline::Spline(std::shared_ptr<const SplineSpace> space, Eigen::VectorXd coeffs)
    : space_(std::move(space)), c_(std::move(coeffs))
{
    if (c_.size() != space_->num_dofs()) {
        throw ValidationError("coefficient vector has length " + std::to_string(c_.size()) + ", space needs "
                              + std::to_string(space_->num_dofs()));
    }
}

Spline::Spline(std::shared_ptr<const SplineSpace> space)
    : Spline(space, Eigen::VectorXd::Zero(space->num_dofs()))
{
}

std::span<const double> Spline::block(int t) const
{
    return {c_.data() + space_->dof_offset(t), static_cast<std::size_t>(space_->block_size())};
}

DerivBundle Spline::eval(int tet, const Bary& b) const
{
    return eval_polynomial(block(tet), space_->degree, space_->mesh->frame(tet), b);
}

DerivBundle Spline::eval(const Vec3& p) const
{
    auto loc = space_->mesh->locate(p);
    if (!loc) throw OutsideDomainError("point outside the domain");
    return eval(loc->tet, loc->bary);
}

DerivBundle eval_with_derivatives(const Spline& s, const Vec3& p) { return s.eval(p); }

double det_hessian(const Spline& s, const Vec3& p) { return hessian_det(s.eval(p).hessian); }

double laplacian(const Spline& s, const Vec3& p) { return s.eval(p).hessian.trace(); }

namespace {

/// LU of the Bernstein collocation matrix at the degree-D lattice; the
/// lattice barycentrics are the same for every tet.
const Eigen::PartialPivLU<Eigen::MatrixXd>& interpolation_lu(int degree)
{
    static std::mutex mutex;
    static std::map<int, Eigen::PartialPivLU<Eigen::MatrixXd>> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(degree);
    if (it == cache.end()) {
        const auto& set = multi_indices(degree);
        const int n = set.size();
        Eigen::MatrixXd m(n, n);
        std::vector<double> row(static_cast<std::size_t>(n));
        for (int p = 0; p < n; ++p) {
            const auto& a = set[p];
            const double d = degree;
            eval_basis(degree, Bary{a.i / d, a.j / d, a.k / d, a.l / d}, row);
            for (int q = 0; q < n; ++q) m(p, q) = row[static_cast<std::size_t>(q)];
        }
        it = cache.emplace(degree, Eigen::PartialPivLU<Eigen::MatrixXd>(m)).first;
    }
    return it->second;
}

} // namespace

Eigen::VectorXd interpolate(const SplineSpace& space, const ScalarField& u)
{
    const int d = space.degree;
    const auto& lu = interpolation_lu(d);
    const int nb = space.block_size();
    Eigen::VectorXd c(space.num_dofs());
    Eigen::VectorXd vals(nb);
    for (int t = 0; t < space.mesh->num_tets(); ++t) {
        const auto pts = domain_points(space.mesh->tet_points(t), d);
        for (int p = 0; p < nb; ++p) vals[p] = u(pts[static_cast<std::size_t>(p)]);
        c.segment(space.dof_offset(t), nb) = lu.solve(vals);
    }
    return c;
}

} // namespace ma3d
