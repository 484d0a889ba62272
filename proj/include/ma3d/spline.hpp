#pragma once

#include "ma3d/bform.hpp"
#include "ma3d/mesh.hpp"

#include <Eigen/SparseCore>

#include <memory>
#include <string>
#include <vector>

namespace ma3d {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Degree-D, C^r spline space over a tet mesh. Coefficients are stored per tet
/// in contiguous blocks of basis_size(D), multi-index order inside a block.
struct SplineSpace {
    std::shared_ptr<const TetMesh> mesh;
    int degree = 0;
    int smoothness = 0;
    /// Smoothness conditions; H c = 0 iff the piecewise polynomial is C^r.
    SparseMatrix H;
    std::vector<std::string> warnings;

    int block_size() const { return basis_size(degree); }
    int dof_offset(int t) const { return t * block_size(); }
    int num_dofs() const { return mesh->num_tets() * block_size(); }
};

/// B-form coefficient vector over a SplineSpace.
class Spline {
public:
    Spline(std::shared_ptr<const SplineSpace> space, Eigen::VectorXd coeffs);
    /// Zero spline.
    explicit Spline(std::shared_ptr<const SplineSpace> space);

    const SplineSpace& space() const { return *space_; }
    const std::shared_ptr<const SplineSpace>& space_ptr() const { return space_; }
    const Eigen::VectorXd& coeffs() const noexcept { return c_; }
    Eigen::VectorXd& coeffs() noexcept { return c_; }

    std::span<const double> block(int t) const;

    /// Evaluation inside a known tet.
    DerivBundle eval(int tet, const Bary& b) const;
    /// Throws OutsideDomainError if p is not in the mesh.
    DerivBundle eval(const Vec3& p) const;
    double value(const Vec3& p) const { return eval(p).value; }

private:
    std::shared_ptr<const SplineSpace> space_;
    Eigen::VectorXd c_;
};

DerivBundle eval_with_derivatives(const Spline& s, const Vec3& p);
double det_hessian(const Spline& s, const Vec3& p);
double laplacian(const Spline& s, const Vec3& p);

/// Per-tet B-coefficients of a function by interpolation at the degree-D
/// domain points of every tet (exact for polynomials of degree <= D).
Eigen::VectorXd interpolate(const SplineSpace& space, const ScalarField& u);

} // namespace ma3d
