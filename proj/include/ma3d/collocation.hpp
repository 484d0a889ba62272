#pragma once

#include "ma3d/spline.hpp"

#include <memory>
#include <string>
#include <vector>

namespace ma3d {

struct CollocationPoint {
    int tet = -1;  // owning tet (lowest index containing the point)
    Bary bary{};   // barycentrics in the owning tet
    Vec3 x = Vec3::Zero();
};

/// Distinct degree-D' domain points of a mesh, split into points strictly
/// inside the domain and points on boundary faces. Points shared by several
/// tets are identified exactly by their (global vertex, lattice weight) pairs
/// and assigned to the lowest-index tet; order is first discovery in tet order.
struct CollocationPoints {
    int dprime = 0;
    std::vector<CollocationPoint> interior;
    std::vector<CollocationPoint> boundary;
};

CollocationPoints collocation_points(const TetMesh& mesh, int dprime);

/// Weighted least-squares form of the Poisson collocation problem.
struct SolveConfig {
    double mu = 1e4;      // weight of the interior (Laplacian) rows, squared
    double ls_tol = 1e-12;  // target for the relative normal-equation residual
    double eps1 = 1e-3;   // report threshold for ||K c - f||_inf
};

struct CollocationSystem {
    CollocationPoints points;
    SparseMatrix K;         // Laplacians of the basis at interior points
    Eigen::VectorXd fvec;
    SparseMatrix Bmat;      // basis values at boundary points
    Eigen::VectorXd Gvec;

    int dprime() const { return points.dprime; }
};

/// Requires dprime > space.degree.
CollocationSystem assemble(const SplineSpace& space, int dprime, const ScalarField& f, const ScalarField& g);

/// Samples a field at the interior / boundary collocation points.
Eigen::VectorXd sample(const std::vector<CollocationPoint>& pts, const ScalarField& field);

struct SolveReport {
    double kc_residual_inf = 0.0;  // achieved ||K c - f||_inf
    bool exceeds_eps1 = false;
    long rank = 0;
    long columns = 0;
    int refinement_steps = 0;
    double normal_residual = 0.0;  // |A^T (A c - b)|_inf / |A^T b|_inf
    std::vector<std::string> warnings;
};

/// Minimises mu ||K c - f||^2 + ||B c - G||^2 + ||H c||^2.
///
/// The stacked matrix [sqrt(mu) K; B; H] is column-equilibrated and factored
/// once by a rank-revealing sparse QR; solve() can then be called for any
/// number of right-hand sides (the Monge-Ampere iteration changes only f).
class LeastSquaresSolver {
public:
    LeastSquaresSolver(const CollocationSystem& sys, const SparseMatrix& H, SolveConfig cfg = {});
    ~LeastSquaresSolver();
    LeastSquaresSolver(const LeastSquaresSolver&) = delete;
    LeastSquaresSolver& operator=(const LeastSquaresSolver&) = delete;

    Eigen::VectorXd solve(const Eigen::VectorXd& fvec, const Eigen::VectorXd& Gvec,
                          SolveReport* report = nullptr) const;

    const SolveConfig& config() const noexcept { return cfg_; }
    long rank() const;
    /// The stacked, unscaled matrix and right-hand side (test surface).
    const SparseMatrix& stacked() const noexcept { return A_; }
    Eigen::VectorXd stacked_rhs(const Eigen::VectorXd& fvec, const Eigen::VectorXd& Gvec) const;

private:
    struct Factor;
    SolveConfig cfg_;
    SparseMatrix K_;
    SparseMatrix A_;
    Eigen::VectorXd col_scale_;
    long n_smooth_rows_ = 0;
    std::unique_ptr<Factor> factor_;
};

Eigen::VectorXd solve_ls(const CollocationSystem& sys, const SparseMatrix& H, const SolveConfig& cfg,
                         SolveReport* report = nullptr);

/// Collocation solve of Laplace(u) = f in the domain, u = g on the boundary.
Spline poisson_solve(std::shared_ptr<const SplineSpace> space, const ScalarField& f, const ScalarField& g,
                     int dprime, const SolveConfig& cfg = {}, SolveReport* report = nullptr);

} // namespace ma3d
