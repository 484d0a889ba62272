#pragma once

#include "ma3d/spline.hpp"

#include <functional>

namespace ma3d {

/// Closed-form solution with first and second derivatives.
struct ExactSolution {
    ScalarField u;
    std::function<Vec3(const Vec3&)> grad;
    std::function<Mat3(const Vec3&)> hess;
};

/// Discrete errors over an N^3 lattice spanning the mesh bounding box.
/// Only lattice points that locate inside the mesh are counted; a point on
/// the boundary counts iff TetMesh::locate accepts it.
///   l2   = sqrt(sum e^2 / NI)
///   h1   = sqrt(sum (e^2 + e_x^2 + e_y^2 + e_z^2) / NI)
///   linf = max |e|
struct ErrorReport {
    double l2 = 0.0;
    double h1 = 0.0;
    double linf = 0.0;
    int grid = 0;
    long points_inside = 0;
    double runtime = 0.0;  // seconds
};

ErrorReport error_norms(const Spline& s, const ExactSolution& exact, int N);

/// Lattice points of an N^3 grid over the mesh bounding box that lie inside the mesh.
std::vector<Location> grid_locations(const TetMesh& mesh, int N, std::vector<Vec3>* points = nullptr);

} // namespace ma3d
