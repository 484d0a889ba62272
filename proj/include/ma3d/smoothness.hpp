#pragma once

#include "ma3d/spline.hpp"

#include <cstdint>
#include <memory>

namespace ma3d {

/// Builds the C^r spline space: for every interior face and every order
/// 0 <= m <= r, one row per face multi-index equating the B-coefficients of
/// the neighbour with the degree-m de Casteljau extension of this side.
/// r must be 0, 1 or 2; a warning is recorded when D < 6r + 3.
std::shared_ptr<const SplineSpace> assemble_smoothness(std::shared_ptr<const TetMesh> mesh, int degree,
                                                       int smoothness);

/// Largest jump of value and of the first r normal derivatives across
/// interior faces, sampled at `samples` random face points.
double smoothness_residual(const Spline& s, int samples = 200, std::uint64_t seed = 1);

} // namespace ma3d
