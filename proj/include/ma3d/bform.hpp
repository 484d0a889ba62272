#pragma once

// Barycentric / Bernstein-Bezier calculus on a single tetrahedron.
//
// Multi-index order (part of the public contract): for degree d the indices
// (i, j, k, l), i + j + k + l = d, are enumerated lexicographically with i
// outermost and every component descending, i.e.
//
//   (d,0,0,0), (d-1,1,0,0), (d-1,0,1,0), (d-1,0,0,1), (d-2,2,0,0), ...
//
// Coefficient vectors of every spline use this order inside each tet block.

#include "ma3d/common.hpp"

#include <array>
#include <span>
#include <vector>

namespace ma3d {

/// Highest spline degree supported by the basis tables.
inline constexpr int kMaxSplineDegree = 12;
/// Highest degree for which domain points / multi-index tables exist.
inline constexpr int kMaxLatticeDegree = 24;

using Bary = std::array<double, 4>;

struct MultiIndex {
    int i = 0, j = 0, k = 0, l = 0;

    int operator[](int m) const { return m == 0 ? i : m == 1 ? j : m == 2 ? k : l; }
    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

/// Enumeration of all degree-d multi-indices with O(1) index lookup.
class MultiIndexSet {
public:
    explicit MultiIndexSet(int degree);

    int degree() const noexcept { return degree_; }
    int size() const noexcept { return static_cast<int>(indices_.size()); }
    const MultiIndex& operator[](int n) const { return indices_[static_cast<std::size_t>(n)]; }
    const std::vector<MultiIndex>& all() const noexcept { return indices_; }

    /// Position of (i, j, k, d-i-j-k); -1 if not a valid index.
    int index_of(int i, int j, int k) const;
    int index_of(const MultiIndex& m) const { return index_of(m.i, m.j, m.k); }

    /// Multinomial coefficient d! / (i! j! k! l!) for entry n.
    double multinomial(int n) const { return multinomial_[static_cast<std::size_t>(n)]; }

    /// Position in the degree d+1 set of entry n raised by e_m.
    int raised(int m, int n) const { return raised_[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)]; }

private:
    int degree_;
    std::vector<MultiIndex> indices_;
    std::vector<int> lookup_;
    std::vector<double> multinomial_;
    std::array<std::vector<int>, 4> raised_;
};

/// Shared, lazily built tables for degrees 0..kMaxLatticeDegree.
const MultiIndexSet& multi_indices(int degree);

/// C(d + 3, 3): number of Bernstein polynomials of degree d on a tet.
constexpr int basis_size(int d) { return (d + 1) * (d + 2) * (d + 3) / 6; }

/// Affine frame of a non-degenerate tetrahedron: maps points to barycentric
/// coordinates and carries the (constant) gradients of those coordinates.
class TetFrame {
public:
    TetFrame() = default;
    /// Throws Error if the tet is degenerate.
    explicit TetFrame(const std::array<Vec3, 4>& v);

    Bary barycentric(const Vec3& p) const;
    Vec3 point(const Bary& b) const;

    const std::array<Vec3, 4>& vertices() const noexcept { return v_; }
    const Vec3& vertex(int m) const { return v_[static_cast<std::size_t>(m)]; }
    /// Gradient of the m-th barycentric coordinate function.
    const Vec3& grad(int m) const { return grad_[static_cast<std::size_t>(m)]; }
    /// Signed volume under the stored vertex ordering.
    double signed_volume() const noexcept { return signed_volume_; }
    double longest_edge() const;
    double inradius() const;

private:
    std::array<Vec3, 4> v_{};
    Mat3 inv_ = Mat3::Zero();
    std::array<Vec3, 4> grad_{};
    double signed_volume_ = 0.0;
};

/// Solves the 4x4 barycentric system for p against the given vertices.
Bary barycentric(const std::array<Vec3, 4>& tet, const Vec3& p);

/// {(i v1 + j v2 + k v3 + l v4) / d} in multi-index order.
std::vector<Vec3> domain_points(const std::array<Vec3, 4>& tet, int d);

/// All degree-D Bernstein polynomials at b, in multi-index order.
std::vector<double> eval_basis(int degree, const Bary& b);
/// Same, writing into out (size basis_size(degree)).
void eval_basis(int degree, const Bary& b, std::span<double> out);

struct DerivBundle {
    double value = 0.0;
    Vec3 gradient = Vec3::Zero();
    Mat3 hessian = Mat3::Zero();
};

/// Value, gradient and Hessian of the degree-D polynomial with B-coefficients
/// coef on the tet described by frame, at barycentric point b.
DerivBundle eval_polynomial(std::span<const double> coef, int degree, const TetFrame& frame, const Bary& b);

/// Row of sum_{a,c} W(a,c) d_a d_c B_alpha(b) over all alpha (multi-index order).
/// W = identity gives the Laplacian of every basis function.
void basis_second_derivatives(int degree, const TetFrame& frame, const Bary& b, const Mat3& weights,
                              std::span<double> out);

/// Exact 3x3 Monge-Ampere determinant of a symmetric Hessian.
inline double hessian_det(const Mat3& h)
{
    return h(0, 0) * h(1, 1) * h(2, 2) + 2.0 * h(0, 1) * h(1, 2) * h(0, 2) - h(0, 0) * h(1, 2) * h(1, 2)
         - h(1, 1) * h(0, 2) * h(0, 2) - h(2, 2) * h(0, 1) * h(0, 1);
}

/// Eigenvalues of a symmetric 3x3 matrix in descending order (closed form).
std::array<double, 3> symmetric_eigenvalues(const Mat3& h);

} // namespace ma3d
