#pragma once

#include "ma3d/bform.hpp"
#include "ma3d/common.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ma3d {

struct Box {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Ones();

    double volume() const { return (hi - lo).prod(); }
};

enum class DomainKind { Box, LetterL, LetterC, LetterS, ExternalMesh };

/// Description of a computational domain: a box, a voxel letter, or a mesh file.
struct DomainSpec {
    DomainKind kind = DomainKind::Box;
    Box bounds;                       // Box only
    double voxel = 1.0;               // letter voxel edge length
    std::filesystem::path mesh_path;  // ExternalMesh only
    double h = 1.0;

    std::string name() const;
};

/// Reference to a face by its owning tet and the local index of the opposite vertex.
struct FaceRef {
    int tet = -1;
    int local = -1;
};

/// A face shared by two tets. verts is the sorted global vertex triple.
struct InteriorFace {
    std::array<int, 3> verts{};
    std::array<FaceRef, 2> sides{};
};

struct Location {
    int tet = -1;
    Bary bary{};
};

/// Immutable tetrahedralization of a polyhedral domain.
///
/// Construction validates orientation (every tet must have positive signed
/// volume) and face conformity (each face is shared by at most two tets), and
/// builds the adjacency plus a uniform-bin point locator.
class TetMesh {
public:
    TetMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 4>> tets, double h);

    int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
    int num_tets() const noexcept { return static_cast<int>(tets_.size()); }
    const std::vector<Vec3>& vertices() const noexcept { return vertices_; }
    const std::vector<std::array<int, 4>>& tets() const noexcept { return tets_; }
    const std::array<int, 4>& tet(int t) const { return tets_[static_cast<std::size_t>(t)]; }
    std::array<Vec3, 4> tet_points(int t) const;
    const TetFrame& frame(int t) const { return frames_[static_cast<std::size_t>(t)]; }

    const std::vector<FaceRef>& boundary_faces() const noexcept { return boundary_faces_; }
    const std::vector<InteriorFace>& interior_faces() const noexcept { return interior_faces_; }
    /// Tet across local face f of tet t, or -1 on the boundary.
    int neighbor(int t, int f) const { return neighbors_[static_cast<std::size_t>(t)][static_cast<std::size_t>(f)]; }
    bool is_boundary_face(int t, int f) const { return neighbor(t, f) < 0; }

    double h() const noexcept { return h_; }
    double volume() const;
    /// max over tets of longest edge / inradius.
    double quality() const;
    const Box& bounding_box() const noexcept { return bbox_; }

    /// Lowest-index tet whose barycentric coordinates of p are all >= -1e-12,
    /// with the coordinates clamped to [0, 1]; empty when p is outside.
    std::optional<Location> locate(const Vec3& p) const;

private:
    void build_topology();
    void build_locator();

    std::vector<Vec3> vertices_;
    std::vector<std::array<int, 4>> tets_;
    std::vector<TetFrame> frames_;
    std::vector<std::array<int, 4>> neighbors_;
    std::vector<FaceRef> boundary_faces_;
    std::vector<InteriorFace> interior_faces_;
    double h_;
    Box bbox_;

    std::array<int, 3> bins_{1, 1, 1};
    Vec3 bin_size_ = Vec3::Ones();
    std::vector<std::vector<int>> bin_tets_;
};

/// Kuhn (Freudenthal) 6-tet split of every h-cell of the box, main diagonal
/// (0,0,0)->(1,1,1) in every cell. h must divide each edge length.
TetMesh build_box_grid(const Box& bounds, double h);

/// Canonical voxel layouts, one voxel thick in z (row 0 is y = 0):
///   L: 3 voxels    C: 7 voxels    S: 11 voxels
///   X.             XXX            XXX
///   XX             X..            ..X
///                  XXX            XXX
///                                 X..
///                                 XXX
/// (printed top row = highest y). Each voxel has edge `voxel` and is split
/// into (voxel/h)^3 Kuhn cells.
TetMesh build_letter_domain(DomainKind kind, double h, double voxel = 1.0);

/// Voxel cells (x, y, z) of a letter layout.
std::vector<std::array<int, 3>> letter_layout(DomainKind kind);

/// Parses cube | letter-l | letter-c | letter-s | mesh:<path>.
DomainSpec parse_domain(const std::string& text, double h, double voxel = 1.0);

/// Builds the mesh a DomainSpec describes.
TetMesh build_domain(const DomainSpec& spec);

/// Analytic volume of the domain (ExternalMesh: the mesh volume).
double domain_volume(const DomainSpec& spec);

/// Text format: "V T", V lines "x y z", T lines "a b c d" (0-based); '#' comments.
void save_mesh(const TetMesh& mesh, const std::filesystem::path& path);
TetMesh load_mesh(const std::filesystem::path& path, double h = 0.0);
std::string format_mesh(const TetMesh& mesh);
TetMesh parse_mesh(const std::string& text, double h = 0.0);

} // namespace ma3d
