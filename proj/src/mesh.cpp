#include "ma3d/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace ma3d {

std::string DomainSpec::name() const
{
    switch (kind) {
    case DomainKind::Box: return "cube";
    case DomainKind::LetterL: return "letter-l";
    case DomainKind::LetterC: return "letter-c";
    case DomainKind::LetterS: return "letter-s";
    case DomainKind::ExternalMesh: return "mesh:" + mesh_path.string();
    }
    return "unknown";
}

TetMesh::TetMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 4>> tets, double h)
    : vertices_(std::move(vertices)), tets_(std::move(tets)), h_(h)
{
    const int nv = num_vertices();
    frames_.reserve(tets_.size());
    for (int t = 0; t < num_tets(); ++t) {
        for (int v : tets_[static_cast<std::size_t>(t)]) {
            if (v < 0 || v >= nv) {
                throw ValidationError("tet " + std::to_string(t) + " references missing vertex " + std::to_string(v));
            }
        }
        const auto pts = tet_points(t);
        TetFrame frame;
        try {
            frame = TetFrame(pts);
        } catch (const Error&) {
            throw ValidationError("tet " + std::to_string(t) + " is degenerate");
        }
        if (!(frame.signed_volume() > 0.0)) {
            throw ValidationError("tet " + std::to_string(t) + " has non-positive signed volume");
        }
        frames_.push_back(frame);
    }
    if (!vertices_.empty()) {
        bbox_.lo = bbox_.hi = vertices_.front();
        for (const auto& v : vertices_) {
            bbox_.lo = bbox_.lo.cwiseMin(v);
            bbox_.hi = bbox_.hi.cwiseMax(v);
        }
    }
    if (h_ <= 0.0) {
        for (const auto& f : frames_) h_ = std::max(h_, f.longest_edge());
    }
    build_topology();
    build_locator();
}

std::array<Vec3, 4> TetMesh::tet_points(int t) const
{
    const auto& tv = tets_[static_cast<std::size_t>(t)];
    return {vertices_[static_cast<std::size_t>(tv[0])], vertices_[static_cast<std::size_t>(tv[1])],
            vertices_[static_cast<std::size_t>(tv[2])], vertices_[static_cast<std::size_t>(tv[3])]};
}

void TetMesh::build_topology()
{
    std::map<std::array<int, 3>, std::vector<FaceRef>> faces;
    for (int t = 0; t < num_tets(); ++t) {
        const auto& tv = tets_[static_cast<std::size_t>(t)];
        for (int f = 0; f < 4; ++f) {
            std::array<int, 3> key{};
            int n = 0;
            for (int m = 0; m < 4; ++m)
                if (m != f) key[static_cast<std::size_t>(n++)] = tv[static_cast<std::size_t>(m)];
            std::sort(key.begin(), key.end());
            faces[key].push_back({t, f});
        }
    }
    neighbors_.assign(tets_.size(), {-1, -1, -1, -1});
    for (const auto& [key, refs] : faces) {
        if (refs.size() == 1) {
            boundary_faces_.push_back(refs[0]);
        } else if (refs.size() == 2) {
            interior_faces_.push_back({key, {refs[0], refs[1]}});
            neighbors_[static_cast<std::size_t>(refs[0].tet)][static_cast<std::size_t>(refs[0].local)] = refs[1].tet;
            neighbors_[static_cast<std::size_t>(refs[1].tet)][static_cast<std::size_t>(refs[1].local)] = refs[0].tet;
        } else {
            throw ValidationError("face (" + std::to_string(key[0]) + "," + std::to_string(key[1]) + ","
                                  + std::to_string(key[2]) + ") is shared by " + std::to_string(refs.size())
                                  + " tets");
        }
    }
    std::sort(boundary_faces_.begin(), boundary_faces_.end(),
              [](const FaceRef& a, const FaceRef& b) { return a.tet != b.tet ? a.tet < b.tet : a.local < b.local; });
}

void TetMesh::build_locator()
{
    const int per_axis = std::clamp(static_cast<int>(std::ceil(std::cbrt(static_cast<double>(num_tets())))), 1, 64);
    bins_ = {per_axis, per_axis, per_axis};
    const Vec3 extent = (bbox_.hi - bbox_.lo).cwiseMax(1e-300);
    for (int a = 0; a < 3; ++a) bin_size_[a] = extent[a] / bins_[static_cast<std::size_t>(a)];
    bin_tets_.assign(static_cast<std::size_t>(bins_[0] * bins_[1] * bins_[2]), {});
    const double pad = 1e-9 * extent.maxCoeff();
    for (int t = 0; t < num_tets(); ++t) {
        Vec3 lo = frames_[static_cast<std::size_t>(t)].vertex(0), hi = lo;
        for (int m = 1; m < 4; ++m) {
            lo = lo.cwiseMin(frames_[static_cast<std::size_t>(t)].vertex(m));
            hi = hi.cwiseMax(frames_[static_cast<std::size_t>(t)].vertex(m));
        }
        std::array<int, 3> b0{}, b1{};
        for (int a = 0; a < 3; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            b0[ua] = std::clamp(static_cast<int>(std::floor((lo[a] - pad - bbox_.lo[a]) / bin_size_[a])), 0, bins_[ua] - 1);
            b1[ua] = std::clamp(static_cast<int>(std::floor((hi[a] + pad - bbox_.lo[a]) / bin_size_[a])), 0, bins_[ua] - 1);
        }
        for (int x = b0[0]; x <= b1[0]; ++x)
            for (int y = b0[1]; y <= b1[1]; ++y)
                for (int z = b0[2]; z <= b1[2]; ++z)
                    bin_tets_[static_cast<std::size_t>((x * bins_[1] + y) * bins_[2] + z)].push_back(t);
    }
}

double TetMesh::volume() const
{
    double v = 0.0;
    for (const auto& f : frames_) v += f.signed_volume();
    return v;
}

double TetMesh::quality() const
{
    double q = 0.0;
    for (const auto& f : frames_) q = std::max(q, f.longest_edge() / f.inradius());
    return q;
}

std::optional<Location> TetMesh::locate(const Vec3& p) const
{
    constexpr double kTol = -1e-12;
    const Vec3 extent = bbox_.hi - bbox_.lo;
    const double pad = 1e-9 * extent.maxCoeff();
    for (int a = 0; a < 3; ++a) {
        if (!(p[a] >= bbox_.lo[a] - pad && p[a] <= bbox_.hi[a] + pad)) return std::nullopt;
    }
    auto accept = [&](int t) -> std::optional<Location> {
        Bary b = frames_[static_cast<std::size_t>(t)].barycentric(p);
        if (*std::min_element(b.begin(), b.end()) < kTol) return std::nullopt;
        for (auto& x : b) x = std::clamp(x, 0.0, 1.0);
        return Location{t, b};
    };
    std::array<int, 3> bin{};
    for (int a = 0; a < 3; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        bin[ua] = std::clamp(static_cast<int>(std::floor((p[a] - bbox_.lo[a]) / bin_size_[a])), 0, bins_[ua] - 1);
    }
    for (int t : bin_tets_[static_cast<std::size_t>((bin[0] * bins_[1] + bin[1]) * bins_[2] + bin[2])]) {
        if (auto loc = accept(t)) return loc;
    }
    for (int t = 0; t < num_tets(); ++t) {
        if (auto loc = accept(t)) return loc;
    }
    return std::nullopt;
}

namespace {

int checked_divisions(double length, double h, const char* what)
{
    if (!(h > 0.0)) throw ValidationError("cell size h must be positive");
    const double ratio = length / h;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-12 * std::max(1.0, ratio)) {
        std::ostringstream msg;
        msg << "h = " << h << " does not divide the " << what << " length " << length;
        throw ValidationError(msg.str());
    }
    return static_cast<int>(n);
}

/// Kuhn split of a set of lattice cells with spacing h, origin lo.
TetMesh kuhn_mesh(const std::vector<std::array<int, 3>>& cells, const Vec3& lo, double h)
{
    std::map<std::array<int, 3>, int> vertex_id;
    std::vector<Vec3> vertices;
    auto vid = [&](const std::array<int, 3>& ijk) {
        auto [it, inserted] = vertex_id.try_emplace(ijk, static_cast<int>(vertices.size()));
        if (inserted) vertices.push_back(lo + h * Vec3(ijk[0], ijk[1], ijk[2]));
        return it->second;
    };
    // The six axis orders of the Kuhn simplices sharing the (0,0,0)-(1,1,1) diagonal.
    static constexpr std::array<std::array<int, 3>, 6> kPerms{
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    // Register vertices in lattice order so numbering does not depend on cell order.
    {
        std::vector<std::array<int, 3>> corners;
        for (const auto& c : cells)
            for (int dx = 0; dx < 2; ++dx)
                for (int dy = 0; dy < 2; ++dy)
                    for (int dz = 0; dz < 2; ++dz) corners.push_back({c[0] + dx, c[1] + dy, c[2] + dz});
        std::sort(corners.begin(), corners.end(), [](const auto& a, const auto& b) {
            return std::tie(a[2], a[1], a[0]) < std::tie(b[2], b[1], b[0]);
        });
        for (const auto& c : corners) vid(c);
    }
    std::vector<std::array<int, 4>> tets;
    tets.reserve(cells.size() * 6);
    for (const auto& c : cells) {
        for (const auto& perm : kPerms) {
            std::array<int, 3> cur = c;
            std::array<int, 4> tet{};
            tet[0] = vid(cur);
            for (int s = 0; s < 3; ++s) {
                cur[static_cast<std::size_t>(perm[static_cast<std::size_t>(s)])] += 1;
                tet[static_cast<std::size_t>(s + 1)] = vid(cur);
            }
            const auto& a = vertices[static_cast<std::size_t>(tet[0])];
            const double vol = (vertices[static_cast<std::size_t>(tet[1])] - a)
                                   .cross(vertices[static_cast<std::size_t>(tet[2])] - a)
                                   .dot(vertices[static_cast<std::size_t>(tet[3])] - a);
            if (vol < 0.0) std::swap(tet[2], tet[3]);
            tets.push_back(tet);
        }
    }
    return TetMesh(std::move(vertices), std::move(tets), h);
}

} // namespace

TetMesh build_box_grid(const Box& bounds, double h)
{
    const Vec3 ext = bounds.hi - bounds.lo;
    const int nx = checked_divisions(ext.x(), h, "x edge");
    const int ny = checked_divisions(ext.y(), h, "y edge");
    const int nz = checked_divisions(ext.z(), h, "z edge");
    std::vector<std::array<int, 3>> cells;
    cells.reserve(static_cast<std::size_t>(nx) * ny * nz);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) cells.push_back({i, j, k});
    // Use the exact spacing implied by the division so the far faces land on hi.
    return kuhn_mesh(cells, bounds.lo, ext.x() / nx);
}

std::vector<std::array<int, 3>> letter_layout(DomainKind kind)
{
    switch (kind) {
    case DomainKind::LetterL: return {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    case DomainKind::LetterC:
        return {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, 1, 0}, {0, 2, 0}, {1, 2, 0}, {2, 2, 0}};
    case DomainKind::LetterS:
        return {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {2, 1, 0}, {0, 2, 0}, {1, 2, 0},
                {2, 2, 0}, {0, 3, 0}, {0, 4, 0}, {1, 4, 0}, {2, 4, 0}};
    default: throw ValidationError("not a letter domain");
    }
}

TetMesh build_letter_domain(DomainKind kind, double h, double voxel)
{
    const auto layout = letter_layout(kind);
    const int n = checked_divisions(voxel, h, "voxel");
    std::vector<std::array<int, 3>> cells;
    cells.reserve(layout.size() * static_cast<std::size_t>(n * n * n));
    for (const auto& v : layout)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) cells.push_back({v[0] * n + i, v[1] * n + j, v[2] * n + k});
    std::sort(cells.begin(), cells.end(),
              [](const auto& a, const auto& b) { return std::tie(a[2], a[1], a[0]) < std::tie(b[2], b[1], b[0]); });
    return kuhn_mesh(cells, Vec3::Zero(), voxel / n);
}

DomainSpec parse_domain(const std::string& text, double h, double voxel)
{
    DomainSpec spec;
    spec.h = h;
    spec.voxel = voxel;
    if (text == "cube") {
        spec.kind = DomainKind::Box;
    } else if (text == "letter-l") {
        spec.kind = DomainKind::LetterL;
    } else if (text == "letter-c") {
        spec.kind = DomainKind::LetterC;
    } else if (text == "letter-s") {
        spec.kind = DomainKind::LetterS;
    } else if (text.rfind("mesh:", 0) == 0 && text.size() > 5) {
        spec.kind = DomainKind::ExternalMesh;
        spec.mesh_path = text.substr(5);
    } else {
        throw ValidationError("domain must be cube, letter-l, letter-c, letter-s or mesh:<path> (got '" + text + "')");
    }
    return spec;
}

TetMesh build_domain(const DomainSpec& spec)
{
    switch (spec.kind) {
    case DomainKind::Box: return build_box_grid(spec.bounds, spec.h);
    case DomainKind::LetterL:
    case DomainKind::LetterC:
    case DomainKind::LetterS: return build_letter_domain(spec.kind, spec.h, spec.voxel);
    case DomainKind::ExternalMesh: return load_mesh(spec.mesh_path, spec.h);
    }
    throw ValidationError("unknown domain kind");
}

double domain_volume(const DomainSpec& spec)
{
    switch (spec.kind) {
    case DomainKind::Box: return spec.bounds.volume();
    case DomainKind::LetterL:
    case DomainKind::LetterC:
    case DomainKind::LetterS:
        return static_cast<double>(letter_layout(spec.kind).size()) * spec.voxel * spec.voxel * spec.voxel;
    case DomainKind::ExternalMesh: return load_mesh(spec.mesh_path, spec.h).volume();
    }
    return 0.0;
}

namespace {

std::string format_double(double x)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::vector<std::string> tokens_of(const std::string& line)
{
    std::vector<std::string> out;
    std::istringstream in(line.substr(0, line.find('#')));
    for (std::string tok; in >> tok;) out.push_back(tok);
    return out;
}

template <typename T>
T parse_number(const std::string& tok, int line)
{
    T value{};
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        throw ParseError(line, "cannot parse '" + tok + "'");
    }
    return value;
}

} // namespace

std::string format_mesh(const TetMesh& mesh)
{
    std::string out;
    out += std::to_string(mesh.num_vertices()) + " " + std::to_string(mesh.num_tets()) + "\n";
    for (const auto& v : mesh.vertices()) {
        out += format_double(v.x()) + " " + format_double(v.y()) + " " + format_double(v.z()) + "\n";
    }
    for (const auto& t : mesh.tets()) {
        out += std::to_string(t[0]) + " " + std::to_string(t[1]) + " " + std::to_string(t[2]) + " "
             + std::to_string(t[3]) + "\n";
    }
    return out;
}

TetMesh parse_mesh(const std::string& text, double h)
{
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto next = [&]() -> std::vector<std::string> {
        while (std::getline(in, line)) {
            ++lineno;
            auto toks = tokens_of(line);
            if (!toks.empty()) return toks;
        }
        return {};
    };
    auto header = next();
    if (header.size() != 2) throw ParseError(std::max(lineno, 1), "expected header 'V T'");
    const auto nv = parse_number<long>(header[0], lineno);
    const auto nt = parse_number<long>(header[1], lineno);
    if (nv < 0 || nt < 0) throw ParseError(lineno, "negative counts in header");
    std::vector<Vec3> vertices;
    vertices.reserve(static_cast<std::size_t>(nv));
    for (long i = 0; i < nv; ++i) {
        auto toks = next();
        if (toks.empty()) throw ParseError(lineno + 1, "unexpected end of file in vertex block");
        if (toks.size() != 3) throw ParseError(lineno, "vertex line needs 3 coordinates");
        vertices.emplace_back(parse_number<double>(toks[0], lineno), parse_number<double>(toks[1], lineno),
                              parse_number<double>(toks[2], lineno));
    }
    std::vector<std::array<int, 4>> tets;
    tets.reserve(static_cast<std::size_t>(nt));
    for (long i = 0; i < nt; ++i) {
        auto toks = next();
        if (toks.empty()) throw ParseError(lineno + 1, "unexpected end of file in tet block");
        if (toks.size() != 4) throw ParseError(lineno, "tet line needs 4 vertex indices");
        std::array<int, 4> t{};
        for (std::size_t m = 0; m < 4; ++m) {
            t[m] = parse_number<int>(toks[m], lineno);
            if (t[m] < 0 || t[m] >= nv) throw ParseError(lineno, "vertex index out of range");
        }
        tets.push_back(t);
    }
    if (!next().empty()) throw ParseError(lineno, "trailing content after tet block");
    return TetMesh(std::move(vertices), std::move(tets), h);
}

void save_mesh(const TetMesh& mesh, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw Error("cannot write mesh file " + path.string());
    out << format_mesh(mesh);
}

TetMesh load_mesh(const std::filesystem::path& path, double h)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot read mesh file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_mesh(buf.str(), h);
}

} // namespace ma3d
