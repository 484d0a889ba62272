#include "ma3d/norms.hpp"

#include "ma3d/parallel.hpp"

#include <chrono>
#include <cmath>

namespace ma3d {

std::vector<Location> grid_locations(const TetMesh& mesh, int N, std::vector<Vec3>* points)
{
    if (N < 2) throw ValidationError("evaluation grid needs N >= 2 points per axis");
    const Box& box = mesh.bounding_box();
    const Vec3 step = (box.hi - box.lo) / (N - 1);
    const std::size_t total = static_cast<std::size_t>(N) * N * N;
    std::vector<std::optional<Location>> found(total);
    parallel_for(total, [&](std::size_t b, std::size_t e) {
        for (std::size_t n = b; n < e; ++n) {
            const auto i = static_cast<int>(n % N), j = static_cast<int>((n / N) % N), k = static_cast<int>(n / N / N);
            const Vec3 p = box.lo + Vec3(i * step.x(), j * step.y(), k * step.z());
            found[n] = mesh.locate(p);
        }
    });
    std::vector<Location> out;
    if (points) points->clear();
    for (std::size_t n = 0; n < total; ++n) {
        if (!found[n]) continue;
        out.push_back(*found[n]);
        if (points) {
            const auto i = static_cast<int>(n % N), j = static_cast<int>((n / N) % N), k = static_cast<int>(n / N / N);
            points->push_back(box.lo + Vec3(i * step.x(), j * step.y(), k * step.z()));
        }
    }
    return out;
}

ErrorReport error_norms(const Spline& s, const ExactSolution& exact, int N)
{
    const auto start = std::chrono::steady_clock::now();
    std::vector<Vec3> pts;
    const auto locs = grid_locations(*s.space().mesh, N, &pts);

    std::vector<double> e2(locs.size()), g2(locs.size()), eabs(locs.size());
    parallel_for(locs.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t n = b; n < e; ++n) {
            const auto d = s.eval(locs[n].tet, locs[n].bary);
            const double err = exact.u(pts[n]) - d.value;
            e2[n] = err * err;
            eabs[n] = std::abs(err);
            // Points where the exact gradient blows up (singular cases) contribute
            // only their value error to h1.
            const double ge = exact.grad ? (exact.grad(pts[n]) - d.gradient).squaredNorm() : 0.0;
            g2[n] = std::isfinite(ge) ? ge : 0.0;
        }
    });

    ErrorReport r;
    r.grid = N;
    r.points_inside = static_cast<long>(locs.size());
    double sum_e = 0.0, sum_g = 0.0;
    for (std::size_t n = 0; n < locs.size(); ++n) {
        sum_e += e2[n];
        sum_g += g2[n];
        r.linf = std::max(r.linf, eabs[n]);
    }
    if (!locs.empty()) {
        const double ni = static_cast<double>(locs.size());
        r.l2 = std::sqrt(sum_e / ni);
        r.h1 = std::sqrt((sum_e + sum_g) / ni);
    }
    r.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

} // namespace ma3d
