#include "ma3d/collocation.hpp"

#include "ma3d/parallel.hpp"

#include <Eigen/SPQRSupport>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace ma3d {

namespace {

/// Exact identity of a domain point: up to four (global vertex, weight) pairs.
struct LatticeKey {
    std::array<std::int64_t, 4> packed{-1, -1, -1, -1};
    friend bool operator==(const LatticeKey&, const LatticeKey&) = default;
};

struct LatticeKeyHash {
    std::size_t operator()(const LatticeKey& k) const noexcept
    {
        std::size_t h = 1469598103934665603ull;
        for (auto v : k.packed) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
        return h;
    }
};

} // namespace

CollocationPoints collocation_points(const TetMesh& mesh, int dprime)
{
    const auto& set = multi_indices(dprime);
    struct Record {
        CollocationPoint point;
        bool on_boundary = false;
    };
    std::vector<Record> records;
    std::unordered_map<LatticeKey, std::size_t, LatticeKeyHash> seen;
    const double d = dprime;

    for (int t = 0; t < mesh.num_tets(); ++t) {
        const auto& tv = mesh.tet(t);
        for (int n = 0; n < set.size(); ++n) {
            const auto& a = set[n];
            LatticeKey key;
            int used = 0;
            std::array<std::pair<int, int>, 4> pairs{};
            for (int m = 0; m < 4; ++m) {
                if (a[m] > 0) pairs[static_cast<std::size_t>(used++)] = {tv[static_cast<std::size_t>(m)], a[m]};
            }
            std::sort(pairs.begin(), pairs.begin() + used);
            for (int u = 0; u < used; ++u) {
                key.packed[static_cast<std::size_t>(u)] =
                    (static_cast<std::int64_t>(pairs[static_cast<std::size_t>(u)].first) << 8)
                    | pairs[static_cast<std::size_t>(u)].second;
            }
            bool on_boundary = false;
            for (int f = 0; f < 4; ++f) {
                if (a[f] == 0 && mesh.is_boundary_face(t, f)) on_boundary = true;
            }
            auto [it, inserted] = seen.try_emplace(key, records.size());
            if (inserted) {
                const Bary b{a.i / d, a.j / d, a.k / d, a.l / d};
                records.push_back({{t, b, mesh.frame(t).point(b)}, on_boundary});
            } else if (on_boundary) {
                records[it->second].on_boundary = true;
            }
        }
    }

    CollocationPoints out;
    out.dprime = dprime;
    for (const auto& r : records) (r.on_boundary ? out.boundary : out.interior).push_back(r.point);
    return out;
}

Eigen::VectorXd sample(const std::vector<CollocationPoint>& pts, const ScalarField& field)
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) v[static_cast<Eigen::Index>(i)] = field(pts[i].x);
    return v;
}

namespace {

enum class RowKind { Laplacian, Value };

SparseMatrix basis_rows(const SplineSpace& space, const std::vector<CollocationPoint>& pts, RowKind kind)
{
    const int nb = space.block_size();
    const auto rows = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd dense(nb, rows);  // column per point
    parallel_for(pts.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const auto& p = pts[i];
            std::span<double> out(dense.col(static_cast<Eigen::Index>(i)).data(), static_cast<std::size_t>(nb));
            if (kind == RowKind::Laplacian) {
                basis_second_derivatives(space.degree, space.mesh->frame(p.tet), p.bary, Mat3::Identity(), out);
            } else {
                eval_basis(space.degree, p.bary, out);
            }
        }
    });
    SparseMatrix m(rows, space.num_dofs());
    m.reserve(Eigen::VectorXi::Constant(rows, nb));
    for (Eigen::Index i = 0; i < rows; ++i) {
        const int off = space.dof_offset(pts[static_cast<std::size_t>(i)].tet);
        for (int q = 0; q < nb; ++q) {
            const double v = dense(q, i);
            if (v != 0.0) m.insert(i, off + q) = v;
        }
    }
    m.makeCompressed();
    return m;
}

} // namespace

CollocationSystem assemble(const SplineSpace& space, int dprime, const ScalarField& f, const ScalarField& g)
{
    if (dprime <= space.degree) throw ValidationError("collocation degree must exceed spline degree");
    CollocationSystem sys;
    sys.points = collocation_points(*space.mesh, dprime);
    sys.K = basis_rows(space, sys.points.interior, RowKind::Laplacian);
    sys.Bmat = basis_rows(space, sys.points.boundary, RowKind::Value);
    sys.fvec = sample(sys.points.interior, f);
    sys.Gvec = sample(sys.points.boundary, g);
    return sys;
}

struct LeastSquaresSolver::Factor {
    Eigen::SPQR<Eigen::SparseMatrix<double>> qr;
};

LeastSquaresSolver::LeastSquaresSolver(const CollocationSystem& sys, const SparseMatrix& H, SolveConfig cfg)
    : cfg_(cfg), K_(sys.K), n_smooth_rows_(H.rows()), factor_(std::make_unique<Factor>())
{
    if (!(cfg_.mu > 0.0)) throw ValidationError("interior weight mu must be positive");
    const long n = K_.cols();
    if (sys.Bmat.cols() != n || H.cols() != n) throw ValidationError("collocation blocks disagree on column count");

    const double w = std::sqrt(cfg_.mu);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(K_.nonZeros() + sys.Bmat.nonZeros() + H.nonZeros()));
    long row0 = 0;
    auto append = [&](const SparseMatrix& m, double scale) {
        for (Eigen::Index r = 0; r < m.outerSize(); ++r)
            for (SparseMatrix::InnerIterator it(m, r); it; ++it)
                trip.emplace_back(static_cast<int>(row0 + r), static_cast<int>(it.col()), scale * it.value());
        row0 += m.rows();
    };
    append(K_, w);
    append(sys.Bmat, 1.0);
    append(H, 1.0);
    A_.resize(row0, n);
    A_.setFromTriplets(trip.begin(), trip.end());
    A_.makeCompressed();

    Eigen::SparseMatrix<double> scaled = A_;
    col_scale_ = Eigen::VectorXd::Ones(n);
    for (Eigen::Index c = 0; c < scaled.outerSize(); ++c) {
        double norm2 = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(scaled, c); it; ++it) norm2 += it.value() * it.value();
        if (norm2 > 0.0) col_scale_[c] = 1.0 / std::sqrt(norm2);
        for (Eigen::SparseMatrix<double>::InnerIterator it(scaled, c); it; ++it) it.valueRef() *= col_scale_[c];
    }
    scaled.makeCompressed();
    factor_->qr.setSPQROrdering(SPQR_ORDERING_METIS);  // far less fill than COLAMD on these stacks
    factor_->qr.compute(scaled);
    if (factor_->qr.info() != Eigen::Success) throw SolverError("sparse QR factorization failed");
}

LeastSquaresSolver::~LeastSquaresSolver() = default;

long LeastSquaresSolver::rank() const { return static_cast<long>(factor_->qr.rank()); }

Eigen::VectorXd LeastSquaresSolver::stacked_rhs(const Eigen::VectorXd& fvec, const Eigen::VectorXd& Gvec) const
{
    Eigen::VectorXd b = Eigen::VectorXd::Zero(A_.rows());
    b.head(fvec.size()) = std::sqrt(cfg_.mu) * fvec;
    b.segment(fvec.size(), Gvec.size()) = Gvec;
    return b;
}

Eigen::VectorXd LeastSquaresSolver::solve(const Eigen::VectorXd& fvec, const Eigen::VectorXd& Gvec,
                                          SolveReport* report) const
{
    if (fvec.size() != K_.rows() || Gvec.size() != A_.rows() - K_.rows() - n_smooth_rows_) {
        throw ValidationError("right-hand side sizes do not match the collocation system");
    }
    const Eigen::VectorXd b = stacked_rhs(fvec, Gvec);
    Eigen::VectorXd y = factor_->qr.solve(b);
    if (factor_->qr.info() != Eigen::Success) throw SolverError("sparse QR solve failed");
    Eigen::VectorXd c = col_scale_.cwiseProduct(y);

    // Refinement: while the normal-equation residual |A^T (A c - b)| exceeds
    // ls_tol relative to |A^T b|, solve for the least-squares correction of the
    // current residual with the same factor.
    const double atb = (A_.transpose() * b).lpNorm<Eigen::Infinity>();
    auto optimality = [&](const Eigen::VectorXd& r) {
        const double ne = (A_.transpose() * r).lpNorm<Eigen::Infinity>();
        return atb > 0.0 ? ne / atb : ne;
    };
    Eigen::VectorXd r = b - A_ * c;
    double opt = optimality(r);
    int steps = 0;
    while (opt > cfg_.ls_tol && steps < 3) {
        c += col_scale_.cwiseProduct(factor_->qr.solve(r));
        r = b - A_ * c;
        opt = optimality(r);
        ++steps;
    }

    if (report) {
        report->kc_residual_inf = fvec.size() ? (K_ * c - fvec).lpNorm<Eigen::Infinity>() : 0.0;
        report->exceeds_eps1 = report->kc_residual_inf > cfg_.eps1;
        report->rank = rank();
        report->columns = A_.cols();
        report->refinement_steps = steps;
        report->normal_residual = opt;
        report->warnings.clear();
        if (report->rank < report->columns) {
            report->warnings.push_back("collocation least-squares matrix is numerically rank deficient (rank "
                                       + std::to_string(report->rank) + " of " + std::to_string(report->columns)
                                       + "); returned a basic solution");
        }
    }
    return c;
}

Eigen::VectorXd solve_ls(const CollocationSystem& sys, const SparseMatrix& H, const SolveConfig& cfg,
                         SolveReport* report)
{
    LeastSquaresSolver solver(sys, H, cfg);
    return solver.solve(sys.fvec, sys.Gvec, report);
}

Spline poisson_solve(std::shared_ptr<const SplineSpace> space, const ScalarField& f, const ScalarField& g,
                     int dprime, const SolveConfig& cfg, SolveReport* report)
{
    const auto sys = assemble(*space, dprime, f, g);
    Eigen::VectorXd c = solve_ls(sys, space->H, cfg, report);
    return Spline(std::move(space), std::move(c));
}

} // namespace ma3d
