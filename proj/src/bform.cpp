#include "ma3d/bform.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace ma3d {

MultiIndexSet::MultiIndexSet(int degree) : degree_(degree)
{
    if (degree < 0 || degree > kMaxLatticeDegree + 1) {
        throw ValidationError("multi-index degree out of range: " + std::to_string(degree));
    }
    const int d = degree;
    lookup_.assign(static_cast<std::size_t>((d + 1) * (d + 1) * (d + 1)), -1);
    for (int i = d; i >= 0; --i) {
        for (int j = d - i; j >= 0; --j) {
            for (int k = d - i - j; k >= 0; --k) {
                lookup_[static_cast<std::size_t>((i * (d + 1) + j) * (d + 1) + k)] = static_cast<int>(indices_.size());
                indices_.push_back({i, j, k, d - i - j - k});
            }
        }
    }
    std::vector<double> fact(static_cast<std::size_t>(d + 1), 1.0);
    for (int n = 1; n <= d; ++n) fact[static_cast<std::size_t>(n)] = fact[static_cast<std::size_t>(n - 1)] * n;
    multinomial_.reserve(indices_.size());
    for (const auto& m : indices_) {
        multinomial_.push_back(fact[static_cast<std::size_t>(d)]
                               / (fact[static_cast<std::size_t>(m.i)] * fact[static_cast<std::size_t>(m.j)]
                                  * fact[static_cast<std::size_t>(m.k)] * fact[static_cast<std::size_t>(m.l)]));
    }
    // Raised positions are computed arithmetically against the d+1 ordering so
    // the tables do not recurse into one another.
    auto index_up = [d](int i, int j, int k) {
        const int e = d + 1;
        int n = 0;
        for (int ii = e; ii > i; --ii) n += (e - ii + 1) * (e - ii + 2) / 2;
        for (int jj = e - i; jj > j; --jj) n += e - i - jj + 1;
        n += (e - i - j) - k;
        return n;
    };
    for (int m = 0; m < 4; ++m) {
        auto& tab = raised_[static_cast<std::size_t>(m)];
        tab.reserve(indices_.size());
        for (const auto& a : indices_) {
            tab.push_back(index_up(a.i + (m == 0), a.j + (m == 1), a.k + (m == 2)));
        }
    }
}

int MultiIndexSet::index_of(int i, int j, int k) const
{
    const int d = degree_;
    if (i < 0 || j < 0 || k < 0 || i + j + k > d) return -1;
    return lookup_[static_cast<std::size_t>((i * (d + 1) + j) * (d + 1) + k)];
}

const MultiIndexSet& multi_indices(int degree)
{
    static const std::vector<std::unique_ptr<MultiIndexSet>> tables = [] {
        std::vector<std::unique_ptr<MultiIndexSet>> t;
        for (int d = 0; d <= kMaxLatticeDegree; ++d) t.push_back(std::make_unique<MultiIndexSet>(d));
        return t;
    }();
    if (degree < 0 || degree > kMaxLatticeDegree) {
        throw ValidationError("degree out of range: " + std::to_string(degree));
    }
    return *tables[static_cast<std::size_t>(degree)];
}

TetFrame::TetFrame(const std::array<Vec3, 4>& v) : v_(v)
{
    Mat3 m;
    m.col(0) = v[0] - v[3];
    m.col(1) = v[1] - v[3];
    m.col(2) = v[2] - v[3];
    const double det = m.determinant();
    const double scale = longest_edge();
    if (!(std::abs(det) > 1e-14 * scale * scale * scale)) {
        throw Error("degenerate tetrahedron: singular barycentric system");
    }
    inv_ = m.inverse();
    for (int r = 0; r < 3; ++r) grad_[static_cast<std::size_t>(r)] = inv_.row(r).transpose();
    grad_[3] = -(grad_[0] + grad_[1] + grad_[2]);
    signed_volume_ = (v[1] - v[0]).cross(v[2] - v[0]).dot(v[3] - v[0]) / 6.0;
}

Bary TetFrame::barycentric(const Vec3& p) const
{
    const Vec3 b = inv_ * (p - v_[3]);
    return {b[0], b[1], b[2], 1.0 - b[0] - b[1] - b[2]};
}

Vec3 TetFrame::point(const Bary& b) const
{
    return b[0] * v_[0] + b[1] * v_[1] + b[2] * v_[2] + b[3] * v_[3];
}

double TetFrame::longest_edge() const
{
    double e = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int c = a + 1; c < 4; ++c)
            e = std::max(e, (v_[static_cast<std::size_t>(a)] - v_[static_cast<std::size_t>(c)]).norm());
    return e;
}

double TetFrame::inradius() const
{
    double area = 0.0;
    for (int f = 0; f < 4; ++f) {
        std::array<Vec3, 3> t;
        int n = 0;
        for (int m = 0; m < 4; ++m)
            if (m != f) t[static_cast<std::size_t>(n++)] = v_[static_cast<std::size_t>(m)];
        area += 0.5 * (t[1] - t[0]).cross(t[2] - t[0]).norm();
    }
    return 3.0 * std::abs(signed_volume_) / area;
}

Bary barycentric(const std::array<Vec3, 4>& tet, const Vec3& p)
{
    Eigen::Matrix4d sys;
    Eigen::Vector4d rhs;
    sys.row(0).setOnes();
    for (int c = 0; c < 4; ++c) sys.block<3, 1>(1, c) = tet[static_cast<std::size_t>(c)];
    rhs << 1.0, p;
    Eigen::FullPivLU<Eigen::Matrix4d> lu(sys);
    double diam = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int c = a + 1; c < 4; ++c)
            diam = std::max(diam, (tet[static_cast<std::size_t>(a)] - tet[static_cast<std::size_t>(c)]).norm());
    lu.setThreshold(1e-14);
    if (!lu.isInvertible() || diam == 0.0) throw Error("degenerate tetrahedron: singular barycentric system");
    const Eigen::Vector4d b = lu.solve(rhs);
    return {b[0], b[1], b[2], b[3]};
}

std::vector<Vec3> domain_points(const std::array<Vec3, 4>& tet, int d)
{
    if (d < 1) throw ValidationError("domain points need degree >= 1");
    const auto& set = multi_indices(d);
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(set.size()));
    for (const auto& m : set.all()) {
        pts.push_back((m.i * tet[0] + m.j * tet[1] + m.k * tet[2] + m.l * tet[3]) / static_cast<double>(d));
    }
    return pts;
}

void eval_basis(int degree, const Bary& b, std::span<double> out)
{
    const auto& set = multi_indices(degree);
    if (out.size() < static_cast<std::size_t>(set.size())) throw ValidationError("basis output span too short");
    std::array<std::array<double, kMaxLatticeDegree + 1>, 4> pw{};
    for (std::size_t m = 0; m < 4; ++m) {
        pw[m][0] = 1.0;
        for (int e = 1; e <= degree; ++e) pw[m][static_cast<std::size_t>(e)] = pw[m][static_cast<std::size_t>(e - 1)] * b[m];
    }
    for (int n = 0; n < set.size(); ++n) {
        const auto& a = set[n];
        out[static_cast<std::size_t>(n)] = set.multinomial(n) * pw[0][static_cast<std::size_t>(a.i)]
                                         * pw[1][static_cast<std::size_t>(a.j)] * pw[2][static_cast<std::size_t>(a.k)]
                                         * pw[3][static_cast<std::size_t>(a.l)];
    }
}

std::vector<double> eval_basis(int degree, const Bary& b)
{
    std::vector<double> out(static_cast<std::size_t>(basis_size(degree)));
    eval_basis(degree, b, out);
    return out;
}

namespace {

void check_spline_degree(int degree, std::size_t span_size)
{
    if (degree < 0 || degree > kMaxSplineDegree) {
        throw ValidationError("spline degree out of range: " + std::to_string(degree));
    }
    if (span_size < static_cast<std::size_t>(basis_size(degree))) {
        throw ValidationError("coefficient span shorter than the degree-" + std::to_string(degree) + " basis");
    }
}

} // namespace

DerivBundle eval_polynomial(std::span<const double> coef, int degree, const TetFrame& frame, const Bary& b)
{
    check_spline_degree(degree, coef.size());
    DerivBundle out;
    const int d = degree;
    std::array<double, basis_size(kMaxSplineDegree)> basis{};

    eval_basis(d, b, basis);
    for (int n = 0; n < basis_size(d); ++n) out.value += coef[static_cast<std::size_t>(n)] * basis[static_cast<std::size_t>(n)];
    if (d < 1) return out;

    const auto& s1 = multi_indices(d - 1);
    eval_basis(d - 1, b, basis);
    for (int m = 0; m < 4; ++m) {
        double acc = 0.0;
        for (int n = 0; n < s1.size(); ++n)
            acc += coef[static_cast<std::size_t>(s1.raised(m, n))] * basis[static_cast<std::size_t>(n)];
        out.gradient += (d * acc) * frame.grad(m);
    }
    if (d < 2) return out;

    const auto& s2 = multi_indices(d - 2);
    eval_basis(d - 2, b, basis);
    std::array<std::array<double, 4>, 4> second{};
    for (int n = 0; n < s2.size(); ++n) {
        const double bn = basis[static_cast<std::size_t>(n)];
        for (int m = 0; m < 4; ++m) {
            const int up = s2.raised(m, n);
            for (int q = m; q < 4; ++q) {
                second[static_cast<std::size_t>(m)][static_cast<std::size_t>(q)] +=
                    coef[static_cast<std::size_t>(s1.raised(q, up))] * bn;
            }
        }
    }
    const double scale = static_cast<double>(d) * (d - 1);
    for (int m = 0; m < 4; ++m) {
        for (int q = m; q < 4; ++q) {
            const double s = scale * second[static_cast<std::size_t>(m)][static_cast<std::size_t>(q)];
            const Mat3 outer = frame.grad(m) * frame.grad(q).transpose();
            out.hessian += (m == q) ? Mat3(s * outer) : Mat3(s * (outer + outer.transpose()));
        }
    }
    out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
    return out;
}

void basis_second_derivatives(int degree, const TetFrame& frame, const Bary& b, const Mat3& weights,
                              std::span<double> out)
{
    check_spline_degree(degree, out.size());
    const int d = degree;
    std::fill(out.begin(), out.begin() + basis_size(d), 0.0);
    if (d < 2) return;
    std::array<std::array<double, 4>, 4> g{};
    for (int m = 0; m < 4; ++m)
        for (int q = 0; q < 4; ++q)
            g[static_cast<std::size_t>(m)][static_cast<std::size_t>(q)] = frame.grad(m).dot(weights * frame.grad(q));

    const auto& s2 = multi_indices(d - 2);
    const auto& s1 = multi_indices(d - 1);
    std::array<double, basis_size(kMaxSplineDegree)> basis{};
    eval_basis(d - 2, b, basis);
    const double scale = static_cast<double>(d) * (d - 1);
    for (int n = 0; n < s2.size(); ++n) {
        const double bn = scale * basis[static_cast<std::size_t>(n)];
        for (int m = 0; m < 4; ++m) {
            const int up = s2.raised(m, n);
            for (int q = 0; q < 4; ++q) {
                out[static_cast<std::size_t>(s1.raised(q, up))] += g[static_cast<std::size_t>(m)][static_cast<std::size_t>(q)] * bn;
            }
        }
    }
}

std::array<double, 3> symmetric_eigenvalues(const Mat3& a)
{
    // Trigonometric solution of the characteristic cubic.
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double q = a.trace() / 3.0;
    if (p1 <= 1e-300 * (1.0 + q * q)) {
        std::array<double, 3> e{a(0, 0), a(1, 1), a(2, 2)};
        std::sort(e.begin(), e.end(), std::greater<>());
        return e;
    }
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) + (a(2, 2) - q) * (a(2, 2) - q)
                    + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    const Mat3 bm = (a - q * Mat3::Identity()) / p;
    const double r = std::clamp(bm.determinant() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    const double e2 = 3.0 * q - e1 - e3;
    return {e1, e2, e3};
}

} // namespace ma3d
