#pragma once

// Dense reference computations that share no code with the library beyond
// quadrature rules and the basis definitions fixing the coefficient meaning.

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "hho/localops.hpp"
#include "hho/quadrature.hpp"

namespace oracle {

using hho::MatrixXd;
using hho::Point;
using hho::VectorXd;

/// Monomials ((x - c) / s)^a ((y - c) / s)^b with their own derivative code.
struct Monomials {
    Point c;
    double s;
    std::vector<std::pair<int, int>> e;

    Monomials(const Point& center, double scale, int degree) : c(center), s(scale)
    {
        for (int d = 0; d <= degree; ++d)
            for (int b = 0; b <= d; ++b) e.emplace_back(d - b, b);
    }
    int size() const { return static_cast<int>(e.size()); }

    static double dpow(double t, int p, int m)
    {
        if (m > p) return 0.0;
        double f = 1;
        for (int i = 0; i < m; ++i) f *= p - i;
        return f * std::pow(t, p - m);
    }
    VectorXd d(const Point& x, int mx, int my) const
    {
        const double u = (x.x() - c.x()) / s, v = (x.y() - c.y()) / s;
        VectorXd out(size());
        for (int i = 0; i < size(); ++i)
            out[i] = dpow(u, e[i].first, mx) * dpow(v, e[i].second, my) / std::pow(s, mx + my);
        return out;
    }
    double value(const VectorXd& coeffs, const Point& x) const { return d(x, 0, 0).dot(coeffs); }
};

struct Polynomial {
    Monomials basis;
    VectorXd coeffs;
    double operator()(const Point& x) const { return basis.value(coeffs, x); }
};

/// Hessian-elliptic projection onto P^degree(K) with the P^1 moment closure,
/// solved as a constrained dense system.
inline Polynomial elliptic_projection(const hho::Mesh& mesh, std::size_t cell, int degree, const hho::SmoothFunction& v)
{
    const hho::Cell& K = mesh.cell(cell);
    Monomials m(K.centroid, std::sqrt(K.area), degree);
    const hho::QuadratureRule r = hho::cell_rule(mesh, cell, 2 * degree + 12);
    const int n = m.size();
    MatrixXd kkt = MatrixXd::Zero(n + 3, n + 3);
    VectorXd rhs = VectorXd::Zero(n + 3);
    for (std::size_t q = 0; q < r.size(); ++q) {
        const Point& x = r.points[q];
        const double w = r.weights[q];
        const VectorXd hxx = m.d(x, 2, 0), hxy = m.d(x, 1, 1), hyy = m.d(x, 0, 2);
        kkt.topLeftCorner(n, n) += w * (hxx * hxx.transpose() + 2 * hxy * hxy.transpose() + hyy * hyy.transpose());
        const Eigen::Matrix2d H = v.hessian(x);
        rhs.head(n) += w * (hxx * H(0, 0) + 2 * hxy * H(0, 1) + hyy * H(1, 1));
        const Eigen::Vector3d xi(1.0, x.x(), x.y());
        kkt.bottomLeftCorner(3, n) += w * xi * m.d(x, 0, 0).transpose();
        rhs.tail(3) += w * v.value(x) * xi;
    }
    kkt.topRightCorner(n, 3) = kkt.bottomLeftCorner(3, n).transpose();
    return {m, kkt.fullPivLu().solve(rhs).head(n)};
}

/// Canonical hybrid interpolation on the segment [a, b] into the span of
/// `basis` (degree k+1): endpoint values plus moments against s^j, j < k,
/// with s the arclength parameter from a.
inline VectorXd canonical_interpolate(const hho::FaceBasis& basis, const Point& a, const Point& b,
                                      const std::function<double(const Point&)>& v)
{
    const int n = basis.size();
    const int k = n - 2;
    const hho::QuadratureRule r = hho::segment_rule(a, b, 2 * n + 8);
    MatrixXd D = MatrixXd::Zero(n, n);
    VectorXd rhs = VectorXd::Zero(n);
    D.row(0) = basis.eval(a).transpose();
    D.row(1) = basis.eval(b).transpose();
    rhs[0] = v(a);
    rhs[1] = v(b);
    for (int j = 0; j < k; ++j)
        for (std::size_t q = 0; q < r.size(); ++q) {
            const double s = (r.points[q] - a).norm();
            const double wj = r.weights[q] * std::pow(s, j);
            D.row(2 + j) += wj * basis.eval(r.points[q]).transpose();
            rhs[2 + j] += wj * v(r.points[q]);
        }
    return D.fullPivLu().solve(rhs);
}

/// L2 projection on a segment by normal equations on a Gauss rule.
inline VectorXd segment_projection(const hho::FaceBasis& basis, const Point& a, const Point& b,
                                   const std::function<double(const Point&)>& v)
{
    const hho::QuadratureRule r = hho::segment_rule(a, b, 2 * basis.size() + 12);
    MatrixXd M = MatrixXd::Zero(basis.size(), basis.size());
    VectorXd rhs = VectorXd::Zero(basis.size());
    for (std::size_t q = 0; q < r.size(); ++q) {
        const VectorXd phi = basis.eval(r.points[q]);
        M += r.weights[q] * phi * phi.transpose();
        rhs += r.weights[q] * v(r.points[q]) * phi;
    }
    return M.fullPivLu().solve(rhs);
}

/// Stabilization of variants A and B, assembled as a sum over face quadrature
/// points of squared mismatch functions, one column per local unknown.
inline MatrixXd stabilization(const hho::LocalContext& ctx)
{
    const hho::LocalDofLayout& L = ctx.layout();
    const hho::Mesh& mesh = ctx.mesh();
    const hho::Cell& K = mesh.cell(ctx.cell());
    const double h = K.diameter;
    const hho::StabFactors sf = hho::stab_factors(ctx.disc().scaling, L.k);
    const hho::CellBasis cb(mesh, ctx.cell(), hho::cell_degree(L.variant, L.k));
    const int nc = L.cell_dim;
    MatrixXd S = MatrixXd::Zero(L.total, L.total);

    for (std::size_t i = 0; i < K.faces.size(); ++i) {
        if (!L.active(i)) continue;
        const hho::Face& F = mesh.face(K.faces[i]);
        const Point a = mesh.vertex(F.vertices[0]), b = mesh.vertex(F.vertices[1]);
        const hho::Vector2 n = K.signs[i] * F.normal;
        const hho::FaceBasis tb(mesh, K.faces[i], hho::trace_degree(L.variant, L.k));
        const hho::FaceBasis nb(mesh, K.faces[i], L.k);
        // Face-space images of the cell basis functions.
        MatrixXd Tc(tb.size(), nc), Nc(nb.size(), nc);
        for (int j = 0; j < nc; ++j) {
            auto phi = [&](const Point& x) { return cb.eval(x)[j]; };
            auto dphi = [&](const Point& x) { return n.dot(cb.gradient(x).row(j).transpose()); };
            Tc.col(j) = L.variant == hho::Variant::B ? segment_projection(tb, a, b, phi) : canonical_interpolate(tb, a, b, phi);
            Nc.col(j) = segment_projection(nb, a, b, dphi);
        }
        const hho::QuadratureRule r = hho::segment_rule(a, b, 2 * tb.size() + 8);
        for (std::size_t q = 0; q < r.size(); ++q) {
            const VectorXd tv = tb.eval(r.points[q]), nv = nb.eval(r.points[q]);
            VectorXd d1 = VectorXd::Zero(L.total), d2 = VectorXd::Zero(L.total);
            d1.head(nc) = -Tc.transpose() * tv;
            d1.segment(L.trace_offset[i], L.trace_dim) = tv;
            d2.head(nc) = -Nc.transpose() * nv;
            d2.segment(L.normal_offset[i], L.normal_dim) = nv;
            S += r.weights[q] * (sf.hm3 * std::pow(h, -3) * d1 * d1.transpose() + sf.hm1 / h * d2 * d2.transpose());
        }
    }
    return S;
}

}  // namespace oracle
