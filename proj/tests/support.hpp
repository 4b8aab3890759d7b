#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "hho/assembly.hpp"
#include "hho/manufactured.hpp"
#include "hho/mesh.hpp"

namespace testing {

using hho::Mesh;
using hho::Point;

/// Convex pentagon with jittered angles and radii around (0.5, 0.5).
inline Mesh pentagon(unsigned seed)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.25, 0.25), radius(0.3, 0.45);
    std::vector<Point> v;
    for (int i = 0; i < 5; ++i) {
        const double a = 2.0 * std::numbers::pi * (i + jitter(rng)) / 5.0;
        const double r = radius(rng);
        v.emplace_back(0.5 + r * std::cos(a), 0.5 + r * std::sin(a));
    }
    return Mesh::from_polygons(v, {{0, 1, 2, 3, 4}});
}

/// Single cell with the given counterclockwise vertices.
inline Mesh single_cell(std::vector<Point> v)
{
    std::vector<std::size_t> loop(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) loop[i] = i;
    return Mesh::from_polygons(std::move(v), {loop});
}

/// v = c1 exp(a.x) + c2 sin(b.x + phi) with random parameters.
inline hho::SmoothFunction random_smooth(std::mt19937& rng)
{
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const Eigen::Vector2d a(u(rng), u(rng)), b(u(rng), u(rng));
    const double c1 = u(rng), c2 = u(rng), phi = u(rng);
    hho::SmoothFunction f;
    f.value = [=](const Point& x) { return c1 * std::exp(a.dot(x)) + c2 * std::sin(b.dot(x) + phi); };
    f.gradient = [=](const Point& x) -> hho::Vector2 {
        return c1 * std::exp(a.dot(x)) * a + c2 * std::cos(b.dot(x) + phi) * b;
    };
    f.hessian = [=](const Point& x) -> Eigen::Matrix2d {
        return c1 * std::exp(a.dot(x)) * a * a.transpose() - c2 * std::sin(b.dot(x) + phi) * b * b.transpose();
    };
    return f;
}

/// Random polynomial of total degree <= m in global coordinates.
inline hho::SmoothFunction random_polynomial(int m, std::mt19937& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::array<double, 3>> terms;  // a, b, c
    for (int s = 0; s <= m; ++s)
        for (int b = 0; b <= s; ++b) terms.push_back({double(s - b), double(b), u(rng)});
    auto pw = [](double x, double e) { return e < 0 ? 0.0 : std::pow(x, e); };
    hho::SmoothFunction f;
    f.value = [=](const Point& x) {
        double s = 0;
        for (auto [a, b, c] : terms) s += c * pw(x.x(), a) * pw(x.y(), b);
        return s;
    };
    f.gradient = [=](const Point& x) -> hho::Vector2 {
        hho::Vector2 g = hho::Vector2::Zero();
        for (auto [a, b, c] : terms) {
            g.x() += c * a * pw(x.x(), a - 1) * pw(x.y(), b);
            g.y() += c * b * pw(x.x(), a) * pw(x.y(), b - 1);
        }
        return g;
    };
    f.hessian = [=](const Point& x) -> Eigen::Matrix2d {
        Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
        for (auto [a, b, c] : terms) {
            h(0, 0) += c * a * (a - 1) * pw(x.x(), a - 2) * pw(x.y(), b);
            h(0, 1) += c * a * b * pw(x.x(), a - 1) * pw(x.y(), b - 1);
            h(1, 1) += c * b * (b - 1) * pw(x.x(), a) * pw(x.y(), b - 2);
        }
        h(1, 0) = h(0, 1);
        return h;
    };
    return f;
}

inline long double binom(int n, int k)
{
    long double r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// Integral of x^a y^b over a polygon by Green's theorem, x^a y^b = d/dx (x^{a+1} y^b / (a+1)),
/// with each edge integral expanded in closed form.
inline double polygon_monomial(const std::vector<Point>& poly, int a, int b)
{
    // Extended precision: the expansion cancels for high degrees.
    long double total = 0;
    for (std::size_t e = 0; e < poly.size(); ++e) {
        const Point p = poly[e], q = poly[(e + 1) % poly.size()];
        const long double px = p.x(), py = p.y(), dx = (long double)q.x() - px, dy = (long double)q.y() - py;
        long double edge = 0;
        for (int i = 0; i <= a + 1; ++i)
            for (int j = 0; j <= b; ++j)
                edge += binom(a + 1, i) * std::pow(px, a + 1 - i) * std::pow(dx, i) * binom(b, j) *
                        std::pow(py, b - j) * std::pow(dy, j) / (i + j + 1);
        total += edge * dy / (a + 1);
    }
    return static_cast<double>(total);
}

inline std::vector<Point> cell_polygon(const Mesh& m, std::size_t c)
{
    std::vector<Point> out;
    for (std::size_t v : m.cell(c).vertices) out.push_back(m.vertex(v));
    return out;
}

inline hho::BoundaryData boundary_data(const hho::Manufactured& u)
{
    return {[u](const Point& x) { return u.u(x); }, [u](const Point& x) { return u.grad(x); }};
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    const double n = std::max(a.norm(), b.norm());
    return n > 0 ? (a - b).norm() / n : 0.0;
}

}  // namespace testing
