#include "hho/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace hho {

double QuadratureRule::total_weight() const
{
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

GaussLegendre gauss_legendre(int n)
{
    if (n < 1 || n > 30) throw std::out_of_range("gauss_legendre: n must lie in [1, 30]");
    GaussLegendre rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    rule.exact_degree = 2 * n - 1;
    // Newton iteration on P_n from the Chebyshev-like initial guesses; nodes are
    // symmetric so only half are computed.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute the derivative at the converged node.
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= n; ++j) {
            const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = -x;
        rule.nodes[hi] = x;
        rule.weights[lo] = w;
        rule.weights[hi] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

GaussLegendre segment_rule(int n_points, double a, double b)
{
    GaussLegendre rule = gauss_legendre(n_points);
    const double half = 0.5 * (b - a);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        rule.nodes[i] = a + half * (rule.nodes[i] + 1.0);
        rule.weights[i] *= half;
    }
    return rule;
}

QuadratureRule segment_rule(const Point& p0, const Point& p1, int degree)
{
    const int n = std::max(1, degree / 2 + 1);
    const GaussLegendre gl = gauss_legendre(n);
    const double half = 0.5 * (p1 - p0).norm();
    QuadratureRule rule;
    rule.exact_degree = gl.exact_degree;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        rule.points.push_back(0.5 * (p0 + p1) + 0.5 * gl.nodes[i] * (p1 - p0));
        rule.weights.push_back(gl.weights[i] * half);
    }
    return rule;
}

QuadratureRule triangle_rule(const std::array<Point, 3>& tri, int degree)
{
    // Duffy map from the square: the collapsed direction carries an extra
    // linear Jacobian factor, hence one more point there.
    const int n_a = std::max(1, degree / 2 + 1);
    const int n_b = std::max(1, (degree + 1) / 2 + 1);
    const GaussLegendre ga = gauss_legendre(n_a);
    const GaussLegendre gb = gauss_legendre(n_b);
    const double area = std::abs(signed_area(tri[0], tri[1], tri[2]));
    QuadratureRule rule;
    rule.exact_degree = std::min(2 * n_a - 1, 2 * n_b - 2);
    rule.points.reserve(static_cast<std::size_t>(n_a * n_b));
    rule.weights.reserve(static_cast<std::size_t>(n_a * n_b));
    for (std::size_t j = 0; j < gb.nodes.size(); ++j) {
        const double v = 0.5 * (gb.nodes[j] + 1.0);  // collapsed coordinate
        for (std::size_t i = 0; i < ga.nodes.size(); ++i) {
            const double u = 0.5 * (ga.nodes[i] + 1.0);
            const double l1 = u * (1.0 - v);
            const double l2 = v;
            rule.points.push_back(tri[0] + l1 * (tri[1] - tri[0]) + l2 * (tri[2] - tri[0]));
            // Reference triangle area 1/2 maps to `area`; Jacobian (1 - v).
            rule.weights.push_back(0.25 * ga.weights[i] * gb.weights[j] * (1.0 - v) * 2.0 * area);
        }
    }
    return rule;
}

QuadratureRule cell_rule(const Mesh& mesh, std::size_t cell_id, int degree)
{
    if (degree < 0) throw std::invalid_argument("cell_rule: degree must be non-negative");
    const SubTriangulation sub = subtriangulate(mesh, cell_id);
    QuadratureRule rule;
    rule.exact_degree = degree;
    for (const auto& tri : sub.triangles) {
        const QuadratureRule t = triangle_rule(tri, degree);
        rule.exact_degree = t.exact_degree;
        rule.points.insert(rule.points.end(), t.points.begin(), t.points.end());
        rule.weights.insert(rule.weights.end(), t.weights.begin(), t.weights.end());
    }
    return rule;
}

QuadratureRule face_rule(const Mesh& mesh, std::size_t face_id, int degree)
{
    const Face& f = mesh.face(face_id);
    return segment_rule(mesh.vertex(f.vertices[0]), mesh.vertex(f.vertices[1]), degree);
}

}  // namespace hho
