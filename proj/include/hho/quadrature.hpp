#pragma once

#include <vector>

#include "hho/mesh.hpp"

namespace hho {

/// Points and positive weights exact for polynomials up to exact_degree.
struct QuadratureRule {
    std::vector<Point> points;
    std::vector<double> weights;
    int exact_degree = 0;

    std::size_t size() const { return weights.size(); }
    double total_weight() const;
};

/// Gauss-Legendre rule on (-1, 1) with n points, 1 <= n <= 30.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
    int exact_degree = 0;
};
GaussLegendre gauss_legendre(int n_points);

/// Gauss-Legendre rule on the segment [a, b] of the real line.
GaussLegendre segment_rule(int n_points, double a = 0.0, double b = 1.0);

/// Rule on the straight segment p0-p1 exact to `degree`.
QuadratureRule segment_rule(const Point& p0, const Point& p1, int degree);

/// Collapsed tensor Gauss rule on a triangle, exact to `degree`.
QuadratureRule triangle_rule(const std::array<Point, 3>& tri, int degree);

/// Composite rule over the sub-triangulation of a cell.
QuadratureRule cell_rule(const Mesh& mesh, std::size_t cell_id, int degree);

/// Rule on a mesh face exact to `degree`.
QuadratureRule face_rule(const Mesh& mesh, std::size_t face_id, int degree);

}  // namespace hho
