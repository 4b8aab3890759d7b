#pragma once

#include <functional>
#include <string>

#include "hho/function.hpp"

namespace hho {

/// Exact solution given through all partial derivatives up to order 4.
struct Manufactured {
    int id = 0;
    std::string name;
    /// d(a, b, x) = d^{a+b} u / dx^a dy^b at x, for a + b <= 4.
    std::function<double(int, int, const Point&)> d;

    double u(const Point& x) const { return d(0, 0, x); }
    Vector2 grad(const Point& x) const { return {d(1, 0, x), d(0, 1, x)}; }
    Eigen::Matrix2d hessian(const Point& x) const;
    /// Bilaplacian of u, the load f.
    double f(const Point& x) const { return d(4, 0, x) + 2.0 * d(2, 2, x) + d(0, 4, x); }
    SmoothFunction smooth() const;
};

/// Case 1: sin^2(pi x) sin^2(pi y), homogeneous data on the unit square.
Manufactured sine_squared();
/// Case 2: case 1 plus exp(-(x-1/2)^2 - (y-1/2)^2), non-homogeneous data.
Manufactured sine_squared_plus_gaussian();
/// Polynomial of total degree exactly `degree` with fixed coefficients.
Manufactured polynomial_solution(int degree);
/// exp(a x + b y), used by operator tests.
Manufactured exponential(double a, double b);

/// Registry lookup: 1, 2, or 3 (polynomial of degree k + 2).
Manufactured manufactured_case(int id, int k);

}  // namespace hho
