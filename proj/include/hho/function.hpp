#pragma once

#include <functional>

#include <Eigen/Dense>

#include "hho/mesh.hpp"

namespace hho {

/// A function known through its value, gradient, and Hessian. The Hessian
/// may be left empty when no consumer needs it.
struct SmoothFunction {
    std::function<double(const Point&)> value;
    std::function<Vector2(const Point&)> gradient;
    std::function<Eigen::Matrix2d(const Point&)> hessian;

    double operator()(const Point& x) const { return value(x); }
};

}  // namespace hho
