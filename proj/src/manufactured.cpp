#include "hho/manufactured.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace hho {

namespace {

constexpr double pi = std::numbers::pi;

/// n-th derivative of sin^2(pi t) = (1 - cos(2 pi t)) / 2.
double sin2_derivative(int n, double t)
{
    if (n == 0) return 0.5 * (1.0 - std::cos(2.0 * pi * t));
    return -0.5 * std::pow(2.0 * pi, n) * std::cos(2.0 * pi * t + n * pi / 2.0);
}

/// n-th derivative of exp(-(t - 1/2)^2), n <= 4, through Hermite polynomials.
double gauss_derivative(int n, double t)
{
    const double s = t - 0.5;
    const double e = std::exp(-s * s);
    switch (n) {
    case 0: return e;
    case 1: return -2.0 * s * e;
    case 2: return (4.0 * s * s - 2.0) * e;
    case 3: return (-8.0 * s * s * s + 12.0 * s) * e;
    case 4: return (16.0 * s * s * s * s - 48.0 * s * s + 12.0) * e;
    default: throw std::out_of_range("gauss_derivative: order above 4");
    }
}

double falling(int a, int n)
{
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= a - i;
    return r;
}

}  // namespace

Eigen::Matrix2d Manufactured::hessian(const Point& x) const
{
    Eigen::Matrix2d h;
    h(0, 0) = d(2, 0, x);
    h(0, 1) = h(1, 0) = d(1, 1, x);
    h(1, 1) = d(0, 2, x);
    return h;
}

SmoothFunction Manufactured::smooth() const
{
    const Manufactured self = *this;
    return {[self](const Point& x) { return self.u(x); }, [self](const Point& x) { return self.grad(x); },
            [self](const Point& x) { return self.hessian(x); }};
}

Manufactured sine_squared()
{
    Manufactured m;
    m.id = 1;
    m.name = "sin2";
    m.d = [](int a, int b, const Point& x) { return sin2_derivative(a, x.x()) * sin2_derivative(b, x.y()); };
    return m;
}

Manufactured sine_squared_plus_gaussian()
{
    Manufactured m;
    m.id = 2;
    m.name = "sin2-gauss";
    m.d = [](int a, int b, const Point& x) {
        return sin2_derivative(a, x.x()) * sin2_derivative(b, x.y()) +
               gauss_derivative(a, x.x()) * gauss_derivative(b, x.y());
    };
    return m;
}

Manufactured polynomial_solution(int degree)
{
    if (degree < 0) throw std::invalid_argument("polynomial_solution: negative degree");
    struct Term {
        int a, b;
        double c;
    };
    std::vector<Term> terms;
    for (int s = 0; s <= degree; ++s)
        for (int b = 0; b <= s; ++b) {
            const int a = s - b;
            double c = 0.25 * ((3 * a + 5 * b) % 7 - 3);
            if (b == 0 && a == degree) c += 1.0;
            if (c != 0.0) terms.push_back({a, b, c});
        }
    Manufactured m;
    m.id = 3;
    m.name = "poly" + std::to_string(degree);
    m.d = [terms](int i, int j, const Point& x) {
        double sum = 0.0;
        for (const Term& t : terms) {
            if (t.a < i || t.b < j) continue;
            sum += t.c * falling(t.a, i) * falling(t.b, j) * std::pow(x.x(), t.a - i) * std::pow(x.y(), t.b - j);
        }
        return sum;
    };
    return m;
}

Manufactured exponential(double a, double b)
{
    Manufactured m;
    m.id = 0;
    m.name = "exp";
    m.d = [a, b](int i, int j, const Point& x) { return std::pow(a, i) * std::pow(b, j) * std::exp(a * x.x() + b * x.y()); };
    return m;
}

Manufactured manufactured_case(int id, int k)
{
    switch (id) {
    case 1: return sine_squared();
    case 2: return sine_squared_plus_gaussian();
    case 3: return polynomial_solution(k + 2);
    default: throw std::invalid_argument("unknown manufactured case " + std::to_string(id));
    }
}

}  // namespace hho
