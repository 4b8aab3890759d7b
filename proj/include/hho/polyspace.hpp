#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "hho/mesh.hpp"
#include "hho/quadrature.hpp"

namespace hho {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using ScalarFunction = std::function<double(const Point&)>;

/// Exponent pair (a, b) of x^a y^b.
struct Monomial {
    int a = 0;
    int b = 0;
};

/// Monomials of total degree <= m, graded: 1, x, y, x^2, xy, y^2, ...
std::vector<Monomial> monomials(int m);

constexpr int poly_dim(int m) { return m < 0 ? 0 : (m + 1) * (m + 2) / 2; }

/// Scaled monomials ((x - x_K) / h_K)^alpha on a cell.
class CellBasis {
public:
    CellBasis(const Point& center, double scale, int degree);
    CellBasis(const Mesh& mesh, std::size_t cell, int degree);

    int degree() const { return degree_; }
    int size() const { return static_cast<int>(exps_.size()); }
    const Point& center() const { return center_; }
    double scale() const { return scale_; }
    const std::vector<Monomial>& exponents() const { return exps_; }

    VectorXd eval(const Point& x) const { return derivative(0, 0, x); }
    /// d^{a+b} / dx^a dy^b of every basis function at x.
    VectorXd derivative(int a, int b, const Point& x) const;
    /// Columns d/dx, d/dy.
    Eigen::Matrix<double, Eigen::Dynamic, 2> gradient(const Point& x) const;
    /// Columns xx, xy, yy.
    Eigen::Matrix<double, Eigen::Dynamic, 3> hessian(const Point& x) const;

private:
    Point center_;
    double scale_;
    int degree_;
    std::vector<Monomial> exps_;
};

/// Directional traces of all cell basis functions at a point, for the
/// boundary terms of the local operators. n is the outward normal, t a unit
/// tangent.
struct PointTraces {
    VectorXd value;
    VectorXd dn;      // n . grad
    VectorXd dt;      // t . grad
    VectorXd dnn;     // n^T H n
    VectorXd dnt;     // n^T H t
    VectorXd dn_lap;  // n . grad(lap)
    MatrixXd hn;      // H n, one row per basis function
    MatrixXd grad;
};
PointTraces point_traces(const CellBasis& basis, const Point& x, const Vector2& n, const Vector2& t);

/// Scaled monomials in the face coordinate xi = 2 (x - x_F).t_F / h_F, which
/// ranges over [-1, 1].
class FaceBasis {
public:
    FaceBasis(const Point& a, const Point& b, int degree);
    FaceBasis(const Mesh& mesh, std::size_t face, int degree);

    int degree() const { return degree_; }
    int size() const { return degree_ + 1; }
    const Point& midpoint() const { return mid_; }
    const Vector2& tangent() const { return tangent_; }
    double length() const { return length_; }

    double coordinate(const Point& x) const { return 2.0 * (x - mid_).dot(tangent_) / length_; }
    VectorXd eval_xi(double xi) const;
    VectorXd eval(const Point& x) const { return eval_xi(coordinate(x)); }
    /// Arclength derivative along the tangent.
    VectorXd dt(const Point& x) const;

private:
    Point mid_;
    Vector2 tangent_;
    double length_;
    int degree_;
};

MatrixXd mass_matrix(const CellBasis& basis, const QuadratureRule& rule);
MatrixXd mass_matrix(const FaceBasis& basis, const QuadratureRule& rule);

/// L2-orthogonal projections. Throws std::runtime_error on a singular mass matrix.
VectorXd project(const CellBasis& basis, const QuadratureRule& rule, const ScalarFunction& v);
VectorXd project(const FaceBasis& basis, const QuadratureRule& rule, const ScalarFunction& v);

double evaluate(const CellBasis& basis, const VectorXd& coeffs, const Point& x);
double evaluate(const FaceBasis& basis, const VectorXd& coeffs, const Point& x);

/// Coefficients of the arclength derivative, in the basis of degree m - 1
/// (empty for m = 0).
VectorXd tangential_derivative(const FaceBasis& basis, const VectorXd& coeffs);

enum class MomentWeights { Monomial, Legendre };

/// Canonical hybrid interpolation onto P^{k+1}(F): endpoint values plus
/// moments against P^{k-1}(F).
class CanonicalInterpolator {
public:
    CanonicalInterpolator(const FaceBasis& basis, int k, const QuadratureRule& rule,
                          MomentWeights weights = MomentWeights::Monomial);

    int k() const { return k_; }
    /// Endpoint values then moments of v.
    VectorXd dofs(const ScalarFunction& v) const;
    /// DoFs of many functions at once: endpoint values (2 x n) and values at
    /// the rule points (npts x n).
    MatrixXd dofs(const MatrixXd& endpoint_values, const MatrixXd& point_values) const;
    MatrixXd from_dofs(const MatrixXd& d) const;
    VectorXd interpolate(const ScalarFunction& v) const;
    const QuadratureRule& rule() const { return rule_; }
    /// Face start and end points, in the order of the endpoint DoFs.
    const std::array<Point, 2>& endpoints() const { return ends_; }

private:
    VectorXd weight_values(double xi) const;

    FaceBasis basis_;
    int k_;
    QuadratureRule rule_;
    MomentWeights weights_;
    std::array<Point, 2> ends_;
    Eigen::PartialPivLU<MatrixXd> lu_;
};

/// Values and directional derivatives of a cell polynomial at face points,
/// with n = sigma_KF n_F and t the face tangent.
struct FaceTrace {
    VectorXd value, dn, dnn, dnt, dn_lap;
};
FaceTrace trace_on_face(const Mesh& mesh, std::size_t cell, std::size_t face, const CellBasis& basis,
                        const VectorXd& coeffs, const QuadratureRule& rule);

}  // namespace hho
