#include "hho/polyspace.hpp"

#include <cmath>
#include <stdexcept>

namespace hho {

namespace {

/// a (a - 1) ... (a - n + 1)
double falling(int a, int n)
{
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= a - i;
    return r;
}

template <typename Basis>
MatrixXd face_or_cell_mass(const Basis& basis, const QuadratureRule& rule)
{
    MatrixXd m = MatrixXd::Zero(basis.size(), basis.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const VectorXd phi = basis.eval(rule.points[q]);
        m.noalias() += rule.weights[q] * phi * phi.transpose();
    }
    return m;
}

template <typename Basis>
VectorXd l2_project(const Basis& basis, const QuadratureRule& rule, const ScalarFunction& v)
{
    // Weighted least squares on the quadrature nodes; equivalent to the mass-matrix
    // normal equations but with the square root of their condition number.
    const Eigen::Index nq = static_cast<Eigen::Index>(rule.size());
    MatrixXd a(nq, basis.size());
    VectorXd b(nq);
    for (Eigen::Index q = 0; q < nq; ++q) {
        const double sw = std::sqrt(rule.weights[q]);
        a.row(q) = sw * basis.eval(rule.points[q]).transpose();
        b[q] = sw * v(rule.points[q]);
    }
    const Eigen::ColPivHouseholderQR<MatrixXd> qr(a);
    if (qr.rank() < basis.size()) throw std::runtime_error("project: singular mass matrix");
    return qr.solve(b);
}

}  // namespace

std::vector<Monomial> monomials(int m)
{
    std::vector<Monomial> out;
    out.reserve(static_cast<std::size_t>(poly_dim(m)));
    for (int d = 0; d <= m; ++d)
        for (int b = 0; b <= d; ++b) out.push_back({d - b, b});
    return out;
}

CellBasis::CellBasis(const Point& center, double scale, int degree)
    : center_(center), scale_(scale), degree_(degree), exps_(monomials(degree))
{
    if (degree < 0 || degree > 15) throw std::invalid_argument("CellBasis: degree must lie in [0, 15]");
    if (!(scale > 0)) throw std::invalid_argument("CellBasis: scale must be positive");
}

CellBasis::CellBasis(const Mesh& mesh, std::size_t cell, int degree)
    : CellBasis(mesh.cell(cell).centroid, mesh.cell(cell).diameter, degree)
{
}

VectorXd CellBasis::derivative(int a, int b, const Point& x) const
{
    const double X = (x.x() - center_.x()) / scale_;
    const double Y = (x.y() - center_.y()) / scale_;
    double px[16], py[16];
    px[0] = py[0] = 1.0;
    for (int i = 1; i <= degree_; ++i) {
        px[i] = px[i - 1] * X;
        py[i] = py[i - 1] * Y;
    }
    const double factor = std::pow(scale_, -(a + b));
    VectorXd out(size());
    for (int i = 0; i < size(); ++i) {
        const auto [p, q] = exps_[static_cast<std::size_t>(i)];
        if (p < a || q < b) {
            out[i] = 0.0;
            continue;
        }
        out[i] = factor * falling(p, a) * falling(q, b) * px[p - a] * py[q - b];
    }
    return out;
}

Eigen::Matrix<double, Eigen::Dynamic, 2> CellBasis::gradient(const Point& x) const
{
    Eigen::Matrix<double, Eigen::Dynamic, 2> g(size(), 2);
    g.col(0) = derivative(1, 0, x);
    g.col(1) = derivative(0, 1, x);
    return g;
}

Eigen::Matrix<double, Eigen::Dynamic, 3> CellBasis::hessian(const Point& x) const
{
    Eigen::Matrix<double, Eigen::Dynamic, 3> h(size(), 3);
    h.col(0) = derivative(2, 0, x);
    h.col(1) = derivative(1, 1, x);
    h.col(2) = derivative(0, 2, x);
    return h;
}

PointTraces point_traces(const CellBasis& basis, const Point& x, const Vector2& n, const Vector2& t)
{
    PointTraces tr;
    tr.value = basis.eval(x);
    tr.grad = basis.gradient(x);
    const auto h = basis.hessian(x);
    tr.dn = tr.grad * n;
    tr.dt = tr.grad * t;
    tr.hn.resize(basis.size(), 2);
    tr.hn.col(0) = h.col(0) * n.x() + h.col(1) * n.y();
    tr.hn.col(1) = h.col(1) * n.x() + h.col(2) * n.y();
    tr.dnn = tr.hn * n;
    tr.dnt = tr.hn * t;
    if (basis.degree() >= 3) {
        const VectorXd lap_x = basis.derivative(3, 0, x) + basis.derivative(1, 2, x);
        const VectorXd lap_y = basis.derivative(2, 1, x) + basis.derivative(0, 3, x);
        tr.dn_lap = n.x() * lap_x + n.y() * lap_y;
    } else {
        tr.dn_lap = VectorXd::Zero(basis.size());
    }
    return tr;
}

FaceBasis::FaceBasis(const Point& a, const Point& b, int degree)
    : mid_(0.5 * (a + b)), tangent_((b - a).normalized()), length_((b - a).norm()), degree_(degree)
{
    if (degree < 0) throw std::invalid_argument("FaceBasis: negative degree");
    if (!(length_ > 0)) throw std::invalid_argument("FaceBasis: degenerate face");
}

FaceBasis::FaceBasis(const Mesh& mesh, std::size_t face, int degree)
    : FaceBasis(mesh.vertex(mesh.face(face).vertices[0]), mesh.vertex(mesh.face(face).vertices[1]), degree)
{
}

VectorXd FaceBasis::eval_xi(double xi) const
{
    VectorXd out(size());
    double p = 1.0;
    for (int i = 0; i <= degree_; ++i) {
        out[i] = p;
        p *= xi;
    }
    return out;
}

VectorXd FaceBasis::dt(const Point& x) const
{
    const double xi = coordinate(x);
    VectorXd out = VectorXd::Zero(size());
    double p = 1.0;
    for (int i = 1; i <= degree_; ++i) {
        out[i] = i * p * 2.0 / length_;
        p *= xi;
    }
    return out;
}

MatrixXd mass_matrix(const CellBasis& basis, const QuadratureRule& rule) { return face_or_cell_mass(basis, rule); }
MatrixXd mass_matrix(const FaceBasis& basis, const QuadratureRule& rule) { return face_or_cell_mass(basis, rule); }

VectorXd project(const CellBasis& basis, const QuadratureRule& rule, const ScalarFunction& v)
{
    return l2_project(basis, rule, v);
}

VectorXd project(const FaceBasis& basis, const QuadratureRule& rule, const ScalarFunction& v)
{
    return l2_project(basis, rule, v);
}

double evaluate(const CellBasis& basis, const VectorXd& coeffs, const Point& x) { return basis.eval(x).dot(coeffs); }
double evaluate(const FaceBasis& basis, const VectorXd& coeffs, const Point& x) { return basis.eval(x).dot(coeffs); }

VectorXd tangential_derivative(const FaceBasis& basis, const VectorXd& coeffs)
{
    const int m = basis.degree();
    VectorXd out(m);
    for (int i = 0; i < m; ++i) out[i] = (i + 1) * coeffs[i + 1] * 2.0 / basis.length();
    return out;
}

CanonicalInterpolator::CanonicalInterpolator(const FaceBasis& basis, int k, const QuadratureRule& rule,
                                             MomentWeights weights)
    : basis_(basis), k_(k), rule_(rule), weights_(weights)
{
    if (basis.degree() != k + 1) throw std::invalid_argument("CanonicalInterpolator: basis degree must be k+1");
    const double half = 0.5 * basis.length();
    ends_ = {basis.midpoint() - half * basis.tangent(), basis.midpoint() + half * basis.tangent()};
    MatrixXd ev(2, basis.size());
    ev.row(0) = basis.eval_xi(-1.0).transpose();
    ev.row(1) = basis.eval_xi(1.0).transpose();
    MatrixXd pv(rule.size(), basis.size());
    for (std::size_t q = 0; q < rule.size(); ++q) pv.row(static_cast<Eigen::Index>(q)) = basis.eval(rule.points[q]).transpose();
    lu_.compute(dofs(ev, pv));
}

VectorXd CanonicalInterpolator::weight_values(double xi) const
{
    VectorXd w(k_);
    if (k_ == 0) return w;
    if (weights_ == MomentWeights::Monomial) {
        double p = 1.0;
        for (int i = 0; i < k_; ++i) {
            w[i] = p;
            p *= xi;
        }
        return w;
    }
    w[0] = 1.0;
    if (k_ > 1) w[1] = xi;
    for (int i = 2; i < k_; ++i) w[i] = ((2.0 * i - 1.0) * xi * w[i - 1] - (i - 1.0) * w[i - 2]) / i;
    return w;
}

MatrixXd CanonicalInterpolator::dofs(const MatrixXd& endpoint_values, const MatrixXd& point_values) const
{
    MatrixXd d(k_ + 2, endpoint_values.cols());
    d.topRows(2) = endpoint_values;
    if (k_ > 0) {
        MatrixXd w(k_, rule_.size());
        for (std::size_t q = 0; q < rule_.size(); ++q)
            w.col(static_cast<Eigen::Index>(q)) = rule_.weights[q] * weight_values(basis_.coordinate(rule_.points[q]));
        d.bottomRows(k_) = w * point_values;
    }
    return d;
}

VectorXd CanonicalInterpolator::dofs(const ScalarFunction& v) const
{
    MatrixXd ev(2, 1);
    ev << v(ends_[0]), v(ends_[1]);
    MatrixXd pv(rule_.size(), 1);
    for (std::size_t q = 0; q < rule_.size(); ++q) pv(static_cast<Eigen::Index>(q), 0) = v(rule_.points[q]);
    return dofs(ev, pv).col(0);
}

MatrixXd CanonicalInterpolator::from_dofs(const MatrixXd& d) const { return lu_.solve(d); }

VectorXd CanonicalInterpolator::interpolate(const ScalarFunction& v) const { return from_dofs(dofs(v)).col(0); }

FaceTrace trace_on_face(const Mesh& mesh, std::size_t cell, std::size_t face, const CellBasis& basis,
                        const VectorXd& coeffs, const QuadratureRule& rule)
{
    const int local = mesh.local_face_index(cell, face);
    if (local < 0) throw std::invalid_argument("trace_on_face: face is not on the cell");
    const Face& f = mesh.face(face);
    const Vector2 n = mesh.cell(cell).signs[static_cast<std::size_t>(local)] * f.normal;
    FaceTrace out;
    const auto npts = static_cast<Eigen::Index>(rule.size());
    out.value.resize(npts);
    out.dn.resize(npts);
    out.dnn.resize(npts);
    out.dnt.resize(npts);
    out.dn_lap.resize(npts);
    for (Eigen::Index q = 0; q < npts; ++q) {
        const PointTraces tr = point_traces(basis, rule.points[static_cast<std::size_t>(q)], n, f.tangent);
        out.value[q] = tr.value.dot(coeffs);
        out.dn[q] = tr.dn.dot(coeffs);
        out.dnn[q] = tr.dnn.dot(coeffs);
        out.dnt[q] = tr.dnt.dot(coeffs);
        out.dn_lap[q] = tr.dn_lap.dot(coeffs);
    }
    return out;
}

}  // namespace hho
