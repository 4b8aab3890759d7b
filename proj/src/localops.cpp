#include "hho/localops.hpp"

#include <cmath>
#include <stdexcept>

namespace hho {

std::string to_string(Variant v)
{
    switch (v) {
    case Variant::A: return "A";
    case Variant::B: return "B";
    case Variant::C: return "C";
    }
    return "?";
}

std::string to_string(BcMode m) { return m == BcMode::Strong ? "strong" : "nitsche"; }

std::string to_string(StabScaling s)
{
    switch (s) {
    case StabScaling::Plain: return "plain";
    case StabScaling::K2All: return "k2-all";
    case StabScaling::K2Hm1Only: return "k2-hm1-only";
    }
    return "?";
}

int cell_degree(Variant v, int k) { return v == Variant::C ? k + 1 : k + 2; }
int trace_degree(Variant v, int k) { return v == Variant::B ? k + 2 : k + 1; }
int dofs_per_interface(Variant v, int k) { return trace_degree(v, k) + 1 + k + 1; }

LocalDofLayout LocalDofLayout::make(const Mesh& mesh, std::size_t cell, Variant variant, int k, BcMode bc)
{
    if (k < 0) throw std::invalid_argument("LocalDofLayout: k must be non-negative");
    if (bc == BcMode::Nitsche && variant == Variant::C)
        throw std::invalid_argument("LocalDofLayout: Nitsche mode supports variants A and B only");
    LocalDofLayout l;
    l.variant = variant;
    l.k = k;
    l.nitsche = bc == BcMode::Nitsche;
    l.cell_dim = poly_dim(cell_degree(variant, k));
    l.trace_dim = trace_degree(variant, k) + 1;
    l.normal_dim = k + 1;
    const Cell& c = mesh.cell(cell);
    const std::size_t nf = c.faces.size();
    l.trace_offset.assign(nf, -1);
    l.normal_offset.assign(nf, -1);
    int offset = l.cell_dim;
    for (std::size_t i = 0; i < nf; ++i) {
        if (l.nitsche && mesh.face(c.faces[i]).is_boundary()) continue;
        l.trace_offset[i] = offset;
        offset += l.trace_dim;
    }
    for (std::size_t i = 0; i < nf; ++i) {
        if (l.trace_offset[i] < 0) continue;
        l.normal_offset[i] = offset;
        offset += l.normal_dim;
    }
    l.total = offset;
    return l;
}

LocalContext::LocalContext(const Mesh& mesh, std::size_t cell, const Discretization& disc)
    : mesh_(&mesh),
      cell_(cell),
      disc_(disc),
      layout_(LocalDofLayout::make(mesh, cell, disc.variant, disc.k, disc.bc)),
      basis_(mesh, cell, disc.k + 2),
      h_(mesh.cell(cell).diameter)
{
    const int k = disc.k;
    cell_rule_ = hho::cell_rule(mesh, cell, volume_degree());
    const Cell& c = mesh.cell(cell);
    faces_.reserve(c.faces.size());
    for (std::size_t i = 0; i < c.faces.size(); ++i) {
        const std::size_t fid = c.faces[i];
        const Face& f = mesh.face(fid);
        LocalFace lf(FaceBasis(mesh, fid, trace_degree(disc.variant, k)), FaceBasis(mesh, fid, k));
        lf.face = fid;
        lf.sign = c.signs[i];
        lf.n = lf.sign * f.normal;
        lf.t = f.tangent;
        lf.boundary = f.is_boundary();
        lf.active = layout_.active(i);
        lf.rule = face_rule(mesh, fid, face_degree());
        if (disc.variant != Variant::B) lf.interp.emplace(lf.trace_basis, k, lf.rule);
        const auto npts = static_cast<Eigen::Index>(lf.rule.size());
        lf.trace_values.resize(npts, lf.trace_basis.size());
        lf.trace_dt.resize(npts, lf.trace_basis.size());
        lf.normal_values.resize(npts, lf.normal_basis.size());
        lf.traces.reserve(lf.rule.size());
        for (Eigen::Index q = 0; q < npts; ++q) {
            const Point& x = lf.rule.points[static_cast<std::size_t>(q)];
            lf.traces.push_back(point_traces(basis_, x, lf.n, lf.t));
            lf.trace_values.row(q) = lf.trace_basis.eval(x).transpose();
            lf.trace_dt.row(q) = lf.trace_basis.dt(x).transpose();
            lf.normal_values.row(q) = lf.normal_basis.eval(x).transpose();
        }
        lf.trace_mass = mass_matrix(lf.trace_basis, lf.rule);
        lf.normal_mass = mass_matrix(lf.normal_basis, lf.rule);
        faces_.push_back(std::move(lf));
    }

    const int nr = basis_.size();
    gram_ = MatrixXd::Zero(nr, nr);
    mass_ = MatrixXd::Zero(nr, nr);
    for (std::size_t q = 0; q < cell_rule_.size(); ++q) {
        const Point& x = cell_rule_.points[q];
        const double w = cell_rule_.weights[q];
        const auto hs = basis_.hessian(x);
        const VectorXd phi = basis_.eval(x);
        gram_.noalias() += w * (hs.col(0) * hs.col(0).transpose() + 2.0 * hs.col(1) * hs.col(1).transpose() +
                                hs.col(2) * hs.col(2).transpose());
        mass_.noalias() += w * phi * phi.transpose();
    }
}

int LocalContext::volume_degree() const { return 2 * (disc_.k + 2) + disc_.volume_extra_degree; }
int LocalContext::face_degree() const { return 2 * (disc_.k + 2) + 1 + disc_.face_extra_degree; }

bool LocalContext::has_boundary_face() const
{
    for (const auto& f : faces_)
        if (f.boundary) return true;
    return false;
}

StabFactors stab_factors(StabScaling scaling, int k)
{
    const double s = (k + 1.0) * (k + 1.0);
    switch (scaling) {
    case StabScaling::Plain: return {1.0, 1.0, 1.0};
    case StabScaling::K2All: return {s, s, s};
    case StabScaling::K2Hm1Only: return {1.0, 1.0, s};
    }
    return {};
}

MatrixXd solve_bordered(const LocalContext& ctx, const MatrixXd& rhs, const MatrixXd& moments)
{
    const MatrixXd& G = ctx.hessian_gram();
    const Eigen::Index nr = G.rows();
    MatrixXd K = MatrixXd::Zero(nr + 3, nr + 3);
    K.topLeftCorner(nr, nr) = G;
    K.topRightCorner(nr, 3) = ctx.mass().topRows(3).transpose();
    K.bottomLeftCorner(3, nr) = ctx.mass().topRows(3);
    MatrixXd b(nr + 3, rhs.cols());
    b.topRows(nr) = rhs;
    b.bottomRows(3) = moments;
    const Eigen::PartialPivLU<MatrixXd> lu(K);
    return lu.solve(b).topRows(nr);
}

MatrixXd build_reconstruction(const LocalContext& ctx) { return build_reconstruction(ctx, ctx.disc().path); }

MatrixXd build_reconstruction(const LocalContext& ctx, ReconstructionPath path)
{
    const LocalDofLayout& L = ctx.layout();
    const CellBasis& basis = ctx.basis();
    const int nr = basis.size();
    const int nc = L.cell_dim;
    MatrixXd B = MatrixXd::Zero(nr, L.total);
    const QuadratureRule& rule = ctx.cell_rule();

    if (path == ReconstructionPath::IntegrationByParts) {
        if (basis.degree() >= 4) {
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const Point& x = rule.points[q];
                const VectorXd bilap = basis.derivative(4, 0, x) + 2.0 * basis.derivative(2, 2, x) + basis.derivative(0, 4, x);
                B.leftCols(nc).noalias() += rule.weights[q] * bilap * basis.eval(x).head(nc).transpose();
            }
        }
    } else {
        B.leftCols(nc) = ctx.hessian_gram().leftCols(nc);
    }

    for (std::size_t i = 0; i < ctx.faces().size(); ++i) {
        const LocalFace& f = ctx.faces()[i];
        if (!f.active && !(L.nitsche && f.boundary)) continue;
        for (std::size_t q = 0; q < f.rule.size(); ++q) {
            const double w = f.rule.weights[q];
            const PointTraces& tr = f.traces[q];
            const auto qi = static_cast<Eigen::Index>(q);
            if (path == ReconstructionPath::CellTerms) {
                if (f.active) {
                    B.leftCols(nc).noalias() += w * (tr.dn_lap * tr.value.head(nc).transpose() -
                                                     tr.dnn * tr.dn.head(nc).transpose() -
                                                     tr.dnt * tr.dt.head(nc).transpose());
                } else {
                    B.leftCols(nc).noalias() += w * (tr.dn_lap * tr.value.head(nc).transpose() -
                                                     tr.hn * tr.grad.topRows(nc).transpose());
                }
            }
            if (!f.active) continue;
            B.middleCols(L.trace_offset[i], L.trace_dim).noalias() +=
                w * (-tr.dn_lap * f.trace_values.row(qi) + tr.dnt * f.trace_dt.row(qi));
            B.middleCols(L.normal_offset[i], L.normal_dim).noalias() += w * tr.dnn * f.normal_values.row(qi);
        }
    }

    MatrixXd moments = MatrixXd::Zero(3, L.total);
    moments.leftCols(nc) = ctx.mass().topLeftCorner(3, nc);
    return solve_bordered(ctx, B, moments);
}

namespace {

/// Trace-space coefficients of the reconstruction basis functions on a face:
/// J^{k+1}_F for variants A and C, the L2 projection for variant B.
MatrixXd face_trace_operator(const LocalContext& ctx, const LocalFace& f)
{
    const CellBasis& basis = ctx.basis();
    const auto npts = static_cast<Eigen::Index>(f.rule.size());
    MatrixXd values(npts, basis.size());
    for (Eigen::Index q = 0; q < npts; ++q) values.row(q) = f.traces[static_cast<std::size_t>(q)].value.transpose();
    if (f.interp) {
        MatrixXd ends(2, basis.size());
        ends.row(0) = basis.eval(f.interp->endpoints()[0]).transpose();
        ends.row(1) = basis.eval(f.interp->endpoints()[1]).transpose();
        return f.interp->from_dofs(f.interp->dofs(ends, values));
    }
    MatrixXd moments = MatrixXd::Zero(f.trace_basis.size(), basis.size());
    for (Eigen::Index q = 0; q < npts; ++q)
        moments.noalias() += f.rule.weights[static_cast<std::size_t>(q)] * f.trace_values.row(q).transpose() * values.row(q);
    return f.trace_mass.llt().solve(moments);
}

/// Pi^k_F of the normal derivative of each reconstruction basis function.
MatrixXd face_normal_operator(const LocalContext& ctx, const LocalFace& f)
{
    MatrixXd moments = MatrixXd::Zero(f.normal_basis.size(), ctx.basis().size());
    for (std::size_t q = 0; q < f.rule.size(); ++q)
        moments.noalias() += f.rule.weights[q] * f.normal_values.row(static_cast<Eigen::Index>(q)).transpose() *
                             f.traces[q].dn.transpose();
    return f.normal_mass.llt().solve(moments);
}

}  // namespace

MatrixXd build_stabilization(const LocalContext& ctx, const MatrixXd& R)
{
    const LocalDofLayout& L = ctx.layout();
    const int nr = ctx.basis().size();
    const int nc = L.cell_dim;
    const StabFactors sf = stab_factors(ctx.disc().scaling, L.k);
    const double h = ctx.h();
    MatrixXd S = MatrixXd::Zero(L.total, L.total);

    // Map from local unknowns to the polynomial compared against face unknowns.
    MatrixXd X;
    if (L.variant == Variant::C) {
        X = R;
        const MatrixXd Mcc = ctx.mass().topLeftCorner(nc, nc);
        const MatrixXd P = Mcc.llt().solve(ctx.mass().topRows(nc));
        MatrixXd D0 = -P * R;
        D0.leftCols(nc) += MatrixXd::Identity(nc, nc);
        S.noalias() += sf.hm4 * std::pow(h, -4) * D0.transpose() * Mcc * D0;
    } else {
        X = MatrixXd::Zero(nr, L.total);
        X.topLeftCorner(nc, nc).setIdentity();
    }

    for (std::size_t i = 0; i < ctx.faces().size(); ++i) {
        const LocalFace& f = ctx.faces()[i];
        if (!f.active) continue;
        MatrixXd D1 = -face_trace_operator(ctx, f) * X;
        D1.middleCols(L.trace_offset[i], L.trace_dim) += MatrixXd::Identity(L.trace_dim, L.trace_dim);
        MatrixXd D2 = -face_normal_operator(ctx, f) * X;
        D2.middleCols(L.normal_offset[i], L.normal_dim) += MatrixXd::Identity(L.normal_dim, L.normal_dim);
        S.noalias() += sf.hm3 * std::pow(h, -3) * D1.transpose() * f.trace_mass * D1;
        S.noalias() += sf.hm1 / h * D2.transpose() * f.normal_mass * D2;
    }
    return S;
}

MatrixXd build_boundary_penalty(const LocalContext& ctx)
{
    const LocalDofLayout& L = ctx.layout();
    const int nc = L.cell_dim;
    MatrixXd Sb = MatrixXd::Zero(nc, nc);
    if (!L.nitsche) return Sb;
    const StabFactors sf = stab_factors(ctx.disc().scaling, L.k);
    const double c3 = sf.hm3 * std::pow(ctx.h(), -3);
    const double c1 = sf.hm1 / ctx.h();
    for (const LocalFace& f : ctx.faces()) {
        if (!f.boundary) continue;
        for (std::size_t q = 0; q < f.rule.size(); ++q) {
            const PointTraces& tr = f.traces[q];
            const auto v = tr.value.head(nc);
            const auto g = tr.grad.topRows(nc);
            Sb.noalias() += f.rule.weights[q] * (c3 * v * v.transpose() + c1 * g * g.transpose());
        }
    }
    return Sb;
}

int kernel_dimension(const MatrixXd& A, double rel_tol)
{
    VectorXd d = A.diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = d[i] > 0 ? 1.0 / std::sqrt(d[i]) : 1.0;
    const MatrixXd As = d.asDiagonal() * A * d.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (As + As.transpose()), Eigen::EigenvaluesOnly);
    const VectorXd& ev = es.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    int count = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev[i] < rel_tol * top) ++count;
    return count;
}

LocalOperators build_local_matrices(const LocalContext& ctx, bool check_kernel)
{
    LocalOperators ops;
    ops.cell = ctx.cell();
    ops.layout = ctx.layout();
    ops.G = ctx.hessian_gram();
    ops.R = build_reconstruction(ctx);
    ops.S = build_stabilization(ctx, ops.R);
    const bool penalized = ctx.layout().nitsche && ctx.has_boundary_face();
    if (penalized) {
        ops.Sb = build_boundary_penalty(ctx);
        const int nc = ctx.layout().cell_dim;
        ops.S.topLeftCorner(nc, nc) += ops.Sb;
    }
    ops.A = ops.R.transpose() * ops.G * ops.R + ops.S;
    ops.A = 0.5 * (ops.A + ops.A.transpose()).eval();
    if (check_kernel) {
        const int expected = penalized ? 0 : 3;
        const int found = kernel_dimension(ops.A);
        if (found != expected)
            throw std::runtime_error("local matrix of cell " + std::to_string(ctx.cell()) + " has kernel dimension " +
                                     std::to_string(found) + ", expected " + std::to_string(expected));
    }
    return ops;
}

LocalOperators build_local_matrices(const Mesh& mesh, std::size_t cell, const Discretization& disc)
{
    return build_local_matrices(LocalContext(mesh, cell, disc));
}

VectorXd reduce(const LocalContext& ctx, const SmoothFunction& v, int extra_degree)
{
    const LocalDofLayout& L = ctx.layout();
    const Mesh& mesh = ctx.mesh();
    VectorXd out = VectorXd::Zero(L.total);
    const CellBasis cb(ctx.basis().center(), ctx.basis().scale(), cell_degree(L.variant, L.k));
    out.head(L.cell_dim) = project(cb, cell_rule(mesh, ctx.cell(), ctx.volume_degree() + extra_degree), v.value);
    for (std::size_t i = 0; i < ctx.faces().size(); ++i) {
        const LocalFace& f = ctx.faces()[i];
        if (!f.active) continue;
        const QuadratureRule rule = face_rule(mesh, f.face, ctx.face_degree() + extra_degree);
        if (f.interp)
            out.segment(L.trace_offset[i], L.trace_dim) = CanonicalInterpolator(f.trace_basis, L.k, rule).interpolate(v.value);
        else
            out.segment(L.trace_offset[i], L.trace_dim) = project(f.trace_basis, rule, v.value);
        const Vector2 n = f.n;
        out.segment(L.normal_offset[i], L.normal_dim) =
            project(f.normal_basis, rule, [&](const Point& x) { return n.dot(v.gradient(x)); });
    }
    return out;
}

VectorXd elliptic_projection(const LocalContext& ctx, const SmoothFunction& v, int extra_degree)
{
    const CellBasis& basis = ctx.basis();
    const QuadratureRule rule = cell_rule(ctx.mesh(), ctx.cell(), ctx.volume_degree() + extra_degree);
    MatrixXd rhs = MatrixXd::Zero(basis.size(), 1);
    MatrixXd moments = MatrixXd::Zero(3, 1);
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const Point& x = rule.points[q];
        const Eigen::Matrix2d H = v.hessian(x);
        const auto hs = basis.hessian(x);
        rhs.col(0) += rule.weights[q] * (hs.col(0) * H(0, 0) + 2.0 * hs.col(1) * H(0, 1) + hs.col(2) * H(1, 1));
        moments.col(0) += rule.weights[q] * v.value(x) * basis.eval(x).head(3);
    }
    return solve_bordered(ctx, rhs, moments).col(0);
}

MatrixXd seminorm_matrix(const LocalContext& ctx)
{
    const LocalDofLayout& L = ctx.layout();
    const int nc = L.cell_dim;
    const double h = ctx.h();
    MatrixXd N = MatrixXd::Zero(L.total, L.total);
    N.topLeftCorner(nc, nc) = ctx.hessian_gram().topLeftCorner(nc, nc);
    for (std::size_t i = 0; i < ctx.faces().size(); ++i) {
        const LocalFace& f = ctx.faces()[i];
        for (std::size_t q = 0; q < f.rule.size(); ++q) {
            const PointTraces& tr = f.traces[q];
            const double w = f.rule.weights[q];
            const auto qi = static_cast<Eigen::Index>(q);
            if (f.active) {
                VectorXd a = VectorXd::Zero(L.total);
                a.head(nc) = -tr.value.head(nc);
                a.segment(L.trace_offset[i], L.trace_dim) = f.trace_values.row(qi).transpose();
                VectorXd b = VectorXd::Zero(L.total);
                b.head(nc) = -tr.dn.head(nc);
                b.segment(L.normal_offset[i], L.normal_dim) = f.normal_values.row(qi).transpose();
                N.noalias() += w * (std::pow(h, -3) * a * a.transpose() + b * b.transpose() / h);
            } else if (L.nitsche && f.boundary) {
                const auto v = tr.value.head(nc);
                const auto g = tr.grad.topRows(nc);
                N.topLeftCorner(nc, nc).noalias() += w * (std::pow(h, -3) * v * v.transpose() + g * g.transpose() / h);
            }
        }
    }
    return N;
}

VectorXd nitsche_data_functional(const LocalContext& ctx, const SmoothFunction& u)
{
    const CellBasis& basis = ctx.basis();
    VectorXd q = VectorXd::Zero(basis.size());
    for (const LocalFace& f : ctx.faces()) {
        if (!f.boundary) continue;
        const QuadratureRule rule = face_rule(ctx.mesh(), f.face, ctx.face_degree() + ctx.disc().rhs_extra_degree);
        for (std::size_t p = 0; p < rule.size(); ++p) {
            const Point& x = rule.points[p];
            const PointTraces tr = point_traces(basis, x, f.n, f.t);
            q.noalias() += rule.weights[p] * (u.value(x) * tr.dn_lap - tr.hn * u.gradient(x));
        }
    }
    return q;
}

VectorXd lifting(const LocalContext& ctx, const SmoothFunction& u)
{
    if (!ctx.has_boundary_face()) return VectorXd::Zero(ctx.basis().size());
    const VectorXd q = nitsche_data_functional(ctx, u);
    return solve_bordered(ctx, -q, MatrixXd::Zero(3, 1)).col(0);
}

VectorXd local_rhs(const LocalContext& ctx, const LocalOperators& ops, const ScalarFunction& f,
                   const SmoothFunction* boundary_data, NitscheRhsPath path)
{
    const LocalDofLayout& L = ctx.layout();
    const int nc = L.cell_dim;
    const CellBasis& basis = ctx.basis();
    VectorXd b = VectorXd::Zero(L.total);
    const QuadratureRule rule = cell_rule(ctx.mesh(), ctx.cell(), ctx.volume_degree() + ctx.disc().rhs_extra_degree);
    for (std::size_t q = 0; q < rule.size(); ++q)
        b.head(nc) += rule.weights[q] * f(rule.points[q]) * basis.eval(rule.points[q]).head(nc);

    if (!L.nitsche || boundary_data == nullptr || !ctx.has_boundary_face()) return b;
    const SmoothFunction& u = *boundary_data;
    const StabFactors sf = stab_factors(ctx.disc().scaling, L.k);
    const double c3 = sf.hm3 * std::pow(ctx.h(), -3);
    const double c1 = sf.hm1 / ctx.h();
    for (const LocalFace& face : ctx.faces()) {
        if (!face.boundary) continue;
        const QuadratureRule fr = face_rule(ctx.mesh(), face.face, ctx.face_degree() + ctx.disc().rhs_extra_degree);
        for (std::size_t p = 0; p < fr.size(); ++p) {
            const Point& x = fr.points[p];
            const auto g = basis.gradient(x);
            b.head(nc) += fr.weights[p] * (c3 * u.value(x) * basis.eval(x).head(nc) + c1 * g.topRows(nc) * u.gradient(x));
        }
    }
    if (path == NitscheRhsPath::DataTerms)
        b += ops.R.transpose() * nitsche_data_functional(ctx, u);
    else
        b -= ops.R.transpose() * (ops.G * lifting(ctx, u));
    return b;
}

}  // namespace hho
