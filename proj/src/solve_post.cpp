#include "hho/solve_post.hpp"

#include <chrono>
#include <cmath>
#include <algorithm>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "hho/parallel.hpp"

namespace hho {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double relative_residual(const SparseMatrix& K, const VectorXd& x, const VectorXd& b)
{
    const double nb = b.norm();
    const double nr = (K * x - b).norm();
    return nb > 0 ? nr / nb : nr;
}

/// eps || |K| |x| || / ||b||: the residual any rounded solution can reach.
double rounding_floor(const SparseMatrix& K, const VectorXd& x, const VectorXd& b)
{
    VectorXd ax = VectorXd::Zero(x.size());
    for (Eigen::Index c = 0; c < K.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(K, c); it; ++it) ax[it.row()] += std::abs(it.value() * x[c]);
    const double nb = b.norm();
    const double eps = std::numeric_limits<double>::epsilon();
    return nb > 0 ? eps * ax.norm() / nb : eps * ax.norm();
}

}  // namespace

VectorXd solve(const SparseMatrix& K, const VectorXd& b, const SolveConfig& config, SolveInfo* info)
{
    const auto t0 = std::chrono::steady_clock::now();
    if (K.rows() != K.cols() || K.rows() != b.size()) throw std::invalid_argument("solve: dimension mismatch");
    if (!(config.cg_tol > 0)) throw std::invalid_argument("solve: cg_tol must be positive");
    VectorXd x = VectorXd::Zero(b.size());
    SolveInfo local;
    if (b.size() == 0) {
        if (info) *info = local;
        return x;
    }
    if (config.method == SolverMethod::Direct) {
        Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt(K);
        if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorization failed: matrix is not SPD");
        x = llt.solve(b);
        local.residual = relative_residual(K, x, b);
        // Iterative refinement with the same factor; stops once it stagnates.
        for (int step = 0; step < 5 && local.residual > 1e-13; ++step) {
            const VectorXd candidate = x + llt.solve(b - K * x);
            const double r = relative_residual(K, candidate, b);
            if (!(r < 0.5 * local.residual)) break;
            x = candidate;
            local.residual = r;
            local.iterations = step + 1;
        }
        // A fourth-order operator cancels about h^-4 per row, so the rounding
        // floor eps |K||x| can exceed 1e-10 |b| on fine meshes.
        const double limit = std::max(1e-10, 64.0 * rounding_floor(K, x, b));
        if (!(local.residual <= limit)) {
            std::ostringstream msg;
            msg << "direct solve residual " << local.residual << " exceeds " << limit;
            throw NumericalError(msg.str());
        }
    } else {
        Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg(K);
        cg.setTolerance(config.cg_tol);
        cg.setMaxIterations(config.max_iters > 0 ? config.max_iters : static_cast<int>(10 * b.size()));
        x = cg.solve(b);
        local.iterations = static_cast<int>(cg.iterations());
        local.residual = relative_residual(K, x, b);
        if (cg.info() != Eigen::Success)
            throw NumericalError("conjugate gradient did not converge after " + std::to_string(cg.iterations()) +
                                 " iterations (residual " + std::to_string(local.residual) + ")");
    }
    local.seconds = seconds_since(t0);
    if (info) *info = local;
    return x;
}

VectorXd solve(const CondensedSystem& sys, const SolveConfig& config, SolveInfo* info)
{
    return solve(sys.K, sys.rhs, config, info);
}

Field reconstruct_field(const CondensedSystem& sys, const std::vector<VectorXd>& locals, bool add_lifting)
{
    if (locals.size() != sys.cells.size()) throw std::invalid_argument("reconstruct_field: cell count mismatch");
    Field field;
    field.reserve(locals.size());
    for (std::size_t c = 0; c < locals.size(); ++c) {
        VectorXd p = sys.cells[c].R * locals[c];
        if (add_lifting && sys.cells[c].lift.size() == p.size()) p += sys.cells[c].lift;
        field.push_back(std::move(p));
    }
    return field;
}

ErrorNorms error_norms(const Mesh& mesh, const Field& field, int degree, const Manufactured& u, int quad_degree,
                       int threads)
{
    if (field.size() != mesh.num_cells()) throw std::invalid_argument("error_norms: field size mismatch");
    struct Sums {
        double h2 = 0, l2 = 0, h2u = 0, l2u = 0;
    };
    std::vector<Sums> per_cell(mesh.num_cells());
    parallel_for(mesh.num_cells(), threads, [&](std::size_t c) {
        const CellBasis basis(mesh, c, degree);
        const QuadratureRule rule = cell_rule(mesh, c, quad_degree);
        Sums s;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Point& x = rule.points[q];
            const double w = rule.weights[q];
            const auto hs = basis.hessian(x);
            const Eigen::Vector3d hp = hs.transpose() * field[c];
            const Eigen::Matrix2d H = u.hessian(x);
            const double exx = H(0, 0) - hp[0], exy = H(0, 1) - hp[1], eyy = H(1, 1) - hp[2];
            const double uv = u.u(x);
            const double e = uv - basis.eval(x).dot(field[c]);
            s.h2 += w * (exx * exx + 2 * exy * exy + eyy * eyy);
            s.l2 += w * e * e;
            s.h2u += w * (H(0, 0) * H(0, 0) + 2 * H(0, 1) * H(0, 1) + H(1, 1) * H(1, 1));
            s.l2u += w * uv * uv;
        }
        per_cell[c] = s;
    });
    Sums total;
    for (const Sums& s : per_cell) {
        total.h2 += s.h2;
        total.l2 += s.l2;
        total.h2u += s.h2u;
        total.l2u += s.l2u;
    }
    ErrorNorms out;
    out.h2_abs = std::sqrt(total.h2);
    out.l2_abs = std::sqrt(total.l2);
    out.h2_exact = std::sqrt(total.h2u);
    out.l2_exact = std::sqrt(total.l2u);
    return out;
}

double sharp_norm_projection_error(const Mesh& mesh, int k, const Manufactured& u, int quad_degree)
{
    double sum = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const CellBasis basis(mesh, c, k + 2);
        const QuadratureRule rule = cell_rule(mesh, c, quad_degree);
        const VectorXd p = project(basis, rule, [&](const Point& x) { return u.u(x); });
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Point& x = rule.points[q];
            const Eigen::Vector3d hp = basis.hessian(x).transpose() * p;
            const Eigen::Matrix2d H = u.hessian(x);
            const double exx = H(0, 0) - hp[0], exy = H(0, 1) - hp[1], eyy = H(1, 1) - hp[2];
            sum += rule.weights[q] * (exx * exx + 2 * exy * exy + eyy * eyy);
        }
        const Cell& cell = mesh.cell(c);
        const double h = cell.diameter;
        for (std::size_t i = 0; i < cell.faces.size(); ++i) {
            const Face& f = mesh.face(cell.faces[i]);
            const Vector2 n = cell.signs[i] * f.normal;
            const QuadratureRule fr = face_rule(mesh, cell.faces[i], quad_degree);
            for (std::size_t q = 0; q < fr.size(); ++q) {
                const Point& x = fr.points[q];
                const PointTraces tr = point_traces(basis, x, n, f.tangent);
                const Eigen::Matrix2d H = u.hessian(x);
                const Vector2 glap(u.d(3, 0, x) + u.d(1, 2, x), u.d(2, 1, x) + u.d(0, 3, x));
                const double e_nlap = n.dot(glap) - tr.dn_lap.dot(p);
                const double e_nn = n.dot(H * n) - tr.dnn.dot(p);
                const double e_nt = n.dot(H * f.tangent) - tr.dnt.dot(p);
                sum += fr.weights[q] * (h * h * h * e_nlap * e_nlap + h * e_nn * e_nn + h * e_nt * e_nt);
            }
        }
    }
    return std::sqrt(sum);
}

ErrorReport run_case(const Mesh& mesh, const Discretization& disc, const Manufactured& u, const RunOptions& opts,
                     Field* field_out)
{
    const BoundaryData bd{[u](const Point& x) { return u.u(x); }, [u](const Point& x) { return u.grad(x); }};
    AssemblyOptions aopts;
    aopts.threads = opts.threads;
    const CondensedSystem sys = assemble(mesh, disc, [u](const Point& x) { return u.f(x); }, bd, aopts);
    SolveInfo info;
    const VectorXd x = solve(sys, opts.solver, &info);
    const Field field = reconstruct_field(sys, recover_cells(sys, x));
    const ErrorNorms e = error_norms(mesh, field, disc.k + 2, u, 2 * (disc.k + 2) + opts.error_extra_degree, opts.threads);
    ErrorReport r;
    r.h_max = mesh.h_max();
    r.dofs = sys.dofs.num_free;
    r.err_h2_rel = e.h2_rel();
    r.err_l2_rel = e.l2_rel();
    r.assembly_s = sys.assembly_seconds;
    r.solve_s = info.seconds;
    if (field_out) *field_out = field;
    return r;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y, std::size_t count)
{
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_slope: need at least two points");
    const std::size_t n = std::min(count, x.size());
    const std::size_t first = x.size() - n;
    double mx = 0, my = 0;
    for (std::size_t i = first; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0;
    for (std::size_t i = first; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

void compute_slopes(RateTable& table)
{
    if (table.levels.size() < 2) return;
    std::vector<double> lh, ld, le2, lel;
    for (const auto& r : table.levels) {
        lh.push_back(std::log(r.h_max));
        ld.push_back(-0.5 * std::log(static_cast<double>(std::max(r.dofs, 1))));
        le2.push_back(std::log(r.err_h2_rel));
        lel.push_back(std::log(r.err_l2_rel));
    }
    table.slope_h2 = fit_slope(lh, le2);
    table.slope_l2 = fit_slope(lh, lel);
    table.slope_h2_dofs = fit_slope(ld, le2);
    table.slope_l2_dofs = fit_slope(ld, lel);
}

RateTable convergence_study(const std::vector<Mesh>& family, const Discretization& disc, const Manufactured& u,
                            const RunOptions& opts)
{
    RateTable table;
    for (std::size_t i = 0; i < family.size(); ++i) {
        ErrorReport r = run_case(family[i], disc, u, opts);
        r.level = static_cast<int>(i);
        table.levels.push_back(r);
    }
    compute_slopes(table);
    return table;
}

void write_rate_csv(std::ostream& out, const RateTable& table, bool include_timing)
{
    out << "level,h_max,dofs,err_h2_rel,err_l2_rel,slope_h2,slope_l2,assembly_s,solve_s\n";
    out << std::setprecision(10);
    for (std::size_t i = 0; i < table.levels.size(); ++i) {
        const ErrorReport& r = table.levels[i];
        out << r.level << ',' << r.h_max << ',' << r.dofs << ',' << r.err_h2_rel << ',' << r.err_l2_rel << ',';
        if (i > 0) {
            const ErrorReport& p = table.levels[i - 1];
            const double dh = std::log(r.h_max / p.h_max);
            out << std::log(r.err_h2_rel / p.err_h2_rel) / dh << ',' << std::log(r.err_l2_rel / p.err_l2_rel) / dh;
        } else {
            out << ',';
        }
        out << ',';
        if (include_timing)
            out << r.assembly_s << ',' << r.solve_s;
        else
            out << "0,0";
        out << '\n';
    }
}

}  // namespace hho
