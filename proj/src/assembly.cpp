#include "hho/assembly.hpp"

#include <chrono>

#include "hho/parallel.hpp"

namespace hho {

DofMap DofMap::make(const Mesh& mesh, Variant variant, int k, BcMode bc)
{
    if (bc == BcMode::Nitsche && variant == Variant::C)
        throw std::invalid_argument("DofMap: Nitsche mode supports variants A and B only");
    DofMap m;
    m.variant = variant;
    m.k = k;
    m.bc = bc;
    m.trace_dim = trace_degree(variant, k) + 1;
    m.normal_dim = k + 1;
    m.face_offset.assign(mesh.num_faces(), -1);
    int offset = 0;
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        if (mesh.face(f).is_boundary()) continue;
        m.face_offset[f] = offset;
        offset += m.per_face();
    }
    m.num_free = offset;
    if (bc == BcMode::Strong) {
        for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
            if (!mesh.face(f).is_boundary()) continue;
            m.face_offset[f] = offset;
            offset += m.per_face();
        }
    }
    m.num_face_dofs = offset;
    return m;
}

VectorXd boundary_face_values(const Mesh& mesh, std::size_t face, Variant variant, int k, const BoundaryData& bd,
                              int quad_degree)
{
    const QuadratureRule rule = face_rule(mesh, face, quad_degree);
    const FaceBasis tb(mesh, face, trace_degree(variant, k));
    const FaceBasis nb(mesh, face, k);
    VectorXd out(tb.size() + nb.size());
    if (variant == Variant::B)
        out.head(tb.size()) = project(tb, rule, bd.g_D);
    else
        out.head(tb.size()) = CanonicalInterpolator(tb, k, rule).interpolate(bd.g_D);
    const Vector2 n = mesh.face(face).normal;
    out.tail(nb.size()) = project(nb, rule, [&](const Point& x) { return n.dot(bd.G(x)); });
    return out;
}

namespace {

struct LocalSystem {
    MatrixXd A;
    VectorXd b;
    MatrixXd R;
    VectorXd lift;
    std::vector<int> face_dofs;
    VectorXd signs;
    int nc = 0;
};

LocalSystem local_system(const Mesh& mesh, std::size_t cell, const Discretization& disc, const ScalarFunction& f,
                         const BoundaryData& bd, const DofMap& dofs, bool check_kernel, NitscheRhsPath rhs_path)
{
    const LocalContext ctx(mesh, cell, disc);
    const LocalOperators ops = build_local_matrices(ctx, check_kernel);
    const LocalDofLayout& L = ctx.layout();
    const bool nitsche = disc.bc == BcMode::Nitsche;
    const SmoothFunction data = bd.as_function();

    LocalSystem ls;
    ls.nc = L.cell_dim;
    ls.R = ops.R;
    VectorXd b = local_rhs(ctx, ops, f, nitsche ? &data : nullptr, rhs_path);
    if (nitsche && ctx.has_boundary_face()) ls.lift = lifting(ctx, data);

    const int nf = L.total - L.cell_dim;
    ls.face_dofs.assign(static_cast<std::size_t>(nf), -1);
    ls.signs = VectorXd::Ones(nf);
    const Cell& c = mesh.cell(cell);
    for (std::size_t i = 0; i < c.faces.size(); ++i) {
        if (!L.active(i)) continue;
        const int g = dofs.face_offset[c.faces[i]];
        for (int j = 0; j < L.trace_dim; ++j) ls.face_dofs[static_cast<std::size_t>(L.trace_offset[i] - ls.nc + j)] = g + j;
        for (int j = 0; j < L.normal_dim; ++j) {
            const int l = L.normal_offset[i] - ls.nc + j;
            ls.face_dofs[static_cast<std::size_t>(l)] = g + L.trace_dim + j;
            ls.signs[l] = c.signs[i];
        }
    }
    VectorXd d = VectorXd::Ones(L.total);
    d.tail(nf) = ls.signs;
    ls.A = d.asDiagonal() * ops.A * d.asDiagonal();
    ls.b = d.asDiagonal() * b;
    return ls;
}

VectorXd prescribed_values(const Mesh& mesh, const Discretization& disc, const DofMap& dofs, const BoundaryData& bd)
{
    VectorXd p = VectorXd::Zero(dofs.num_face_dofs);
    if (disc.bc != BcMode::Strong) return p;
    const int degree = 2 * (disc.k + 2) + 1 + disc.face_extra_degree + disc.rhs_extra_degree;
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        if (!mesh.face(f).is_boundary()) continue;
        p.segment(dofs.face_offset[f], dofs.per_face()) = boundary_face_values(mesh, f, disc.variant, disc.k, bd, degree);
    }
    return p;
}

struct CellResult {
    CellRecovery rec;
    MatrixXd schur;
    VectorXd rhs;
};

}  // namespace

CondensedSystem assemble(const Mesh& mesh, const Discretization& disc, const ScalarFunction& f,
                         const BoundaryData& bd, const AssemblyOptions& opts)
{
    const auto start = std::chrono::steady_clock::now();
    CondensedSystem sys;
    sys.dofs = DofMap::make(mesh, disc.variant, disc.k, disc.bc);
    sys.prescribed = prescribed_values(mesh, disc, sys.dofs, bd);

    std::vector<CellResult> results(mesh.num_cells());
    parallel_for(mesh.num_cells(), opts.threads, [&](std::size_t cell) {
        LocalSystem ls = local_system(mesh, cell, disc, f, bd, sys.dofs, opts.check_kernel, opts.nitsche_rhs);
        const int nc = ls.nc;
        const int nf = static_cast<int>(ls.A.rows()) - nc;
        const Eigen::LLT<MatrixXd> llt(ls.A.topLeftCorner(nc, nc));
        if (llt.info() != Eigen::Success)
            throw NumericalError("cell block of cell " + std::to_string(cell) + " is not positive definite");
        CellResult& r = results[cell];
        r.rec.R = std::move(ls.R);
        r.rec.W = llt.solve(ls.A.topRightCorner(nc, nf));
        r.rec.y = llt.solve(ls.b.head(nc));
        r.rec.face_dofs = std::move(ls.face_dofs);
        r.rec.signs = std::move(ls.signs);
        r.rec.lift = std::move(ls.lift);
        r.rec.cell_dim = nc;
        r.schur = ls.A.bottomRightCorner(nf, nf) - ls.A.bottomLeftCorner(nf, nc) * r.rec.W;
        r.schur = 0.5 * (r.schur + r.schur.transpose()).eval();
        r.rhs = ls.b.tail(nf) - ls.A.bottomLeftCorner(nf, nc) * r.rec.y;
    });

    const int nfree = sys.dofs.num_free;
    sys.rhs = VectorXd::Zero(nfree);
    std::vector<Eigen::Triplet<double>> triplets;
    std::size_t nnz = 0;
    for (const auto& r : results) nnz += static_cast<std::size_t>(r.schur.size());
    triplets.reserve(nnz);
    sys.cells.reserve(results.size());
    for (auto& r : results) {
        const auto& map = r.rec.face_dofs;
        for (std::size_t p = 0; p < map.size(); ++p) {
            const int gp = map[p];
            if (gp >= nfree) continue;
            sys.rhs[gp] += r.rhs[static_cast<Eigen::Index>(p)];
            for (std::size_t q = 0; q < map.size(); ++q) {
                const int gq = map[q];
                const double v = r.schur(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
                if (gq < nfree)
                    triplets.emplace_back(gp, gq, v);
                else
                    sys.rhs[gp] -= v * sys.prescribed[gq];
            }
        }
        sys.cells.push_back(std::move(r.rec));
    }
    sys.K.resize(nfree, nfree);
    sys.K.setFromTriplets(triplets.begin(), triplets.end());
    sys.assembly_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return sys;
}

std::vector<VectorXd> recover_cells(const CondensedSystem& sys, const VectorXd& free_solution)
{
    if (free_solution.size() != sys.dofs.num_free) throw std::invalid_argument("recover_cells: solution size mismatch");
    VectorXd all = sys.prescribed;
    all.head(sys.dofs.num_free) = free_solution;
    std::vector<VectorXd> out;
    out.reserve(sys.cells.size());
    for (const CellRecovery& c : sys.cells) {
        const auto nf = static_cast<Eigen::Index>(c.face_dofs.size());
        VectorXd local(c.cell_dim + nf);
        for (Eigen::Index p = 0; p < nf; ++p) local[c.cell_dim + p] = c.signs[p] * all[c.face_dofs[static_cast<std::size_t>(p)]];
        // W was formed in global face orientation.
        VectorXd face_values(nf);
        for (Eigen::Index p = 0; p < nf; ++p) face_values[p] = all[c.face_dofs[static_cast<std::size_t>(p)]];
        local.head(c.cell_dim) = c.y - c.W * face_values;
        out.push_back(std::move(local));
    }
    return out;
}

FullSystem assemble_full(const Mesh& mesh, const Discretization& disc, const ScalarFunction& f,
                         const BoundaryData& bd, NitscheRhsPath nitsche_rhs)
{
    const DofMap dofs = DofMap::make(mesh, disc.variant, disc.k, disc.bc);
    const VectorXd prescribed = prescribed_values(mesh, disc, dofs, bd);
    FullSystem fs;
    std::vector<LocalSystem> locals;
    locals.reserve(mesh.num_cells());
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        locals.push_back(local_system(mesh, c, disc, f, bd, dofs, false, nitsche_rhs));
        fs.cell_offset.push_back(fs.num_cell_dofs);
        fs.num_cell_dofs += locals.back().nc;
    }
    const int n = fs.num_cell_dofs + dofs.num_free;
    fs.b = VectorXd::Zero(n);
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t c = 0; c < locals.size(); ++c) {
        const LocalSystem& ls = locals[c];
        // Global index per local unknown; prescribed face unknowns map to -1 - id.
        std::vector<int> map(static_cast<std::size_t>(ls.A.rows()));
        for (int i = 0; i < ls.nc; ++i) map[static_cast<std::size_t>(i)] = fs.cell_offset[c] + i;
        for (std::size_t p = 0; p < ls.face_dofs.size(); ++p) {
            const int g = ls.face_dofs[p];
            map[static_cast<std::size_t>(ls.nc) + p] = g < dofs.num_free ? fs.num_cell_dofs + g : -1 - g;
        }
        for (std::size_t p = 0; p < map.size(); ++p) {
            if (map[p] < 0) continue;
            fs.b[map[p]] += ls.b[static_cast<Eigen::Index>(p)];
            for (std::size_t q = 0; q < map.size(); ++q) {
                const double v = ls.A(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
                if (map[q] >= 0)
                    triplets.emplace_back(map[p], map[q], v);
                else
                    fs.b[map[p]] -= v * prescribed[-1 - map[q]];
            }
        }
    }
    fs.A.resize(n, n);
    fs.A.setFromTriplets(triplets.begin(), triplets.end());
    return fs;
}

}  // namespace hho
