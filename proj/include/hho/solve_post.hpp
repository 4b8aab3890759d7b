#pragma once

#include <ostream>
#include <vector>

#include "hho/assembly.hpp"
#include "hho/manufactured.hpp"

namespace hho {

enum class SolverMethod { Direct, ConjugateGradient };

struct SolveConfig {
    SolverMethod method = SolverMethod::Direct;
    double cg_tol = 1e-12;
    /// 0 selects 10 times the system size.
    int max_iters = 0;
};

struct SolveInfo {
    double residual = 0.0;  // ||K x - b|| / ||b||, 0 when b = 0
    int iterations = 0;     // CG iterations, or refinement steps for the direct solver
    double seconds = 0.0;
};

/// Throws NumericalError on factorization failure, CG non-convergence, or a
/// direct residual above max(1e-10, 64 eps |||K||x||| / ||b||).
VectorXd solve(const SparseMatrix& K, const VectorXd& b, const SolveConfig& config, SolveInfo* info = nullptr);
VectorXd solve(const CondensedSystem& sys, const SolveConfig& config, SolveInfo* info = nullptr);

/// Per-cell coefficients in CellBasis(mesh, cell, k + 2).
using Field = std::vector<VectorXd>;

/// R_K applied to each local vector, plus L_K(u) on Nitsche boundary cells
/// when `add_lifting` is set.
Field reconstruct_field(const CondensedSystem& sys, const std::vector<VectorXd>& locals, bool add_lifting = true);

struct ErrorNorms {
    double h2_abs = 0.0, l2_abs = 0.0;
    double h2_exact = 0.0, l2_exact = 0.0;  // norms of u itself
    double h2_rel() const { return h2_exact > 0 ? h2_abs / h2_exact : h2_abs; }
    double l2_rel() const { return l2_exact > 0 ? l2_abs / l2_exact : l2_abs; }
};

/// Broken Hessian seminorm and L2 norm of u - field, integrated exactly to `quad_degree`.
ErrorNorms error_norms(const Mesh& mesh, const Field& field, int degree, const Manufactured& u, int quad_degree,
                       int threads = 1);

/// Sharp norm of u - Pi^{k+2}_K u summed over cells: Hessian seminorm plus
/// h^3 ||dn lap||^2 + h ||dnn||^2 + h ||dnt||^2 on the cell boundaries.
double sharp_norm_projection_error(const Mesh& mesh, int k, const Manufactured& u, int quad_degree);

struct ErrorReport {
    int level = 0;
    double h_max = 0.0;
    int dofs = 0;
    double err_h2_rel = 0.0;
    double err_l2_rel = 0.0;
    double assembly_s = 0.0;
    double solve_s = 0.0;
};

struct RunOptions {
    SolveConfig solver;
    int threads = 1;
    /// Added to 2(k+2) for the error integrals.
    int error_extra_degree = 6;
};

/// Assembles, solves, recovers, reconstructs, and measures the error against u.
/// Boundary data are taken from u. The reconstructed field is stored in `field` when given.
ErrorReport run_case(const Mesh& mesh, const Discretization& disc, const Manufactured& u, const RunOptions& opts,
                     Field* field = nullptr);

struct RateTable {
    std::vector<ErrorReport> levels;
    /// Least-squares slopes over the finest three levels: log err against log h,
    /// and against -log DoFs^{1/2}.
    double slope_h2 = 0.0, slope_l2 = 0.0;
    double slope_h2_dofs = 0.0, slope_l2_dofs = 0.0;
};

/// Least-squares slope of y against x over the last `count` points.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y, std::size_t count = 3);

void compute_slopes(RateTable& table);

/// Runs every mesh of the family; levels must be ordered coarse to fine.
RateTable convergence_study(const std::vector<Mesh>& family, const Discretization& disc, const Manufactured& u,
                            const RunOptions& opts);

/// CSV with columns level,h_max,dofs,err_h2_rel,err_l2_rel,slope_h2,slope_l2,assembly_s,solve_s.
/// The slope columns hold the rate between a level and the previous one.
void write_rate_csv(std::ostream& out, const RateTable& table, bool include_timing = true);

}  // namespace hho
