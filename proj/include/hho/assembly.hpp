#pragma once

#include <vector>

#include <Eigen/Sparse>

#include "hho/localops.hpp"

namespace hho {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Raised when a factorization fails or a solve does not converge.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Boundary data: g_D and G = g_N n + (d_t g_D) t, the full boundary gradient.
struct BoundaryData {
    ScalarFunction g_D;
    std::function<Vector2(const Point&)> G;

    SmoothFunction as_function() const { return {g_D, G, {}}; }
};

/// Global numbering of face unknowns. Each face carrying unknowns owns a
/// contiguous block [traces | normals]. Interior faces are numbered first,
/// so the free unknowns are the leading num_free entries.
struct DofMap {
    Variant variant = Variant::A;
    int k = 0;
    BcMode bc = BcMode::Strong;
    int trace_dim = 0;
    int normal_dim = 0;
    std::vector<int> face_offset;  // -1 for faces without unknowns
    int num_face_dofs = 0;         // including prescribed boundary unknowns
    int num_free = 0;

    static DofMap make(const Mesh& mesh, Variant variant, int k, BcMode bc);
    int per_face() const { return trace_dim + normal_dim; }
};

/// Recovery data of one cell after condensation.
struct CellRecovery {
    MatrixXd R;                  // reconstruction
    MatrixXd W;                  // A_TT^{-1} A_TF
    VectorXd y;                  // A_TT^{-1} b_T
    std::vector<int> face_dofs;  // global index of each local face unknown
    VectorXd signs;              // local = sign * global, per local face unknown
    VectorXd lift;               // L_K(u) in Nitsche mode, else empty
    int cell_dim = 0;
};

struct CondensedSystem {
    DofMap dofs;
    SparseMatrix K;          // free x free
    VectorXd rhs;            // free
    VectorXd prescribed;     // all face unknowns; boundary values in strong mode, zero elsewhere
    std::vector<CellRecovery> cells;
    double assembly_seconds = 0.0;
};

struct AssemblyOptions {
    int threads = 1;
    /// Check the local kernel dimension of every cell.
    bool check_kernel = true;
    NitscheRhsPath nitsche_rhs = NitscheRhsPath::DataTerms;
};

/// Boundary face values: trace by J (A, C) or L2 projection (B) of g_D,
/// normal by Pi^k of G . n_F.
VectorXd boundary_face_values(const Mesh& mesh, std::size_t face, Variant variant, int k, const BoundaryData& bd,
                              int quad_degree);

CondensedSystem assemble(const Mesh& mesh, const Discretization& disc, const ScalarFunction& f,
                         const BoundaryData& bd, const AssemblyOptions& opts = {});

/// Per-cell local unknown vectors from a solution over the free unknowns.
std::vector<VectorXd> recover_cells(const CondensedSystem& sys, const VectorXd& free_solution);

/// Uncondensed system over [cell unknowns of all cells | free face unknowns],
/// used to cross-check condensation.
struct FullSystem {
    SparseMatrix A;
    VectorXd b;
    std::vector<int> cell_offset;
    int num_cell_dofs = 0;
};
FullSystem assemble_full(const Mesh& mesh, const Discretization& disc, const ScalarFunction& f,
                         const BoundaryData& bd, NitscheRhsPath nitsche_rhs = NitscheRhsPath::DataTerms);

}  // namespace hho
