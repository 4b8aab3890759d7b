#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hho/function.hpp"
#include "hho/polyspace.hpp"

namespace hho {

enum class Variant { A, B, C };
enum class BcMode { Strong, Nitsche };
/// Which stabilization terms carry the (k+1)^2 factor.
enum class StabScaling { Plain, K2All, K2Hm1Only };
enum class ReconstructionPath { IntegrationByParts, CellTerms };

std::string to_string(Variant v);
std::string to_string(BcMode m);
std::string to_string(StabScaling s);

/// Method parameters shared by every cell.
struct Discretization {
    Variant variant = Variant::A;
    int k = 1;
    BcMode bc = BcMode::Strong;
    StabScaling scaling = StabScaling::K2All;
    ReconstructionPath path = ReconstructionPath::IntegrationByParts;
    /// Added to 2(k+2) (volume) and 2(k+2)+1 (faces) for the bilinear forms.
    int volume_extra_degree = 0;
    int face_extra_degree = 0;
    /// Added on top of the volume/face degrees for data integrals (f, g_D, G).
    int rhs_extra_degree = 2;
};

int cell_degree(Variant v, int k);
int trace_degree(Variant v, int k);
/// Global unknowns per interface.
int dofs_per_interface(Variant v, int k);

/// Local unknowns ordered as [cell | traces of active faces | normals of active faces].
/// Faces are in the cell's counterclockwise order; in Nitsche mode boundary
/// faces are inactive and carry no unknowns.
struct LocalDofLayout {
    Variant variant = Variant::A;
    int k = 0;
    bool nitsche = false;
    int cell_dim = 0;
    int trace_dim = 0;
    int normal_dim = 0;
    std::vector<int> trace_offset;   // per local face, -1 when inactive
    std::vector<int> normal_offset;  // per local face, -1 when inactive
    int total = 0;

    static LocalDofLayout make(const Mesh& mesh, std::size_t cell, Variant variant, int k, BcMode bc);
    bool active(std::size_t local_face) const { return trace_offset[local_face] >= 0; }
};

/// Per-face quantities of a cell, evaluated once.
struct LocalFace {
    LocalFace(const FaceBasis& tb, const FaceBasis& nb) : trace_basis(tb), normal_basis(nb) {}

    std::size_t face = 0;
    int sign = 1;
    Vector2 n = Vector2::Zero();  // outward for the cell
    Vector2 t = Vector2::Zero();  // face tangent
    bool boundary = false;
    bool active = true;
    QuadratureRule rule;
    FaceBasis trace_basis;
    FaceBasis normal_basis;
    std::optional<CanonicalInterpolator> interp;  // variants A and C
    std::vector<PointTraces> traces;             // reconstruction basis at rule points
    MatrixXd trace_values;                       // npts x trace_dim
    MatrixXd trace_dt;                           // npts x trace_dim
    MatrixXd normal_values;                      // npts x normal_dim
    MatrixXd trace_mass, normal_mass;
};

/// Geometry, bases, and quadrature for one cell.
class LocalContext {
public:
    LocalContext(const Mesh& mesh, std::size_t cell, const Discretization& disc);

    const Mesh& mesh() const { return *mesh_; }
    std::size_t cell() const { return cell_; }
    const Discretization& disc() const { return disc_; }
    const LocalDofLayout& layout() const { return layout_; }
    /// Basis of P^{k+2}(K); the cell unknowns use its leading cell_dim functions.
    const CellBasis& basis() const { return basis_; }
    const QuadratureRule& cell_rule() const { return cell_rule_; }
    const std::vector<LocalFace>& faces() const { return faces_; }
    double h() const { return h_; }
    int volume_degree() const;
    int face_degree() const;
    /// Hessian Gram matrix and mass matrix of the reconstruction basis.
    const MatrixXd& hessian_gram() const { return gram_; }
    const MatrixXd& mass() const { return mass_; }
    bool has_boundary_face() const;

private:
    const Mesh* mesh_;
    std::size_t cell_;
    Discretization disc_;
    LocalDofLayout layout_;
    CellBasis basis_;
    QuadratureRule cell_rule_;
    std::vector<LocalFace> faces_;
    double h_;
    MatrixXd gram_, mass_;
};

struct LocalOperators {
    std::size_t cell = 0;
    LocalDofLayout layout;
    MatrixXd R;   // reconstruction: local unknowns -> P^{k+2}(K) coefficients
    MatrixXd G;   // Hessian Gram matrix of P^{k+2}(K)
    MatrixXd S;   // full stabilization, including the boundary penalty
    MatrixXd Sb;  // boundary penalty on the cell block (Nitsche boundary cells), else empty
    MatrixXd A;   // R^T G R + S
};

/// Term-wise factors applied to the h^-4, h^-3, and h^-1 stabilization terms.
struct StabFactors {
    double hm4 = 1.0, hm3 = 1.0, hm1 = 1.0;
};
StabFactors stab_factors(StabScaling scaling, int k);

/// Solves the Hessian problem with the P^1 closure for the given right-hand
/// sides: rows of `rhs` pair with reconstruction basis functions, rows of
/// `moments` with P^1.
MatrixXd solve_bordered(const LocalContext& ctx, const MatrixXd& rhs, const MatrixXd& moments);

MatrixXd build_reconstruction(const LocalContext& ctx);
MatrixXd build_reconstruction(const LocalContext& ctx, ReconstructionPath path);
/// Variant C needs the reconstruction; pass it in to avoid recomputation.
MatrixXd build_stabilization(const LocalContext& ctx, const MatrixXd& R);
/// Boundary penalty on the cell block; zero for cells without boundary faces
/// or in strong mode.
MatrixXd build_boundary_penalty(const LocalContext& ctx);

/// Throws std::runtime_error when the kernel dimension is unexpected:
/// 3 for cells without penalized boundary faces, 0 otherwise.
LocalOperators build_local_matrices(const LocalContext& ctx, bool check_kernel = true);
LocalOperators build_local_matrices(const Mesh& mesh, std::size_t cell, const Discretization& disc);

/// Number of eigenvalues of the Jacobi-scaled matrix below rel_tol times the largest.
int kernel_dimension(const MatrixXd& A, double rel_tol = 1e-9);

/// Local reduction of v in the cell-local view (normal components along n_K),
/// integrated with `extra_degree` more than the bilinear-form rules.
VectorXd reduce(const LocalContext& ctx, const SmoothFunction& v, int extra_degree = 8);

/// Hessian-elliptic projection onto P^{k+2}(K), integrated with `extra_degree`
/// more than the volume degree.
VectorXd elliptic_projection(const LocalContext& ctx, const SmoothFunction& v, int extra_degree = 8);

/// Gram matrix of the local H^2-like seminorm (plus the boundary penalty in
/// Nitsche mode), unscaled.
MatrixXd seminorm_matrix(const LocalContext& ctx);

/// Boundary data functional q_i = (g_D, dn lap phi_i)_b - (G, H(phi_i) n)_b
/// over the boundary faces of the cell, with g_D = u and G = grad u.
VectorXd nitsche_data_functional(const LocalContext& ctx, const SmoothFunction& u);
/// Lifting of the boundary data, coefficients in the reconstruction basis.
VectorXd lifting(const LocalContext& ctx, const SmoothFunction& u);

enum class NitscheRhsPath { DataTerms, Lifting };

/// Local right-hand side: (f, w_K) on the cell block, plus the Nitsche
/// boundary terms on boundary cells.
VectorXd local_rhs(const LocalContext& ctx, const LocalOperators& ops, const ScalarFunction& f,
                   const SmoothFunction* boundary_data, NitscheRhsPath path = NitscheRhsPath::DataTerms);

}  // namespace hho
