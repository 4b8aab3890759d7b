#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "hho/localops.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace hho;

namespace {

Discretization make_disc(Variant v, int k, BcMode bc = BcMode::Strong)
{
    Discretization d;
    d.variant = v;
    d.k = k;
    d.bc = bc;
    return d;
}

const Variant all_variants[] = {Variant::A, Variant::B, Variant::C};

/// Relative broken Hessian distance between a reconstruction-basis polynomial and an oracle polynomial.
double hessian_distance(const LocalContext& ctx, const VectorXd& c, const oracle::Polynomial& p)
{
    const QuadratureRule r = cell_rule(ctx.mesh(), ctx.cell(), 2 * ctx.basis().degree() + 6);
    double diff = 0, ref = 0;
    for (std::size_t q = 0; q < r.size(); ++q) {
        const Point& x = r.points[q];
        const Eigen::Vector3d a = ctx.basis().hessian(x).transpose() * c;
        const Eigen::Vector3d b(p.basis.d(x, 2, 0).dot(p.coeffs), p.basis.d(x, 1, 1).dot(p.coeffs),
                                p.basis.d(x, 0, 2).dot(p.coeffs));
        const Eigen::Vector3d e = a - b;
        diff += r.weights[q] * (e[0] * e[0] + 2 * e[1] * e[1] + e[2] * e[2]);
        ref += r.weights[q] * (b[0] * b[0] + 2 * b[1] * b[1] + b[2] * b[2]);
    }
    return std::sqrt(diff / std::max(ref, 1e-300));
}

double max_value_gap(const LocalContext& ctx, const VectorXd& c, const ScalarFunction& v)
{
    double gap = 0;
    for (const Point& x : ctx.cell_rule().points) gap = std::max(gap, std::abs(ctx.basis().eval(x).dot(c) - v(x)));
    return gap;
}

/// Small meshes from each family plus a lone pentagon.
std::vector<Mesh> sample_meshes()
{
    return {build_rect_mesh(2, 2), build_tri_mesh(2), build_voronoi_mesh(12, 4, 5), testing::pentagon(21)};
}

double min_eigenvalue(const MatrixXd& A)
{
    return Eigen::SelfAdjointEigenSolver<MatrixXd>(A, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("layout dimensions on the unit square")
{
    const Mesh sq = build_rect_mesh(1, 1);
    struct Row {
        Variant v;
        int dim, rank;
    };
    for (const Row& row : {Row{Variant::A, 18, 15}, Row{Variant::B, 22, 19}}) {
        const LocalOperators ops = build_local_matrices(sq, 0, make_disc(row.v, 0));
        CHECK(ops.A.rows() == row.dim);
        const Eigen::JacobiSVD<MatrixXd> svd(ops.A);
        const VectorXd& s = svd.singularValues();
        int rank = 0;
        for (Eigen::Index i = 0; i < s.size(); ++i) rank += s[i] > 1e-9 * s[0];
        CHECK(rank == row.rank);
    }
    CHECK(LocalDofLayout::make(sq, 0, Variant::C, 0, BcMode::Strong).total == 3 + 8 + 4);
    const LocalDofLayout nl = LocalDofLayout::make(sq, 0, Variant::A, 2, BcMode::Nitsche);
    CHECK(nl.total == 15);
    for (std::size_t i = 0; i < 4; ++i) CHECK_FALSE(nl.active(i));
    CHECK_THROWS_AS(LocalDofLayout::make(sq, 0, Variant::C, 1, BcMode::Nitsche), std::invalid_argument);
    CHECK(dofs_per_interface(Variant::A, 2) == 7);
    CHECK(dofs_per_interface(Variant::B, 2) == 8);
    CHECK(dofs_per_interface(Variant::C, 2) == 7);
}

TEST_CASE("both reconstruction paths agree")
{
    for (const Mesh& m : sample_meshes())
        for (Variant v : all_variants)
            for (BcMode bc : {BcMode::Strong, BcMode::Nitsche}) {
                if (bc == BcMode::Nitsche && v == Variant::C) continue;
                for (int k = 0; k <= 3; ++k)
                    for (std::size_t c = 0; c < m.num_cells(); ++c) {
                        const LocalContext ctx(m, c, make_disc(v, k, bc));
                        const MatrixXd r1 = build_reconstruction(ctx, ReconstructionPath::IntegrationByParts);
                        const MatrixXd r2 = build_reconstruction(ctx, ReconstructionPath::CellTerms);
                        CHECK(testing::rel_diff(r1, r2) <= 1e-10);
                    }
            }
}

TEST_CASE("reconstruction reproduces polynomials")
{
    std::mt19937 rng(5);
    for (const Mesh& m : sample_meshes())
        for (Variant v : all_variants)
            for (int k = 0; k <= 3; ++k)
                for (std::size_t c = 0; c < m.num_cells(); ++c) {
                    const LocalContext ctx(m, c, make_disc(v, k));
                    const MatrixXd R = build_reconstruction(ctx);
                    const auto p1 = testing::random_polynomial(1, rng);
                    CHECK(max_value_gap(ctx, R * reduce(ctx, p1), p1.value) <= 1e-11);
                    const auto pk = testing::random_polynomial(k + 2, rng);
                    CHECK(max_value_gap(ctx, R * reduce(ctx, pk), pk.value) <= 1e-10);
                }
}

TEST_CASE("reconstruction of the reduction is the elliptic projection")
{
    const Mesh p = testing::pentagon(33);
    const SmoothFunction v{[](const Point& x) { return std::exp(x.x() + 2 * x.y()); },
                           [](const Point& x) -> Vector2 { return std::exp(x.x() + 2 * x.y()) * Vector2(1, 2); },
                           [](const Point& x) -> Eigen::Matrix2d {
                               Eigen::Matrix2d h;
                               h << 1, 2, 2, 4;
                               return std::exp(x.x() + 2 * x.y()) * h;
                           }};
    for (Variant var : {Variant::A, Variant::C}) {
        const LocalContext ctx(p, 0, make_disc(var, 1));
        const VectorXd rv = build_reconstruction(ctx) * reduce(ctx, v);
        CHECK(hessian_distance(ctx, rv, oracle::elliptic_projection(p, 0, 3, v)) <= 1e-10);
        // the library's own elliptic projection agrees as well
        CHECK(testing::rel_diff(rv, elliptic_projection(ctx, v)) <= 1e-10);
    }

    SUBCASE("random smooth functions on mixed cells")
    {
        std::mt19937 rng(71);
        const std::vector<Mesh> meshes = sample_meshes();
        for (int k = 0; k <= 3; ++k)
            for (Variant var : {Variant::A, Variant::C})
                for (int t = 0; t < 10; ++t) {
                    const Mesh& m = meshes[t % meshes.size()];
                    const std::size_t c = t % m.num_cells();
                    const auto f = testing::random_smooth(rng);
                    const LocalContext ctx(m, c, make_disc(var, k));
                    const VectorXd rv = build_reconstruction(ctx) * reduce(ctx, f);
                    CHECK(hessian_distance(ctx, rv, oracle::elliptic_projection(m, c, k + 2, f)) <= 1e-10);
                }
    }

    SUBCASE("variant B is quasi-optimal")
    {
        std::mt19937 rng(72);
        const Mesh m = build_voronoi_mesh(12, 4, 5);
        for (int k = 0; k <= 3; ++k)
            for (std::size_t c = 0; c < m.num_cells(); ++c) {
                const auto f = testing::random_smooth(rng);
                const LocalContext ctx(m, c, make_disc(Variant::B, k));
                const VectorXd rv = build_reconstruction(ctx) * reduce(ctx, f);
                const CellBasis& b = ctx.basis();
                const VectorXd pi = project(b, cell_rule(m, c, 2 * b.degree() + 8), f.value);
                const QuadratureRule r = cell_rule(m, c, 2 * b.degree() + 8);
                double e_rec = 0, e_pi = 0;
                for (std::size_t q = 0; q < r.size(); ++q) {
                    const Eigen::Matrix2d H = f.hessian(r.points[q]);
                    const Eigen::Vector3d hv(H(0, 0), H(0, 1), H(1, 1));
                    const auto hs = b.hessian(r.points[q]);
                    const Eigen::Vector3d a = hv - hs.transpose() * rv, d = hv - hs.transpose() * pi;
                    e_rec += r.weights[q] * (a[0] * a[0] + 2 * a[1] * a[1] + a[2] * a[2]);
                    e_pi += r.weights[q] * (d[0] * d[0] + 2 * d[1] * d[1] + d[2] * d[2]);
                }
                CHECK(std::sqrt(e_rec / e_pi) < 10.0);
            }
    }
}

TEST_CASE("stabilization")
{
    SUBCASE("vanishes on reductions of P^{k+2}")
    {
        std::mt19937 rng(9);
        for (const Mesh& m : sample_meshes())
            for (Variant v : {Variant::A, Variant::B})
                for (int k = 0; k <= 3; ++k)
                    for (std::size_t c = 0; c < m.num_cells(); ++c) {
                        const LocalContext ctx(m, c, make_disc(v, k));
                        const MatrixXd S = build_stabilization(ctx, build_reconstruction(ctx));
                        const VectorXd x = reduce(ctx, testing::random_polynomial(k + 2, rng));
                        CHECK(x.dot(S * x) <= 1e-12 * x.squaredNorm() * S.norm());
                    }
    }
    SUBCASE("constant normal mismatch on one face")
    {
        const Mesh p = testing::pentagon(3);
        const double c = 1.7;
        for (Variant v : {Variant::A, Variant::B})
            for (int k = 0; k <= 2; ++k)
                for (StabScaling sc : {StabScaling::Plain, StabScaling::K2All, StabScaling::K2Hm1Only}) {
                    Discretization d = make_disc(v, k);
                    d.scaling = sc;
                    const LocalContext ctx(p, 0, d);
                    const MatrixXd S = build_stabilization(ctx, build_reconstruction(ctx));
                    const std::size_t i = 2;
                    VectorXd x = VectorXd::Zero(ctx.layout().total);
                    x[ctx.layout().normal_offset[i]] = c;
                    const double len = p.face(p.cell(0).faces[i]).diameter;
                    const double expect = stab_factors(sc, k).hm1 * c * c * len / ctx.h();
                    CHECK(x.dot(S * x) == doctest::Approx(expect).epsilon(1e-12));
                    CHECK(x.dot(seminorm_matrix(ctx) * x) == doctest::Approx(c * c * len / ctx.h()).epsilon(1e-12));
                }
    }
    SUBCASE("dense oracle")
    {
        for (unsigned seed : {1u, 2u, 3u})
            for (Variant v : {Variant::A, Variant::B})
                for (int k = 0; k <= 3; ++k) {
                    const Mesh p = testing::pentagon(seed);
                    const LocalContext ctx(p, 0, make_disc(v, k));
                    const MatrixXd S = build_stabilization(ctx, build_reconstruction(ctx));
                    const MatrixXd O = oracle::stabilization(ctx);
                    CHECK((S - O).cwiseAbs().maxCoeff() <= 1e-11 * O.cwiseAbs().maxCoeff());
                }
    }
    SUBCASE("consistency bound under refinement")
    {
        std::mt19937 rng(12);
        const auto f = testing::random_smooth(rng);
        for (Variant v : all_variants)
            for (int k = 0; k <= 2; ++k) {
                double worst = 0;
                for (int n : {2, 4, 8, 16}) {
                    const Mesh m = build_voronoi_mesh(n * n, 3, 10);
                    const LocalContext ctx(m, 0, make_disc(v, k));
                    const LocalOperators ops = build_local_matrices(ctx);
                    const VectorXd x = reduce(ctx, f);
                    const CellBasis& b = ctx.basis();
                    const QuadratureRule r = cell_rule(m, 0, 2 * b.degree() + 8);
                    const VectorXd pi = project(b, r, f.value);
                    double e = 0;
                    for (std::size_t q = 0; q < r.size(); ++q) {
                        const Eigen::Matrix2d H = f.hessian(r.points[q]);
                        const Eigen::Vector3d d = Eigen::Vector3d(H(0, 0), H(0, 1), H(1, 1)) - b.hessian(r.points[q]).transpose() * pi;
                        e += r.weights[q] * (d[0] * d[0] + 2 * d[1] * d[1] + d[2] * d[2]);
                    }
                    worst = std::max(worst, std::sqrt(std::max(0.0, x.dot(ops.S * x)) / e));
                }
                INFO("variant " << to_string(v) << " k " << k << " ratio " << worst);
                CHECK(worst < 100.0);
            }
    }
}

TEST_CASE("local matrices: symmetry, semidefiniteness, kernel")
{
    const Mesh m = build_voronoi_mesh(100, 3, 2);
    std::mt19937 rng(4);
    for (Variant v : all_variants)
        for (BcMode bc : {BcMode::Strong, BcMode::Nitsche}) {
            if (bc == BcMode::Nitsche && v == Variant::C) continue;
            for (std::size_t c = 0; c < m.num_cells(); ++c) {
                const int k = static_cast<int>(c % 4);
                const LocalContext ctx(m, c, make_disc(v, k, bc));
                const LocalOperators ops = build_local_matrices(ctx, false);
                const MatrixXd raw = ops.R.transpose() * ops.G * ops.R + ops.S;
                CHECK((raw - raw.transpose()).norm() <= 1e-12 * raw.norm());
                const double top = Eigen::SelfAdjointEigenSolver<MatrixXd>(ops.A, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
                CHECK(min_eigenvalue(ops.A) >= -1e-12 * top);
                const bool penalized = bc == BcMode::Nitsche && ctx.has_boundary_face();
                CHECK(kernel_dimension(ops.A) == (penalized ? 0 : 3));
                if (!penalized) {
                    // rigid modes are reductions of affine functions
                    const VectorXd x = reduce(ctx, testing::random_polynomial(1, rng));
                    CHECK((ops.A * x).norm() <= 1e-9 * ops.A.norm() * x.norm());
                }
            }
        }
}

TEST_CASE("reduction")
{
    SUBCASE("x^2 with k = 0 on the unit square")
    {
        const Mesh sq = build_rect_mesh(1, 1);
        const SmoothFunction v{[](const Point& x) { return x.x() * x.x(); }, [](const Point& x) -> Vector2 { return {2 * x.x(), 0}; },
                               nullptr};
        const LocalContext ctx(sq, 0, make_disc(Variant::A, 0));
        const VectorXd r = reduce(ctx, v);
        CHECK(max_value_gap(ctx, r.head(ctx.layout().cell_dim), v.value) <= 1e-13);
        std::size_t right = 0;
        while (std::abs(sq.face(sq.cell(0).faces[right]).midpoint.x() - 1) > 1e-14) ++right;
        const LocalFace& f = ctx.faces()[right];
        for (const Point& x : f.rule.points) {
            CHECK(f.trace_basis.eval(x).dot(r.segment(ctx.layout().trace_offset[right], 2)) == doctest::Approx(1.0).epsilon(1e-13));
            CHECK(f.normal_basis.eval(x).dot(r.segment(ctx.layout().normal_offset[right], 1)) == doctest::Approx(2.0).epsilon(1e-13));
        }
    }
    SUBCASE("sin sin with k = 2 against dense projections")
    {
        using std::numbers::pi;
        const SmoothFunction v{[](const Point& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); },
                               [](const Point& x) -> Vector2 {
                                   return pi * Vector2(std::cos(pi * x.x()) * std::sin(pi * x.y()), std::sin(pi * x.x()) * std::cos(pi * x.y()));
                               },
                               nullptr};
        const Mesh m = build_voronoi_mesh(6, 2, 4);
        for (Variant var : all_variants)
            for (std::size_t c = 0; c < m.num_cells(); ++c) {
                const LocalContext ctx(m, c, make_disc(var, 2));
                const LocalDofLayout& L = ctx.layout();
                const VectorXd r = reduce(ctx, v);
                // cell block through a tensor-free least-squares fit on a finer rule
                const CellBasis cb(m, c, cell_degree(var, 2));
                const QuadratureRule fine = cell_rule(m, c, 30);
                MatrixXd V(fine.size(), cb.size());
                VectorXd y(fine.size());
                for (std::size_t q = 0; q < fine.size(); ++q) {
                    V.row(q) = std::sqrt(fine.weights[q]) * cb.eval(fine.points[q]).transpose();
                    y[q] = std::sqrt(fine.weights[q]) * v(fine.points[q]);
                }
                const VectorXd cell_oracle = V.householderQr().solve(y);
                CHECK((r.head(L.cell_dim) - cell_oracle).norm() <= 1e-10 * cell_oracle.norm());
                for (std::size_t i = 0; i < ctx.faces().size(); ++i) {
                    const LocalFace& f = ctx.faces()[i];
                    const Face& F = m.face(f.face);
                    const Point a = m.vertex(F.vertices[0]), b = m.vertex(F.vertices[1]);
                    const VectorXd t = var == Variant::B ? oracle::segment_projection(f.trace_basis, a, b, v.value)
                                                         : oracle::canonical_interpolate(f.trace_basis, a, b, v.value);
                    const Vector2 n = f.n;
                    const VectorXd g = oracle::segment_projection(f.normal_basis, a, b, [&](const Point& x) { return n.dot(v.gradient(x)); });
                    CHECK((r.segment(L.trace_offset[i], L.trace_dim) - t).norm() <= 1e-10 * std::max(1.0, t.norm()));
                    CHECK((r.segment(L.normal_offset[i], L.normal_dim) - g).norm() <= 1e-10 * std::max(1.0, g.norm()));
                }
            }
    }
}

TEST_CASE("spectral equivalence with the local seminorm")
{
    for (Variant v : all_variants) {
        std::vector<double> alpha;
        for (int cells : {16, 64, 256, 1024}) {
            const Mesh m = build_voronoi_mesh(cells, 42, 10);
            double a = 1e300;
            for (std::size_t c = 0; c < std::min<std::size_t>(m.num_cells(), 24); ++c) {
                const LocalContext ctx(m, c, make_disc(v, 1));
                const MatrixXd A = build_local_matrices(ctx).A;
                const MatrixXd N = seminorm_matrix(ctx);
                // restrict to the complement of the shared rigid-mode kernel
                const Eigen::SelfAdjointEigenSolver<MatrixXd> en(N);
                const double top = en.eigenvalues().maxCoeff();
                std::vector<Eigen::Index> keep;
                for (Eigen::Index i = 0; i < N.rows(); ++i)
                    if (en.eigenvalues()[i] > 1e-10 * top) keep.push_back(i);
                CHECK(keep.size() == static_cast<std::size_t>(N.rows() - 3));
                MatrixXd Q(N.rows(), keep.size());
                for (std::size_t j = 0; j < keep.size(); ++j) Q.col(j) = en.eigenvectors().col(keep[j]);
                const Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ge(Q.transpose() * A * Q, Q.transpose() * N * Q);
                const VectorXd& ev = ge.eigenvalues();
                a = std::min({a, ev.minCoeff(), 1.0 / ev.maxCoeff()});
            }
            alpha.push_back(a);
        }
        INFO("variant " << to_string(v) << " alpha " << alpha[0] << " " << alpha[1] << " " << alpha[2] << " " << alpha[3]);
        CHECK(alpha[0] > 0);
        for (double a : alpha) CHECK(a >= 0.5 * alpha[0]);
    }
}

TEST_CASE("Nitsche cells")
{
    std::mt19937 rng(13);
    const Mesh m = build_voronoi_mesh(40, 6, 5);
    const ScalarFunction f = [](const Point& x) { return std::cos(x.x() - x.y()); };

    SUBCASE("both right-hand side paths agree")
    {
        for (Variant v : {Variant::A, Variant::B})
            for (int k = 0; k <= 3; ++k)
                for (std::size_t c = 0; c < m.num_cells(); ++c) {
                    const LocalContext ctx(m, c, make_disc(v, k, BcMode::Nitsche));
                    if (!ctx.has_boundary_face()) continue;
                    const LocalOperators ops = build_local_matrices(ctx);
                    const auto u = testing::random_smooth(rng);
                    const VectorXd b1 = local_rhs(ctx, ops, f, &u, NitscheRhsPath::DataTerms);
                    const VectorXd b2 = local_rhs(ctx, ops, f, &u, NitscheRhsPath::Lifting);
                    CHECK(testing::rel_diff(b1, b2) <= 1e-10);
                }
    }
    SUBCASE("homogeneous data")
    {
        const SmoothFunction zero{[](const Point&) { return 0.0; }, [](const Point&) -> Vector2 { return Vector2::Zero(); },
                                  nullptr};
        for (std::size_t c = 0; c < m.num_cells(); ++c) {
            const LocalContext ctx(m, c, make_disc(Variant::A, 1, BcMode::Nitsche));
            const LocalOperators ops = build_local_matrices(ctx);
            CHECK(lifting(ctx, zero).norm() == 0.0);
            CHECK((local_rhs(ctx, ops, f, &zero) - local_rhs(ctx, ops, f, nullptr)).norm() == 0.0);
        }
    }
    SUBCASE("affine solution on a single cell")
    {
        const Mesh one = testing::pentagon(8);
        for (Variant v : {Variant::A, Variant::B})
            for (int k = 0; k <= 3; ++k) {
                const auto u = testing::random_polynomial(1, rng);
                const LocalContext ctx(one, 0, make_disc(v, k, BcMode::Nitsche));
                REQUIRE(ctx.layout().total == ctx.layout().cell_dim);
                const LocalOperators ops = build_local_matrices(ctx);
                const VectorXd b = local_rhs(ctx, ops, [](const Point&) { return 0.0; }, &u);
                const VectorXd x = ops.A.ldlt().solve(b);
                CHECK(max_value_gap(ctx, x, u.value) <= 1e-10);
            }
    }
}
