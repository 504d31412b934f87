#include "vhi/errors.hpp"
#include "vhi/vem.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <numbers>
#include <random>

using namespace vhi;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

std::string voronoi_path() { return std::string(VHI_DATA_DIR) + "/sample_voronoi.vhimesh"; }

VectorXd dofs_of(std::span<const Point> cell, const std::function<Vector2d(const Point&)>& f)
{
    VectorXd v(2 * static_cast<Eigen::Index>(cell.size()));
    for (std::size_t i = 0; i < cell.size(); ++i) v.segment<2>(2 * static_cast<Eigen::Index>(i)) = f(cell[i]);
    return v;
}

// Random convex polygon: sorted angles on a perturbed circle.
std::vector<Point> random_convex(std::mt19937_64& rng, int n, double scale)
{
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> ang;
    for (int i = 0; i < n; ++i) ang.push_back(2 * std::numbers::pi * (i + 0.4 * U(rng)) / n);
    std::vector<Point> pts;
    const Point c(3.0 * U(rng), -2.0 * U(rng));
    for (double a : ang) pts.push_back(c + scale * Point(std::cos(a), std::sin(a)));
    return pts;
}

std::vector<std::vector<Point>> test_cells()
{
    std::vector<std::vector<Point>> cells = {{{0, 0}, {1, 0}, {1, 1}, {0, 1}},
                                             {{0, 0}, {1, 0}, {0, 1}},
                                             {{0, 0}, {2, 0}, {2.5, 1}, {1, 2}, {-0.5, 1}}};
    std::mt19937_64 rng(42);
    for (int t = 0; t < 30; ++t) cells.push_back(random_convex(rng, 3 + t % 9, std::pow(10.0, -2 + t % 4)));
    const Mesh2D v = load_poly_file(voronoi_path());
    for (int c = 0; c < v.num_cells(); ++c) cells.push_back(v.cell_points(c));
    return cells;
}

int kernel_dimension(const MatrixXd& A)
{
    const VectorXd ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(A).eigenvalues();
    const double tol = 1e-10 * ev.cwiseAbs().maxCoeff();
    int k = 0;
    for (double x : ev) {
        EXPECT_GE(x, -tol);
        k += std::abs(x) < tol;
    }
    return k;
}

std::vector<bool> boundary_mask(const Mesh2D& m)
{
    std::vector<bool> fixed(static_cast<std::size_t>(m.num_vertices()), false);
    for (const auto& e : m.boundary_edges()) fixed[static_cast<std::size_t>(e.v0)] = fixed[static_cast<std::size_t>(e.v1)] = true;
    return fixed;
}

}  // namespace

TEST(VemProjector, ReproducesLinearFields)
{
    const MaterialParams params;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> N;
    for (const auto& cell : test_cells()) {
        const VemProjector proj = local_projector(cell, params);
        EXPECT_LE((proj.P * proj.D - Eigen::Matrix<double, 6, 6>::Identity()).cwiseAbs().maxCoeff(), 1e-10);
        Eigen::Matrix2d G;
        G << N(rng), N(rng), N(rng), N(rng);
        const Vector2d b(N(rng), N(rng));
        const auto lin = [&](const Point& p) -> Vector2d { return G * p + b; };
        const Eigen::Matrix<double, 6, 1> c = proj.P * dofs_of(cell, lin);
        for (const Point& p : cell) EXPECT_LE((proj.evaluate(c, p) - lin(p)).norm(), 1e-9 * (1 + lin(p).norm()));
        const Point mid = 0.5 * (cell[0] + cell[1]);
        EXPECT_LE((proj.evaluate(c, mid) - lin(mid)).norm(), 1e-9 * (1 + lin(mid).norm()));
    }
}

TEST(VemProjector, PinsRotation)
{
    const std::vector<Point> cell = {{0.2, 0.1}, {0.9, 0.0}, {1.1, 0.8}, {0.3, 0.7}};
    const VemProjector proj = local_projector(cell, MaterialParams{});
    const auto rot = [](const Point& p) -> Vector2d { return {-p.y(), p.x()}; };
    const Eigen::Matrix<double, 6, 1> c = proj.P * dofs_of(cell, rot);
    EXPECT_LE(c.tail<3>().cwiseAbs().maxCoeff(), 1e-12);
    for (const Point& q : {Point(0.5, 0.5), Point(-3, 2)}) EXPECT_LE((proj.evaluate(c, q) - rot(q)).norm(), 1e-12);
}

TEST(VemProjector, QuadraticTraceOrthogonality)
{
    const MaterialParams params;
    const Eigen::Matrix3d W = strain_energy_matrix(params);
    for (const double a : {0.0, 0.25}) {
        const double s = 0.5;
        const std::vector<Point> cell = {{a, a}, {a + s, a}, {a + s, a + s}, {a, a + s}};
        const VemProjector proj = local_projector(cell, params);
        const VectorXd v = dofs_of(cell, [](const Point& p) -> Vector2d { return {p.x() * p.x(), 0.0}; });
        // a_T(v, p_k) for v = (x^2, 0): mean strain (2 xc, 0, 0) times the area
        const double xc = a + s / 2;
        const Eigen::Vector3d mean_strain(2 * xc, 0, 0);
        const std::array<Eigen::Vector3d, 3> eps = {Eigen::Vector3d(1 / proj.h, 0, 0), Eigen::Vector3d(0, 1 / proj.h, 0),
                                                    Eigen::Vector3d(0, 0, 1 / proj.h)};
        for (int k = 0; k < 3; ++k) {
            const double oracle = s * s * mean_strain.dot(W * eps[static_cast<std::size_t>(k)]);
            EXPECT_NEAR(proj.B.row(3 + k).dot(v), oracle, 1e-12 * params.E);
            EXPECT_NEAR(proj.B.row(3 + k).dot(v - proj.D * (proj.P * v)), 0.0, 1e-12 * params.E);
        }
    }
}

TEST(VemProjector, DegeneratePolygonThrows)
{
    const std::vector<Point> flat = {{0, 0}, {1, 0}, {2, 0}};
    EXPECT_THROW(local_projector(flat, MaterialParams{}), SingularProjection);
}

TEST(VemLocal, LinearAndRigidResponses)
{
    const MaterialParams params;
    const Eigen::Matrix3d W = strain_energy_matrix(params);
    for (const auto& cell : test_cells()) {
        const VemProjector proj = local_projector(cell, params);
        const VemLocal loc = local_stiffness(cell, params, proj);
        const double scale = loc.A.cwiseAbs().maxCoeff();
        EXPECT_EQ((loc.A - loc.A.transpose()).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(kernel_dimension(loc.A), 3);

        const auto lin = [](const Point& p) -> Vector2d { return {0.3 * p.x() - 0.2 * p.y(), 0.1 * p.x() + 0.5 * p.y()}; };
        const VectorXd v = dofs_of(cell, lin);
        EXPECT_LE((loc.stabilization * v).cwiseAbs().maxCoeff(), 1e-10 * scale * v.norm());
        const Eigen::Vector3d e(0.3, 0.5, (-0.2 + 0.1) / 2);
        const double area = polygon_signed_area(cell);
        EXPECT_NEAR(v.dot(loc.A * v), area * e.dot(W * e), 1e-10 * area * e.dot(W * e));

        for (const auto& r : {std::function<Vector2d(const Point&)>([](const Point&) { return Vector2d(1, 0); }),
                              std::function<Vector2d(const Point&)>([](const Point&) { return Vector2d(0, 1); }),
                              std::function<Vector2d(const Point&)>([](const Point& p) { return Vector2d(-p.y(), p.x()); })}) {
            const VectorXd rv = dofs_of(cell, r);
            EXPECT_LE((loc.A * rv).cwiseAbs().maxCoeff(), 1e-10 * scale * rv.norm());
        }
    }
}

TEST(VemConsistency, AllCellsOfTestMeshes)
{
    const MaterialParams params;
    double worst = 0.0;
    std::vector<Mesh2D> meshes;
    for (int n : {4, 8, 16, 32, 64}) meshes.push_back(gen_quad(n));
    meshes.push_back(load_poly_file(voronoi_path()));
    for (const Mesh2D& m : meshes) {
        for (int c = 0; c < m.num_cells(); ++c) {
            const auto rep = consistency_check(m.cell_points(c), params);
            EXPECT_TRUE(rep.passed);
            worst = std::max(worst, rep.max_defect);
        }
    }
    EXPECT_LE(worst, 1e-12);
    // small cells far from the origin lose digits to coordinate rounding
    for (const auto& cell : test_cells()) EXPECT_LE(consistency_check(cell, params, 1e-11).max_defect, 1e-11);
    for (double E : {1.0, 2000.0, 2e7}) EXPECT_TRUE(consistency_check(test_cells()[0], MaterialParams{E, 0.3}).passed);
}

TEST(VemConsistency, LeakyStabilizationDetected)
{
    const MaterialParams params;
    for (const auto& cell : test_cells()) {
        const VemProjector proj = local_projector(cell, params);
        const VemLocal loc = local_stiffness(cell, params, proj);
        const double tau = loc.consistency.trace() / static_cast<double>(loc.A.rows());
        // the raw dof product instead of the one acting on (I - Pi)
        const MatrixXd leaky = loc.consistency + tau * MatrixXd::Identity(loc.A.rows(), loc.A.cols());
        const auto rep = consistency_check(cell, params, leaky);
        EXPECT_FALSE(rep.passed);
        EXPECT_GT(rep.max_defect, 1e-6);
        EXPECT_TRUE(consistency_check(cell, params, loc.A, 1e-11).passed);
    }
}

TEST(VemStability, UniformIntervalAcrossRefinements)
{
    const MaterialParams params;
    double lo = 1e300, hi = 0.0;
    std::vector<Mesh2D> meshes;
    for (int n : {4, 16, 64}) meshes.push_back(gen_quad(n));
    meshes.push_back(load_poly_file(voronoi_path()));
    std::vector<std::pair<double, double>> per_mesh;
    for (const Mesh2D& m : meshes) {
        double mlo = 1e300, mhi = 0.0;
        const int stride = std::max(1, m.num_cells() / 16);
        for (int c = 0; c < m.num_cells(); c += stride) {
            const StabilityEstimate s = estimate_stability(m.cell_points(c), params, 1000, 7 + static_cast<std::uint64_t>(c));
            EXPECT_GT(s.alpha_star, 0.0);
            EXPECT_LE(s.alpha_star, s.alpha_star_upper);
            mlo = std::min(mlo, s.alpha_star);
            mhi = std::max(mhi, s.alpha_star_upper);
        }
        per_mesh.emplace_back(mlo, mhi);
        lo = std::min(lo, mlo);
        hi = std::max(hi, mhi);
    }
    EXPECT_GE(lo, 0.02);
    EXPECT_LE(hi, 2.0);
    // same square at every scale
    EXPECT_NEAR(per_mesh[0].first, per_mesh[2].first, 0.05 * per_mesh[0].first);
    RecordProperty("alpha_star", std::to_string(lo));
    RecordProperty("alpha_star_upper", std::to_string(hi));
}

TEST(VemGlobal, KernelSizeSymmetry)
{
    const MaterialParams params;
    for (const Mesh2D& m : {gen_quad(3), load_poly_file(voronoi_path())}) {
        const SparseMatrix K = assemble_full_vem(m, strain_energy_matrix(params));
        EXPECT_EQ((K - SparseMatrix(K.transpose())).norm(), 0.0);
        EXPECT_EQ(kernel_dimension(MatrixXd(K)), 3);
    }
    const Assembled a = assemble_vem(gen_quad(2), params);
    EXPECT_EQ(a.K.rows(), 12);
    EXPECT_EQ(a.dofs.num_free(), 12);
    Eigen::SimplicialLLT<SparseMatrix> llt(a.K);
    EXPECT_EQ(llt.info(), Eigen::Success);
}

TEST(VemGlobal, PatchTest)
{
    const MaterialParams params;
    const auto lin = [](const Point& p) -> Vector2d { return {0.01 + 0.02 * p.x() - 0.03 * p.y(), -0.02 + 0.04 * p.x() + 0.01 * p.y()}; };
    for (const Mesh2D& m : {gen_quad(5), load_poly_file(voronoi_path())}) {
        const SparseMatrix K_full = assemble_full_vem(m, strain_energy_matrix(params));
        const DofMap dofs(m, boundary_mask(m));
        const VectorXd exact = interpolate_full(m, lin);
        const VectorXd rhs = lift_dirichlet(K_full, VectorXd::Zero(exact.size()), exact, dofs);
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(restrict_matrix(K_full, dofs));
        const VectorXd u = expand(ldlt.solve(rhs), dofs, exact);
        EXPECT_LE((u - exact).norm(), 1e-10 * exact.norm());
        for (int c = 0; c < m.num_cells(); c += 7) {
            const Point x = polygon_centroid(m.cell_points(c));
            EXPECT_LE((evaluate_proxy(m, c, u, x) - lin(x)).norm(), 1e-10);
        }
    }
}

TEST(VemLoad, VertexAverageRule)
{
    LoadSpec load;
    load.f0 = {0.0, -1.0};
    load.f2_left = load.f2_right = Vector2d::Zero();
    for (const Mesh2D& m : {gen_quad(6), load_poly_file(voronoi_path())}) {
        const VectorXd f = load_fh_full(m, load);
        double sy = 0.0;
        for (int v = 0; v < m.num_vertices(); ++v) sy += f[2 * v + 1];
        EXPECT_NEAR(sy, -1.0, 1e-12);
    }
    const VectorXd single = load_fh_full(gen_quad(1), load);
    for (int v = 0; v < 4; ++v) {
        EXPECT_DOUBLE_EQ(single[2 * v], 0.0);
        EXPECT_DOUBLE_EQ(single[2 * v + 1], -0.25);
    }
    load.f0 = Vector2d::Zero();
    EXPECT_EQ(load_fh_full(gen_quad(3), load).norm(), 0.0);
    const LoadSpec standard;
    const Mesh2D q = gen_quad(4);
    EXPECT_NEAR((load_fh_full(q, standard) - load_fh_full(q, LoadSpec{standard.f0, {0, 0}, {0, 0}, 0.5}) - traction_load(q, standard)).norm(), 0.0, 1e-12);
}
