#include "vhi/vem.hpp"

#include "vhi/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace vhi {

namespace {

// Strain of basis polynomial k >= 3, times h.
Eigen::Vector3d scaled_strain(int k)
{
    switch (k) {
    case 3: return {1.0, 0.0, 0.0};
    case 4: return {0.0, 1.0, 0.0};
    case 5: return {0.0, 0.0, 1.0};
    default: return Eigen::Vector3d::Zero();
    }
}

Eigen::Matrix<double, 2, 6> basis_values(double xi, double eta)
{
    Eigen::Matrix<double, 2, 6> v;
    v << 1.0, 0.0, -eta, xi, 0.0, eta,
         0.0, 1.0, xi, 0.0, eta, xi;
    return v;
}

}  // namespace

Eigen::Vector2d VemProjector::evaluate(const Eigen::Matrix<double, 6, 1>& c, const Point& x) const
{
    const Point s = (x - center) / h;
    return basis_values(s.x(), s.y()) * c;
}

VemProjector local_projector(std::span<const Point> cell, const MaterialParams& params)
{
    return local_projector(cell, strain_energy_matrix(params));
}

VemProjector local_projector(std::span<const Point> cell, const Eigen::Matrix3d& energy)
{
    const int n = static_cast<int>(cell.size());
    if (n < 3) throw SingularProjection("cell has fewer than 3 vertices");
    VemProjector pr;
    pr.area = polygon_signed_area(cell);
    pr.h = polygon_diameter(cell);
    if (!(pr.area > 0.0) || !(pr.h > 0.0)) throw SingularProjection("cell has no positive area");
    for (const Point& p : cell) pr.center += p;
    pr.center /= n;

    // Stress tensors of the strain basis: sigma = diag(1,1,2)^-1 W eps.
    const Eigen::Matrix3d D = Eigen::Vector3d(1.0, 1.0, 0.5).asDiagonal() * energy;

    pr.D.resize(2 * n, 6);
    pr.B = Eigen::MatrixXd::Zero(6, 2 * n);
    for (int i = 0; i < n; ++i) {
        const Point s = (cell[static_cast<std::size_t>(i)] - pr.center) / pr.h;
        pr.D.middleRows<2>(2 * i) = basis_values(s.x(), s.y());
        pr.B(0, 2 * i) = 1.0 / n;
        pr.B(1, 2 * i + 1) = 1.0 / n;
        pr.B(2, 2 * i) = -s.y() / n;
        pr.B(2, 2 * i + 1) = s.x() / n;
    }
    for (int k = 3; k < 6; ++k) {
        const Eigen::Vector3d sv = D * scaled_strain(k) / pr.h;
        Eigen::Matrix2d sigma;
        sigma << sv(0), sv(2), sv(2), sv(1);
        for (int i = 0; i < n; ++i) {
            const int j = (i + 1) % n;
            const Point d = cell[static_cast<std::size_t>(j)] - cell[static_cast<std::size_t>(i)];
            const Eigen::Vector2d traction = 0.5 * sigma * Eigen::Vector2d(d.y(), -d.x());
            pr.B.block<1, 2>(k, 2 * i) += traction.transpose();
            pr.B.block<1, 2>(k, 2 * j) += traction.transpose();
        }
    }
    const Eigen::MatrixXd G = pr.B * pr.D;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
    if (lu.rank() < 6) throw SingularProjection("projection matrix is singular");
    pr.P = lu.solve(pr.B);
    return pr;
}

VemLocal local_stiffness(std::span<const Point> cell, const MaterialParams& params, const VemProjector& proj)
{
    return local_stiffness(cell, strain_energy_matrix(params), proj);
}

VemLocal local_stiffness(std::span<const Point> cell, const Eigen::Matrix3d& energy, const VemProjector& proj)
{
    const int n = static_cast<int>(cell.size());
    if (proj.P.cols() != 2 * n) throw DimensionMismatch("projector does not match the cell");
    Eigen::Matrix<double, 6, 6> Gt = Eigen::Matrix<double, 6, 6>::Zero();
    for (int j = 3; j < 6; ++j) {
        for (int k = 3; k < 6; ++k) {
            Gt(j, k) = proj.area * scaled_strain(j).dot(energy * scaled_strain(k)) / (proj.h * proj.h);
        }
    }
    VemLocal out;
    out.consistency = proj.P.transpose() * Gt * proj.P;
    out.consistency = 0.5 * (out.consistency + out.consistency.transpose()).eval();
    const double tau = out.consistency.trace() / (2.0 * n);
    const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(2 * n, 2 * n) - proj.D * proj.P;
    out.stabilization = tau * R.transpose() * R;
    out.stabilization = 0.5 * (out.stabilization + out.stabilization.transpose()).eval();
    out.A = out.consistency + out.stabilization;
    return out;
}

ConsistencyReport consistency_check(std::span<const Point> cell, const MaterialParams& params, double tol)
{
    const VemProjector pr = local_projector(cell, params);
    return consistency_check(cell, params, local_stiffness(cell, params, pr).A, tol);
}

ConsistencyReport consistency_check(std::span<const Point> cell, const MaterialParams& params,
                                    const Eigen::MatrixXd& A, double tol)
{
    const VemProjector pr = local_projector(cell, params);
    if (A.rows() != pr.D.rows() || A.cols() != pr.D.rows()) throw DimensionMismatch("local matrix size");
    // Exact a_T(e_i, p_k): zero for rigid p_k, boundary formula otherwise.
    Eigen::MatrixXd exact = pr.B.transpose();
    exact.leftCols<3>().setZero();
    const Eigen::MatrixXd discrete = A * pr.D;
    const double scale = std::max(exact.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    ConsistencyReport r;
    r.max_defect = (discrete - exact).cwiseAbs().maxCoeff() / scale;
    r.passed = r.max_defect <= tol;
    return r;
}

namespace {

double fan_energy(std::span<const Point> cell, const Eigen::Matrix3d& W, const Eigen::VectorXd& v)
{
    const int n = static_cast<int>(cell.size());
    Point c = Point::Zero();
    Eigen::Vector2d vc = Eigen::Vector2d::Zero();
    for (int i = 0; i < n; ++i) {
        c += cell[static_cast<std::size_t>(i)];
        vc += v.segment<2>(2 * i);
    }
    c /= n;
    vc /= n;
    double e = 0.0;
    for (int i = 0; i < n; ++i) {
        const int j = (i + 1) % n;
        const Point& a = cell[static_cast<std::size_t>(i)];
        const Point& b = cell[static_cast<std::size_t>(j)];
        const double area = 0.5 * ((a - c).x() * (b - c).y() - (a - c).y() * (b - c).x());
        Eigen::Matrix<double, 6, 1> ue;
        ue << vc, v.segment<2>(2 * i), v.segment<2>(2 * j);
        const Eigen::Vector3d eps = p1_strain_matrix(c, a, b) * ue;
        e += area * eps.dot(W * eps);
    }
    return e;
}

}  // namespace

StabilityEstimate estimate_stability(std::span<const Point> cell, const MaterialParams& params, int samples,
                                     std::uint64_t seed)
{
    const Eigen::Matrix3d W = strain_energy_matrix(params);
    const VemProjector pr = local_projector(cell, W);
    const Eigen::MatrixXd A = local_stiffness(cell, W, pr).A;
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(pr.D.leftCols<3>());
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(pr.D.rows(), 3);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    StabilityEstimate est{std::numeric_limits<double>::infinity(), 0.0};
    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd v(pr.D.rows());
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
        v -= Q * (Q.transpose() * v);
        const double ratio = v.dot(A * v) / fan_energy(cell, W, v);
        est.alpha_star = std::min(est.alpha_star, ratio);
        est.alpha_star_upper = std::max(est.alpha_star_upper, ratio);
    }
    return est;
}

SparseMatrix assemble_full_vem(const Mesh2D& mesh, const Eigen::Matrix3d& energy)
{
    std::vector<Eigen::Triplet<double>> trip;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto pts = mesh.cell_points(c);
        const auto cell = mesh.cell(c);
        const Eigen::MatrixXd A = local_stiffness(pts, energy, local_projector(pts, energy)).A;
        const int m = static_cast<int>(A.rows());
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                trip.emplace_back(2 * cell[static_cast<std::size_t>(i / 2)] + i % 2,
                                  2 * cell[static_cast<std::size_t>(j / 2)] + j % 2, A(i, j));
            }
        }
    }
    SparseMatrix K(2 * mesh.num_vertices(), 2 * mesh.num_vertices());
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

Assembled assemble_vem(const Mesh2D& mesh, const MaterialParams& params)
{
    Assembled out;
    out.K_full = assemble_full_vem(mesh, strain_energy_matrix(params));
    out.dofs = DofMap(mesh);
    out.K = restrict_matrix(out.K_full, out.dofs);
    return out;
}

Eigen::VectorXd load_fh_full(const Mesh2D& mesh, const LoadSpec& load)
{
    Eigen::VectorXd f = traction_load(mesh, load);
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto pts = mesh.cell_points(c);
        const double share = polygon_signed_area(pts) / static_cast<double>(pts.size());
        for (int v : mesh.cell(c)) f.segment<2>(2 * v) += share * load.f0;
    }
    return f;
}

Eigen::VectorXd load_fh(const Mesh2D& mesh, const DofMap& dofs, const LoadSpec& load)
{
    return restrict_vector(load_fh_full(mesh, load), dofs);
}

Eigen::Vector2d evaluate_proxy(const Mesh2D& mesh, int c, const Eigen::VectorXd& u_full, const Point& x)
{
    const auto pts = mesh.cell_points(c);
    const auto cell = mesh.cell(c);
    // The projector does not depend on the material for k = 1.
    const VemProjector pr = local_projector(pts, strain_gram_matrix());
    Eigen::VectorXd ue(2 * static_cast<Eigen::Index>(cell.size()));
    for (std::size_t i = 0; i < cell.size(); ++i) ue.segment<2>(2 * static_cast<Eigen::Index>(i)) = u_full.segment<2>(2 * cell[i]);
    const Eigen::Matrix<double, 6, 1> coef = pr.P * ue;
    return pr.evaluate(coef, x);
}

}  // namespace vhi
