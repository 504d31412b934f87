#pragma once

// Lowest-order virtual elements for plane-strain elasticity on polygons.
//
// Local dofs are vertex values, ordered (x, y) per vertex. Polynomials use the
// scaled monomials xi = (x - xc) / h, eta = (y - yc) / h about the vertex
// average with h the cell diameter, in the basis
//   (1, 0), (0, 1), (-eta, xi), (xi, 0), (0, eta), (eta, xi).

#include "vhi/elasticity.hpp"
#include "vhi/fem.hpp"
#include "vhi/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>

namespace vhi {

struct VemProjector {
    /// 6 x 2n: dof vector to polynomial coefficients.
    Eigen::MatrixXd P;
    /// 2n x 6: dof values of each basis polynomial.
    Eigen::MatrixXd D;
    /// 6 x 2n: right-hand sides; rows 3..5 are a_T(v, p_k).
    Eigen::MatrixXd B;
    Point center = Point::Zero();
    double h = 0.0;
    double area = 0.0;

    /// Value of the polynomial with coefficients c at x.
    Eigen::Vector2d evaluate(const Eigen::Matrix<double, 6, 1>& c, const Point& x) const;
};

/// Throws SingularProjection for degenerate polygons.
VemProjector local_projector(std::span<const Point> cell, const MaterialParams& params);
VemProjector local_projector(std::span<const Point> cell, const Eigen::Matrix3d& energy);

struct VemLocal {
    Eigen::MatrixXd A;
    Eigen::MatrixXd consistency;
    Eigen::MatrixXd stabilization;
};

VemLocal local_stiffness(std::span<const Point> cell, const MaterialParams& params, const VemProjector& proj);
VemLocal local_stiffness(std::span<const Point> cell, const Eigen::Matrix3d& energy, const VemProjector& proj);

struct ConsistencyReport {
    bool passed = false;
    /// Largest |a^h_T(e_i, p) - a_T(e_i, p)| over dofs and basis polynomials,
    /// relative to the largest |a_T(e_i, p)|.
    double max_defect = 0.0;
};

ConsistencyReport consistency_check(std::span<const Point> cell, const MaterialParams& params, double tol = 1e-12);
/// Same check for an arbitrary local matrix A.
ConsistencyReport consistency_check(std::span<const Point> cell, const MaterialParams& params,
                                    const Eigen::MatrixXd& A, double tol = 1e-12);

struct StabilityEstimate {
    double alpha_star = 0.0;
    double alpha_star_upper = 0.0;
};

/// Rayleigh quotients a^h_T(v, v) / a_T(v, v) over random non-rigid v, with
/// a_T evaluated on the piecewise-linear fan interpolant about the vertex
/// average.
StabilityEstimate estimate_stability(std::span<const Point> cell, const MaterialParams& params, int samples = 1000,
                                     std::uint64_t seed = 12345);

SparseMatrix assemble_full_vem(const Mesh2D& mesh, const Eigen::Matrix3d& energy);
Assembled assemble_vem(const Mesh2D& mesh, const MaterialParams& params);

/// Each vertex of T receives |T| f0 / n_T, plus the traction term; full.
Eigen::VectorXd load_fh_full(const Mesh2D& mesh, const LoadSpec& load);
Eigen::VectorXd load_fh(const Mesh2D& mesh, const DofMap& dofs, const LoadSpec& load);

/// Polynomial proxy of a full VEM field on cell c, evaluated at x.
Eigen::Vector2d evaluate_proxy(const Mesh2D& mesh, int c, const Eigen::VectorXd& u_full, const Point& x);

}  // namespace vhi
