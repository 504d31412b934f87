#pragma once

// Linear triangular finite elements for plane-strain elasticity, and the
// dof bookkeeping shared with the virtual element assembly.
//
// Full vectors hold 2 entries per vertex (x then y). Reduced vectors hold the
// free dofs only, numbered vertex-major in the same order.

#include "vhi/elasticity.hpp"
#include "vhi/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <vector>

namespace vhi {

using SparseMatrix = Eigen::SparseMatrix<double>;
using VectorField = std::function<Eigen::Vector2d(const Point&)>;
/// Rows are components, columns are derivatives: g(i, j) = d u_i / d x_j.
using GradientField = std::function<Eigen::Matrix2d(const Point&)>;

struct ContactVertex {
    int vertex = -1;
    double weight = 0.0;
};

class DofMap {
public:
    /// Outward normal on the contact side is (0, -1): u_nu = -u_y.
    static constexpr int normal_component = 1;
    static constexpr double normal_sign = -1.0;
    static constexpr int tangent_component = 0;
    static constexpr double tangent_sign = 1.0;

    DofMap() = default;
    /// Fixes both components on every vertex of the clamped side.
    explicit DofMap(const Mesh2D& mesh);
    /// Fixes both components on vertices with fixed[v] set.
    DofMap(const Mesh2D& mesh, const std::vector<bool>& fixed);

    int num_vertices() const { return static_cast<int>(index_.size()); }
    int num_free() const { return num_free_; }
    /// Reduced index of (vertex, component), or -1 when fixed.
    int dof(int vertex, int component) const { return index_[static_cast<std::size_t>(vertex)][static_cast<std::size_t>(component)]; }
    bool is_fixed(int vertex) const { return dof(vertex, 0) < 0; }

    /// Free vertices on the contact side, ordered by x, with lumped weights.
    const std::vector<ContactVertex>& contact() const { return contact_; }

private:
    std::vector<std::array<int, 2>> index_;
    int num_free_ = 0;
    std::vector<ContactVertex> contact_;
};

/// Per-vertex lumped weights on the contact side: half the length of the
/// adjacent contact edges; zero elsewhere.
std::vector<double> contact_weights(const Mesh2D& mesh);

/// Unconstrained stiffness with the energy matrix W (e^T W t per unit area).
SparseMatrix assemble_full_p1(const Mesh2D& mesh, const Eigen::Matrix3d& energy);

struct Assembled {
    SparseMatrix K;
    DofMap dofs;
    SparseMatrix K_full;
};

/// Throws NonTriangleCell on a non-triangular mesh.
Assembled assemble_stiffness_p1(const Mesh2D& mesh, const MaterialParams& params);

SparseMatrix restrict_matrix(const SparseMatrix& full, const DofMap& dofs);
Eigen::VectorXd restrict_vector(const Eigen::VectorXd& full, const DofMap& dofs);
/// Reduced to full; fixed dofs take `fixed_values` (zero when empty).
Eigen::VectorXd expand(const Eigen::VectorXd& reduced, const DofMap& dofs,
                       const Eigen::VectorXd& fixed_values = {});

/// Reduced load with nonhomogeneous Dirichlet data moved to the right side:
/// f_F - K_FD u_D.
Eigen::VectorXd lift_dirichlet(const SparseMatrix& K_full, const Eigen::VectorXd& f_full,
                               const Eigen::VectorXd& u_full, const DofMap& dofs);

/// Traction contribution, integrated exactly for piecewise-linear traces on
/// the traction sides restricted to y >= traction_y_min.
Eigen::VectorXd traction_load(const Mesh2D& mesh, const LoadSpec& load);
/// Body force by the centroid rule plus tractions; full vector.
Eigen::VectorXd assemble_full_load_p1(const Mesh2D& mesh, const LoadSpec& load);
Eigen::VectorXd assemble_load(const Mesh2D& mesh, const DofMap& dofs, const LoadSpec& load);
/// Body force from a field, integrated with a high-order triangle rule; full.
Eigen::VectorXd assemble_body_load_p1(const Mesh2D& mesh, const VectorField& f);

Eigen::VectorXd interpolate_full(const Mesh2D& mesh, const VectorField& field);
Eigen::VectorXd interpolate_p1(const Mesh2D& mesh, const DofMap& dofs, const VectorField& field);

/// sqrt(v^T K v); throws DimensionMismatch.
double energy_norm(const SparseMatrix& K, const Eigen::VectorXd& v);

/// Energy-norm distance between a full P1 field and an analytic gradient.
double energy_error_p1(const Mesh2D& mesh, const MaterialParams& params, const Eigen::VectorXd& u_full,
                       const GradientField& grad);
/// L2 distance on the contact side between a full P1 field and a field.
double contact_trace_error(const Mesh2D& mesh, const Eigen::VectorXd& u_full, const VectorField& field);

/// Quadrature on a triangle: points as barycentric weights of the vertices.
struct TriangleRule {
    std::vector<Eigen::Vector3d> bary;
    std::vector<double> weight;  // sums to 1
};
/// Collapsed Gauss rule, exact for polynomials of degree 7.
const TriangleRule& triangle_rule();

/// Strain-displacement matrix of a P1 triangle (3 x 6, storage convention).
Eigen::Matrix<double, 3, 6> p1_strain_matrix(const Point& a, const Point& b, const Point& c);

}  // namespace vhi
