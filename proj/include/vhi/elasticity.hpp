#pragma once

// Plane-strain linear elasticity in symmetric-tensor form.
//
// Tensors are stored as (t11, t22, t12) with the tensor entry t12, not the
// engineering shear, so sigma : tau = s^T diag(1, 1, 2) t.

#include <Eigen/Core>

namespace vhi {

struct MaterialParams {
    double E = 2000.0;
    double kappa = 0.3;

    /// Throws InvariantViolation unless E > 0 and 0 < kappa < 1/2.
    void validate() const;
    double lambda() const;
    /// Coefficient of tau in the law, E / (1 + kappa).
    double shear_coefficient() const;
};

struct SymTensor2 {
    double t11 = 0.0;
    double t22 = 0.0;
    double t12 = 0.0;

    Eigen::Vector3d voigt() const { return {t11, t22, t12}; }
    double trace() const { return t11 + t22; }
    double norm() const;
};

double double_dot(const SymTensor2& a, const SymTensor2& b);

/// D with sigma = D (e11, e22, e12) in the storage convention above.
Eigen::Matrix3d elasticity_matrix(const MaterialParams& params);

/// W with (law e) : t = e^T W t for stored strains; W = diag(1, 1, 2) D.
Eigen::Matrix3d strain_energy_matrix(const MaterialParams& params);

/// diag(1, 1, 2): the plain e : t product in storage form.
Eigen::Matrix3d strain_gram_matrix();

SymTensor2 apply_law(const MaterialParams& params, const SymTensor2& eps);
SymTensor2 strain_from_gradient(double g11, double g12, double g21, double g22);

struct LoadSpec {
    Eigen::Vector2d f0{0.0, -0.05};
    Eigen::Vector2d f2_left{800.0, 0.0};
    Eigen::Vector2d f2_right{-800.0, 0.0};
    /// Tractions act on the Neumann sides for y in [traction_y_min, 1).
    double traction_y_min = 0.5;

    void validate() const;
};

}  // namespace vhi
