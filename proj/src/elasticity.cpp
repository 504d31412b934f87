#include "vhi/elasticity.hpp"

#include "vhi/errors.hpp"

#include <cmath>

namespace vhi {

void MaterialParams::validate() const
{
    if (!(E > 0.0) || !std::isfinite(E)) throw InvariantViolation("Young modulus must be positive");
    if (!(kappa > 0.0 && kappa < 0.5)) throw InvariantViolation("Poisson ratio must lie in (0, 0.5)");
}

double MaterialParams::lambda() const { return E * kappa / ((1.0 + kappa) * (1.0 - 2.0 * kappa)); }

double MaterialParams::shear_coefficient() const { return E / (1.0 + kappa); }

double SymTensor2::norm() const { return std::sqrt(t11 * t11 + t22 * t22 + 2.0 * t12 * t12); }

double double_dot(const SymTensor2& a, const SymTensor2& b)
{
    return a.t11 * b.t11 + a.t22 * b.t22 + 2.0 * a.t12 * b.t12;
}

Eigen::Matrix3d elasticity_matrix(const MaterialParams& params)
{
    params.validate();
    const double l = params.lambda();
    const double m = params.shear_coefficient();
    Eigen::Matrix3d d;
    d << l + m, l, 0.0,
         l, l + m, 0.0,
         0.0, 0.0, m;
    return d;
}

Eigen::Matrix3d strain_energy_matrix(const MaterialParams& params)
{
    return strain_gram_matrix() * elasticity_matrix(params);
}

Eigen::Matrix3d strain_gram_matrix() { return Eigen::Vector3d(1.0, 1.0, 2.0).asDiagonal(); }

SymTensor2 apply_law(const MaterialParams& params, const SymTensor2& eps)
{
    const Eigen::Vector3d s = elasticity_matrix(params) * eps.voigt();
    return {s(0), s(1), s(2)};
}

SymTensor2 strain_from_gradient(double g11, double g12, double g21, double g22)
{
    return {g11, g22, 0.5 * (g12 + g21)};
}

void LoadSpec::validate() const
{
    if (!f0.allFinite() || !f2_left.allFinite() || !f2_right.allFinite() || !std::isfinite(traction_y_min)) {
        throw InvariantViolation("load components must be finite");
    }
}

}  // namespace vhi
