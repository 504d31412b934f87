#pragma once

// Discrete variational-hemivariational inequalities with separable nodal
// nonsmooth terms on the contact boundary.
//
// Minimizes 1/2 u^T K u - f^T u + sum_i w_i (psi_nu(u_nu,i) + psi_tau(u_tau,i)
// + fb |u_tau,i|) over the admissible set, by nonlinear Gauss-Seidel on the
// Schur complement of K onto the contact dofs that carry a nonsmooth term or a
// bound. All other free dofs are eliminated exactly.

#include "vhi/errors.hpp"
#include "vhi/fem.hpp"
#include "vhi/nonsmooth.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace vhi {

enum class NormalConstraint { free, fixed_zero, upper_bound };

struct ContactNode {
    double weight = 0.0;
    int normal_dof = -1;
    double normal_sign = DofMap::normal_sign;
    int tangent_dof = -1;
    double tangent_sign = DofMap::tangent_sign;
    std::optional<ScalarLaw> normal_law;
    std::optional<ScalarLaw> tangent_law;
    double tresca_bound = 0.0;
    NormalConstraint constraint = NormalConstraint::free;
    /// Upper bound on u_nu when constraint == upper_bound.
    double gap = 0.0;
};

struct DiscreteVHI {
    SparseMatrix K;
    Eigen::VectorXd f;
    std::vector<ContactNode> contacts;

    /// Throws InvariantViolation or DimensionMismatch.
    void validate() const;
};

struct SolverConfig {
    double tol_inc = 1e-10;
    double tol_res = 1e-8;
    long max_sweeps = 100000;
    double omega = 1.0;
    /// Relative residual target for the iterative refinement of linear solves.
    double linear_tol = 1e-14;
    /// Frozen-state linear step every 50 sweeps.
    bool accelerate = false;
    bool reverse_order = false;
    /// Throw InvariantViolation if a sweep increases the energy.
    bool check_descent = false;

    void validate() const;
};

struct SolveResult {
    Eigen::VectorXd u;
    long sweeps = 0;
    double final_increment = 0.0;
    double final_residual = 0.0;
    double energy = 0.0;
    /// Set when some nodal subproblem was not strictly convex.
    bool nonconvex_subproblem = false;
};

class MaxSweepsExceeded : public Error {
public:
    MaxSweepsExceeded(const std::string& what, SolveResult best) : Error(what), best_(std::move(best)) {}
    const SolveResult& best() const noexcept { return best_; }

private:
    SolveResult best_;
};

/// Throws NotContractive when some nodal subproblem cannot be strictly convex
/// (diagonal of the reduced operator <= w * alpha), MaxSweepsExceeded.
SolveResult solve(const DiscreteVHI& problem, const SolverConfig& config = {});

struct NodeResidual {
    double normal = 0.0;
    double tangent = 0.0;
};

struct ResidualReport {
    std::vector<NodeResidual> nodes;
    /// Largest contact-node inclusion residual.
    double max = 0.0;
    /// Largest |(f - K u)_i| over dofs without a nonsmooth term, over ||f||.
    double interior_relative = 0.0;
};

/// Distance from s (f - K u)_d / w to dpsi(z) + fb d|z| + N(z) per contact dof.
ResidualReport residual_check(const DiscreteVHI& problem, const Eigen::VectorXd& u);

/// 1/2 u^T K u - f^T u + sum of weighted nodal potentials.
double discrete_energy(const DiscreteVHI& problem, const Eigen::VectorXd& u);

struct SmallnessReport {
    double alpha_psi = 0.0;
    double lambda_est = 0.0;
    double m_a_est = 0.0;
    bool satisfied = false;
    /// True when the binding law is tangential.
    bool tangential = false;
};

/// Diagonal boundary mass on the normal (or tangent) dofs of the contact nodes.
Eigen::VectorXd boundary_mass(const DiscreteVHI& problem, bool tangential);

/// Smallest eigenvalue of gram u = lambda M u on the trace component carrying
/// a law, by inverse power iteration, against alpha_psi and E / (1 + kappa).
/// `gram` is the reduced operator of the plain e : e form. Fixed-zero normal
/// dofs are removed first. Throws EigenStagnation.
SmallnessReport check_smallness(const DiscreteVHI& problem, const SparseMatrix& gram, const MaterialParams& params);

}  // namespace vhi
