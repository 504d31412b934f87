#pragma once

// Clarke calculus for scalar, piecewise-smooth, locally Lipschitz potentials.
//
// A potential psi is stored through its derivative graph: on each open
// segment between breakpoints the derivative is affine, and one anchor value
// fixes the additive constant. At a breakpoint the generalized gradient is the
// closed hull of the two one-sided derivative limits.

#include <optional>
#include <variant>
#include <vector>

namespace vhi {

struct SubdiffInterval {
    double lo = 0.0;
    double hi = 0.0;

    bool is_singleton() const { return lo == hi; }
    /// Distance from x to [lo, hi]; 0 inside.
    double distance(double x) const;
};

/// Derivative xi(z) = slope * z + intercept on one open segment.
struct AffinePiece {
    double slope = 0.0;
    double intercept = 0.0;

    double operator()(double z) const { return slope * z + intercept; }
};

class PiecewiseGraphLaw {
public:
    /// `pieces` has one entry per open segment, i.e. breakpoints.size() + 1.
    /// The potential takes the value `anchor_value` at `anchor_z`.
    PiecewiseGraphLaw(std::vector<double> breakpoints, std::vector<AffinePiece> pieces,
                      double anchor_z = 0.0, double anchor_value = 0.0);

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<AffinePiece>& pieces() const { return pieces_; }

    double potential(double z) const;
    SubdiffInterval subdifferential(double z) const;

    /// Index of the open segment containing z; a breakpoint maps to the
    /// segment on its right.
    std::size_t segment_of(double z) const;

private:
    double integral(std::size_t seg, double from, double to) const;

    std::vector<double> breakpoints_;
    std::vector<AffinePiece> pieces_;
    std::vector<double> breakpoint_values_;
    double anchor_z_;
    double anchor_value_;
};

/// psi(z) = int_0^{|z|} mu(t) dt with mu(r) = (a - b) exp(-beta r) + b.
class ExpFrictionLaw {
public:
    ExpFrictionLaw(double a, double b, double beta);

    double a() const { return a_; }
    double b() const { return b_; }
    double beta() const { return beta_; }

    double modulus(double r) const;
    double potential(double z) const;
    SubdiffInterval subdifferential(double z) const;

private:
    double a_;
    double b_;
    double beta_;
};

using ScalarLaw = std::variant<PiecewiseGraphLaw, ExpFrictionLaw>;

double eval_potential(const ScalarLaw& law, double z);
SubdiffInterval subdifferential(const ScalarLaw& law, double z);

/// Generalized directional derivative psi^0(z; d) = max { xi d : xi in dpsi(z) }.
double clarke_dd(const ScalarLaw& law, double z, double d);

/// Least alpha >= 0 with psi0(z1; z2-z1) + psi0(z2; z1-z2) <= alpha |z1-z2|^2.
/// Empty when no finite constant exists (a downward derivative jump).
std::optional<double> relaxed_monotonicity_constant(const ScalarLaw& law);

struct GrowthBound {
    double c0 = 0.0;
    double c1 = 0.0;
};

/// Constants with |xi| <= c0 + c1 |z| for every xi in dpsi(z).
GrowthBound growth_constants(const ScalarLaw& law);

struct ProxResult {
    double z = 0.0;
    /// Set when the subproblem is not strictly convex and more than one
    /// local minimizer was found; `z` is still the global one.
    bool nonconvex = false;
};

/// Global minimizer of 0.5 k z^2 - r z + w psi(z) over [lower, upper].
ProxResult prox_1d(const ScalarLaw& law, double k, double r, double w,
                   std::optional<double> lower = std::nullopt,
                   std::optional<double> upper = std::nullopt);

/// Same problem without a potential: clamp(r / k, lower, upper).
double prox_1d(double k, double r, std::optional<double> lower = std::nullopt,
               std::optional<double> upper = std::nullopt);

/// psi(z) + fb |z|, the Tresca term folded into the law.
ScalarLaw with_tresca(const ScalarLaw& law, double fb);

namespace laws {

PiecewiseGraphLaw zero();
/// fb |z|
PiecewiseGraphLaw tresca(double fb);
/// -|x|
PiecewiseGraphLaw negative_abs();
/// 0 for x <= 0, x for x > 0
PiecewiseGraphLaw positive_part();
/// 2x + 3 for x < -1, |x| on [-1, 1], 2x^2 - 1 for x > 1
PiecewiseGraphLaw nonmonotone_fixture();
/// Normal compliance graph: 0 | [0,2] | 2 on (0,0.04] | 4 - 50u | 20u - 0.2.
PiecewiseGraphLaw multivalued_compliance();
/// a = 3e-3, b = 2.5e-3, beta = 2e3
ExpFrictionLaw slip_weakening_friction();

}  // namespace laws

}  // namespace vhi
