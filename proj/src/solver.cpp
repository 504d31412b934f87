#include "vhi/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace vhi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::optional<ScalarLaw> effective_tangent_law(const ContactNode& n)
{
    if (n.tangent_law) return n.tresca_bound > 0.0 ? with_tresca(*n.tangent_law, n.tresca_bound) : *n.tangent_law;
    if (n.tresca_bound > 0.0) return ScalarLaw(laws::tresca(n.tresca_bound));
    return std::nullopt;
}

// A contact dof that carries a nonsmooth term or a bound, in z = sign * u.
struct ActiveDof {
    int dof = -1;
    double sign = 1.0;
    double weight = 0.0;
    std::optional<ScalarLaw> law;
    std::optional<double> upper;
    std::optional<double> alpha;
};

struct Partition {
    std::vector<ActiveDof> active;
    std::vector<bool> fixed;       // held at zero
    std::vector<int> interior;     // dof ids
    std::vector<int> interior_pos; // dof -> position or -1
};

Partition partition(const DiscreteVHI& p)
{
    const int n = static_cast<int>(p.f.size());
    Partition part;
    part.fixed.assign(static_cast<std::size_t>(n), false);
    std::vector<bool> is_active(static_cast<std::size_t>(n), false);
    for (const auto& c : p.contacts) {
        if (c.normal_dof >= 0) {
            if (c.constraint == NormalConstraint::fixed_zero) {
                part.fixed[static_cast<std::size_t>(c.normal_dof)] = true;
            } else if (c.normal_law || c.constraint == NormalConstraint::upper_bound) {
                ActiveDof a;
                a.dof = c.normal_dof;
                a.sign = c.normal_sign;
                a.weight = c.weight;
                a.law = c.normal_law;
                if (c.constraint == NormalConstraint::upper_bound) a.upper = c.gap;
                part.active.push_back(std::move(a));
                is_active[static_cast<std::size_t>(c.normal_dof)] = true;
            }
        }
        if (c.tangent_dof >= 0) {
            if (auto law = effective_tangent_law(c)) {
                ActiveDof a;
                a.dof = c.tangent_dof;
                a.sign = c.tangent_sign;
                a.weight = c.weight;
                a.law = std::move(law);
                part.active.push_back(std::move(a));
                is_active[static_cast<std::size_t>(c.tangent_dof)] = true;
            }
        }
    }
    for (auto& a : part.active) {
        a.alpha = a.law ? relaxed_monotonicity_constant(*a.law) : std::optional<double>(0.0);
    }
    std::sort(part.active.begin(), part.active.end(), [](const ActiveDof& a, const ActiveDof& b) { return a.dof < b.dof; });
    part.interior_pos.assign(static_cast<std::size_t>(n), -1);
    for (int d = 0; d < n; ++d) {
        if (!is_active[static_cast<std::size_t>(d)] && !part.fixed[static_cast<std::size_t>(d)]) {
            part.interior_pos[static_cast<std::size_t>(d)] = static_cast<int>(part.interior.size());
            part.interior.push_back(d);
        }
    }
    return part;
}

SparseMatrix select(const SparseMatrix& K, const std::vector<int>& row_pos, int rows, const std::vector<int>& col_pos,
                    int cols)
{
    std::vector<Eigen::Triplet<double>> trip;
    for (int j = 0; j < K.outerSize(); ++j) {
        const int cj = col_pos[static_cast<std::size_t>(j)];
        if (cj < 0) continue;
        for (SparseMatrix::InnerIterator it(K, j); it; ++it) {
            const int ri = row_pos[static_cast<std::size_t>(it.row())];
            if (ri >= 0) trip.emplace_back(ri, cj, it.value());
        }
    }
    SparseMatrix out(rows, cols);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

// Sparse SPD solves with iterative refinement.
class LinearSolver {
public:
    LinearSolver(const SparseMatrix& A, double tol) : A_(A), tol_(tol)
    {
        if (A.rows() == 0) return;
        ldlt_.compute(A);
        if (ldlt_.info() != Eigen::Success) throw InvariantViolation("stiffness matrix is not positive definite");
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const
    {
        if (A_.rows() == 0) return {};
        Eigen::VectorXd x = ldlt_.solve(b);
        const double bn = b.norm();
        for (int it = 0; it < 3; ++it) {
            const Eigen::VectorXd r = b - A_ * x;
            if (r.norm() <= tol_ * bn) break;
            x += ldlt_.solve(r);
        }
        return x;
    }

private:
    const SparseMatrix& A_;
    double tol_;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

double node_distance(const std::optional<ScalarLaw>& law, std::optional<double> upper, double z, double xi)
{
    SubdiffInterval set = law ? subdifferential(*law, z) : SubdiffInterval{0.0, 0.0};
    if (upper) {
        const double tol = 1e-12 * std::max(1.0, std::abs(*upper));
        if (z > *upper + tol) return kInf;
        if (z >= *upper - tol) set.hi = kInf;
    }
    return set.distance(xi);
}

// Energy of the reduced problem in z, without the constant.
double reduced_energy(const Eigen::MatrixXd& S, const Eigen::VectorXd& g, const std::vector<ActiveDof>& act,
                      const Eigen::VectorXd& z)
{
    double e = 0.5 * z.dot(S * z) - g.dot(z);
    for (std::size_t i = 0; i < act.size(); ++i) {
        if (act[i].law) e += act[i].weight * eval_potential(*act[i].law, z(static_cast<Eigen::Index>(i)));
    }
    return e;
}

// One linear step with every dof on a smooth affine piece released and the
// rest frozen; accepted only if the pieces and the energy do not get worse.
bool accelerate_step(const Eigen::MatrixXd& S, const Eigen::VectorXd& g, const std::vector<ActiveDof>& act,
                     Eigen::VectorXd& z)
{
    const Eigen::Index m = z.size();
    std::vector<Eigen::Index> free_ids;
    std::vector<AffinePiece> pieces;
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& a = act[static_cast<std::size_t>(i)];
        if (a.upper && z(i) >= *a.upper) continue;
        AffinePiece piece{0.0, 0.0};
        if (a.law) {
            const auto* pw = std::get_if<PiecewiseGraphLaw>(&*a.law);
            if (pw == nullptr) continue;
            const auto sd = pw->subdifferential(z(i));
            if (!sd.is_singleton()) continue;
            piece = pw->pieces()[pw->segment_of(z(i))];
        }
        free_ids.push_back(i);
        pieces.push_back(piece);
    }
    if (free_ids.empty()) return false;
    const Eigen::Index k = static_cast<Eigen::Index>(free_ids.size());
    Eigen::MatrixXd A(k, k);
    Eigen::VectorXd b(k);
    for (Eigen::Index r = 0; r < k; ++r) {
        const Eigen::Index i = free_ids[static_cast<std::size_t>(r)];
        const double w = act[static_cast<std::size_t>(i)].weight;
        b(r) = g(i) - w * pieces[static_cast<std::size_t>(r)].intercept;
        for (Eigen::Index c = 0; c < k; ++c) A(r, c) = S(i, free_ids[static_cast<std::size_t>(c)]);
        A(r, r) += w * pieces[static_cast<std::size_t>(r)].slope;
    }
    Eigen::VectorXd frozen = z;
    for (Eigen::Index i : free_ids) frozen(i) = 0.0;
    const Eigen::VectorXd coupling = S * frozen;
    for (Eigen::Index r = 0; r < k; ++r) b(r) -= coupling(free_ids[static_cast<std::size_t>(r)]);

    Eigen::ConjugateGradient<Eigen::MatrixXd, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-12);
    cg.compute(A);
    Eigen::VectorXd x0(k);
    for (Eigen::Index r = 0; r < k; ++r) x0(r) = z(free_ids[static_cast<std::size_t>(r)]);
    const Eigen::VectorXd x = cg.solveWithGuess(b, x0);
    if (cg.info() != Eigen::Success || !x.allFinite()) return false;

    Eigen::VectorXd trial = z;
    for (Eigen::Index r = 0; r < k; ++r) {
        const Eigen::Index i = free_ids[static_cast<std::size_t>(r)];
        const auto& a = act[static_cast<std::size_t>(i)];
        if (a.upper && x(r) > *a.upper) return false;
        if (a.law) {
            const auto& pw = std::get<PiecewiseGraphLaw>(*a.law);
            if (pw.segment_of(x(r)) != pw.segment_of(z(i))) return false;
        }
        trial(i) = x(r);
    }
    if (reduced_energy(S, g, act, trial) > reduced_energy(S, g, act, z)) return false;
    z = trial;
    return true;
}

}  // namespace

void DiscreteVHI::validate() const
{
    if (K.rows() != K.cols() || K.rows() != f.size()) throw DimensionMismatch("stiffness and load sizes differ");
    const int n = static_cast<int>(f.size());
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    auto claim = [&](int d) {
        if (d < 0) return;
        if (d >= n) throw DimensionMismatch("contact dof index out of range");
        if (used[static_cast<std::size_t>(d)]) throw InvariantViolation("contact dof used twice");
        used[static_cast<std::size_t>(d)] = true;
    };
    for (const auto& c : contacts) {
        claim(c.normal_dof);
        claim(c.tangent_dof);
        if (!(c.weight > 0.0)) throw InvariantViolation("contact weight must be positive");
        if (c.tresca_bound < 0.0) throw InvariantViolation("Tresca bound must be nonnegative");
        if (c.constraint == NormalConstraint::fixed_zero && c.normal_law) {
            throw InvariantViolation("a fixed-zero normal dof cannot carry a law");
        }
        if (c.constraint == NormalConstraint::upper_bound && !(c.gap >= 0.0)) {
            throw InvariantViolation("upper bound must be nonnegative");
        }
        if (c.constraint != NormalConstraint::free && c.normal_dof < 0) {
            throw InvariantViolation("normal constraint without a normal dof");
        }
        if ((c.normal_law && c.normal_dof < 0) || ((c.tangent_law || c.tresca_bound > 0.0) && c.tangent_dof < 0)) {
            throw InvariantViolation("law attached to a missing dof");
        }
    }
}

void SolverConfig::validate() const
{
    if (!(tol_inc > 0.0) || !(tol_res > 0.0) || !(linear_tol > 0.0)) throw InvariantViolation("tolerances must be positive");
    if (max_sweeps < 1) throw InvariantViolation("max_sweeps must be positive");
    if (!(omega > 0.0 && omega <= 1.0)) throw InvariantViolation("omega must lie in (0, 1]");
}

SolveResult solve(const DiscreteVHI& problem, const SolverConfig& config)
{
    problem.validate();
    config.validate();
    const Partition part = partition(problem);
    const int n = static_cast<int>(problem.f.size());
    const int nI = static_cast<int>(part.interior.size());
    const int m = static_cast<int>(part.active.size());

    std::vector<int> active_pos(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < m; ++i) active_pos[static_cast<std::size_t>(part.active[static_cast<std::size_t>(i)].dof)] = i;

    const SparseMatrix K_II = select(problem.K, part.interior_pos, nI, part.interior_pos, nI);
    const SparseMatrix K_IC = select(problem.K, part.interior_pos, nI, active_pos, m);
    const LinearSolver lin(K_II, config.linear_tol);

    Eigen::VectorXd f_I(nI);
    for (int i = 0; i < nI; ++i) f_I(i) = problem.f(part.interior[static_cast<std::size_t>(i)]);
    const Eigen::VectorXd y0 = nI > 0 ? lin.solve(f_I) : Eigen::VectorXd();
    const double base_energy = nI > 0 ? f_I.dot(y0) : 0.0;

    // Signed Schur complement S_z = s (K_CC - K_CI K_II^-1 K_IC) s, g_z = s (f_C - K_CI y0).
    Eigen::MatrixXd S(m, m);
    Eigen::VectorXd g(m);
    {
        const SparseMatrix K_CC = select(problem.K, active_pos, m, active_pos, m);
        const Eigen::MatrixXd Kcc = Eigen::MatrixXd(K_CC);
        const SparseMatrix K_CI = K_IC.transpose();
        for (int j = 0; j < m; ++j) {
            Eigen::VectorXd col = Kcc.col(j);
            if (nI > 0) col -= K_CI * lin.solve(Eigen::VectorXd(K_IC.col(j)));
            S.col(j) = col;
        }
        S = (0.5 * (S + S.transpose())).eval();
        for (int i = 0; i < m; ++i) {
            g(i) = problem.f(part.active[static_cast<std::size_t>(i)].dof);
        }
        if (nI > 0) g -= K_CI * y0;
        for (int i = 0; i < m; ++i) {
            const double si = part.active[static_cast<std::size_t>(i)].sign;
            g(i) *= si;
            for (int j = 0; j < m; ++j) S(i, j) *= si * part.active[static_cast<std::size_t>(j)].sign;
        }
    }

    for (int i = 0; i < m; ++i) {
        const auto& a = part.active[static_cast<std::size_t>(i)];
        if (!a.alpha || S(i, i) <= a.weight * *a.alpha) {
            std::ostringstream msg;
            msg << "nodal subproblem at dof " << a.dof << " is not strictly convex (diagonal " << S(i, i)
                << ", weight * alpha " << (a.alpha ? a.weight * *a.alpha : kInf) << ")";
            throw NotContractive(msg.str());
        }
    }

    SolveResult result;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    auto reduced_residual = [&](const Eigen::VectorXd& q) {
        double worst = 0.0;
        for (int i = 0; i < m; ++i) {
            const auto& a = part.active[static_cast<std::size_t>(i)];
            worst = std::max(worst, node_distance(a.law, a.upper, z(i), q(i) / a.weight));
        }
        return worst;
    };

    auto recover = [&]() {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd uc(m);
        for (int i = 0; i < m; ++i) {
            const auto& a = part.active[static_cast<std::size_t>(i)];
            uc(i) = a.sign * z(i);
            u(a.dof) = uc(i);
        }
        if (nI > 0) {
            const Eigen::VectorXd uI = m > 0 ? lin.solve(f_I - K_IC * uc) : y0;
            for (int i = 0; i < nI; ++i) u(part.interior[static_cast<std::size_t>(i)]) = uI(i);
        }
        return u;
    };

    bool converged = m == 0;
    double energy = reduced_energy(S, g, part.active, z);
    Eigen::VectorXd q = g - S * z;
    for (long sweep = 1; !converged && sweep <= config.max_sweeps; ++sweep) {
        const Eigen::VectorXd z_prev = z;
        for (int step = 0; step < m; ++step) {
            const int i = config.reverse_order ? m - 1 - step : step;
            const auto& a = part.active[static_cast<std::size_t>(i)];
            const double k = S(i, i);
            const double r = q(i) + k * z(i);
            double zn = 0.0;
            if (a.law) {
                const ProxResult pr = prox_1d(*a.law, k, r, a.weight, std::nullopt, a.upper);
                zn = pr.z;
                result.nonconvex_subproblem = result.nonconvex_subproblem || pr.nonconvex;
            } else {
                zn = prox_1d(k, r, std::nullopt, a.upper);
            }
            zn = z(i) + config.omega * (zn - z(i));
            const double d = zn - z(i);
            if (d != 0.0) {
                q.noalias() -= S.col(i) * d;
                z(i) = zn;
            }
        }
        if (config.accelerate && sweep % 50 == 0) accelerate_step(S, g, part.active, z);

        const Eigen::VectorXd dz = z - z_prev;
        const double norm_u = std::sqrt(std::max(0.0, z.dot(S * z) + base_energy));
        result.sweeps = sweep;
        result.final_increment = std::sqrt(std::max(0.0, dz.dot(S * dz))) / std::max(norm_u, 1e-300);

        if (config.check_descent) {
            const double e = reduced_energy(S, g, part.active, z);
            if (!result.nonconvex_subproblem && e > energy + 1e-12 * std::max(1.0, std::abs(energy))) {
                throw InvariantViolation("energy increased during a sweep");
            }
            energy = e;
        }
        if (result.final_increment < config.tol_inc || config.accelerate) {
            q = g - S * z;
            if (result.final_increment < config.tol_inc && reduced_residual(q) < config.tol_res) converged = true;
        }
    }

    result.u = recover();
    result.final_residual = residual_check(problem, result.u).max;
    result.energy = discrete_energy(problem, result.u);
    if (!converged) {
        std::ostringstream msg;
        msg << "no convergence after " << result.sweeps << " sweeps (increment " << result.final_increment
            << ", residual " << result.final_residual << ")";
        throw MaxSweepsExceeded(msg.str(), result);
    }
    return result;
}

ResidualReport residual_check(const DiscreteVHI& problem, const Eigen::VectorXd& u)
{
    problem.validate();
    if (u.size() != problem.f.size()) throw DimensionMismatch("residual_check: displacement size");
    const Eigen::VectorXd r = problem.f - problem.K * u;
    const Partition part = partition(problem);
    ResidualReport rep;
    rep.nodes.resize(problem.contacts.size());
    for (std::size_t k = 0; k < problem.contacts.size(); ++k) {
        const auto& c = problem.contacts[k];
        if (c.normal_dof >= 0 && c.constraint != NormalConstraint::fixed_zero &&
            (c.normal_law || c.constraint == NormalConstraint::upper_bound)) {
            const double z = c.normal_sign * u(c.normal_dof);
            const double xi = c.normal_sign * r(c.normal_dof) / c.weight;
            const std::optional<double> upper =
                c.constraint == NormalConstraint::upper_bound ? std::optional<double>(c.gap) : std::nullopt;
            rep.nodes[k].normal = node_distance(c.normal_law, upper, z, xi);
        }
        if (c.normal_dof >= 0 && c.constraint == NormalConstraint::fixed_zero && u(c.normal_dof) != 0.0) {
            rep.nodes[k].normal = kInf;
        }
        if (c.tangent_dof >= 0) {
            if (const auto law = effective_tangent_law(c)) {
                const double z = c.tangent_sign * u(c.tangent_dof);
                const double xi = c.tangent_sign * r(c.tangent_dof) / c.weight;
                rep.nodes[k].tangent = node_distance(law, std::nullopt, z, xi);
            }
        }
        rep.max = std::max({rep.max, rep.nodes[k].normal, rep.nodes[k].tangent});
    }
    double worst = 0.0;
    for (int d : part.interior) worst = std::max(worst, std::abs(r(d)));
    rep.interior_relative = worst / std::max(problem.f.norm(), std::numeric_limits<double>::min());
    return rep;
}

double discrete_energy(const DiscreteVHI& problem, const Eigen::VectorXd& u)
{
    if (u.size() != problem.f.size()) throw DimensionMismatch("discrete_energy: displacement size");
    double e = 0.5 * u.dot(problem.K * u) - problem.f.dot(u);
    for (const auto& c : problem.contacts) {
        if (c.normal_law && c.normal_dof >= 0) e += c.weight * eval_potential(*c.normal_law, c.normal_sign * u(c.normal_dof));
        if (const auto law = effective_tangent_law(c)) {
            e += c.weight * eval_potential(*law, c.tangent_sign * u(c.tangent_dof));
        }
    }
    return e;
}

Eigen::VectorXd boundary_mass(const DiscreteVHI& problem, bool tangential)
{
    Eigen::VectorXd m = Eigen::VectorXd::Zero(problem.f.size());
    for (const auto& c : problem.contacts) {
        const int d = tangential ? c.tangent_dof : c.normal_dof;
        if (d < 0 || (!tangential && c.constraint == NormalConstraint::fixed_zero)) continue;
        m(d) = c.weight;
    }
    return m;
}

SmallnessReport check_smallness(const DiscreteVHI& problem, const SparseMatrix& gram, const MaterialParams& params)
{
    problem.validate();
    params.validate();
    if (gram.rows() != problem.f.size() || gram.cols() != problem.f.size()) {
        throw DimensionMismatch("check_smallness: operator size");
    }
    const int n = static_cast<int>(problem.f.size());
    std::vector<int> keep_pos(static_cast<std::size_t>(n), 0);
    for (const auto& c : problem.contacts) {
        if (c.constraint == NormalConstraint::fixed_zero) keep_pos[static_cast<std::size_t>(c.normal_dof)] = -1;
    }
    int kept = 0;
    for (int& p : keep_pos) {
        if (p >= 0) p = kept++;
    }
    const SparseMatrix G = select(gram, keep_pos, kept, keep_pos, kept);
    const LinearSolver lin(G, 1e-14);

    auto smallest_eigenvalue = [&](bool tangential) {
        const Eigen::VectorXd full_mass = boundary_mass(problem, tangential);
        Eigen::VectorXd M(kept);
        for (int d = 0; d < n; ++d) {
            if (keep_pos[static_cast<std::size_t>(d)] >= 0) M(keep_pos[static_cast<std::size_t>(d)]) = full_mass(d);
        }
        if (M.maxCoeff() <= 0.0) throw InvariantViolation("no boundary mass on the requested trace component");
        Eigen::VectorXd x = M;
        double lambda = 0.0;
        for (int it = 0; it < 20000; ++it) {
            x = lin.solve(M.cwiseProduct(x));
            x /= std::sqrt(x.dot(M.cwiseProduct(x)));
            const double next = x.dot(G * x);
            if (it > 0 && std::abs(next - lambda) <= 1e-10 * next) return next;
            lambda = next;
        }
        throw EigenStagnation("inverse power iteration did not settle");
    };

    double alpha_nu = 0.0;
    double alpha_tau = 0.0;
    bool has_nu = false;
    bool has_tau = false;
    for (const auto& c : problem.contacts) {
        if (c.normal_law) {
            has_nu = true;
            const auto a = relaxed_monotonicity_constant(*c.normal_law);
            alpha_nu = std::max(alpha_nu, a ? *a : kInf);
        }
        if (const auto law = effective_tangent_law(c)) {
            has_tau = true;
            const auto a = relaxed_monotonicity_constant(*law);
            alpha_tau = std::max(alpha_tau, a ? *a : kInf);
        }
    }

    SmallnessReport rep;
    rep.m_a_est = params.shear_coefficient();
    double worst = -1.0;
    auto consider = [&](bool tangential, double alpha) {
        const double lambda = smallest_eigenvalue(tangential);
        const double ratio = alpha / lambda;
        if (ratio > worst) {
            worst = ratio;
            rep.alpha_psi = alpha;
            rep.lambda_est = lambda;
            rep.tangential = tangential;
        }
    };
    if (has_nu) consider(false, alpha_nu);
    if (has_tau) consider(true, alpha_tau);
    if (!has_nu && !has_tau) consider(false, 0.0);
    rep.satisfied = worst < rep.m_a_est;
    return rep;
}

}  // namespace vhi
