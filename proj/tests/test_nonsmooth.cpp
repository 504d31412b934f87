#include "vhi/nonsmooth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace vhi;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

std::vector<double> grid(double lo, double hi, int n)
{
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(lo + (hi - lo) * i / (n - 1));
    return g;
}

std::vector<ScalarLaw> all_laws()
{
    return {laws::negative_abs(), laws::positive_part(), laws::nonmonotone_fixture(), laws::multivalued_compliance(),
            laws::slip_weakening_friction(), laws::tresca(0.7), laws::zero()};
}

void expect_interval(const SubdiffInterval& s, double lo, double hi)
{
    EXPECT_DOUBLE_EQ(s.lo, lo);
    EXPECT_DOUBLE_EQ(s.hi, hi);
}

}  // namespace

TEST(EvalPotential, PaperExamples)
{
    EXPECT_EQ(eval_potential(laws::positive_part(), -3.0), 0.0);
    EXPECT_EQ(eval_potential(laws::slip_weakening_friction(), 0.0), 0.0);
    EXPECT_DOUBLE_EQ(eval_potential(laws::nonmonotone_fixture(), 2.0), 7.0);
}

TEST(EvalPotential, MatchesClosedForms)
{
    const ExpFrictionLaw f = laws::slip_weakening_friction();
    for (double z : grid(-0.01, 0.01, 41)) {
        const double r = std::abs(z);
        const double expected = (3e-3 - 2.5e-3) * (1.0 - std::exp(-2e3 * r)) / 2e3 + 2.5e-3 * r;
        EXPECT_NEAR(eval_potential(f, z), expected, 1e-18);
        EXPECT_DOUBLE_EQ(eval_potential(laws::negative_abs(), z), -r);
    }
    for (double x : grid(-3.0, 3.0, 61)) {
        const double psi3 = x < -1 ? 2 * x + 3 : (x <= 1 ? std::abs(x) : 2 * x * x - 1);
        EXPECT_NEAR(eval_potential(laws::nonmonotone_fixture(), x), psi3, 1e-13);
    }
}

TEST(EvalPotential, ContinuousAcrossBreakpoints)
{
    const PiecewiseGraphLaw l = laws::multivalued_compliance();
    for (double b : l.breakpoints()) {
        EXPECT_NEAR(l.potential(b - 1e-12), l.potential(b + 1e-12), 1e-11);
    }
}

TEST(Subdifferential, PsiOneTable)
{
    const ScalarLaw l = laws::negative_abs();
    expect_interval(subdifferential(l, -0.5), 1.0, 1.0);
    expect_interval(subdifferential(l, 0.0), -1.0, 1.0);
    expect_interval(subdifferential(l, 0.5), -1.0, -1.0);
}

TEST(Subdifferential, PsiTwoTable)
{
    const ScalarLaw l = laws::positive_part();
    expect_interval(subdifferential(l, -2.0), 0.0, 0.0);
    expect_interval(subdifferential(l, 0.0), 0.0, 1.0);
    expect_interval(subdifferential(l, 2.0), 1.0, 1.0);
}

TEST(Subdifferential, PsiThreeTable)
{
    const ScalarLaw l = laws::nonmonotone_fixture();
    expect_interval(subdifferential(l, -2.0), 2.0, 2.0);
    expect_interval(subdifferential(l, -1.0), -1.0, 2.0);
    expect_interval(subdifferential(l, -0.5), -1.0, -1.0);
    expect_interval(subdifferential(l, 0.0), -1.0, 1.0);
    expect_interval(subdifferential(l, 0.5), 1.0, 1.0);
    expect_interval(subdifferential(l, 1.0), 1.0, 4.0);
    expect_interval(subdifferential(l, 1.5), 6.0, 6.0);
}

TEST(Subdifferential, ComplianceGraph)
{
    const ScalarLaw l = laws::multivalued_compliance();
    expect_interval(subdifferential(l, 0.05), 1.5, 1.5);
    expect_interval(subdifferential(l, -0.1), 0.0, 0.0);
    expect_interval(subdifferential(l, 0.0), 0.0, 2.0);
    expect_interval(subdifferential(l, 0.02), 2.0, 2.0);
    EXPECT_NEAR(subdifferential(l, 0.1).lo, 1.8, 1e-14);
}

TEST(Subdifferential, FrictionAtZeroIsFullInterval)
{
    const ScalarLaw l = laws::slip_weakening_friction();
    expect_interval(subdifferential(l, 0.0), -3e-3, 3e-3);
    const auto s = subdifferential(l, 1e-3);
    EXPECT_TRUE(s.is_singleton());
    EXPECT_NEAR(s.lo, 5e-4 * std::exp(-2.0) + 2.5e-3, 1e-18);
}

TEST(ClarkeDD, Examples)
{
    EXPECT_DOUBLE_EQ(clarke_dd(laws::negative_abs(), 0.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(clarke_dd(laws::nonmonotone_fixture(), 1.0, -1.0), -1.0);
    for (const auto& l : all_laws()) EXPECT_EQ(clarke_dd(l, 0.3, 0.0), 0.0);
}

TEST(ClarkeDD, HomogeneitySubadditivityTwoSided)
{
    const auto zs = grid(-2.0, 2.0, 101);
    const auto ds = grid(-1.5, 1.5, 100);
    for (const auto& l : all_laws()) {
        for (double z : zs) {
            for (double d : ds) {
                const double base = clarke_dd(l, z, d);
                for (double lam : {0.0, 0.5, 3.0}) EXPECT_NEAR(clarke_dd(l, z, lam * d), lam * base, 1e-12 * (1 + std::abs(base)));
                EXPECT_GE(clarke_dd(l, z, -d), -base - 1e-14);
                const double d2 = 0.37 - d;
                EXPECT_LE(clarke_dd(l, z, d + d2), base + clarke_dd(l, z, d2) + 1e-12);
            }
        }
    }
}

TEST(ClarkeDD, MatchesDifferenceQuotientsOffBreakpoints)
{
    const double step = 1e-7;
    for (const auto& l : all_laws()) {
        for (double z : grid(-1.93, 1.91, 37)) {
            const auto s = subdifferential(l, z);
            if (!s.is_singleton()) continue;
            const double fwd = (eval_potential(l, z + step) - eval_potential(l, z)) / step;
            const double bwd = (eval_potential(l, z - step) - eval_potential(l, z)) / step;
            const double tol = 1e-4 * (1.0 + std::abs(fwd)) + (std::holds_alternative<ExpFrictionLaw>(l) ? 1e-6 : 0.0);
            EXPECT_NEAR(clarke_dd(l, z, 1.0), fwd, tol);
            EXPECT_NEAR(clarke_dd(l, z, -1.0), bwd, tol);
        }
    }
}

TEST(RelaxedMonotonicity, Constants)
{
    EXPECT_EQ(relaxed_monotonicity_constant(laws::positive_part()).value(), 0.0);
    EXPECT_DOUBLE_EQ(relaxed_monotonicity_constant(laws::multivalued_compliance()).value(), 50.0);
    EXPECT_NEAR(relaxed_monotonicity_constant(laws::slip_weakening_friction()).value(), 1.0, 1e-12);
    EXPECT_FALSE(relaxed_monotonicity_constant(laws::nonmonotone_fixture()).has_value());
    EXPECT_FALSE(relaxed_monotonicity_constant(laws::negative_abs()).has_value());
}

TEST(RelaxedMonotonicity, BruteForceInequality)
{
    for (const ScalarLaw& l : {ScalarLaw(laws::positive_part()), ScalarLaw(laws::multivalued_compliance()),
                               ScalarLaw(laws::slip_weakening_friction()), ScalarLaw(laws::tresca(2.0))}) {
        const double alpha = relaxed_monotonicity_constant(l).value();
        auto pts = grid(-0.1, 0.15, 251);
        for (double b : {0.0, 0.04, 0.06}) pts.push_back(b);
        for (double z1 : pts) {
            const auto s1 = subdifferential(l, z1);
            for (double z2 : pts) {
                const auto s2 = subdifferential(l, z2);
                const double dz = z1 - z2;
                for (double x1 : {s1.lo, s1.hi}) {
                    for (double x2 : {s2.lo, s2.hi}) {
                        EXPECT_GE((x1 - x2) * dz, -alpha * dz * dz * (1 + 1e-9) - 1e-15) << z1 << " " << z2;
                    }
                }
            }
        }
    }
}

TEST(RelaxedMonotonicity, ConvexifiedPotentialIsConvex)
{
    for (const ScalarLaw& l : {ScalarLaw(laws::multivalued_compliance()), ScalarLaw(laws::slip_weakening_friction())}) {
        const double alpha = relaxed_monotonicity_constant(l).value();
        auto g = [&](double z) { return eval_potential(l, z) + 0.5 * alpha * z * z; };
        const auto zs = grid(-0.05, 0.12, 1701);
        for (std::size_t i = 1; i + 1 < zs.size(); ++i) {
            EXPECT_GE(g(zs[i - 1]) + g(zs[i + 1]) - 2 * g(zs[i]), -1e-14);
        }
    }
}

TEST(GrowthConstants, Examples)
{
    const auto f = growth_constants(laws::slip_weakening_friction());
    EXPECT_DOUBLE_EQ(f.c0, 3e-3);
    EXPECT_EQ(f.c1, 0.0);
    const auto a = growth_constants(laws::negative_abs());
    EXPECT_DOUBLE_EQ(a.c0, 1.0);
    EXPECT_EQ(a.c1, 0.0);
    const auto c = growth_constants(laws::multivalued_compliance());
    EXPECT_LE(c.c0, 2.0);
    EXPECT_LE(c.c1, 20.0);
}

TEST(GrowthConstants, ValidOnSamples)
{
    for (const auto& l : all_laws()) {
        const auto gc = growth_constants(l);
        for (double z : grid(-50.0, 50.0, 20001)) {
            const auto s = subdifferential(l, z);
            EXPECT_LE(std::max(std::abs(s.lo), std::abs(s.hi)), gc.c0 + gc.c1 * std::abs(z) + 1e-12);
        }
    }
}

TEST(Prox, Examples)
{
    const ScalarLaw abs_law = laws::tresca(1.0);
    EXPECT_EQ(prox_1d(abs_law, 1.0, 0.5, 1.0).z, 0.0);
    EXPECT_DOUBLE_EQ(prox_1d(abs_law, 1.0, 2.0, 1.0).z, 1.0);
    EXPECT_DOUBLE_EQ(prox_1d(laws::zero(), 4.0, 2.0, 1.0).z, 0.5);
    EXPECT_DOUBLE_EQ(prox_1d(4.0, 2.0), 0.5);
    EXPECT_DOUBLE_EQ(prox_1d(1.0, 2.0, std::nullopt, 1.0), 1.0);
}

namespace {

// Distance of 0 from k z - r + w dpsi(z) + N(z).
double certificate(const ScalarLaw& l, double k, double r, double w, double z, double lo, double hi)
{
    auto s = subdifferential(l, z);
    double a = k * z - r + w * s.lo;
    double b = k * z - r + w * s.hi;
    if (z <= lo) a = -kInf;
    if (z >= hi) b = kInf;
    return SubdiffInterval{a, b}.distance(0.0);
}

}  // namespace

TEST(Prox, OptimalityAndGridSearch)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const std::vector<std::pair<ScalarLaw, double>> cases = {
        {laws::multivalued_compliance(), 0.05}, {laws::slip_weakening_friction(), 0.004}, {laws::positive_part(), 1.0},
        {laws::tresca(0.3), 1.0}, {with_tresca(laws::multivalued_compliance(), 0.5), 0.05}};
    for (const auto& [law, scale] : cases) {
        const double alpha = relaxed_monotonicity_constant(law).value();
        for (int t = 0; t < 300; ++t) {
            const double w = 0.01 + 0.5 * std::abs(U(rng));
            const double k = w * alpha + 0.1 + 10.0 * std::abs(U(rng));
            const double r = (k * scale + 3.0 * w) * U(rng) * 2.0;
            const bool bounded = t % 3 == 0;
            const double lo = bounded ? -scale * std::abs(U(rng)) : -kInf;
            const double hi = bounded ? scale * std::abs(U(rng)) : kInf;
            const ProxResult p = prox_1d(law, k, r, w, bounded ? std::optional<double>(lo) : std::nullopt,
                                         bounded ? std::optional<double>(hi) : std::nullopt);
            EXPECT_FALSE(p.nonconvex);
            const double cert = certificate(law, k, r, w, p.z, lo, hi);
            const bool friction = std::holds_alternative<ExpFrictionLaw>(law);
            EXPECT_LE(cert, (friction ? 1e-11 : 1e-12) * std::max(1.0, std::abs(r))) << k << " " << r << " " << w;

            auto phi = [&](double z) { return 0.5 * k * z * z - r * z + w * eval_potential(law, z); };
            const double a = bounded ? lo : p.z - 4 * scale;
            const double b = bounded ? hi : p.z + 4 * scale;
            for (double z : grid(a, b, 2001)) EXPECT_GE(phi(z), phi(p.z) - 1e-12 * std::max(1.0, std::abs(phi(p.z))));
        }
    }
}

TEST(Prox, FlagsNonconvexSubproblems)
{
    // k <= w * alpha with two separated local minima: 0.5 z^2 - r z - |z| style.
    const PiecewiseGraphLaw l({0.0}, {{0.0, 1.0}, {0.0, -1.0}});
    const ProxResult p = prox_1d(l, 1.0, 0.0, 1.0, -5.0, 5.0);
    EXPECT_TRUE(p.nonconvex);
    EXPECT_NEAR(std::abs(p.z), 1.0, 1e-14);

    const ProxResult f = prox_1d(laws::slip_weakening_friction(), 0.5, 2.9e-3, 1.0);
    auto phi = [&](double z) { return 0.25 * z * z - 2.9e-3 * z + eval_potential(laws::slip_weakening_friction(), z); };
    for (double z : grid(-0.02, 0.02, 4001)) EXPECT_GE(phi(z), phi(f.z) - 1e-15);
}

TEST(Prox, RejectsBadArguments)
{
    EXPECT_THROW(prox_1d(laws::zero(), 0.0, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(prox_1d(laws::zero(), 1.0, 1.0, -1.0), std::invalid_argument);
    EXPECT_THROW(prox_1d(laws::zero(), 1.0, 1.0, 1.0, 1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(PiecewiseGraphLaw({0.0}, {{0.0, 0.0}}), std::invalid_argument);
    EXPECT_THROW(ExpFrictionLaw(1.0, 2.0, 1.0), std::invalid_argument);
}

TEST(WithTresca, AddsTheAbsoluteValue)
{
    for (const ScalarLaw& l : {ScalarLaw(laws::multivalued_compliance()), ScalarLaw(laws::slip_weakening_friction())}) {
        const ScalarLaw t = with_tresca(l, 0.25);
        for (double z : grid(-0.1, 0.1, 41)) {
            EXPECT_NEAR(eval_potential(t, z), eval_potential(l, z) + 0.25 * std::abs(z), 1e-14);
        }
        const auto s = subdifferential(t, 0.0);
        const auto s0 = subdifferential(l, 0.0);
        EXPECT_NEAR(s.lo, s0.lo - 0.25, 1e-15);
        EXPECT_NEAR(s.hi, s0.hi + 0.25, 1e-15);
    }
}
