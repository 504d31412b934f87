#include "vhi/nonsmooth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vhi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool is_finite(double x) { return std::isfinite(x); }

std::optional<double> piecewise_alpha(const PiecewiseGraphLaw& l)
{
    const auto& bp = l.breakpoints();
    const auto& pc = l.pieces();
    for (std::size_t k = 0; k < bp.size(); ++k) {
        const double left = pc[k](bp[k]);
        const double right = pc[k + 1](bp[k]);
        const double tol = 1e-12 * std::max({1.0, std::abs(left), std::abs(right)});
        if (right < left - tol) return std::nullopt;
    }
    double min_slope = kInf;
    for (const auto& p : pc) min_slope = std::min(min_slope, p.slope);
    return std::max(0.0, -min_slope);
}

}  // namespace

double SubdiffInterval::distance(double x) const
{
    if (x < lo) return lo - x;
    if (x > hi) return x - hi;
    return 0.0;
}

// ---------------------------------------------------------------------------
// PiecewiseGraphLaw

PiecewiseGraphLaw::PiecewiseGraphLaw(std::vector<double> breakpoints, std::vector<AffinePiece> pieces,
                                     double anchor_z, double anchor_value)
    : breakpoints_(std::move(breakpoints)),
      pieces_(std::move(pieces)),
      anchor_z_(anchor_z),
      anchor_value_(anchor_value)
{
    if (pieces_.size() != breakpoints_.size() + 1) {
        throw std::invalid_argument("piecewise law needs exactly one piece per segment");
    }
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
        if (!is_finite(breakpoints_[i])) throw std::invalid_argument("breakpoint must be finite");
        if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1])) {
            throw std::invalid_argument("breakpoints must be strictly increasing");
        }
    }
    for (const auto& p : pieces_) {
        if (!is_finite(p.slope) || !is_finite(p.intercept)) {
            throw std::invalid_argument("piece coefficients must be finite");
        }
    }
    if (!is_finite(anchor_z_) || !is_finite(anchor_value_)) {
        throw std::invalid_argument("anchor must be finite");
    }

    // Potential values at the breakpoints, integrated outward from the anchor.
    const std::size_t n = breakpoints_.size();
    breakpoint_values_.assign(n, 0.0);
    if (n == 0) return;
    const std::size_t seg = segment_of(anchor_z_);
    if (seg < n) {
        breakpoint_values_[seg] = anchor_value_ + integral(seg, anchor_z_, breakpoints_[seg]);
        for (std::size_t k = seg + 1; k < n; ++k) {
            breakpoint_values_[k] = breakpoint_values_[k - 1] + integral(k, breakpoints_[k - 1], breakpoints_[k]);
        }
    }
    if (seg > 0) {
        breakpoint_values_[seg - 1] = anchor_value_ - integral(seg, breakpoints_[seg - 1], anchor_z_);
        for (std::size_t k = seg - 1; k-- > 0;) {
            breakpoint_values_[k] = breakpoint_values_[k + 1] - integral(k + 1, breakpoints_[k], breakpoints_[k + 1]);
        }
    }
}

double PiecewiseGraphLaw::integral(std::size_t seg, double from, double to) const
{
    const AffinePiece& p = pieces_[seg];
    return 0.5 * p.slope * (to * to - from * from) + p.intercept * (to - from);
}

std::size_t PiecewiseGraphLaw::segment_of(double z) const
{
    return static_cast<std::size_t>(std::upper_bound(breakpoints_.begin(), breakpoints_.end(), z) -
                                    breakpoints_.begin());
}

double PiecewiseGraphLaw::potential(double z) const
{
    const std::size_t seg = segment_of(z);
    if (breakpoints_.empty()) return anchor_value_ + integral(0, anchor_z_, z);
    if (seg > 0) return breakpoint_values_[seg - 1] + integral(seg, breakpoints_[seg - 1], z);
    return breakpoint_values_[0] - integral(0, z, breakpoints_[0]);
}

SubdiffInterval PiecewiseGraphLaw::subdifferential(double z) const
{
    auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), z);
    if (it != breakpoints_.end() && *it == z) {
        const auto k = static_cast<std::size_t>(it - breakpoints_.begin());
        const double left = pieces_[k](z);
        const double right = pieces_[k + 1](z);
        return {std::min(left, right), std::max(left, right)};
    }
    const double xi = pieces_[segment_of(z)](z);
    return {xi, xi};
}

// ---------------------------------------------------------------------------
// ExpFrictionLaw

ExpFrictionLaw::ExpFrictionLaw(double a, double b, double beta) : a_(a), b_(b), beta_(beta)
{
    if (!(b > 0.0) || !(a >= b) || !(beta > 0.0) || !is_finite(a) || !is_finite(beta)) {
        throw std::invalid_argument("friction law requires a >= b > 0 and beta > 0");
    }
}

double ExpFrictionLaw::modulus(double r) const { return (a_ - b_) * std::exp(-beta_ * r) + b_; }

double ExpFrictionLaw::potential(double z) const
{
    const double r = std::abs(z);
    return (a_ - b_) * (-std::expm1(-beta_ * r)) / beta_ + b_ * r;
}

SubdiffInterval ExpFrictionLaw::subdifferential(double z) const
{
    if (z == 0.0) return {-a_, a_};
    const double xi = std::copysign(modulus(std::abs(z)), z);
    return {xi, xi};
}

// ---------------------------------------------------------------------------
// Generic operations

double eval_potential(const ScalarLaw& law, double z)
{
    return std::visit([z](const auto& l) { return l.potential(z); }, law);
}

SubdiffInterval subdifferential(const ScalarLaw& law, double z)
{
    return std::visit([z](const auto& l) { return l.subdifferential(z); }, law);
}

double clarke_dd(const ScalarLaw& law, double z, double d)
{
    const SubdiffInterval s = subdifferential(law, z);
    if (d > 0.0) return s.hi * d;
    if (d < 0.0) return s.lo * d;
    return 0.0;
}

std::optional<double> relaxed_monotonicity_constant(const ScalarLaw& law)
{
    return std::visit(
        Overloaded{
            [](const PiecewiseGraphLaw& l) { return piecewise_alpha(l); },
            [](const ExpFrictionLaw& l) -> std::optional<double> { return (l.a() - l.b()) * l.beta(); },
        },
        law);
}

GrowthBound growth_constants(const ScalarLaw& law)
{
    return std::visit(
        Overloaded{
            [](const PiecewiseGraphLaw& l) -> GrowthBound {
                const auto& bp = l.breakpoints();
                const auto& pc = l.pieces();
                // Only the unbounded segments force a linear term.
                const double c1 = std::max(std::abs(pc.front().slope), std::abs(pc.back().slope));
                // |p z + q| - c1 |z| is piecewise linear on every segment with
                // kinks at 0 and -q/p, so its supremum is attained at segment
                // ends, kinks, or as a limit at infinity.
                double c0 = 0.0;
                auto excess = [c1](const AffinePiece& p, double z) { return std::abs(p(z)) - c1 * std::abs(z); };
                for (std::size_t s = 0; s < pc.size(); ++s) {
                    const AffinePiece& p = pc[s];
                    const double lo = s == 0 ? -kInf : bp[s - 1];
                    const double hi = s == bp.size() ? kInf : bp[s];
                    if (is_finite(lo)) c0 = std::max(c0, excess(p, lo));
                    if (is_finite(hi)) c0 = std::max(c0, excess(p, hi));
                    if (lo < 0.0 && 0.0 < hi) c0 = std::max(c0, excess(p, 0.0));
                    if (p.slope != 0.0) {
                        const double root = -p.intercept / p.slope;
                        if (lo < root && root < hi) c0 = std::max(c0, excess(p, root));
                    }
                    const double sp = p.slope > 0 ? 1.0 : (p.slope < 0 ? -1.0 : 0.0);
                    if (std::abs(p.slope) == c1) {
                        if (!is_finite(hi)) c0 = std::max(c0, p.slope == 0.0 ? std::abs(p.intercept) : p.intercept * sp);
                        if (!is_finite(lo)) c0 = std::max(c0, p.slope == 0.0 ? std::abs(p.intercept) : -p.intercept * sp);
                    }
                }
                return {c0, c1};
            },
            [](const ExpFrictionLaw& l) -> GrowthBound { return {l.a(), 0.0}; },
        },
        law);
}

// ---------------------------------------------------------------------------
// prox_1d

double prox_1d(double k, double r, std::optional<double> lower, std::optional<double> upper)
{
    if (!(k > 0.0)) throw std::invalid_argument("prox_1d requires k > 0");
    double z = r / k;
    if (lower) z = std::max(z, *lower);
    if (upper) z = std::min(z, *upper);
    return z;
}

namespace {

struct Window {
    double lo;
    double hi;
};

Window make_window(std::optional<double> lower, std::optional<double> upper)
{
    Window w{lower.value_or(-kInf), upper.value_or(kInf)};
    if (w.lo > w.hi) throw std::invalid_argument("prox_1d: empty feasible interval");
    return w;
}

bool distinct(double a, double b) { return std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

std::size_t count_distinct(std::vector<double> xs)
{
    std::sort(xs.begin(), xs.end());
    std::size_t n = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i == 0 || distinct(xs[i], xs[i - 1])) ++n;
    }
    return n;
}

ProxResult prox_piecewise(const PiecewiseGraphLaw& law, double k, double r, double w, Window win)
{
    const auto& bp = law.breakpoints();
    const auto& pc = law.pieces();
    auto phi = [&](double z) { return 0.5 * k * z * z - r * z + w * law.potential(z); };

    std::vector<double> local_min;
    std::vector<double> fallback;

    for (std::size_t s = 0; s < pc.size(); ++s) {
        const double seg_lo = std::max(s == 0 ? -kInf : bp[s - 1], win.lo);
        const double seg_hi = std::min(s == bp.size() ? kInf : bp[s], win.hi);
        if (!(seg_lo < seg_hi)) continue;
        // phi'(z) = c z - d on this segment
        const double c = k + w * pc[s].slope;
        const double d = r - w * pc[s].intercept;
        if (c > 0.0) {
            const double zs = d / c;
            if (seg_lo < zs && zs < seg_hi) local_min.push_back(zs);
            fallback.push_back(std::clamp(zs, seg_lo, seg_hi));
        } else {
            const bool falls_right = !is_finite(seg_hi) && (c < 0.0 || d > 0.0);
            const bool falls_left = !is_finite(seg_lo) && (c < 0.0 || d < 0.0);
            if (falls_right || falls_left) {
                throw std::invalid_argument("prox_1d: objective unbounded below");
            }
        }
    }

    // Kinks and active bounds: left derivative <= 0 <= right derivative.
    std::vector<double> points;
    for (double b : bp) {
        if (win.lo <= b && b <= win.hi) points.push_back(b);
    }
    if (is_finite(win.lo)) points.push_back(win.lo);
    if (is_finite(win.hi)) points.push_back(win.hi);
    for (double x : points) {
        const auto seg_right = law.segment_of(x);
        auto it = std::lower_bound(bp.begin(), bp.end(), x);
        const bool at_break = it != bp.end() && *it == x;
        const auto seg_left = at_break ? static_cast<std::size_t>(it - bp.begin()) : seg_right;
        const double dl = x > win.lo ? k * x - r + w * pc[seg_left](x) : -kInf;
        const double dr = x < win.hi ? k * x - r + w * pc[seg_right](x) : kInf;
        if (dl <= 0.0 && 0.0 <= dr) local_min.push_back(x);
        fallback.push_back(x);
    }

    if (local_min.empty()) local_min = fallback;
    if (local_min.empty()) throw std::invalid_argument("prox_1d: no candidate minimizer");

    double best = local_min.front();
    double best_val = phi(best);
    for (double z : local_min) {
        const double v = phi(z);
        if (v < best_val) {
            best = z;
            best_val = v;
        }
    }

    const auto alpha = piecewise_alpha(law);
    const bool maybe_nonconvex = !alpha || k <= w * *alpha;
    return {best, maybe_nonconvex && count_distinct(local_min) > 1};
}

// Root of g(t) = k t + w mu(t) - rabs on [tl, tr] with g(tl) < 0 < g(tr).
double friction_root(const ExpFrictionLaw& law, double k, double rabs, double w, double tl, double tr)
{
    auto g = [&](double t) { return k * t + w * law.modulus(t) - rabs; };
    auto dg = [&](double t) { return k - w * (law.a() - law.b()) * law.beta() * std::exp(-law.beta() * t); };
    const double scale = std::max(1.0, rabs);
    double t = 0.5 * (tl + tr);
    for (int it = 0; it < 80; ++it) {
        const double gt = g(t);
        if (std::abs(gt) <= 1e-15 * scale) return t;
        if (gt < 0.0) tl = t;
        else tr = t;
        if (!(tr - tl > 1e-17 * std::max(1.0, tr))) break;
        const double slope = dg(t);
        double next = slope > 0.0 ? t - gt / slope : 0.5 * (tl + tr);
        if (!(next > tl && next < tr)) next = 0.5 * (tl + tr);
        t = next;
    }
    return t;
}

ProxResult prox_friction(const ExpFrictionLaw& law, double k, double r, double w, Window win)
{
    auto phi = [&](double z) { return 0.5 * k * z * z - r * z + w * law.potential(z); };
    const double rabs = std::abs(r);
    const double sign = r < 0.0 ? -1.0 : 1.0;
    const double alpha = (law.a() - law.b()) * law.beta();

    std::vector<double> local_min;
    if (rabs <= w * law.a()) {
        local_min.push_back(0.0);
        if (k < w * alpha && rabs > 0.0) {
            // g is convex in t; a dip below zero gives a second minimizer.
            const double tm = std::log(w * alpha / k) / law.beta();
            const double gm = k * tm + w * law.modulus(tm) - rabs;
            if (gm < 0.0) local_min.push_back(sign * friction_root(law, k, rabs, w, tm, rabs / k));
        }
    } else {
        local_min.push_back(sign * friction_root(law, k, rabs, w, 0.0, rabs / k));
    }

    const bool nonconvex = local_min.size() > 1;
    if (!nonconvex && k > w * alpha) {
        return {std::clamp(local_min.front(), win.lo, win.hi), false};
    }
    std::vector<double> cand;
    for (double z : local_min) cand.push_back(std::clamp(z, win.lo, win.hi));
    if (is_finite(win.lo)) cand.push_back(win.lo);
    if (is_finite(win.hi)) cand.push_back(win.hi);
    double best = cand.front();
    for (double z : cand) {
        if (phi(z) < phi(best)) best = z;
    }
    return {best, nonconvex};
}

}  // namespace

ProxResult prox_1d(const ScalarLaw& law, double k, double r, double w, std::optional<double> lower,
                   std::optional<double> upper)
{
    if (!(k > 0.0)) throw std::invalid_argument("prox_1d requires k > 0");
    if (!(w >= 0.0)) throw std::invalid_argument("prox_1d requires w >= 0");
    const Window win = make_window(lower, upper);
    if (w == 0.0) return {prox_1d(k, r, lower, upper), false};
    return std::visit(Overloaded{
                          [&](const PiecewiseGraphLaw& l) { return prox_piecewise(l, k, r, w, win); },
                          [&](const ExpFrictionLaw& l) { return prox_friction(l, k, r, w, win); },
                      },
                      law);
}

ScalarLaw with_tresca(const ScalarLaw& law, double fb)
{
    if (fb < 0.0) throw std::invalid_argument("friction bound must be nonnegative");
    if (fb == 0.0) return law;
    return std::visit(
        Overloaded{
            [fb](const PiecewiseGraphLaw& l) -> ScalarLaw {
                std::vector<double> bp = l.breakpoints();
                std::vector<AffinePiece> pc = l.pieces();
                auto it = std::lower_bound(bp.begin(), bp.end(), 0.0);
                if (it == bp.end() || *it != 0.0) {
                    const auto seg = static_cast<std::size_t>(it - bp.begin());
                    pc.insert(pc.begin() + static_cast<std::ptrdiff_t>(seg), pc[seg]);
                    bp.insert(it, 0.0);
                }
                const auto zero = static_cast<std::size_t>(std::lower_bound(bp.begin(), bp.end(), 0.0) - bp.begin());
                for (std::size_t s = 0; s < pc.size(); ++s) pc[s].intercept += s <= zero ? -fb : fb;
                return PiecewiseGraphLaw(std::move(bp), std::move(pc), 0.0, l.potential(0.0));
            },
            [fb](const ExpFrictionLaw& l) -> ScalarLaw { return ExpFrictionLaw(l.a() + fb, l.b() + fb, l.beta()); },
        },
        law);
}

namespace laws {

PiecewiseGraphLaw zero() { return PiecewiseGraphLaw({}, {{0.0, 0.0}}); }

PiecewiseGraphLaw tresca(double fb) { return PiecewiseGraphLaw({0.0}, {{0.0, -fb}, {0.0, fb}}); }

PiecewiseGraphLaw negative_abs() { return PiecewiseGraphLaw({0.0}, {{0.0, 1.0}, {0.0, -1.0}}); }

PiecewiseGraphLaw positive_part() { return PiecewiseGraphLaw({0.0}, {{0.0, 0.0}, {0.0, 1.0}}); }

PiecewiseGraphLaw nonmonotone_fixture()
{
    return PiecewiseGraphLaw({-1.0, 0.0, 1.0}, {{0.0, 2.0}, {0.0, -1.0}, {0.0, 1.0}, {4.0, 0.0}});
}

PiecewiseGraphLaw multivalued_compliance()
{
    return PiecewiseGraphLaw({0.0, 0.04, 0.06}, {{0.0, 0.0}, {0.0, 2.0}, {-50.0, 4.0}, {20.0, -0.2}});
}

ExpFrictionLaw slip_weakening_friction() { return ExpFrictionLaw(3e-3, 2.5e-3, 2e3); }

}  // namespace laws

}  // namespace vhi
