#include "dprobe/bounds_oracle.hpp"

#include "dprobe/error.hpp"
#include "dprobe/indicator.hpp"
#include "dprobe/util.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dprobe {

namespace {

constexpr double pi = std::numbers::pi;

/// Area of the sphere |x - y| = r inside the ball |x - c| < R, with D = |y - c|.
double cap_area(double r, double D, double R)
{
    if (R <= 0.0) {
        return 0.0;
    }
    if (r + D <= R) {
        return 4.0 * pi * r * r;
    }
    if (r >= D + R || r <= D - R) {
        return 0.0;
    }
    const double cb = std::clamp((r * r + D * D - R * R) / (2.0 * r * D), -1.0, 1.0);
    return 2.0 * pi * r * r * (1.0 - cb);
}

template <class F>
double gk(F&& f, double a, double b, double tol)
{
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol, &err);
}

/// int f(r) A(r) dr over the region, split at every radius where A has a kink.
template <class F>
double radial(const RadialRegion& o, const Vec3& y, double eps, F&& f)
{
    const double D = dprobe::distance(y, o.center);
    std::vector<double> cuts{std::max(eps, 0.0), std::abs(D - o.outer), D + o.outer};
    if (o.inner > 0.0) {
        cuts.push_back(std::abs(D - o.inner));
        cuts.push_back(D + o.inner);
    }
    std::sort(cuts.begin(), cuts.end());
    auto g = [&](double r) { return f(r) * (cap_area(r, D, o.outer) - cap_area(r, D, o.inner)); };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = std::max(cuts[i], eps);
        const double b = cuts[i + 1];
        if (b > a) {
            total += gk(g, a, b, 1e-12);
        }
    }
    return total;
}

double p2(double tau, double r)
{
    const double p = std::exp(-tau * r) / (4.0 * pi * r);
    return p * p;
}

double gp2(double tau, double r)
{
    const double g = (tau * r + 1.0) * std::exp(-tau * r) / (4.0 * pi * r * r);
    return g * g;
}

void finish(BoundCheck& c, double rel_slack)
{
    c.margin.clear();
    for (std::size_t i = 0; i < c.lhs.size(); ++i) {
        c.margin.push_back(c.lhs[i] / c.rhs_bound[i]);
    }
    auto ok = [&](double m) { return c.upper ? m <= 1.0 + rel_slack : m >= 1.0 - rel_slack; };
    c.pass = std::all_of(c.margin.begin(), c.margin.end(), ok);
    c.holds_from.reset();
    for (std::size_t i = c.margin.size(); i-- > 0;) {
        if (!ok(c.margin[i])) {
            break;
        }
        c.holds_from = c.tau_ladder[i];
    }
}

/// Fits the constant at the smallest tau: lhs(tau_0) = C shape(tau_0).
template <class Shape>
BoundCheck fitted(std::string name, bool upper, const std::vector<double>& taus, const std::vector<double>& lhs,
                  Shape&& shape, double rel_slack)
{
    BoundCheck c;
    c.name = std::move(name);
    c.upper = upper;
    c.tau_ladder = taus;
    c.lhs = lhs;
    c.constant = lhs.front() / shape(taus.front());
    for (const double t : taus) {
        c.rhs_bound.push_back(c.constant * shape(t));
    }
    finish(c, rel_slack);
    return c;
}

void check_ladder(const std::vector<double>& taus)
{
    if (taus.empty() || !std::is_sorted(taus.begin(), taus.end()) || taus.front() <= 0.0) {
        throw ParameterError("bounds oracle: tau ladder must be nonempty, positive and sorted");
    }
}

} // namespace

double RadialRegion::distance(const Vec3& y) const
{
    const double D = dprobe::distance(y, center);
    if (D >= outer) {
        return D - outer;
    }
    return D <= inner ? inner - D : 0.0;
}

bool RadialRegion::contains_closed(const Vec3& y) const
{
    const double D = dprobe::distance(y, center);
    return D <= outer && D >= inner;
}

double integral_p_squared(const RadialRegion& o, double tau, const Vec3& y)
{
    if (o.contains_closed(y)) {
        throw PreconditionError("integral_p_squared: the pole lies in the closed region");
    }
    return radial(o, y, 0.0, [&](double r) { return p2(tau, r); });
}

double integral_gradp_squared(const RadialRegion& o, double tau, const Vec3& y)
{
    if (o.contains_closed(y)) {
        throw PreconditionError("integral_gradp_squared: the pole lies in the closed region");
    }
    return radial(o, y, 0.0, [&](double r) { return gp2(tau, r); });
}

double integral_gradp_squared_truncated(const RadialRegion& o, double tau, const Vec3& y, double eps)
{
    return radial(o, y, eps, [&](double r) { return gp2(tau, r); });
}

bool gradp_integral_diverges(const RadialRegion& o, double tau, const Vec3& y)
{
    // |grad p|^2 ~ r^-4 near the pole: the truncated integral grows like 1/eps.
    double prev = integral_gradp_squared_truncated(o, tau, y, 1e-2);
    for (const double eps : {1e-3, 1e-4}) {
        const double cur = integral_gradp_squared_truncated(o, tau, y, eps);
        if (cur < 5.0 * prev) {
            return false;
        }
        prev = cur;
    }
    return true;
}

double decay_slope(const BoundCheck& c)
{
    const std::size_t n = c.tau_ladder.size();
    double mt = 0.0;
    double ml = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mt += c.tau_ladder[i] / n;
        ml += std::log(c.lhs[i]) / n;
    }
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (c.tau_ladder[i] - mt) * (std::log(c.lhs[i]) - ml);
        sxx += (c.tau_ladder[i] - mt) * (c.tau_ladder[i] - mt);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

BoundCheck check_p_squared_bound(const RadialRegion& o, const std::vector<double>& taus, const Vec3& y,
                                 double rel_slack)
{
    check_ladder(taus);
    const double d = o.distance(y);
    std::vector<double> lhs;
    for (const double t : taus) {
        lhs.push_back(integral_p_squared(o, t, y));
    }
    return fitted("p_squared_upper", true, taus, lhs, [&](double t) { return std::exp(-2.0 * t * d) / (t * d); },
                  rel_slack);
}

BoundPair check_gradp_bounds(const RadialRegion& o, const std::vector<double>& taus, const Vec3& y, double d,
                             double rel_slack)
{
    check_ladder(taus);
    const double d0 = o.distance(y);
    if (o.contains_closed(y)) {
        throw PreconditionError("check_gradp_bounds: the pole lies in the closed region");
    }
    if (!(d > d0)) {
        throw PreconditionError("check_gradp_bounds: d must exceed d(y, O) = " + format_double(d0));
    }
    std::vector<double> lhs;
    for (const double t : taus) {
        lhs.push_back(integral_gradp_squared(o, t, y));
    }
    return {fitted("gradp_upper", true, taus, lhs,
                   [&](double t) { return t * (1.0 + 1.0 / (t * d0)) * std::exp(-2.0 * t * d0); }, rel_slack),
            fitted("gradp_lower", false, taus, lhs, [&](double t) { return t * t * std::exp(-2.0 * t * d); },
                   rel_slack)};
}

double spacetime_energy(const Scenario& scenario, const Needle& needle, const ProbeParams& params)
{
    const auto& inc = scenario.inclusion;
    if (!inc.k_field && inc.k0 == 1.0) {
        return 0.0;
    }
    const bool radial_ok = !inc.k_field && inc.shape == InclusionShape::Ball;
    const ProbeParams ps = params.with_mode(EtaMode::MuSign);
    auto density = [&](double t) {
        const Vec3 y = needle(t);
        if (radial_ok) {
            const RadialRegion o{inc.center(t), inc.radius_path(t), 0.0};
            return std::abs(inc.k0 - 1.0) * integral_gradp_squared(o, params.tau, y);
        }
        return energy_density(scenario, params.tau, t, y, 1e-10);
    };
    auto f = [&](double t) { return density(t) * kappa(ps, t); };
    std::vector<double> cuts{0.0, params.theta, params.t_prime};
    for (const double k : needle.path.kinks()) {
        cuts.push_back(k);
    }
    for (const auto& k : inc.center_path.knots()) {
        cuts.push_back(k.t);
    }
    for (const auto& k : inc.radius_path.knots()) {
        cuts.push_back(k.t);
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    double prev = 0.0;
    for (const double c : cuts) {
        if (c <= prev || c > params.t_prime) {
            continue;
        }
        total += gk(f, prev, c, 1e-11);
        prev = c;
    }
    return total;
}

BoundPair check_spacetime_bounds(const Scenario& scenario, const Needle& needle, const ProbeParams& params,
                                 const std::vector<double>& taus, double d, double rel_slack)
{
    check_ladder(taus);
    const double dt = dist_point_to_inclusion(scenario, params.theta, needle(params.theta));
    for (int i = 0; i <= 400; ++i) {
        if (clearance(scenario, needle, params.t_prime * i / 400) <= 0.0) {
            throw PreconditionError("check_spacetime_bounds: the needle meets the inclusion");
        }
    }
    if (!(d > dt)) {
        throw PreconditionError("check_spacetime_bounds: d must exceed d(y(theta), D(theta)) = " + format_double(dt));
    }
    std::vector<double> lhs;
    for (const double t : taus) {
        ProbeParams p = params;
        p.tau = t;
        lhs.push_back(spacetime_energy(scenario, needle, p));
    }
    const double mu = params.mu;
    return {fitted("spacetime_upper", true, taus, lhs,
                   [&](double t) { return (1.0 / mu) * (1.0 + 1.0 / (t * dt)) * std::exp(-2.0 * t * dt); },
                   rel_slack),
            fitted("spacetime_lower", false, taus, lhs, [&](double t) { return (t / mu) * std::exp(-2.0 * t * d); },
                   rel_slack)};
}

std::string to_json(const BoundCheck& c)
{
    nlohmann::ordered_json j;
    j["name"] = c.name;
    j["kind"] = c.upper ? "upper" : "lower";
    j["constant"] = c.constant;
    j["tau_ladder"] = c.tau_ladder;
    j["lhs"] = c.lhs;
    j["rhs_bound"] = c.rhs_bound;
    j["margin"] = c.margin;
    j["pass"] = c.pass;
    j["holds_from"] = c.holds_from ? nlohmann::ordered_json(*c.holds_from) : nlohmann::ordered_json(nullptr);
    j["decay_slope"] = decay_slope(c);
    return j.dump(2);
}

} // namespace dprobe
