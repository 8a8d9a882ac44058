#include "doctest.h"

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

#include "dprobe/bounds_oracle.hpp"
#include "dprobe/error.hpp"
#include "dprobe/indicator.hpp"

#include <cmath>
#include <numbers>

using namespace dprobe;

namespace {

const Vec3 origin{0.0, 0.0, 0.0};
const RadialRegion unit_ball{{1.0, 0.0, 0.0}, 0.2, 0.0};

std::string margins(const BoundCheck& c)
{
    std::string s;
    for (double m : c.margin) {
        s += std::to_string(m) + " ";
    }
    return s;
}

} // namespace

TEST_CASE("radial integrals")
{
    SUBCASE("tau = 0 matches the closed form")
    {
        const double D = 1.0;
        const double R = 0.2;
        const double exact = (R - (D * D - R * R) / (2 * D) * std::log((D + R) / (D - R))) / (8 * std::numbers::pi);
        CHECK(integral_p_squared(unit_ball, 0.0, origin) == doctest::Approx(exact).epsilon(1e-9).scale(0));
    }
    SUBCASE("gradient integral against an independent oracle")
    {
        for (double tau : {5.0, 20.0}) {
            CHECK(integral_gradp_squared(unit_ball, tau, origin) ==
                  doctest::Approx(oracle::radial_shell_energy(tau, 0.2, 1.0, 2.0)).epsilon(1e-8).scale(0));
        }
    }
    SUBCASE("shrinking the region")
    {
        double prev = INFINITY;
        for (double r : {0.2, 0.02, 0.002}) {
            const double v = integral_p_squared({{1.0, 0.0, 0.0}, r, 0.0}, 5.0, origin);
            CHECK(v < prev * 1e-2);
            prev = v;
        }
    }
    SUBCASE("shell is the difference of balls")
    {
        const RadialRegion shell{{0.5, 0.0, 0.0}, 0.3, 0.1};
        const Vec3 y{0.0, 0.1, 0.0};
        const double a = integral_gradp_squared({{0.5, 0.0, 0.0}, 0.3, 0.0}, 6.0, y);
        const double b = integral_gradp_squared({{0.5, 0.0, 0.0}, 0.1, 0.0}, 6.0, y);
        CHECK(integral_gradp_squared(shell, 6.0, y) == doctest::Approx(a - b).epsilon(1e-9).scale(0));
        // Pole in the hole of the shell is outside the region.
        CHECK(integral_gradp_squared(shell, 6.0, {0.5, 0.0, 0.0}) > 0.0);
    }
    SUBCASE("scaling")
    {
        const RadialRegion big{{2.0, 0.0, 0.0}, 0.4, 0.0};
        const double a = integral_gradp_squared(unit_ball, 10.0, origin);
        const double b = integral_gradp_squared(big, 5.0, origin);
        CHECK(b == doctest::Approx(0.5 * a).epsilon(1e-8).scale(0));
    }
    SUBCASE("pole inside")
    {
        CHECK_THROWS_AS(integral_p_squared(unit_ball, 5.0, {1.05, 0.0, 0.0}), PreconditionError);
        CHECK(gradp_integral_diverges(unit_ball, 5.0, {1.05, 0.0, 0.0}));
        CHECK_FALSE(gradp_integral_diverges(unit_ball, 5.0, origin));
    }
}

TEST_CASE("frozen constants")
{
    const std::vector<double> ladder{5.0, 10.0, 20.0, 40.0};
    SUBCASE("p squared")
    {
        const auto c = check_p_squared_bound(unit_ball, {5.0, 10.0, 20.0}, origin);
        MESSAGE("p^2 margins " << margins(c));
        CHECK(c.pass);
        CHECK(c.margin[1] <= 1.0);
        CHECK(c.margin[2] <= 1.0);
        CHECK(c.holds_from == 5.0);
    }
    SUBCASE("gradient pair")
    {
        const auto b = check_gradp_bounds(unit_ball, ladder, origin, 1.05);
        MESSAGE("upper " << margins(b.upper) << "lower " << margins(b.lower));
        CHECK(b.upper.pass);
        CHECK(b.lower.pass);
        CHECK_THROWS_AS(check_gradp_bounds(unit_ball, ladder, origin, 0.7), PreconditionError);
    }
    SUBCASE("decay slope sits between the two rates")
    {
        const double d0 = 0.8;
        const double d = 0.85;
        const auto b = check_gradp_bounds(unit_ball, {10.0, 15.0, 20.0, 25.0}, origin, d);
        const double s = decay_slope(b.upper);
        MESSAGE("slope " << s);
        CHECK(s >= -2 * d - 0.05);
        CHECK(s <= -2 * d0 + 0.05);
    }
}

TEST_CASE("space-time integral")
{
    Scenario s;
    s.inclusion.k0 = 2.0;
    const Needle y = fixtures::static_needle({0.1, 0.5, 0.5});
    const ProbeParams p{.tau = 12.0, .mu = 2.0, .theta = 0.5, .t_prime = 1.0};
    SUBCASE("static case separates")
    {
        const RadialRegion o{{0.5, 0.5, 0.5}, 0.15, 0.0};
        const double expect = integral_gradp_squared(o, 12.0, y(0.0)) * oracle::kappa_integral(12.0, 2.0, 0.5, 1.0);
        CHECK(spacetime_energy(s, y, p) == doctest::Approx(expect).epsilon(1e-6).scale(0));
        // The library's conforming cubature agrees with the shells.
        CHECK(std::exp(energy_reference(s, p, y)) == doctest::Approx(expect).epsilon(1e-6).scale(0));
    }
    SUBCASE("mu doubling halves the integral")
    {
        ProbeParams q = p;
        q.mu = 1.0;
        const double a = spacetime_energy(s, y, q);
        q.mu = 2.0;
        const double b = spacetime_energy(s, y, q);
        CHECK(std::abs(b / a - 0.5) <= 0.05);
    }
    SUBCASE("window at the closest approach")
    {
        Needle pass;
        pass.path = PointPath({{0.0, {0.1, 0.5, 0.1}}, {1.0, {0.1, 0.5, 0.9}}});
        ProbeParams off = p;
        off.theta = 0.3;
        CHECK(spacetime_energy(s, pass, p) > spacetime_energy(s, pass, off));
    }
    SUBCASE("bound pair on a moving ball")
    {
        Scenario m = s;
        m.inclusion.center_path = PointPath({{0.0, {0.5, 0.4, 0.5}}, {1.0, {0.5, 0.6, 0.5}}});
        const auto b = check_spacetime_bounds(m, y, p, {5.0, 10.0, 20.0, 40.0}, 0.5);
        MESSAGE("upper " << margins(b.upper) << "lower " << margins(b.lower));
        CHECK(b.upper.pass);
        CHECK(b.lower.pass);
        const std::string j = to_json(b.upper);
        CHECK(j.find("\"margin\"") != std::string::npos);
    }
}
