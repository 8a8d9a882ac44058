#include "doctest.h"

#include "../support/fixtures.hpp"

#include "dprobe/error.hpp"
#include "dprobe/reconstruct.hpp"

#include <cmath>

using namespace dprobe;

namespace {

Scenario ball(double k0 = 2.0)
{
    Scenario s;
    s.inclusion.k0 = k0;
    s.v0.kind = InitialData::Kind::ProbeSeeded;
    return s;
}

Needle entering()
{
    Needle n;
    n.name = "enter";
    n.path = PointPath({{0.0, {-0.3, 0.5, 0.5}}, {0.3, {0.1, 0.5, 0.5}}});
    return n;
}

/// Ball driven toward the parked needle tip; first contact at t = 0.5.
Scenario approaching()
{
    Scenario s = ball();
    s.inclusion.center_path = PointPath({{0.0, {0.75, 0.5, 0.5}}, {0.5, {0.25, 0.5, 0.5}}, {1.0, {0.2, 0.5, 0.5}}});
    return s;
}

IndicatorSample synthetic(double tau, double ln_abs)
{
    IndicatorSample s;
    s.params = {.tau = tau, .mu = 2.0, .theta = 0.5, .t_prime = 1.0};
    s.i_boundary = {1, ln_abs};
    return s;
}

SearchOptions light()
{
    SearchOptions o;
    o.theta_fractions = {0.5, 0.95};
    o.tau_ladder = {8.0, 12.0, 16.0};
    return o;
}

} // namespace

TEST_CASE("distance fit")
{
    std::vector<IndicatorSample> s;
    for (double tau : {8.0, 12.0, 16.0, 20.0}) {
        s.push_back(synthetic(tau, 1.5 - 0.5 * tau));
    }
    const auto d = estimate_distance(s);
    CHECK(d.d_hat == doctest::Approx(0.25).epsilon(1e-12).scale(0));
    CHECK(d.fit_residual < 1e-12);
    CHECK(d.intercept == doctest::Approx(1.5).epsilon(1e-12).scale(0));
    CHECK_FALSE(d.clamped);

    CHECK_THROWS_AS(estimate_distance({s[0], s[1]}), ArityError);
    auto z = s;
    z[1].i_boundary = {};
    CHECK(estimate_distance(z).excluded == 1);
    z[2].i_boundary = {};
    CHECK_THROWS_AS(estimate_distance(z), ArityError);

    std::vector<IndicatorSample> up;
    for (double tau : {8.0, 12.0, 16.0}) {
        up.push_back(synthetic(tau, 0.1 * tau));
    }
    const auto c = estimate_distance(up);
    CHECK(c.clamped);
    CHECK(c.d_hat == 0.0);
}

TEST_CASE("energy samples recover the distance")
{
    EnergyEvaluator ev(ball(), fixtures::static_needle({0.1, 0.5, 0.5}));
    std::vector<IndicatorSample> s;
    for (double tau : {10.0, 20.0, 30.0, 40.0}) {
        s.push_back(ev.evaluate({.tau = tau, .mu = 2.0, .theta = 0.5, .t_prime = 1.0}));
    }
    const auto d = estimate_distance_energy(s);
    MESSAGE("energy d_hat " << d.d_hat);
    CHECK(std::abs(d.d_hat - 0.25) <= 0.1 * 0.25);
    CHECK(estimate_distance(s).d_hat == doctest::Approx(d.d_hat).epsilon(1e-12).scale(0));
}

TEST_CASE("F estimate")
{
    const std::vector<double> taus{8.0, 12.0, 16.0, 20.0};
    SUBCASE("far needle")
    {
        EnergyEvaluator ev(ball(), entering());
        const auto f = estimate_F(1.0, {0.3, 0.5, 0.7}, {1.0, 2.0, 4.0}, taus, ev);
        CHECK(f.mu == 2.0);
        CHECK(f.per_theta.size() == 3);
        const double truth = -2.0 * dist_needle_to_inclusion(ball(), entering(), 1.0);
        MESSAGE("F " << f.f_hat << " vs " << truth);
        CHECK(std::abs(f.f_hat - truth) <= 0.2 * std::abs(truth));
        CHECK_THROWS_AS(estimate_F(1.0, {}, {2.0}, taus, ev), ArityError);
        CHECK_THROWS_AS(estimate_F(1.0, {0.5}, {3.0}, taus, ev), PreconditionError);
    }
    SUBCASE("single theta at the closest approach")
    {
        Needle pass;
        pass.path = PointPath({{0.0, {0.1, 0.5, 0.1}}, {1.0, {0.1, 0.5, 0.9}}});
        EnergyEvaluator ev(ball(), pass);
        const auto full = estimate_F(1.0, {0.2, 0.35, 0.5, 0.65, 0.8}, {2.0}, taus, ev);
        const auto one = estimate_F(1.0, {0.5}, {2.0}, taus, ev);
        CHECK(full.theta_best == 0.5);
        CHECK(std::abs(one.f_hat - full.f_hat) <= 0.25 * std::abs(full.f_hat));
    }
    SUBCASE("approach drives F towards zero")
    {
        EnergyEvaluator ev(approaching(), entering());
        double prev = -INFINITY;
        double first = 0.0;
        for (double tp : {0.2, 0.3, 0.4}) {
            const double f = estimate_F(tp, {0.5 * tp, 0.95 * tp}, {2.0}, taus, ev).f_hat;
            if (tp == 0.2) {
                first = f;
            }
            CHECK(f >= prev - 0.1);
            prev = f;
        }
        CHECK(prev > first);
    }
}

TEST_CASE("T* search")
{
    SUBCASE("bad delta")
    {
        EnergyEvaluator ev(ball(), entering());
        CHECK_THROWS_AS(search_t_star(0.0, 1.0, ev), ParameterError);
        CHECK_THROWS_AS(search_t_star(-1.0, 1.0, ev), ParameterError);
    }
    SUBCASE("oracle delta")
    {
        // Needle tip approaches at 4/3 while outside, then parks.
        CHECK(suggest_delta(ball(), entering()) == doctest::Approx(8.0 / 3.0).epsilon(1e-3).scale(0));
        CHECK(suggest_delta(approaching(), entering(), 2.0) == doctest::Approx(2.0 * 14.0 / 3.0).epsilon(1e-3).scale(0));
    }
    SUBCASE("no contact leaves the horizon")
    {
        EnergyEvaluator ev(ball(), entering());
        const auto r = search_t_star(suggest_delta(ball(), entering()), 1.0, ev, light());
        CHECK(r.label() == "T+0");
        CHECK_FALSE(r.t_star_hat);
        for (std::size_t i = 1; i < r.t_sequence.size(); ++i) {
            CHECK(r.t_sequence[i] > r.t_sequence[i - 1]);
        }
    }
    SUBCASE("approach is under-approximated")
    {
        const Scenario s = approaching();
        const double truth = *t_star_true(s, entering());
        CHECK(truth == doctest::Approx(0.5).epsilon(1e-9).scale(0));
        EnergyEvaluator ev(s, entering());
        const auto r = search_t_star(suggest_delta(s, entering()), 1.0, ev, light());
        MESSAGE("t* estimate " << r.label() << " after " << r.t_sequence.size() << " iterates");
        REQUIRE(r.t_star_hat);
        for (const double t : r.t_sequence) {
            CHECK(t < truth + 0.05);
        }
        CHECK(*r.t_star_hat > 0.4);
        const std::string j = to_json(r);
        CHECK(j.find("\"t_sequence\"") != std::string::npos);
        CHECK(j.find("\"stop_reason\"") != std::string::npos);
    }
}

TEST_CASE("needle scan")
{
    CHECK(needle_scan({}, nullptr, 1.0, 1.0).empty());

    // Small ball crossing the path of one needle; the other needle runs along an edge region.
    Scenario s = ball();
    s.inclusion.radius_path = ScalarPath::constant(0.1);
    s.inclusion.center_path = PointPath({{0.0, {0.5, 0.5, 0.2}}, {1.0, {0.5, 0.5, 0.8}}});
    Needle hit;
    hit.name = "hit";
    hit.path = PointPath({{0.0, {-0.2, 0.5, 0.5}}, {0.4, {0.5, 0.5, 0.5}}});
    Needle miss;
    miss.name = "miss";
    miss.path = PointPath({{0.0, {-0.2, 0.15, 0.85}}, {0.4, {0.3, 0.15, 0.85}}});
    const double delta = std::max(suggest_delta(s, hit), suggest_delta(s, miss));
    const auto map = needle_scan(
        {hit, miss}, [&](const Needle& n) { return std::make_unique<EnergyEvaluator>(s, n); }, delta, 1.0, light());
    REQUIRE(map.size() == 2);
    CHECK(map.at("miss").search.label() == "T+0");
    const auto& h = map.at("hit");
    REQUIRE(h.search.t_star_hat);
    const double truth = *t_star_true(s, hit);
    MESSAGE("hit: " << h.search.label() << " truth " << truth);
    CHECK(std::abs(*h.search.t_star_hat - truth) <= 0.1);
    for (const auto& [t, y] : h.cleared) {
        CHECK(t < *h.search.t_star_hat);
        (void)y;
    }
}

TEST_CASE("pipeline evaluator")
{
    PipelineOptions po;
    po.n = 16;
    po.steps = 32;
    po.with_volume = true;
    SUBCASE("snapping and the clearance horizon")
    {
        PipelineEvaluator ev(approaching(), entering(), po);
        CHECK(ev.snap(0.3) == doctest::Approx(9.0 / 32.0).epsilon(1e-12).scale(0));
        CHECK(ev.clearance_horizon() < 0.5);
        CHECK(ev.clearance_horizon() > 0.3);
        CHECK_THROWS_AS(ev.evaluate({.tau = 8.0, .mu = 2.0, .theta = 0.3, .t_prime = 0.6}), PreconditionError);
        const auto smp = ev.evaluate({.tau = 8.0, .mu = 2.0, .theta = 0.2, .t_prime = 0.3});
        CHECK(smp.params.t_prime == ev.snap(0.3));
        CHECK(smp.i_boundary.sign == 1);
        CHECK(smp.i_volume.sign == 1);
        CHECK(smp.sandwich_ratio > 0.0);
    }
    SUBCASE("measurement emulation tracks the limit flux under refinement")
    {
        const Needle out = fixtures::static_needle({-0.2, 0.5, 0.5});
        double gap[2];
        int r = 0;
        for (int n : {16, 24}) {
            PipelineOptions a = po;
            a.n = n;
            a.steps = 2 * n;
            a.with_energy = false;
            PipelineOptions b = a;
            b.source = FluxSource::Measurement;
            PipelineEvaluator lim(ball(), out, a);
            PipelineEvaluator mea(ball(), out, b);
            const ProbeParams p{.tau = 12.0, .mu = 2.0, .theta = 0.5, .t_prime = 1.0};
            const double x = lim.evaluate(p).i_boundary.value();
            const double y = mea.evaluate(p).i_boundary.value();
            gap[r++] = std::abs(x - y) / std::abs(x);
        }
        MESSAGE("measurement gap " << gap[0] << " -> " << gap[1]);
        CHECK(gap[1] < gap[0]);
        CHECK(gap[1] < 0.1);
        CHECK_THROWS_AS(measured_reflected_flux(ball(), Grid::make({}, 8, 1.0, 8), {.tau = 8.0}, entering()),
                        PreconditionError);
    }
}

TEST_CASE("report formats")
{
    std::vector<IndicatorSample> s;
    for (double tau : {8.0, 12.0, 16.0}) {
        s.push_back(synthetic(tau, -0.5 * tau));
    }
    const auto d = estimate_distance(s);
    const std::string j = to_json(d);
    CHECK(j.find("\"d_hat\"") != std::string::npos);
    auto count = [](const std::string& line) { return std::count(line.begin(), line.end(), ',') + 1; };
    CHECK(count(distance_csv_header()) == count(distance_csv_row(d)));
}
