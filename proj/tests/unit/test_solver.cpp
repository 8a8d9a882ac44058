#include "doctest.h"

#include "../support/fixtures.hpp"

#include "dprobe/error.hpp"
#include "dprobe/solver.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <random>

using namespace dprobe;

namespace {

Scenario no_contrast(const Box& box = {})
{
    Scenario s;
    s.box = box;
    s.inclusion.k0 = 1.0;
    return s;
}

Scenario static_ball(double k0 = 2.0)
{
    Scenario s;
    s.inclusion.k0 = k0;
    return s;
}

double l2(std::span<const double> v)
{
    double acc = 0.0;
    for (double x : v) {
        acc += x * x;
    }
    return std::sqrt(acc);
}

/// Exact heat solution e^{-3 pi^2 t} prod sin(pi x_i) sampled on a grid (boundary included).
BoundaryTrace exact_trace(const Grid& g, std::vector<double>& v0, SpaceTimeField& exact)
{
    exact = SpaceTimeField(g);
    const double pi = std::numbers::pi;
    for (int l = 0; l < g.levels(); ++l) {
        const double decay = std::exp(-3 * pi * pi * g.time(l));
        for (int k = 0; k < g.N(); ++k) {
            for (int j = 0; j < g.N(); ++j) {
                for (int i = 0; i < g.N(); ++i) {
                    const Vec3 x = g.node(i, j, k);
                    exact.at(l, i, j, k) = decay * std::sin(pi * x.x) * std::sin(pi * x.y) * std::sin(pi * x.z);
                }
            }
        }
    }
    auto l0 = exact.level(0);
    v0.assign(l0.begin(), l0.end());
    return boundary_trace(exact);
}

} // namespace

TEST_CASE("grid invariants")
{
    CHECK_THROWS_AS(Grid::make({}, 7, 1.0, 10), PreconditionError);
    const Grid g = Grid::make({{0, 0, 0}, {2, 1, 1}}, 15, 0.7, 33);
    CHECK(g.node(g.n + 1, 0, 0).x == 2.0);
    CHECK(std::abs(g.h().x * (g.n + 1) - 2.0) <= 1e-12);
    CHECK(std::abs(g.dt() * g.steps - 0.7) <= 1e-12);
    CHECK(g.time(g.steps) == 0.7);
    CHECK(g.level_at_or_before(0.35) == 16);
}

TEST_CASE("zero data gives the zero solution")
{
    const Grid g = Grid::make({}, 10, 0.1, 5);
    const BoundaryTrace f(g);
    const std::vector<double> v0(g.node_count(), 0.0);
    const auto v = solve_dirichlet(static_ball(), g, f, v0);
    CHECK(l2(v.data()) == 0.0);
}

TEST_CASE("manufactured separable solution converges")
{
    // Sub-box so the Dirichlet data are not zero.
    const Box box{{0.1, 0.2, 0.15}, {0.9, 0.85, 0.95}};
    double err[2];
    const int ns[2] = {10, 21};
    const int steps[2] = {8, 32};
    for (int r = 0; r < 2; ++r) {
        const Grid g = Grid::make(box, ns[r], 0.05, steps[r]);
        std::vector<double> v0;
        SpaceTimeField exact;
        const BoundaryTrace f = exact_trace(g, v0, exact);
        const auto v = solve_dirichlet(no_contrast(box), g, f, v0);
        std::vector<double> diff(g.node_count());
        const auto a = v.level(g.steps);
        const auto b = exact.level(g.steps);
        for (std::size_t i = 0; i < diff.size(); ++i) {
            diff[i] = a[i] - b[i];
        }
        err[r] = l2(diff) / l2(b);
        MESSAGE("n=" << ns[r] << " relative L2 error " << err[r]);
    }
    // h halves and dt quarters: the error should drop by about 4.
    CHECK(err[1] <= 0.03);
    CHECK(err[0] / err[1] >= 3.0);
}

TEST_CASE("discrete maximum principle and energy dissipation")
{
    const Grid g = Grid::make({}, 16, 0.2, 20);
    const Scenario s = static_ball(2.0);
    BoundaryTrace f(g);
    const Vec3 y{-0.2, 0.5, 0.5};
    double fmin = 1e300;
    double fmax = -1e300;
    for (int l = 0; l < g.levels(); ++l) {
        for (int face = 0; face < 6; ++face) {
            for (int b = 0; b < g.N(); ++b) {
                for (int a = 0; a < g.N(); ++a) {
                    const double v = p_yukawa(5.0, y, f.point(face, a, b)).value;
                    f.at(l, face, a, b) = v;
                    fmin = std::min(fmin, v);
                    fmax = std::max(fmax, v);
                }
            }
        }
    }
    const std::vector<double> v0(g.node_count(), 0.0);
    const auto v = solve_dirichlet(s, g, f, v0);
    double vmin = 1e300;
    double vmax = -1e300;
    for (double x : v.data()) {
        vmin = std::min(vmin, x);
        vmax = std::max(vmax, x);
    }
    CHECK(vmin >= std::min(fmin, 0.0) - 1e-12);
    CHECK(vmax <= std::max(fmax, 0.0) + 1e-12);

    // f = 0 and a bump: the L2 norm never grows.
    std::vector<double> bump(g.node_count(), 0.0);
    for (int k = 1; k <= g.n; ++k) {
        for (int j = 1; j <= g.n; ++j) {
            for (int i = 1; i <= g.n; ++i) {
                const Vec3 x = g.node(i, j, k) - Vec3{0.4, 0.5, 0.6};
                bump[g.index(i, j, k)] = std::exp(-dot(x, x) / 0.02);
            }
        }
    }
    const auto e = solve_dirichlet(s, g, BoundaryTrace(g), bump);
    for (int l = 1; l < g.levels(); ++l) {
        CHECK(l2(e.level(l)) <= l2(e.level(l - 1)) * (1.0 + 1e-12));
    }
}

TEST_CASE("frozen-time operator is symmetric")
{
    const Grid g = Grid::make({}, 12, 1.0, 4);
    const auto cond = face_conductivity(static_ball(3.0), g, 0.3);
    CHECK(!cond.cut.empty());
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    std::vector<double> u(g.node_count(), 0.0);
    std::vector<double> w(g.node_count(), 0.0);
    for (int k = 1; k <= g.n; ++k) {
        for (int j = 1; j <= g.n; ++j) {
            for (int i = 1; i <= g.n; ++i) {
                u[g.index(i, j, k)] = nd(rng);
                w[g.index(i, j, k)] = nd(rng);
            }
        }
    }
    std::vector<double> au(g.node_count());
    std::vector<double> aw(g.node_count());
    apply_operator(g, cond, 0.0, u, au);
    apply_operator(g, cond, 0.0, w, aw);
    double a = 0.0;
    double b = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        a += au[i] * w[i];
        b += u[i] * aw[i];
        scale += std::abs(au[i] * w[i]);
    }
    CHECK(std::abs(a - b) <= 1e-12 * scale);
}

TEST_CASE("time reversal of a background solve")
{
    const Grid g = Grid::make({}, 10, 0.1, 10);
    std::vector<double> v0;
    SpaceTimeField exact;
    BoundaryTrace f = exact_trace(g, v0, exact);
    for (double& x : f.data()) {
        x += 0.3; // non-trivial boundary data
    }
    const Scenario s = no_contrast();
    SolverOptions opt;
    opt.cg_tol = 1e-12;
    const auto fwd = solve_dirichlet(s, g, f, v0, opt);
    BoundaryTrace rev(g);
    for (int l = 0; l < g.levels(); ++l) {
        const auto src = f.level(g.steps - l);
        auto dst = rev.level(l);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    const auto bwd = solve_adjoint_dirichlet(s, g, rev, v0, opt);
    double err = 0.0;
    double ref = 0.0;
    for (int l = 0; l < g.levels(); ++l) {
        const auto a = fwd.level(l);
        const auto b = bwd.level(g.steps - l);
        for (std::size_t i = 0; i < a.size(); ++i) {
            err = std::max(err, std::abs(a[i] - b[i]));
            ref = std::max(ref, std::abs(a[i]));
        }
    }
    CHECK(err <= 1e-9 * ref);
}

TEST_CASE("boundary flux")
{
    const Grid g = Grid::make({}, 10, 1.0, 1);
    SpaceTimeField lin(g);
    const Vec3 a{0.3, -1.2, 2.0};
    for (int l = 0; l < g.levels(); ++l) {
        for (int k = 0; k < g.N(); ++k) {
            for (int j = 0; j < g.N(); ++j) {
                for (int i = 0; i < g.N(); ++i) {
                    lin.at(l, i, j, k) = dot(a, g.node(i, j, k)) + 0.7;
                }
            }
        }
    }
    const auto fl = dtn_flux(lin);
    for (int face = 0; face < 6; ++face) {
        CHECK(fl.at(1, face, 3, 4) == doctest::Approx(dot(a, BoundaryTrace::normal(face))).epsilon(1e-12).scale(0));
    }
    const auto z = dtn_flux(SpaceTimeField(g));
    CHECK(l2(z.data()) == 0.0);

    // Yukawa field with the pole outside: O(h^2) flux error.
    const Vec3 y{-0.3, 0.4, 0.5};
    double errs[2];
    for (int r = 0; r < 2; ++r) {
        const Grid gr = Grid::make({}, r == 0 ? 31 : 63, 1.0, 1);
        SpaceTimeField pf(gr);
        for (int k = 0; k < gr.N(); ++k) {
            for (int j = 0; j < gr.N(); ++j) {
                for (int i = 0; i < gr.N(); ++i) {
                    pf.at(0, i, j, k) = p_yukawa(3.0, y, gr.node(i, j, k)).value;
                }
            }
        }
        const auto fp = dtn_flux(pf);
        double e = 0.0;
        double m = 0.0;
        for (int face = 0; face < 6; ++face) {
            for (int b = 0; b < gr.N(); ++b) {
                for (int a2 = 0; a2 < gr.N(); ++a2) {
                    const auto pv = p_yukawa(3.0, y, fp.point(face, a2, b));
                    const double ex = dot(pv.gradient, BoundaryTrace::normal(face));
                    e = std::max(e, std::abs(fp.at(0, face, a2, b) - ex));
                    m = std::max(m, std::abs(ex));
                }
            }
        }
        errs[r] = e / m;
    }
    // Observed order >= 1.7 (pre-asymptotic at this pole distance; tends to 2).
    CHECK(errs[0] / errs[1] >= 3.2);
}

TEST_CASE("reflected wave")
{
    const Needle n = fixtures::static_needle({0.1, 0.5, 0.5});
    Needle entering;
    entering.path = PointPath({{0.0, {-0.3, 0.5, 0.5}}, {0.3, {0.1, 0.5, 0.5}}});
    const Grid g = Grid::make({}, 16, 0.5, 16);
    ProbeParams p{.tau = 10.0, .mu = 2.0, .theta = 0.25, .t_prime = 0.5};

    SUBCASE("no contrast and probe-seeded data give W = 0")
    {
        Scenario s = no_contrast();
        s.v0.kind = InitialData::Kind::ProbeSeeded;
        const auto r = solve_reflected(s, g, p, entering);
        CHECK(l2(r.w.data()) == 0.0);
    }
    SUBCASE("clearance violation is refused")
    {
        Scenario s = static_ball();
        const Needle bad = fixtures::static_needle({0.5, 0.5, 0.66});
        CHECK_THROWS_AS(solve_reflected(s, g, p, bad), PreconditionError);
    }
    SUBCASE("decay across tau")
    {
        Scenario s = static_ball();
        s.v0.kind = InitialData::Kind::ProbeSeeded;
        const Grid gg = Grid::make({}, 24, 0.5, 32);
        double sup[2];
        double at_pole[2];
        const double taus[2] = {10.0, 14.0};
        for (int r = 0; r < 2; ++r) {
            ProbeParams pr = p;
            pr.tau = taus[r];
            const auto sol = solve_reflected(s, gg, pr, entering);
            CHECK(sol.w.all_finite());
            double m = 0.0;
            for (double x : sol.w.data()) {
                m = std::max(m, std::abs(x));
            }
            sup[r] = m;
            at_pole[r] = std::abs(sample_field(sol.w, gg.steps, entering(0.5)));
        }
        const double d = 0.25;
        const double slope_sup = std::log(sup[1] / sup[0]) / 4.0;
        const double slope_pole = std::log(at_pole[1] / at_pole[0]) / 4.0;
        MESSAGE("sup slope " << slope_sup << ", pole slope " << slope_pole);
        // The sup norm sits on the inclusion boundary (one transit, e^{-tau d}); the
        // field carried back to the pole has made the round trip (e^{-2 tau d}).
        CHECK(slope_sup == doctest::Approx(-d).epsilon(0.2).scale(0));
        CHECK(slope_pole == doctest::Approx(-2 * d).epsilon(0.2).scale(0));
    }
}

TEST_CASE("snapshot round trip is bit exact")
{
    const Grid g = Grid::make({{0, 0, 0}, {1, 2, 1}}, 8, 0.3, 3);
    SpaceTimeField f(g);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd;
    for (double& x : f.data()) {
        x = nd(rng) * std::exp(nd(rng) * 30);
    }
    f.data()[5] = -0.0;
    f.data()[6] = 5e-324;
    const auto dir = std::filesystem::temp_directory_path() / "dprobe_snapshot_test";
    std::filesystem::create_directories(dir);
    const std::string stem = (dir / "field").string();
    write_snapshot(f, stem, R"({"scenario_hash":"abc","tau":12})");
    std::string side;
    const auto back = read_snapshot(stem, &side);
    CHECK(back.grid() == g);
    REQUIRE(back.data().size() == f.data().size());
    CHECK(std::memcmp(back.data().data(), f.data().data(), f.data().size() * 8) == 0);
    CHECK(side.find("\"tau\": 12") != std::string::npos);
}
