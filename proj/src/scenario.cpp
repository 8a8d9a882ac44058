#include "dprobe/scenario.hpp"

#include "dprobe/error.hpp"
#include "dprobe/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dprobe {

namespace {

Vec3 scaled(const Vec3& v, const Vec3& e) { return {v.x / e.x, v.y / e.y, v.z / e.z}; }

constexpr double kTimeSlack = 1e-12;

} // namespace

double InclusionTrajectory::level(double t, const Vec3& x) const
{
    const Vec3 q = scaled(x - center(t), semi_axes(t));
    return dot(q, q) - 1.0;
}

bool InclusionTrajectory::contains(double t, const Vec3& x) const { return level(t, x) < 0.0; }

double InclusionTrajectory::segment_fraction(double t, const Vec3& a, const Vec3& b) const
{
    const Vec3 e = semi_axes(t);
    const Vec3 p = scaled(a - center(t), e);
    const Vec3 d = scaled(b - a, e);
    const double qa = dot(d, d);
    const double qb = 2.0 * dot(p, d);
    const double qc = dot(p, p) - 1.0;
    if (qa <= 0.0) {
        return qc < 0.0 ? 1.0 : 0.0;
    }
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc <= 0.0) {
        return 0.0;
    }
    const double sq = std::sqrt(disc);
    // Stable quadratic roots.
    const double qq = -0.5 * (qb + std::copysign(sq, qb));
    double s1 = qq / qa;
    double s2 = qq != 0.0 ? qc / qq : -s1;
    if (s1 > s2) {
        std::swap(s1, s2);
    }
    const double lo = std::max(s1, 0.0);
    const double hi = std::min(s2, 1.0);
    return hi > lo ? hi - lo : 0.0;
}

double InitialData::operator()(const Vec3& x) const
{
    switch (kind) {
    case Kind::Zero:
        return 0.0;
    case Kind::Constant:
        return value;
    case Kind::Bump: {
        const Vec3 d = x - center;
        return value * std::exp(-dot(d, d) / (width * width));
    }
    case Kind::ProbeSeeded:
        throw PreconditionError("probe-seeded initial data depends on the probe; use the solver helper");
    }
    return 0.0;
}

int Scenario::contrast_sign() const
{
    if (inclusion.k0 > 1.0) {
        return 1;
    }
    if (inclusion.k0 < 1.0) {
        return -1;
    }
    return 0;
}

double gamma_at(const Scenario& scenario, double t, const Vec3& x)
{
    if (!(t >= -kTimeSlack && t <= scenario.horizon + kTimeSlack)) {
        throw DomainError("gamma_at: time " + format_double(t) + " outside [0, T]");
    }
    if (!scenario.box.contains_closed(x)) {
        throw DomainError("gamma_at: point outside the domain box");
    }
    return scenario.inclusion.contains(t, x) ? scenario.inclusion.contrast(t, x) : 1.0;
}

Vec3 ellipsoid_closest_point(const Vec3& center, const Vec3& semi_axes, const Vec3& point)
{
    Vec3 p = point - center;
    Vec3 sign{1.0, 1.0, 1.0};
    for (int i = 0; i < 3; ++i) {
        if (p[i] < 0.0) {
            sign[i] = -1.0;
            p[i] = -p[i];
        }
    }
    const Vec3& e = semi_axes;
    const Vec3 q = scaled(p, e);
    if (dot(q, q) <= 1.0) {
        return point;
    }
    Vec3 x;
    if (e.x == e.y && e.y == e.z) {
        x = p * (e.x / norm(p));
    } else {
        // Closest point x_i = e_i^2 p_i / (s + e_i^2); s solves sum (e_i p_i / (s + e_i^2))^2 = 1.
        auto f = [&](double s) {
            double acc = 0.0;
            for (int i = 0; i < 3; ++i) {
                const double r = e[i] * p[i] / (s + e[i] * e[i]);
                acc += r * r;
            }
            return acc - 1.0;
        };
        double lo = 0.0;
        double hi = norm(p) * std::max({e.x, e.y, e.z}) + 1.0;
        while (f(hi) > 0.0) {
            hi *= 2.0;
        }
        for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            (f(mid) > 0.0 ? lo : hi) = mid;
        }
        const double s = 0.5 * (lo + hi);
        for (int i = 0; i < 3; ++i) {
            x[i] = e[i] * e[i] * p[i] / (s + e[i] * e[i]);
        }
    }
    return center + hadamard(x, sign);
}

double ellipsoid_distance(const Vec3& center, const Vec3& semi_axes, const Vec3& point)
{
    const Vec3 q = scaled(point - center, semi_axes);
    if (dot(q, q) <= 1.0) {
        return 0.0;
    }
    const Vec3 e = semi_axes;
    if (e.x == e.y && e.y == e.z) {
        return norm(point - center) - e.x;
    }
    return distance(point, ellipsoid_closest_point(center, semi_axes, point));
}

double dist_point_to_inclusion(const Scenario& scenario, double theta, const Vec3& y)
{
    const auto& inc = scenario.inclusion;
    return ellipsoid_distance(inc.center(theta), inc.semi_axes(theta), y);
}

double clearance(const Scenario& scenario, const Needle& needle, double t)
{
    return dist_point_to_inclusion(scenario, t, needle(t));
}

double clearance_lipschitz(const Scenario& scenario, const Needle& needle)
{
    return needle.lipschitz_bound() + scenario.inclusion.center_lipschitz() +
           scenario.inclusion.radius_lipschitz();
}

double dist_needle_to_inclusion(const Scenario& scenario, const Needle& needle, double t_prime)
{
    if (!(t_prime > 0.0)) {
        throw PreconditionError("dist_needle_to_inclusion: T' must be positive");
    }
    constexpr int kSamples = 2000;
    auto g = [&](double t) { return clearance(scenario, needle, t); };
    double best = std::numeric_limits<double>::infinity();
    int best_i = 0;
    for (int i = 0; i <= kSamples; ++i) {
        const double v = g(t_prime * i / kSamples);
        if (v < best) {
            best = v;
            best_i = i;
        }
    }
    if (best == 0.0) {
        return 0.0;
    }
    // Golden-section refinement on the bracketing interval.
    double a = t_prime * std::max(best_i - 1, 0) / kSamples;
    double b = t_prime * std::min(best_i + 1, kSamples) / kSamples;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = g(c);
    double fd = g(d);
    for (int it = 0; it < 100 && b - a > 1e-14; ++it) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a);
            fc = g(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a);
            fd = g(d);
        }
    }
    return std::min({best, fc, fd, g(a), g(b)});
}

std::optional<double> t_star_true(const Scenario& scenario, const Needle& needle)
{
    const double T = scenario.horizon;
    auto g = [&](double t) { return clearance(scenario, needle, t); };
    if (g(0.0) <= 0.0) {
        return 0.0;
    }
    constexpr int kSamples = 4000;
    const double lip = clearance_lipschitz(scenario, needle);
    double prev_t = 0.0;
    double prev_v = g(0.0);
    for (int i = 1; i <= kSamples; ++i) {
        const double t = T * i / kSamples;
        const double v = g(t);
        double lo = prev_t;
        double hi = t;
        bool hit = v <= 0.0;
        if (!hit && prev_v + v < lip * (t - prev_t)) {
            // Possible tangential touch between samples: locate the local minimum.
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            double a = prev_t;
            double b = t;
            for (int it = 0; it < 80; ++it) {
                const double c = b - gr * (b - a);
                const double d = a + gr * (b - a);
                (g(c) < g(d) ? b : a) = (g(c) < g(d) ? d : c);
            }
            const double tm = 0.5 * (a + b);
            if (g(tm) <= 0.0) {
                hit = true;
                hi = tm;
            }
        }
        if (hit) {
            for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                const double mid = 0.5 * (lo + hi);
                (g(mid) > 0.0 ? lo : hi) = mid;
            }
            return hi;
        }
        prev_t = t;
        prev_v = v;
    }
    return std::nullopt;
}

std::vector<std::string> validate_scenario(const Scenario& s)
{
    std::vector<std::string> out;
    const Vec3 ext = s.box.extent();
    if (!(ext.x > 0 && ext.y > 0 && ext.z > 0)) {
        out.push_back("domain box must have positive extent");
    }
    if (!(s.horizon > 0.0)) {
        out.push_back("horizon T must be positive");
    }
    const auto& inc = s.inclusion;
    if (!(inc.axes.x > 0 && inc.axes.y > 0 && inc.axes.z > 0)) {
        out.push_back("inclusion axes must be positive");
    }
    if (!(s.contrast_bound > 1.0)) {
        out.push_back("contrast bound C must exceed 1");
    }
    constexpr int kSamples = 200;
    int sign = 0;
    for (int i = 0; i <= kSamples; ++i) {
        const double t = s.horizon * i / kSamples;
        const double r = inc.radius_path(t);
        if (!(r > 0.0)) {
            out.push_back("inclusion radius must be positive at t=" + format_double(t));
            break;
        }
        const Vec3 c = inc.center(t);
        const Vec3 e = inc.semi_axes(t);
        for (int a = 0; a < 3; ++a) {
            if (!(c[a] - e[a] > s.box.lo[a] && c[a] + e[a] < s.box.hi[a])) {
                out.push_back("D(t) not strictly inside the domain at t=" + format_double(t));
                a = 3;
                i = kSamples + 1;
            }
        }
        if (i > kSamples) {
            break;
        }
        // Contrast on a few interior points, including a shrunken copy (C-D).
        for (const double frac : {0.0, 0.5, 0.9}) {
            for (int a = 0; a < 3; ++a) {
                Vec3 x = c;
                x[a] += frac * e[a];
                const double k = inc.contrast(t, x);
                if (!(k >= 1.0 / s.contrast_bound && k <= s.contrast_bound)) {
                    out.push_back("contrast k outside [1/C, C] at t=" + format_double(t));
                    i = kSamples + 1;
                    break;
                }
                const int sk = k > 1.0 ? 1 : (k < 1.0 ? -1 : 0);
                if (sign == 0) {
                    sign = sk;
                } else if (sk != sign) {
                    out.push_back("k - 1 changes sign inside D_T");
                    i = kSamples + 1;
                    break;
                }
            }
            if (i > kSamples) {
                break;
            }
        }
    }
    if (s.v0.l0 < 0.0) {
        out.push_back("initial-data constant l0 must be nonnegative");
    }
    return out;
}

std::vector<std::string> validate_needle(const Scenario& s, const Needle& needle)
{
    std::vector<std::string> out;
    constexpr int kSamples = 400;
    for (int i = 0; i <= kSamples; ++i) {
        const double t = -1.0 + 1.0 * i / kSamples;
        if (s.box.contains_closed(needle(t))) {
            out.push_back("needle " + needle.name + ": y(t) must lie outside the closed domain for t <= 0 (violated at t=" +
                          format_double(t) + ")");
            break;
        }
    }
    const double lip = needle.lipschitz_bound();
    const double t1 = s.horizon + 1.0;
    for (int i = 0; i < kSamples; ++i) {
        const double a = -1.0 + (t1 + 1.0) * i / kSamples;
        const double b = -1.0 + (t1 + 1.0) * (i + 1) / kSamples;
        if (distance(needle(a), needle(b)) > lip * (b - a) * (1.0 + 1e-9) + 1e-14) {
            out.push_back("needle " + needle.name + ": Lipschitz bound violated");
            break;
        }
    }
    return out;
}

std::string describe(const Scenario& s)
{
    std::ostringstream os;
    auto v = [&](const Vec3& p) {
        os << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z);
    };
    os << "domain=";
    v(s.box.lo);
    os << ' ';
    v(s.box.hi);
    os << ";horizon=" << format_double(s.horizon);
    os << ";shape=" << (s.inclusion.shape == InclusionShape::Ball ? "ball" : "ellipsoid");
    os << ";axes=";
    v(s.inclusion.axes);
    os << ";center=";
    for (const auto& k : s.inclusion.center_path.knots()) {
        os << format_double(k.t) << ':';
        v(k.value);
        os << ',';
    }
    os << ";radius=";
    for (const auto& k : s.inclusion.radius_path.knots()) {
        os << format_double(k.t) << ':' << format_double(k.value) << ',';
    }
    os << ";k0=" << format_double(s.inclusion.k0) << (s.inclusion.k_field ? "+field" : "");
    os << ";v0=" << static_cast<int>(s.v0.kind) << ',' << format_double(s.v0.value) << ',';
    v(s.v0.center);
    os << ',' << format_double(s.v0.width) << ";l0=" << format_double(s.v0.l0);
    return os.str();
}

std::string describe(const Needle& n)
{
    std::ostringstream os;
    os << "needle=" << n.name << ";ext=" << (n.path.extension() == Extension::Constant ? "constant" : "linear")
       << ";path=";
    for (const auto& k : n.path.knots()) {
        os << format_double(k.t) << ':' << format_double(k.value.x) << ' ' << format_double(k.value.y) << ' '
           << format_double(k.value.z) << ',';
    }
    return os.str();
}

std::uint64_t scenario_hash(const Scenario& s) { return fnv1a64(describe(s)); }

} // namespace dprobe
