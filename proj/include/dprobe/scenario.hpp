#pragma once

#include "dprobe/path.hpp"
#include "dprobe/vec3.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dprobe {

enum class InclusionShape { Ball, Ellipsoid };

/// Moving inclusion D(t): a ball or axis-aligned ellipsoid whose center and
/// scale move piecewise-linearly. Semi-axes at time t are radius(t) * axes.
struct InclusionTrajectory {
    InclusionShape shape = InclusionShape::Ball;
    PointPath center_path = PointPath::constant({0.5, 0.5, 0.5});
    ScalarPath radius_path = ScalarPath::constant(0.15);
    Vec3 axes{1.0, 1.0, 1.0};
    double k0 = 2.0;
    /// Optional spatially varying contrast k(t,x) inside D(t); k0 is used when empty.
    std::function<double(double, const Vec3&)> k_field;

    Vec3 center(double t) const { return center_path(t); }
    Vec3 semi_axes(double t) const { return axes * radius_path(t); }
    /// Open-set membership x in D(t).
    bool contains(double t, const Vec3& x) const;
    /// Closed-set membership (boundary included, up to roundoff).
    double level(double t, const Vec3& x) const;
    double contrast(double t, const Vec3& x) const { return k_field ? k_field(t, x) : k0; }
    /// Fraction of the segment [a, b] lying inside D(t) (exact for the parametric shape).
    double segment_fraction(double t, const Vec3& a, const Vec3& b) const;
    /// Lipschitz bounds of center and scale paths.
    double center_lipschitz() const { return center_path.lipschitz(); }
    double radius_lipschitz() const
    {
        return radius_path.lipschitz() * std::max({axes.x, axes.y, axes.z});
    }
};

/// Initial temperature descriptor with its (C-0) growth constant l0.
struct InitialData {
    enum class Kind { Zero, Constant, Bump, ProbeSeeded };
    Kind kind = Kind::Zero;
    double value = 0.0;      // Constant level or Bump amplitude
    Vec3 center{0.5, 0.5, 0.5};
    double width = 0.1;      // Bump e-folding width
    double l0 = 0.0;
    double bound_constant = 1.0; // C in ||v0|| <= C exp(tau l0)

    /// Pointwise value for the non-probe kinds.
    double operator()(const Vec3& x) const;
};

struct Scenario {
    Box box;
    double horizon = 1.0;
    InclusionTrajectory inclusion;
    InitialData v0;
    /// C > 1 with 1/C <= k <= C on D_T.
    double contrast_bound = 4.0;

    int contrast_sign() const;
};

/// Probe trajectory t -> y(t) on [-1, T+1].
struct Needle {
    PointPath path;
    std::string name;

    Vec3 operator()(double t) const { return path(t); }
    double lipschitz_bound() const { return path.lipschitz(); }
};

/// gamma(t,x): 1 outside D(t), k(t,x) inside. Throws DomainError outside [0,T] x closed box.
double gamma_at(const Scenario& scenario, double t, const Vec3& x);

/// Euclidean distance from y to the closed set D(theta) (0 if y is in it).
double dist_point_to_inclusion(const Scenario& scenario, double theta, const Vec3& y);

/// Per-time clearance d(y(t), D(t)).
double clearance(const Scenario& scenario, const Needle& needle, double t);

/// Upper bound on the Lipschitz constant of the clearance in t.
double clearance_lipschitz(const Scenario& scenario, const Needle& needle);

/// inf over theta in [0, t_prime] of d(y(theta), D(theta)) (simultaneous-time distance).
double dist_needle_to_inclusion(const Scenario& scenario, const Needle& needle, double t_prime);

/// Time of first contact of the needle with the closed inclusion, or nullopt.
std::optional<double> t_star_true(const Scenario& scenario, const Needle& needle);

/// Invariant violations of the scenario (empty when valid).
std::vector<std::string> validate_scenario(const Scenario& scenario);

/// Invariant violations of a needle against a scenario (start outside the closed box, Lipschitz).
std::vector<std::string> validate_needle(const Scenario& scenario, const Needle& needle);

/// Stable 64-bit fingerprint of the scenario description.
std::uint64_t scenario_hash(const Scenario& scenario);
std::string describe(const Scenario& scenario);
std::string describe(const Needle& needle);

/// Closest-point distance from p to the axis-aligned ellipsoid with the given center and
/// semi-axes; 0 for points inside.
double ellipsoid_distance(const Vec3& center, const Vec3& semi_axes, const Vec3& p);
/// Closest point of the closed ellipsoid to p (p itself when inside).
Vec3 ellipsoid_closest_point(const Vec3& center, const Vec3& semi_axes, const Vec3& p);

} // namespace dprobe
