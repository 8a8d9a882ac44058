#pragma once

#include "dprobe/probe.hpp"
#include "dprobe/scenario.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dprobe {

/// Ball (inner = 0) or spherical shell inner < |x - center| < outer.
struct RadialRegion {
    Vec3 center;
    double outer = 0.0;
    double inner = 0.0;

    double distance(const Vec3& y) const;
    bool contains_closed(const Vec3& y) const;
};

/// Integrand families over a radial region, computed by adaptive Gauss-Kronrod over
/// shells around the pole (cap areas are exact).
double integral_p_squared(const RadialRegion& region, double tau, const Vec3& y);
double integral_gradp_squared(const RadialRegion& region, double tau, const Vec3& y);
/// Same with the ball |x - y| < eps removed; finite for y inside the region.
double integral_gradp_squared_truncated(const RadialRegion& region, double tau, const Vec3& y, double eps);
/// True when the truncated integral keeps growing as eps shrinks (pole inside the closed region).
bool gradp_integral_diverges(const RadialRegion& region, double tau, const Vec3& y);

/// One inequality evaluated across a tau ladder with its constant fitted at the smallest tau.
struct BoundCheck {
    std::string name;
    bool upper = true;
    double constant = 0.0;
    std::vector<double> tau_ladder;
    std::vector<double> lhs;
    std::vector<double> rhs_bound;
    /// lhs / rhs_bound: <= 1 required for upper bounds, >= 1 for lower bounds.
    std::vector<double> margin;
    bool pass = false;
    /// Smallest ladder tau from which the inequality holds for every larger ladder tau.
    std::optional<double> holds_from;
};

/// Least-squares slope of ln lhs against tau.
double decay_slope(const BoundCheck& check);

/// int_O p^2 <= C/(tau d) e^{-2 tau d}, d = d(y, O). Throws PreconditionError for y in closed O.
BoundCheck check_p_squared_bound(const RadialRegion& region, const std::vector<double>& taus, const Vec3& y,
                                 double rel_slack = 1e-9);

struct BoundPair {
    BoundCheck upper;
    BoundCheck lower;
};

/// Upper: int_O |grad p|^2 <= C tau (1 + 1/(tau d(y,O))) e^{-2 tau d(y,O)}.
/// Lower: int_O |grad p|^2 >= c tau^2 e^{-2 tau d} for the given d > d(y,O).
BoundPair check_gradp_bounds(const RadialRegion& region, const std::vector<double>& taus, const Vec3& y, double d,
                             double rel_slack = 1e-9);

/// int_0^T' int_{D(t)} |gamma-1| |grad p_{tau,y(t)}|^2 kappa dx dt. Balls with constant
/// contrast use the radial shells; other inclusions use conforming cubature.
double spacetime_energy(const Scenario& scenario, const Needle& needle, const ProbeParams& params);

/// Upper: integral <= (C/mu)(1 + 1/(tau d_theta)) e^{-2 tau d_theta}, d_theta = d(y(theta), D(theta)).
/// Lower: integral >= c (tau/mu) e^{-2 tau d} for the given d > d_theta.
/// `params.tau` is ignored; the ladder supplies tau.
BoundPair check_spacetime_bounds(const Scenario& scenario, const Needle& needle, const ProbeParams& params,
                                 const std::vector<double>& taus, double d, double rel_slack = 1e-9);

std::string to_json(const BoundCheck& check);

} // namespace dprobe
