#pragma once

#include "dprobe/vec3.hpp"

#include <functional>

namespace dprobe {

/// Resolution of the inclusion-conforming rule: Gauss-Legendre order per radial and
/// polar panel, and trapezoid points in the azimuth.
struct ConformingLevel {
    int order = 8;
    int azimuth = 16;

    ConformingLevel refined() const { return {order + order / 2, azimuth * 3 / 2}; }
};

/// Region E = { c + diag(a) xi : inner <= |xi| <= 1 } (ellipsoid, or a shell when inner > 0).
struct EllipsoidRegion {
    Vec3 center;
    Vec3 semi_axes;
    double inner = 0.0;
};

/// int_E f dx in stretched spherical coordinates whose polar axis points at the surface
/// point closest to `focus`. Radial panels are graded toward the surface and polar
/// panels toward the axis on the length scale 1/decay_rate, where integrands of the
/// form e^{-decay_rate |x - focus|} concentrate.
double integrate_conforming(const EllipsoidRegion& region, const Vec3& focus, double decay_rate,
                            const std::function<double(const Vec3&)>& f, const ConformingLevel& level = {});

struct AdaptiveResult {
    double value = 0.0;
    double error = 0.0;
    int refinements = 0;
    bool converged = false;
};

/// Refines the level until two successive values agree to rel_tol.
AdaptiveResult integrate_conforming_adaptive(const EllipsoidRegion& region, const Vec3& focus, double decay_rate,
                                             const std::function<double(const Vec3&)>& f, double rel_tol = 1e-9,
                                             int max_refinements = 6, ConformingLevel start = {});

} // namespace dprobe
