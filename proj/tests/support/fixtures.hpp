#pragma once

#include "dprobe/scenario.hpp"

namespace fixtures {

using dprobe::Extension;
using dprobe::Needle;
using dprobe::PointPath;
using dprobe::Vec3;

/// Piecewise-linear needle that wanders through the unit cube with two interior kinks.
inline Needle wandering_needle()
{
    Needle n;
    n.name = "wander";
    n.path = PointPath({{-1.0, {-0.6, 0.2, 0.5}},
                        {0.0, {-0.2, 0.3, 0.5}},
                        {0.4, {0.2, 0.5, 0.4}},
                        {1.0, {0.3, 0.65, 0.6}},
                        {2.0, {0.3, 0.9, 0.7}}},
                       Extension::Linear);
    return n;
}

inline Needle static_needle(const Vec3& y)
{
    Needle n;
    n.name = "static";
    n.path = PointPath::constant(y);
    return n;
}

} // namespace fixtures
