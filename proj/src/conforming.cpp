#include "dprobe/conforming.hpp"

#include "dprobe/quadrature.hpp"
#include "dprobe/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace dprobe {

namespace {

/// Geometric breaks from `top` down toward 0 by factor 3, stopping below `finest`.
std::vector<double> graded_breaks(double top, double finest)
{
    std::vector<double> out;
    for (double s = top / 3.0; s > finest / 3.0 && out.size() < 40; s /= 3.0) {
        out.push_back(s);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

double integrate_conforming(const EllipsoidRegion& region, const Vec3& focus, double decay_rate,
                            const std::function<double(const Vec3&)>& f, const ConformingLevel& level)
{
    const Vec3& a = region.semi_axes;
    const double amax = std::max({a.x, a.y, a.z});
    const double amin = std::min({a.x, a.y, a.z});
    const Vec3 xs = ellipsoid_closest_point(region.center, a, focus);
    Vec3 axis = Vec3{(xs.x - region.center.x) / a.x, (xs.y - region.center.y) / a.y, (xs.z - region.center.z) / a.z};
    if (norm(axis) < 1e-300) {
        axis = {0.0, 0.0, 1.0};
    }
    const Vec3 e3 = axis / norm(axis);
    const Vec3 helper = std::abs(e3.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
    Vec3 e1 = cross(helper, e3);
    e1 = e1 / norm(e1);
    const Vec3 e2 = cross(e3, e1);

    const double dist = distance(focus, xs);
    const double rate = std::max(decay_rate, 1e-12);
    // Radial grading: physical depth (1 - rho) * a, resolved on 1/rate.
    const double l_rho = std::clamp(1.0 / (rate * amax), 1e-9, 1.0);
    // Polar grading: near the axis |x - focus| ~ dist + amax (dist + amax) u / dist with u = 1 - cos.
    const double l_u = std::clamp(std::max(dist, 1e-3 * amin) / (rate * amax * (dist + amax)), 1e-10, 2.0);

    const double span = 1.0 - region.inner;
    std::vector<double> rb;
    for (const double s : graded_breaks(span, l_rho)) {
        rb.push_back(1.0 - s);
    }
    std::sort(rb.begin(), rb.end());
    std::vector<double> rn;
    std::vector<double> rw;
    composite_gauss(region.inner, 1.0, rb, level.order, rn, rw);

    std::vector<double> un;
    std::vector<double> uw;
    composite_gauss(0.0, 2.0, graded_breaks(2.0, l_u), level.order, un, uw);

    const int m = level.azimuth;
    std::vector<double> cph(static_cast<std::size_t>(m));
    std::vector<double> sph(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        const double ph = 2.0 * std::numbers::pi * (k + 0.5) / m;
        cph[static_cast<std::size_t>(k)] = std::cos(ph);
        sph[static_cast<std::size_t>(k)] = std::sin(ph);
    }
    const double wph = 2.0 * std::numbers::pi / m;
    const double jac = a.x * a.y * a.z;

    double total = 0.0;
    double comp = 0.0;
    for (std::size_t i = 0; i < rn.size(); ++i) {
        const double rho = rn[i];
        for (std::size_t j = 0; j < un.size(); ++j) {
            const double cth = 1.0 - un[j];
            const double sth = std::sqrt(std::max(0.0, 1.0 - cth * cth));
            double ring = 0.0;
            for (int k = 0; k < m; ++k) {
                const Vec3 xi = (e1 * (sth * cph[static_cast<std::size_t>(k)]) +
                                 e2 * (sth * sph[static_cast<std::size_t>(k)]) + e3 * cth) *
                                rho;
                ring += f(region.center + hadamard(a, xi));
            }
            // Neumaier-compensated accumulation over the (rho, u) grid.
            const double term = ring * wph * rw[i] * uw[j] * rho * rho;
            const double s = total + term;
            comp += std::abs(total) >= std::abs(term) ? (total - s) + term : (term - s) + total;
            total = s;
        }
    }
    return jac * (total + comp);
}

AdaptiveResult integrate_conforming_adaptive(const EllipsoidRegion& region, const Vec3& focus, double decay_rate,
                                             const std::function<double(const Vec3&)>& f, double rel_tol,
                                             int max_refinements, ConformingLevel start)
{
    AdaptiveResult r;
    ConformingLevel lv = start;
    double prev = integrate_conforming(region, focus, decay_rate, f, lv);
    for (int k = 1; k <= max_refinements; ++k) {
        lv = lv.refined();
        const double cur = integrate_conforming(region, focus, decay_rate, f, lv);
        r.value = cur;
        r.error = std::abs(cur - prev);
        r.refinements = k;
        if (r.error <= rel_tol * std::abs(cur)) {
            r.converged = true;
            return r;
        }
        prev = cur;
    }
    return r;
}

} // namespace dprobe
