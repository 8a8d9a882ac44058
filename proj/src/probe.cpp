#include "dprobe/probe.hpp"

#include "dprobe/error.hpp"
#include "dprobe/parallel.hpp"
#include "dprobe/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>

namespace dprobe {

int workers_from_env(int fallback)
{
    if (const char* s = std::getenv("DPROBE_WORKERS")) {
        const int v = std::atoi(s);
        if (v > 0) {
            return v;
        }
    }
    return fallback;
}

std::vector<std::string> validate_params(const ProbeParams& p, double horizon, double l0)
{
    std::vector<std::string> out;
    if (!(p.tau > 0.0)) {
        out.push_back("tau must be positive");
    }
    if (!(p.mu > 0.0)) {
        out.push_back("mu must be positive");
    }
    if (!(p.mu <= p.tau / 4.0)) {
        out.push_back("mu = " + format_double(p.mu) + " exceeds tau/4 = " + format_double(p.tau / 4.0));
    }
    if (!(p.t_prime > 0.0 && p.t_prime <= horizon * (1.0 + 1e-12))) {
        out.push_back("T' must lie in (0, T]");
    }
    if (!(p.theta > 0.0 && p.theta < p.t_prime)) {
        out.push_back("theta = " + format_double(p.theta) + " must lie in the open interval (0, T')");
    }
    if (l0 > 0.0 && p.theta > 0.0 && p.theta < p.t_prime) {
        const double mu_min = l0 * std::max(1.0 / p.theta, 1.0 / (p.t_prime - p.theta));
        if (!(p.mu > mu_min)) {
            out.push_back("mu must exceed l0 max(1/theta, 1/(T'-theta)) = " + format_double(mu_min));
        }
    }
    return out;
}

YukawaValue p_yukawa(double tau, const Vec3& y, const Vec3& x)
{
    const Vec3 d = x - y;
    const double r = norm(d);
    if (r == 0.0) {
        throw PoleError("p_yukawa: evaluation at the pole");
    }
    const double v = std::exp(-tau * r) / (4.0 * std::numbers::pi * r);
    return {v, d * (-(tau * r + 1.0) * v / (r * r))};
}

double log_p_yukawa(double tau, double r) { return -tau * r - std::log(4.0 * std::numbers::pi * r); }

double kappa(const ProbeParams& p, double t) { return std::exp(log_kappa(p, t)); }

double log_kappa(const ProbeParams& p, double t) { return -p.tau * p.mu * std::abs(t - p.theta); }

double rho(const ProbeParams& p, double t)
{
    if (p.eta_mode == EtaMode::Zero) {
        return 0.0;
    }
    return p.mu * (std::abs(t - p.theta) - p.theta);
}

PhiResult phi_correction(const ProbeParams& params, const Needle& needle, double t, const Vec3& x,
                         const QuadratureRule& rule)
{
    const bool adjoint = params.eta_mode == EtaMode::MuSign;
    const double tau = params.tau;
    if (!(tau > 0.0)) {
        throw PreconditionError("phi_correction: tau must be positive");
    }
    if (adjoint && params.mu > tau / 4.0) {
        throw PreconditionError("phi_correction: mu must not exceed tau/4");
    }
    const Vec3 yt = needle(t);
    const Vec3 d = x - yt;
    const double r = norm(d);
    if (r == 0.0) {
        throw PoleError("phi_correction: x coincides with the pole y(t)");
    }
    const double rho_t = rho(params, t);
    const double sq = std::sqrt(2.0 * tau * r);
    const double s0 = r / (2.0 * tau);
    const double vmax = rule.v_max();

    // Panel breaks: uniform panels plus the v-images of kinks of g in s.
    std::vector<double> breaks;
    for (int p = 1; p < rule.panels; ++p) {
        breaks.push_back(vmax * p / rule.panels);
    }
    auto add_kink = [&](double s) {
        if (s > 0.0) {
            const double a = std::abs(std::log(s / s0));
            const double v = std::sinh(0.5 * a) * sq;
            if (v > 0.0 && v < vmax) {
                breaks.push_back(v);
            }
        }
    };
    for (const double tk : needle.path.kinks()) {
        add_kink(adjoint ? tk - t : t - tk);
    }
    if (adjoint && params.mu > 0.0) {
        add_kink(params.theta - t);
    }
    std::sort(breaks.begin(), breaks.end());

    std::vector<double> vs;
    std::vector<double> ws;
    composite_gauss(0.0, vmax, breaks, rule.order, vs, ws);

    // g(s) and the displacement dy = y(t -/+ s) - y(t).
    auto g = [&](double s, Vec3& dy) {
        const double ts = adjoint ? t + s : t - s;
        dy = needle(ts) - yt;
        const double drho = rho(params, ts) - rho_t;
        const double e = (adjoint ? -tau * drho : tau * drho) + dot(dy, d * 2.0 - dy) / (4.0 * s);
        return std::exp(e);
    };

    PhiResult res;
    double phi = 0.0;
    double phi_plus = 0.0;
    double phi_minus = 0.0;
    double m1 = 0.0;
    Vec3 mv{};
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    for (std::size_t i = 0; i < vs.size(); ++i) {
        const double v = vs[i];
        const double q = v / sq;
        const double c = std::sqrt(1.0 + q * q);
        const double e = c + q;
        const double s = s0 * e * e;
        const double st = s0 / (e * e);
        Vec3 dy;
        Vec3 dyt;
        const double gs = g(s, dy);
        const double gst = g(st, dyt);
        const double wt = ws[i] * std::exp(-v * v) * inv_sqrt_pi;
        const double a = 1.0 / (e * c);
        const double b = e / c;
        phi += wt * (a * gs + b * gst);
        phi_plus += wt * (gs + gst);
        phi_minus += wt * (q / c) * (gst - gs);
        const double ks = wt * a * gs / (2.0 * s);
        const double kst = wt * b * gst / (2.0 * st);
        m1 += ks + kst;
        mv += dy * ks + dyt * kst;
    }
    {
        const double q = vmax / sq;
        const double c = std::sqrt(1.0 + q * q);
        const double e = c + q;
        Vec3 dy;
        const double edge = g(s0 * e * e, dy) / (e * c) + g(s0 / (e * e), dy) * e / c;
        const double ratio = adjoint ? params.mu / tau : 0.0;
        res.tail_estimate =
            std::abs(edge) * std::exp(-vmax * vmax) / (2.0 * vmax * (1.0 - ratio)) * inv_sqrt_pi;
    }
    res.phi = phi;
    res.phi_plus = phi_plus;
    res.phi_minus = phi_minus;
    res.grad_phi = d * (-(m1 - phi * (tau * r + 1.0) / (r * r))) + mv;
    res.nodes_used = static_cast<int>(vs.size());
    if (!std::isfinite(phi) || !(res.tail_estimate <= 1e-9 * std::abs(phi))) {
        throw NumericalError("phi_correction: quadrature did not converge (phi = " + format_double(phi) +
                             ", tail estimate = " + format_double(res.tail_estimate) +
                             ", r = " + format_double(r) + ")");
    }
    return res;
}

namespace {

ProbeValue assemble(const ProbeParams& params, const Needle& needle, double t, const Vec3& x,
                    const QuadratureRule& rule, double log_time_factor)
{
    const PhiResult ph = phi_correction(params, needle, t, x, rule);
    const YukawaValue p = p_yukawa(params.tau, needle(t), x);
    ProbeValue out;
    out.value = ph.phi * p.value;
    out.gradient = p.gradient * ph.phi + ph.grad_phi * p.value;
    out.log_time_factor = log_time_factor;
    out.phi = ph.phi;
    return out;
}

} // namespace

ProbeValue probe_U(const ProbeParams& params, const Needle& needle, double t, const Vec3& x,
                   const QuadratureRule& rule)
{
    if (params.eta_mode != EtaMode::Zero) {
        throw PreconditionError("probe_U: eta_mode must be Zero");
    }
    return assemble(params, needle, t, x, rule, params.tau * params.tau * t);
}

ProbeValue probe_Ustar(const ProbeParams& params, const Needle& needle, double t, const Vec3& x,
                       const QuadratureRule& rule)
{
    if (params.eta_mode != EtaMode::MuSign) {
        throw PreconditionError("probe_Ustar: eta_mode must be MuSign");
    }
    return assemble(params, needle, t, x, rule, -params.tau * params.tau * t);
}

namespace {

template <class F>
std::vector<ProbeValue> batch(std::span<const double> t, std::span<const Vec3> x, int workers, F&& f)
{
    if (t.size() != x.size()) {
        throw ShapeError("probe batch: t and x arrays differ in length");
    }
    std::vector<ProbeValue> out(t.size());
    parallel_for(t.size(), workers, [&](std::size_t i) { out[i] = f(t[i], x[i]); });
    return out;
}

} // namespace

std::vector<ProbeValue> probe_U_batch(const ProbeParams& params, const Needle& needle,
                                      std::span<const double> t, std::span<const Vec3> x,
                                      const QuadratureRule& rule, int workers)
{
    return batch(t, x, workers, [&](double ti, const Vec3& xi) { return probe_U(params, needle, ti, xi, rule); });
}

std::vector<ProbeValue> probe_Ustar_batch(const ProbeParams& params, const Needle& needle,
                                          std::span<const double> t, std::span<const Vec3> x,
                                          const QuadratureRule& rule, int workers)
{
    return batch(t, x, workers,
                 [&](double ti, const Vec3& xi) { return probe_Ustar(params, needle, ti, xi, rule); });
}

} // namespace dprobe
