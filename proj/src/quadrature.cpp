#include "dprobe/quadrature.hpp"

#include "dprobe/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace dprobe {

namespace {

GaussLegendre build_gauss_legendre(int n)
{
    GaussLegendre r;
    r.x.resize(static_cast<std::size_t>(n));
    r.w.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p0 = 1.0;
                p1 = z;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) {
                break;
            }
        }
        // Recompute the derivative at the converged root for the weight.
        double p0 = 1.0;
        double p1 = z;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        r.x[static_cast<std::size_t>(i)] = -z;
        r.x[static_cast<std::size_t>(n - 1 - i)] = z;
        r.w[static_cast<std::size_t>(i)] = w;
        r.w[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1) {
        r.x[static_cast<std::size_t>(n / 2)] = 0.0;
    }
    return r;
}

} // namespace

const GaussLegendre& gauss_legendre(int n)
{
    if (n < 1 || n > 256) {
        throw PreconditionError("gauss_legendre: order must be in [1, 256]");
    }
    static std::mutex m;
    static std::map<int, GaussLegendre> cache;
    std::lock_guard lock(m);
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, build_gauss_legendre(n)).first;
    }
    return it->second;
}

void composite_gauss(double a, double b, const std::vector<double>& breaks, int order,
                     std::vector<double>& nodes, std::vector<double>& weights)
{
    const GaussLegendre& gl = gauss_legendre(order);
    double lo = a;
    auto emit = [&](double l, double h) {
        const double half = 0.5 * (h - l);
        const double mid = 0.5 * (h + l);
        for (std::size_t i = 0; i < gl.x.size(); ++i) {
            nodes.push_back(mid + half * gl.x[i]);
            weights.push_back(half * gl.w[i]);
        }
    };
    for (const double c : breaks) {
        if (c > lo && c < b) {
            emit(lo, c);
            lo = c;
        }
    }
    emit(lo, b);
}

QuadratureRule QuadratureRule::with_nodes(int nodes, double alpha_max)
{
    if (nodes < 4 || !(alpha_max > 0.0)) {
        throw PreconditionError("QuadratureRule: need at least 4 nodes and alpha_max > 0");
    }
    QuadratureRule r;
    r.alpha_max = alpha_max;
    if (nodes % 16 == 0) {
        r.order = 16;
        r.panels = nodes / 16;
    } else {
        r.order = nodes;
        r.panels = 1;
    }
    return r;
}

double QuadratureRule::v_max() const { return std::sqrt(alpha_max); }

void QuadratureRule::alpha_nodes(std::vector<double>& alpha, std::vector<double>& weight) const
{
    std::vector<double> v;
    std::vector<double> w;
    std::vector<double> breaks;
    const double vm = v_max();
    for (int p = 1; p < panels; ++p) {
        breaks.push_back(vm * p / panels);
    }
    composite_gauss(0.0, vm, breaks, order, v, w);
    alpha.clear();
    weight.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
        // d alpha = 2 v dv, weight function e^{-alpha} folded in.
        alpha.push_back(v[i] * v[i]);
        weight.push_back(w[i] * 2.0 * v[i] * std::exp(-v[i] * v[i]));
    }
}

} // namespace dprobe
