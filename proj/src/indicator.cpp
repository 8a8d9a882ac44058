#include "dprobe/indicator.hpp"

#include "dprobe/conforming.hpp"
#include "dprobe/error.hpp"
#include "dprobe/parallel.hpp"
#include "dprobe/util.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace dprobe {

SignedLog SignedLog::from(double v)
{
    if (v == 0.0 || !std::isfinite(v)) {
        return {};
    }
    return {v > 0.0 ? 1 : -1, std::log(std::abs(v))};
}

void LogSum::add(double v)
{
    const SignedLog s = SignedLog::from(v);
    add(s.sign, s.log_abs);
}

void LogSum::add(int sign, double log_abs)
{
    if (sign == 0) {
        return;
    }
    if (log_abs > ref_) {
        // Rescale the running sum to the new reference exponent.
        const double f = std::isfinite(ref_) ? std::exp(ref_ - log_abs) : 0.0;
        sum_ *= f;
        comp_ *= f;
        ref_ = log_abs;
    }
    const double term = sign * std::exp(log_abs - ref_);
    const double s = sum_ + term;
    comp_ += std::abs(sum_) >= std::abs(term) ? (sum_ - s) + term : (term - s) + sum_;
    sum_ = s;
}

SignedLog LogSum::result() const
{
    const double v = sum_ + comp_;
    if (v == 0.0 || !std::isfinite(ref_)) {
        return {};
    }
    return {v > 0.0 ? 1 : -1, std::log(std::abs(v)) + ref_};
}

namespace {

int final_level(const Grid& grid, double t_prime)
{
    const int L = grid.level_at_or_before(t_prime);
    if (L < 1 || std::abs(grid.time(L) - t_prime) > 1e-9 * std::max(1.0, t_prime)) {
        throw PreconditionError("indicator: T' = " + format_double(t_prime) +
                                " is not a time level of the grid (snap it first)");
    }
    return L;
}

double trapezoid_weight(const Grid& grid, int l, int L)
{
    return (l == 0 || l == L) ? 0.5 * grid.dt() : grid.dt();
}

/// Neumaier sum of a vector in index order.
double ordered_sum(const std::vector<double>& v)
{
    double s = 0.0;
    double c = 0.0;
    for (const double x : v) {
        const double t = s + x;
        c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
        s = t;
    }
    return s + c;
}

double yukawa_bound(double tau, double r) { return std::exp(-tau * r) / (4.0 * std::numbers::pi * r); }

} // namespace

BoundaryIndicator indicator_boundary(const BoundaryTrace& flux_w, const ProbeParams& params, const Needle& needle,
                                     const Grid& grid, const SpaceTimeField* w, const IndicatorOptions& opt)
{
    if (!(flux_w.grid() == grid)) {
        throw ShapeError("indicator_boundary: flux trace grid does not match");
    }
    if (w && !(w->grid() == grid)) {
        throw ShapeError("indicator_boundary: reflected field grid does not match");
    }
    const int L = final_level(grid, params.t_prime);
    const ProbeParams ps = params.with_mode(EtaMode::MuSign);
    const int N = grid.N();
    const std::size_t face_size = flux_w.face_size();
    const std::size_t per_level = 6 * face_size;

    // A-priori bound of every sample: |dw/dnu| kappa p(r) * weights.
    std::vector<double> bound(per_level * static_cast<std::size_t>(L + 1), 0.0);
    for (int l = 0; l <= L; ++l) {
        const double t = grid.time(l);
        const Vec3 y = needle(t);
        const double wt = trapezoid_weight(grid, l, L) * kappa(ps, t);
        for (int face = 0; face < 6; ++face) {
            for (int b = 0; b < N; ++b) {
                for (int a = 0; a < N; ++a) {
                    const double fl = flux_w.at(l, face, a, b);
                    if (fl == 0.0) {
                        continue;
                    }
                    const double r = distance(flux_w.point(face, a, b), y);
                    if (r == 0.0) {
                        throw PoleError("indicator_boundary: pole on a boundary node at t = " + format_double(t));
                    }
                    bound[static_cast<std::size_t>(l) * per_level + face * face_size + b * N + a] =
                        std::abs(fl) * wt * yukawa_bound(params.tau, r) * flux_w.area_weight(face, a, b);
                }
            }
        }
    }
    const double total_bound = ordered_sum(bound);
    const double cut = opt.skip_fraction * total_bound;

    BoundaryIndicator out;
    LogSum acc;
    std::vector<double> rows(static_cast<std::size_t>(6 * N), 0.0);
    std::vector<long> counts(static_cast<std::size_t>(6 * N), 0);
    for (int l = 0; l <= L; ++l) {
        const double t = grid.time(l);
        const double wt = trapezoid_weight(grid, l, L) * kappa(ps, t);
        std::fill(rows.begin(), rows.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        parallel_for(rows.size(), opt.workers, [&](std::size_t row) {
            const int face = static_cast<int>(row) / N;
            const int b = static_cast<int>(row) % N;
            double s = 0.0;
            long c = 0;
            for (int a = 0; a < N; ++a) {
                const std::size_t slot = static_cast<std::size_t>(l) * per_level + face * face_size + b * N + a;
                if (bound[slot] == 0.0 || bound[slot] < cut) {
                    continue;
                }
                const double us = probe_Ustar(ps, needle, t, flux_w.point(face, a, b), opt.rule).value;
                s += flux_w.at(l, face, a, b) * us * flux_w.area_weight(face, a, b);
                ++c;
            }
            rows[row] = s;
            counts[row] = c;
        });
        acc.add(ordered_sum(rows) * wt);
        for (const long c : counts) {
            out.terms += c;
        }
    }
    out.skipped = static_cast<long>(bound.size()) - out.terms;
    out.raw = acc.result();

    // Pole correction for the part of the needle inside the body.
    LogSum pole;
    bool inside_any = false;
    for (int l = 0; l <= L; ++l) {
        const double t = grid.time(l);
        const Vec3 y = needle(t);
        if (!grid.box.contains_open(y)) {
            continue;
        }
        inside_any = true;
        if (!w) {
            throw PreconditionError("indicator_boundary: the needle enters the body; pass the reflected field "
                                    "for the pole correction");
        }
        pole.add(trapezoid_weight(grid, l, L) * kappa(ps, t) * sample_field(*w, l, y));
    }
    out.pole = inside_any ? pole.result() : SignedLog{};
    LogSum v;
    v.add(out.raw);
    if (!out.pole.is_zero()) {
        v.add(-out.pole.sign, out.pole.log_abs);
    }
    out.value = v.result();
    return out;
}

VolumeIndicator indicator_volume(const ReflectedSolution& ref, const Scenario& scenario, const ProbeParams& params,
                                 const Needle& needle, const Grid& grid, const IndicatorOptions& opt)
{
    (void)scenario;
    const SpaceTimeField& w = ref.w;
    if (!(w.grid() == grid)) {
        throw ShapeError("indicator_volume: reflected field grid does not match");
    }
    if (ref.params.tau != params.tau) {
        throw PreconditionError("indicator_volume: reflected solution was computed for another tau");
    }
    const int L = final_level(grid, params.t_prime);
    const ProbeParams ps = params.with_mode(EtaMode::MuSign);
    const Vec3 hh = grid.h();
    const double vol = hh.x * hh.y * hh.z;
    const std::size_t stride[3] = {1, static_cast<std::size_t>(grid.N()),
                                   static_cast<std::size_t>(grid.N()) * grid.N()};

    // Per-level a-priori bounds with the bare Yukawa gradient.
    std::vector<double> level_bound(static_cast<std::size_t>(L + 1), 0.0);
    for (int l = 0; l <= L; ++l) {
        const double t = grid.time(l);
        const Vec3 y = needle(t);
        const auto wl = w.level(l);
        const auto& cut = ref.cut[static_cast<std::size_t>(l)];
        const auto& du = ref.du[static_cast<std::size_t>(l)];
        double b = 0.0;
        for (std::size_t f = 0; f < cut.size(); ++f) {
            const int a = cut[f].axis;
            const double dw = (wl[cut[f].node + stride[a]] - wl[cut[f].node]) / hh[a];
            const double r = distance(face_center(grid, cut[f].node, a), y);
            b += std::abs((cut[f].gamma - 1.0) * (du[f] + dw)) * yukawa_bound(params.tau, r) * (params.tau + 1.0 / r);
        }
        level_bound[static_cast<std::size_t>(l)] = b * vol * trapezoid_weight(grid, l, L) * kappa(ps, t);
    }
    const double cutoff = opt.skip_fraction * ordered_sum(level_bound);

    LogSum bulk;
    for (int l = 0; l <= L; ++l) {
        if (level_bound[static_cast<std::size_t>(l)] == 0.0 || level_bound[static_cast<std::size_t>(l)] < cutoff) {
            continue;
        }
        const double t = grid.time(l);
        const auto wl = w.level(l);
        const auto& cut = ref.cut[static_cast<std::size_t>(l)];
        const auto& du = ref.du[static_cast<std::size_t>(l)];
        std::vector<double> part(cut.size(), 0.0);
        parallel_for(cut.size(), opt.workers, [&](std::size_t f) {
            const int a = cut[f].axis;
            const double dw = (wl[cut[f].node + stride[a]] - wl[cut[f].node]) / hh[a];
            const Vec3 xc = face_center(grid, cut[f].node, a);
            const double dus = probe_Ustar(ps, needle, t, xc, opt.rule).gradient[a];
            part[f] = (cut[f].gamma - 1.0) * (du[f] + dw) * dus;
        });
        bulk.add(ordered_sum(part) * vol * trapezoid_weight(grid, l, L) * kappa(ps, t));
    }

    // [int kappa w u* dx] at t = 0 and t = T'.
    auto endpoint = [&](int l) {
        const double t = grid.time(l);
        const Vec3 y = needle(t);
        const auto wl = w.level(l);
        const int n = grid.n;
        double bsum = 0.0;
        std::vector<double> bnode(wl.size(), 0.0);
        for (int k = 1; k <= n; ++k) {
            for (int j = 1; j <= n; ++j) {
                for (int i = 1; i <= n; ++i) {
                    const std::size_t idx = grid.index(i, j, k);
                    if (wl[idx] == 0.0) {
                        continue;
                    }
                    const double r = distance(grid.node(i, j, k), y);
                    bnode[idx] = std::abs(wl[idx]) * (r > 0.0 ? yukawa_bound(params.tau, r) : 1e300);
                    bsum += bnode[idx];
                }
            }
        }
        if (bsum == 0.0) {
            return SignedLog{};
        }
        std::vector<double> slab(static_cast<std::size_t>(n), 0.0);
        parallel_for(static_cast<std::size_t>(n), opt.workers, [&](std::size_t s) {
            const int k = static_cast<int>(s) + 1;
            double acc = 0.0;
            for (int j = 1; j <= n; ++j) {
                for (int i = 1; i <= n; ++i) {
                    const std::size_t idx = grid.index(i, j, k);
                    if (bnode[idx] == 0.0 || bnode[idx] < opt.skip_fraction * bsum) {
                        continue;
                    }
                    acc += wl[idx] * probe_Ustar(ps, needle, t, grid.node(i, j, k), opt.rule).value;
                }
            }
            slab[s] = acc;
        });
        return SignedLog::from(ordered_sum(slab) * vol * kappa(ps, t));
    };

    VolumeIndicator out;
    out.bulk = bulk.result();
    out.endpoint_0 = endpoint(0);
    out.endpoint_T = endpoint(L);
    LogSum total;
    total.add(out.bulk);
    total.add(out.endpoint_T);
    if (!out.endpoint_0.is_zero()) {
        total.add(-out.endpoint_0.sign, out.endpoint_0.log_abs);
    }
    out.value = total.result();
    return out;
}

double energy_density(const Scenario& scenario, double tau, double t, const Vec3& y, double rel_tol)
{
    const auto& inc = scenario.inclusion;
    if (!inc.k_field && inc.k0 == 1.0) {
        return 0.0;
    }
    const EllipsoidRegion region{inc.center(t), inc.semi_axes(t), 0.0};
    auto f = [&](const Vec3& x) {
        const Vec3 d = x - y;
        const double r = norm(d);
        const double g = (tau * r + 1.0) * std::exp(-tau * r) / (4.0 * std::numbers::pi * r * r);
        return std::abs(inc.contrast(t, x) - 1.0) * g * g;
    };
    const auto res = integrate_conforming_adaptive(region, y, 2.0 * tau, f, rel_tol);
    if (!res.converged) {
        throw NumericalError("energy_density: conforming quadrature did not converge (t = " + format_double(t) + ")");
    }
    return res.value;
}

double energy_reference(const Scenario& scenario, const ProbeParams& params, const Needle& needle,
                        const EnergyOptions& opt)
{
    const auto& inc = scenario.inclusion;
    if (!inc.k_field && inc.k0 == 1.0) {
        return -std::numeric_limits<double>::infinity();
    }
    const double Tp = params.t_prime;
    for (int i = 0; i <= 400; ++i) {
        if (clearance(scenario, needle, Tp * i / 400) <= 0.0) {
            throw PreconditionError("energy_reference: the needle meets the inclusion before T'");
        }
    }
    const ProbeParams ps = params.with_mode(EtaMode::MuSign);
    const double scale = std::log(energy_density(scenario, params.tau, params.theta, needle(params.theta), opt.space_tol));
    auto integrand = [&](double t) {
        const double e = energy_density(scenario, params.tau, t, needle(t), opt.space_tol);
        return e > 0.0 ? std::exp(std::log(e) + log_kappa(ps, t) - scale) : 0.0;
    };
    std::vector<double> cuts{0.0, params.theta, Tp};
    for (const double k : needle.path.kinks()) {
        cuts.push_back(k);
    }
    for (const auto& k : inc.center_path.knots()) {
        cuts.push_back(k.t);
    }
    for (const auto& k : inc.radius_path.knots()) {
        cuts.push_back(k.t);
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    double prev = 0.0;
    for (const double c : cuts) {
        if (c <= prev || c > Tp) {
            continue;
        }
        double err = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, prev, c, 15, opt.time_tol,
                                                                               &err);
        prev = c;
    }
    return std::log(total) + scale;
}

SandwichResult sandwich_check(const IndicatorSample& s)
{
    if (!std::isfinite(s.log_energy_ref)) {
        return {0.0, true};
    }
    const SignedLog& i = s.i_boundary.is_zero() ? s.i_volume : s.i_boundary;
    if (i.is_zero()) {
        return {0.0, false};
    }
    return {std::exp(i.log_abs - s.log_energy_ref), false};
}

SandwichBand sandwich_band(const std::vector<IndicatorSample>& samples, int expected_sign, double c_star)
{
    SandwichBand b;
    if (samples.empty()) {
        return b;
    }
    b.min_ratio = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        const auto r = sandwich_check(s);
        if (r.degenerate) {
            return SandwichBand{};
        }
        b.min_ratio = std::min(b.min_ratio, r.ratio);
        b.max_ratio = std::max(b.max_ratio, r.ratio);
        const SignedLog& i = s.i_boundary.is_zero() ? s.i_volume : s.i_boundary;
        b.sign_stable = b.sign_stable && i.sign == expected_sign;
    }
    b.spread = b.min_ratio > 0.0 ? b.max_ratio / b.min_ratio : std::numeric_limits<double>::infinity();
    b.pass = b.sign_stable && b.spread <= c_star;
    return b;
}

std::string indicator_csv_header()
{
    return "tau,mu,theta,t_prime,sign,ln_abs_i_boundary,ln_abs_i_volume,ln_energy_ref,ratio,"
           "endpoint_0,endpoint_T,pole_term";
}

std::string indicator_csv_row(const IndicatorSample& s)
{
    auto lg = [](const SignedLog& v) { return v.is_zero() ? std::string("-inf") : format_double(v.log_abs); };
    auto val = [](const SignedLog& v) { return format_double(v.value()); };
    std::ostringstream os;
    const SignedLog& i = s.i_boundary.is_zero() ? s.i_volume : s.i_boundary;
    os << format_double(s.params.tau) << ',' << format_double(s.params.mu) << ',' << format_double(s.params.theta)
       << ',' << format_double(s.params.t_prime) << ',' << i.sign << ',' << lg(s.i_boundary) << ','
       << lg(s.i_volume) << ','
       << (std::isfinite(s.log_energy_ref) ? format_double(s.log_energy_ref) : std::string("-inf")) << ','
       << format_double(s.sandwich_ratio) << ',' << val(s.endpoint_0) << ',' << val(s.endpoint_T) << ','
       << val(s.pole_term);
    return os.str();
}

} // namespace dprobe
