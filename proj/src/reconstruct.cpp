#include "dprobe/reconstruct.hpp"

#include "dprobe/error.hpp"
#include "dprobe/parallel.hpp"
#include "dprobe/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dprobe {

namespace {

using json = nlohmann::ordered_json;

DistanceEstimate fit(const std::vector<double>& tau, const std::vector<double>& y, int excluded)
{
    if (tau.size() < 3) {
        throw ArityError("estimate_distance: need at least 3 usable tau values, got " + std::to_string(tau.size()));
    }
    const double m = static_cast<double>(tau.size());
    double mt = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        mt += tau[i] / m;
        my += y[i] / m;
    }
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        sxy += (tau[i] - mt) * (y[i] - my);
        sxx += (tau[i] - mt) * (tau[i] - mt);
    }
    if (sxx == 0.0) {
        throw ArityError("estimate_distance: tau values are not distinct");
    }
    DistanceEstimate d;
    d.slope = sxy / sxx;
    d.intercept = my - d.slope * mt;
    double rss = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        const double r = y[i] - (d.intercept + d.slope * tau[i]);
        rss += r * r;
    }
    d.fit_residual = std::sqrt(rss / m);
    d.clamped = d.slope > 0.0;
    d.d_hat = d.clamped ? 0.0 : -d.slope / 2.0;
    d.excluded = excluded;
    d.tau_ladder = tau;
    d.ln_abs = y;
    return d;
}

template <class Get>
DistanceEstimate fit_samples(const std::vector<IndicatorSample>& samples, Get get)
{
    if (samples.size() < 3) {
        throw ArityError("estimate_distance: need at least 3 samples, got " + std::to_string(samples.size()));
    }
    std::vector<IndicatorSample> sorted = samples;
    std::sort(sorted.begin(), sorted.end(),
              [](const IndicatorSample& a, const IndicatorSample& b) { return a.params.tau < b.params.tau; });
    std::vector<double> tau;
    std::vector<double> y;
    int excluded = 0;
    for (const auto& s : sorted) {
        const double v = get(s);
        if (!std::isfinite(v)) {
            ++excluded;
            continue;
        }
        tau.push_back(s.params.tau);
        y.push_back(v);
    }
    auto d = fit(tau, y, excluded);
    d.theta = sorted.front().params.theta;
    return d;
}

} // namespace

DistanceEstimate estimate_distance(const std::vector<IndicatorSample>& samples)
{
    return fit_samples(samples, [](const IndicatorSample& s) { return s.i_boundary.log_abs; });
}

DistanceEstimate estimate_distance_energy(const std::vector<IndicatorSample>& samples)
{
    return fit_samples(samples, [](const IndicatorSample& s) { return s.log_energy_ref; });
}

// ---------------------------------------------------------------------------

PipelineEvaluator::PipelineEvaluator(Scenario scenario, Needle needle, PipelineOptions options)
    : scenario_(std::move(scenario)), needle_(std::move(needle)), opt_(options),
      grid_(Grid::make(scenario_.box, opt_.n, scenario_.horizon, opt_.steps))
{
    // Same test as solve_reflected, level by level.
    const double need = 2.0 * grid_.h_max();
    safe_level_ = 0;
    for (int l = 1; l <= grid_.steps; ++l) {
        const double t_mid = grid_.time(l) - 0.5 * grid_.dt();
        if (clearance(scenario_, needle_, t_mid) < need || clearance(scenario_, needle_, grid_.time(l)) < need) {
            break;
        }
        safe_level_ = l;
    }
    if (clearance(scenario_, needle_, 0.0) < need) {
        safe_level_ = 0;
    }
}

double PipelineEvaluator::snap(double t_prime) const
{
    const int l = grid_.level_at_or_before(std::min(t_prime, grid_.t_end) + 1e-12 * grid_.t_end);
    return grid_.time(std::max(l, 1));
}

double PipelineEvaluator::min_t_prime() const { return grid_.time(std::min(4, grid_.steps)); }

double PipelineEvaluator::clearance_horizon() const { return grid_.time(safe_level_); }

const PipelineEvaluator::Cached& PipelineEvaluator::cached(double tau)
{
    Entry* e = nullptr;
    {
        std::lock_guard lock(mutex_);
        auto& slot = cache_[tau];
        if (!slot) {
            slot = std::make_unique<Entry>();
        }
        e = slot.get();
    }
    std::call_once(e->once, [&] {
        if (safe_level_ < 1) {
            throw PreconditionError("pipeline: needle clearance below 2h already at t = 0");
        }
        const Grid g = Grid::make(scenario_.box, opt_.n, grid_.time(safe_level_), safe_level_);
        ProbeParams p;
        p.tau = tau;
        p.eta_mode = EtaMode::Zero;
        SolverOptions so = opt_.solver;
        so.workers = opt_.workers;
        auto ref = std::make_shared<ReflectedSolution>(solve_reflected(scenario_, g, p, needle_, so));
        e->value.flux = opt_.source == FluxSource::Limit ? dtn_flux(ref->w)
                                                         : measured_reflected_flux(scenario_, g, p, needle_, so);
        e->value.reflected = std::move(ref);
    });
    return e->value;
}

IndicatorSample PipelineEvaluator::evaluate(const ProbeParams& params)
{
    ProbeParams p = params;
    p.t_prime = snap(params.t_prime);
    if (p.t_prime > clearance_horizon() + 1e-12) {
        throw PreconditionError("pipeline: T' = " + format_double(p.t_prime) + " is past the clearance horizon " +
                                format_double(clearance_horizon()));
    }
    if (!(p.theta > 0.0 && p.theta < p.t_prime)) {
        throw PreconditionError("pipeline: theta must lie in (0, T')");
    }
    const Cached& c = cached(p.tau);
    const Grid& g = c.reflected->w.grid();
    IndicatorOptions io;
    io.workers = opt_.workers;
    IndicatorSample s;
    s.params = p;
    const auto b = indicator_boundary(c.flux, p, needle_, g, &c.reflected->w, io);
    s.i_boundary = b.value;
    s.pole_term = b.pole;
    if (opt_.with_volume) {
        const auto v = indicator_volume(*c.reflected, scenario_, p, needle_, g, io);
        s.i_volume = v.value;
        s.endpoint_0 = v.endpoint_0;
        s.endpoint_T = v.endpoint_T;
    }
    if (opt_.with_energy) {
        s.log_energy_ref = energy_reference(scenario_, p, needle_);
    }
    s.sandwich_ratio = sandwich_check(s).ratio;
    return s;
}

IndicatorSample EnergyEvaluator::evaluate(const ProbeParams& params)
{
    IndicatorSample s;
    s.params = params;
    s.log_energy_ref = energy_reference(scenario_, params, needle_);
    if (std::isfinite(s.log_energy_ref)) {
        s.i_boundary = {scenario_.contrast_sign(), s.log_energy_ref};
    }
    s.sandwich_ratio = sandwich_check(s).ratio;
    return s;
}

BoundaryTrace measured_reflected_flux(const Scenario& scenario, const Grid& grid, const ProbeParams& params,
                                      const Needle& needle, const SolverOptions& options)
{
    for (int l = 0; l <= 4 * grid.steps; ++l) {
        const double t = grid.t_end * l / (4.0 * grid.steps);
        if (grid.box.contains_closed(needle(t))) {
            throw PreconditionError("measured_reflected_flux: the pole enters the closed box at t = " +
                                    format_double(t));
        }
    }
    // Dirichlet data f = U_tau on the boundary, in factored form e^{-tau^2 t} U = u.
    BoundaryTrace f(grid);
    const int N = grid.N();
    for (int l = 0; l < grid.levels(); ++l) {
        const double t = grid.time(l);
        parallel_for(static_cast<std::size_t>(6 * N), options.workers, [&](std::size_t row) {
            const int face = static_cast<int>(row) / N;
            const int b = static_cast<int>(row) % N;
            for (int a = 0; a < N; ++a) {
                f.at(l, face, a, b) = probe_U(params, needle, t, f.point(face, a, b)).value;
            }
        });
    }
    const auto v0 = probe_initial_state(grid, params, needle, options.workers);
    SolverOptions so = options;
    so.decay_shift = params.tau * params.tau;
    Scenario background = scenario;
    background.inclusion.k0 = 1.0;
    background.inclusion.k_field = nullptr;
    const auto v_gamma = solve_dirichlet(scenario, grid, f, v0, so);
    const auto v_one = solve_dirichlet(background, grid, f, v0, so);
    BoundaryTrace out = dtn_flux(v_gamma);
    const BoundaryTrace base = dtn_flux(v_one);
    for (std::size_t i = 0; i < out.data().size(); ++i) {
        out.data()[i] -= base.data()[i];
    }
    return out;
}

// ---------------------------------------------------------------------------

FEstimate estimate_F(double t_prime, const std::vector<double>& theta_grid, const std::vector<double>& mu_ladder,
                     const std::vector<double>& tau_ladder, Evaluator& evaluator, int workers)
{
    if (theta_grid.empty() || mu_ladder.empty() || tau_ladder.empty()) {
        throw ArityError("estimate_F: empty ladder");
    }
    const double tau_min = *std::min_element(tau_ladder.begin(), tau_ladder.end());
    double mu = -1.0;
    for (const double m : mu_ladder) {
        if (m <= tau_min / 4.0 && m > mu) {
            mu = m;
        }
    }
    if (mu <= 0.0) {
        throw PreconditionError("estimate_F: no mu in the ladder satisfies mu <= tau_min/4 = " +
                                format_double(tau_min / 4.0));
    }
    FEstimate out;
    out.t_prime = evaluator.snap(t_prime);
    out.mu = mu;

    const std::size_t nt = theta_grid.size();
    const std::size_t nk = tau_ladder.size();
    std::vector<IndicatorSample> cells(nt * nk);
    // Warm the per-tau caches one at a time so a pool of workers does not race to solve.
    parallel_for(nk, 1, [&](std::size_t k) {
        ProbeParams p{.tau = tau_ladder[k], .mu = mu, .theta = theta_grid[0], .t_prime = out.t_prime};
        cells[k] = evaluator.evaluate(p);
    });
    parallel_for(nt * nk, workers, [&](std::size_t c) {
        const std::size_t j = c / nk;
        const std::size_t k = c % nk;
        if (j == 0) {
            return;
        }
        ProbeParams p{.tau = tau_ladder[k], .mu = mu, .theta = theta_grid[j], .t_prime = out.t_prime};
        cells[c] = evaluator.evaluate(p);
    });
    out.f_hat = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nt; ++j) {
        std::vector<IndicatorSample> row(cells.begin() + static_cast<long>(j * nk),
                                         cells.begin() + static_cast<long>((j + 1) * nk));
        auto d = estimate_distance(row);
        d.theta = theta_grid[j];
        if (d.slope > out.f_hat) {
            out.f_hat = d.slope;
            out.theta_best = theta_grid[j];
        }
        out.per_theta.push_back(std::move(d));
    }
    if (out.f_hat > 0.0) {
        out.clamped = true;
        out.f_hat = 0.0;
    }
    return out;
}

std::string TStarResult::label() const { return t_star_hat ? format_double(*t_star_hat) : std::string("T+0"); }

TStarResult search_t_star(double delta, double horizon, Evaluator& evaluator, const SearchOptions& opt)
{
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw ParameterError("search_t_star: delta must be positive, got " + format_double(delta));
    }
    if (!(horizon > 0.0)) {
        throw ParameterError("search_t_star: horizon must be positive");
    }
    TStarResult r;
    r.delta = delta;
    const double floor = opt.eps_step * horizon;
    double t = 0.0;
    double last_tp = -1.0;
    double F = 0.0;
    for (int it = 0; it < opt.max_iter; ++it) {
        const double tp = evaluator.snap(std::max(t, evaluator.min_t_prime()));
        std::vector<double> thetas;
        for (const double f : opt.theta_fractions) {
            thetas.push_back(f * tp);
        }
        try {
            if (tp != last_tp) {
                F = estimate_F(tp, thetas, opt.mu_ladder, opt.tau_ladder, evaluator, opt.workers).f_hat;
                last_tp = tp;
            }
        } catch (const PreconditionError&) {
            // No indicator past the clearance horizon: the last iterate is the estimate.
            r.t_sequence.push_back(t);
            r.f_values.push_back(std::numeric_limits<double>::quiet_NaN());
            r.t_star_hat = t;
            r.stop_reason = "resolution limit";
            return r;
        }
        r.t_sequence.push_back(t);
        r.f_values.push_back(F);
        const double step = std::abs(F) / delta;
        if (step < floor) {
            r.t_star_hat = t + step;
            r.stop_reason = "step floor";
            return r;
        }
        const double next = t + step;
        if (next > horizon) {
            r.stop_reason = "left horizon";
            return r;
        }
        if (evaluator.snap(std::max(next, evaluator.min_t_prime())) <= tp && next > evaluator.min_t_prime()) {
            r.t_star_hat = next;
            r.stop_reason = "resolution limit";
            return r;
        }
        t = next;
    }
    r.t_star_hat = t;
    r.stop_reason = "iteration cap";
    return r;
}

double suggest_delta(const Scenario& scenario, const Needle& needle, double safety)
{
    const int m = 20000;
    const double T = scenario.horizon;
    double running = clearance(scenario, needle, 0.0);
    double rate = 0.0;
    for (int i = 1; i <= m; ++i) {
        const double next = std::min(running, clearance(scenario, needle, T * i / m));
        rate = std::max(rate, 2.0 * (running - next) / (T / m));
        running = next;
    }
    return safety * rate;
}

std::map<std::string, ScanEntry> needle_scan(const std::vector<Needle>& needles, const EvaluatorFactory& factory,
                                             double delta, double horizon, const SearchOptions& opt)
{
    std::map<std::string, ScanEntry> out;
    for (std::size_t i = 0; i < needles.size(); ++i) {
        const Needle& n = needles[i];
        ScanEntry e;
        e.needle = n.name.empty() ? "needle" + std::to_string(i) : n.name;
        auto ev = factory(n);
        e.search = search_t_star(delta, horizon, *ev, opt);
        const double end = e.search.t_star_hat.value_or(horizon);
        const int pts = 50;
        for (int k = 0; k <= pts; ++k) {
            const double t = end * k / pts;
            if (k == pts && e.search.t_star_hat) {
                break; // open at the estimated contact
            }
            e.cleared.emplace_back(t, n(t));
        }
        out.emplace(e.needle, std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

json num(double v)
{
    if (std::isfinite(v)) {
        return v;
    }
    return std::isnan(v) ? json("nan") : json(v > 0 ? "inf" : "-inf");
}

json distance_json(const DistanceEstimate& d)
{
    json j;
    j["theta"] = num(d.theta);
    j["d_hat"] = num(d.d_hat);
    j["slope"] = num(d.slope);
    j["intercept"] = num(d.intercept);
    j["fit_residual"] = num(d.fit_residual);
    j["clamped"] = d.clamped;
    j["excluded"] = d.excluded;
    j["tau_ladder"] = d.tau_ladder;
    json ln = json::array();
    for (const double v : d.ln_abs) {
        ln.push_back(num(v));
    }
    j["ln_abs_indicator"] = ln;
    return j;
}

} // namespace

std::string to_json(const DistanceEstimate& d) { return distance_json(d).dump(2); }

std::string to_json(const FEstimate& f)
{
    json j;
    j["t_prime"] = num(f.t_prime);
    j["mu"] = num(f.mu);
    j["f_hat"] = num(f.f_hat);
    j["theta_best"] = num(f.theta_best);
    j["clamped"] = f.clamped;
    json per = json::array();
    for (const auto& d : f.per_theta) {
        per.push_back(distance_json(d));
    }
    j["per_theta"] = per;
    return j.dump(2);
}

std::string to_json(const TStarResult& r)
{
    json j;
    j["delta"] = num(r.delta);
    j["t_star_hat"] = r.label();
    j["stop_reason"] = r.stop_reason;
    j["t_sequence"] = r.t_sequence;
    json f = json::array();
    for (const double v : r.f_values) {
        f.push_back(num(v));
    }
    j["f_values"] = f;
    return j.dump(2);
}

std::string distance_csv_header() { return "theta,d_hat,slope,intercept,fit_residual,clamped,excluded,n_tau"; }

std::string distance_csv_row(const DistanceEstimate& d)
{
    std::ostringstream os;
    os << format_double(d.theta) << ',' << format_double(d.d_hat) << ',' << format_double(d.slope) << ','
       << format_double(d.intercept) << ',' << format_double(d.fit_residual) << ',' << (d.clamped ? 1 : 0) << ','
       << d.excluded << ',' << d.tau_ladder.size();
    return os.str();
}

} // namespace dprobe
