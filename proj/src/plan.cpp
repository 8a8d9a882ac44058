#include "dprobe/plan.hpp"

#include "dprobe/bounds_oracle.hpp"
#include "dprobe/error.hpp"
#include "dprobe/parallel.hpp"
#include "dprobe/svg.hpp"
#include "dprobe/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace dprobe {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::vector<std::string> split_names(const std::string& s)
{
    std::vector<std::string> out;
    std::string cur;
    for (const char c : s + " ") {
        if (c == ' ' || c == ',' || c == '\t') {
            if (!cur.empty()) {
                out.push_back(cur);
            }
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

bool parse_bool(const KeyValueConfig& cfg, const std::string& key, bool fallback)
{
    const auto* e = cfg.find(key);
    if (!e) {
        return fallback;
    }
    if (e->value == "true" || e->value == "yes" || e->value == "1") {
        return true;
    }
    if (e->value == "false" || e->value == "no" || e->value == "0") {
        return false;
    }
    throw ConfigError(e->line, key, "expected true or false, got '" + e->value + "'");
}

std::vector<double> list_or(const KeyValueConfig& cfg, const std::string& key, std::vector<double> fallback)
{
    return cfg.has(key) ? cfg.get_list(key) : fallback;
}

json num(double v)
{
    if (std::isfinite(v)) {
        return v;
    }
    return std::isnan(v) ? json("nan") : json(v > 0 ? "inf" : "-inf");
}

void write_file(const fs::path& p, const std::string& text, RunResult& r)
{
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot write " + p.string());
    }
    f << text;
    r.files.push_back(p.string());
}

double admissible_mu(const std::vector<double>& mu, double tau_min)
{
    double best = -1.0;
    for (const double m : mu) {
        if (m <= tau_min / 4.0) {
            best = std::max(best, m);
        }
    }
    return best;
}

struct Cell {
    std::size_t needle;
    ProbeParams params;
    std::optional<IndicatorSample> sample;
    std::string refused;
};

} // namespace

ExperimentPlan parse_plan(const KeyValueConfig& cfg)
{
    ExperimentPlan p;
    p.name = cfg.get_string("plan.name", std::string("plan"));
    p.scenario = load_scenario(cfg);
    const auto& names = cfg.at("plan.needles");
    for (const auto& n : split_names(names.value)) {
        if (!cfg.has("needle." + n + ".path")) {
            throw ConfigError(names.line, "plan.needles", "no [needle." + n + "] section with a path");
        }
        p.needles.push_back(load_needle(cfg, "needle." + n, n));
    }
    p.n = cfg.get_int("grid.n", p.n);
    p.steps = cfg.get_int("grid.steps", p.steps);
    p.tau = list_or(cfg, "ladder.tau", p.tau);
    p.mu = list_or(cfg, "ladder.mu", p.mu);
    p.theta = list_or(cfg, "ladder.theta", p.theta);
    p.t_prime = list_or(cfg, "ladder.t_prime", p.t_prime);
    if (const auto* e = cfg.find("search.delta"); e && e->value != "auto") {
        p.delta = parse_double(e->value, e->line, "search.delta");
    }
    p.tstar = parse_bool(cfg, "search.enabled", p.tstar);
    p.theta_fractions = list_or(cfg, "search.theta_fractions", p.theta_fractions);
    if (const auto* e = cfg.find("plan.source")) {
        if (e->value == "limit") {
            p.source = FluxSource::Limit;
        } else if (e->value == "measurement") {
            p.source = FluxSource::Measurement;
        } else {
            throw ConfigError(e->line, "plan.source", "expected 'limit' or 'measurement'");
        }
    }
    p.volume = parse_bool(cfg, "output.volume", p.volume);
    p.snapshots = parse_bool(cfg, "output.snapshots", p.snapshots);
    if (const auto* e = cfg.find("plan.seed")) {
        try {
            p.seed = std::stoull(e->value);
        } catch (const std::exception&) {
            throw ConfigError(e->line, "plan.seed", "expected a non-negative integer");
        }
    }
    p.workers = cfg.get_int("plan.workers", p.workers);
    return p;
}

ExperimentPlan load_plan(const std::string& path) { return parse_plan(KeyValueConfig::load(path)); }

std::string describe(const ExperimentPlan& p)
{
    std::ostringstream os;
    auto list = [&](const char* k, const std::vector<double>& v) {
        os << k << '=';
        for (const double x : v) {
            os << format_double(x) << ' ';
        }
        os << ';';
    };
    os << "plan=" << p.name << ';' << describe(p.scenario) << ';';
    for (const auto& n : p.needles) {
        os << describe(n) << ';';
    }
    os << "n=" << p.n << ";steps=" << p.steps << ';';
    list("tau", p.tau);
    list("mu", p.mu);
    list("theta", p.theta);
    list("t_prime", p.t_prime);
    list("theta_fractions", p.theta_fractions);
    os << "delta=" << (p.delta ? format_double(*p.delta) : std::string("auto")) << ";tstar=" << p.tstar
       << ";source=" << (p.source == FluxSource::Limit ? "limit" : "measurement") << ";volume=" << p.volume
       << ";seed=" << p.seed;
    return os.str();
}

std::uint64_t plan_hash(const ExperimentPlan& p) { return fnv1a64(describe(p)); }

std::vector<std::string> validate_plan(const ExperimentPlan& p)
{
    std::vector<std::string> v = validate_scenario(p.scenario);
    if (p.needles.empty()) {
        v.push_back("plan: at least one needle is required");
    }
    for (const auto& n : p.needles) {
        for (auto& m : validate_needle(p.scenario, n)) {
            v.push_back(std::move(m));
        }
    }
    if (p.n < 8) {
        v.push_back("grid: n must be >= 8");
    }
    if (p.steps < 1) {
        v.push_back("grid: steps must be >= 1");
    }
    auto ladder = [&](const char* name, const std::vector<double>& l) {
        if (l.empty()) {
            v.push_back(std::string("ladder.") + name + ": must be nonempty");
        } else if (!std::is_sorted(l.begin(), l.end()) || std::adjacent_find(l.begin(), l.end()) != l.end()) {
            v.push_back(std::string("ladder.") + name + ": must be strictly increasing");
        } else if (l.front() <= 0.0) {
            v.push_back(std::string("ladder.") + name + ": values must be positive");
        }
    };
    ladder("tau", p.tau);
    ladder("mu", p.mu);
    ladder("theta", p.theta);
    ladder("t_prime", p.t_prime);
    if (!p.tau.empty() && !p.mu.empty() && p.mu.back() > p.tau.front() / 4.0) {
        v.push_back("ladder: mu_max = " + format_double(p.mu.back()) + " exceeds tau_min/4 = " +
                    format_double(p.tau.front() / 4.0));
    }
    for (const double tp : p.t_prime) {
        if (tp > p.scenario.horizon) {
            v.push_back("ladder.t_prime: " + format_double(tp) + " exceeds the horizon T = " +
                        format_double(p.scenario.horizon));
        }
        for (const double th : p.theta) {
            if (!(th > 0.0 && th < tp)) {
                v.push_back("ladder.theta: theta = " + format_double(th) + " must lie in the open interval (0, T' = " +
                            format_double(tp) + ")");
            }
        }
    }
    for (const double f : p.theta_fractions) {
        if (!(f > 0.0 && f < 1.0)) {
            v.push_back("search.theta_fractions: values must lie in (0, 1)");
            break;
        }
    }
    if (p.delta && !(*p.delta > 0.0)) {
        v.push_back("search.delta: must be positive");
    }
    if (p.tstar && p.tau.size() < 3) {
        v.push_back("search: the T* search needs at least 3 tau values");
    }
    if (p.workers < 1) {
        v.push_back("plan.workers: must be >= 1");
    }
    return v;
}

// ---------------------------------------------------------------------------

RunResult run_plan(const ExperimentPlan& plan, const std::string& out_dir)
{
    RunResult res;
    const auto violations = validate_plan(plan);
    if (!violations.empty()) {
        res.exit_code = 1;
        res.messages = violations;
        return res;
    }
    const fs::path out(out_dir);
    fs::create_directories(out);
    const std::string ph = hex64(plan_hash(plan));
    const std::string sh = hex64(scenario_hash(plan.scenario));
    const double tau_min = plan.tau.front();
    const double mu_fit = admissible_mu(plan.mu, tau_min);

    std::vector<std::unique_ptr<PipelineEvaluator>> ev;
    for (const auto& n : plan.needles) {
        PipelineOptions po;
        po.n = plan.n;
        po.steps = plan.steps;
        po.source = plan.source;
        po.with_volume = plan.volume && plan.source == FluxSource::Limit;
        po.workers = 1;
        ev.push_back(std::make_unique<PipelineEvaluator>(plan.scenario, n, po));
    }

    // Cells in sorted key order; results land by index so the merge is order-independent.
    std::vector<Cell> cells;
    for (std::size_t k = 0; k < plan.needles.size(); ++k) {
        for (const double tau : plan.tau) {
            for (const double mu : plan.mu) {
                for (const double th : plan.theta) {
                    for (const double tp : plan.t_prime) {
                        cells.push_back({k, {.tau = tau, .mu = mu, .theta = th, .t_prime = tp}, {}, {}});
                    }
                }
            }
        }
    }
    try {
        parallel_for(cells.size(), plan.workers, [&](std::size_t i) {
            Cell& c = cells[i];
            try {
                c.sample = ev[c.needle]->evaluate(c.params);
            } catch (const PreconditionError& e) {
                c.refused = e.what();
            }
        });
    } catch (const std::exception& e) {
        json d;
        d["plan_hash"] = ph;
        d["stage"] = "indicator ladder";
        d["error"] = e.what();
        write_file(out / "diagnostics.json", d.dump(2) + "\n", res);
        res.exit_code = 3;
        res.messages.push_back(std::string("solver failure: ") + e.what());
        return res;
    }

    // indicators.csv
    {
        std::ostringstream os;
        os << "# dprobe indicators plan=" << plan.name << " plan_hash=" << ph << " scenario_hash=" << sh
           << " n=" << plan.n << " steps=" << plan.steps << '\n';
        os << "needle," << indicator_csv_header() << '\n';
        for (const auto& c : cells) {
            if (c.sample) {
                os << plan.needles[c.needle].name << ',' << indicator_csv_row(*c.sample) << '\n';
            }
        }
        write_file(out / "indicators.csv", os.str(), res);
    }

    // Reconstruction per needle.
    json rec;
    rec["plan"] = plan.name;
    rec["plan_hash"] = ph;
    rec["scenario_hash"] = sh;
    rec["seed"] = plan.seed;
    rec["grid"] = {{"n", plan.n}, {"steps", plan.steps}};
    rec["mu_fit"] = num(mu_fit);
    std::ostringstream dcsv;
    dcsv << "# dprobe distances plan=" << plan.name << " plan_hash=" << ph << '\n';
    dcsv << "needle,mu,t_prime,d_true," << distance_csv_header() << '\n';
    json needles = json::array();
    for (std::size_t k = 0; k < plan.needles.size(); ++k) {
        const Needle& nd = plan.needles[k];
        json jn;
        jn["name"] = nd.name;
        json refused = json::array();
        json dist = json::array();
        json fprof = json::array();
        for (const double tp : plan.t_prime) {
            FEstimate f;
            f.t_prime = ev[k]->snap(tp);
            f.mu = mu_fit;
            f.f_hat = -std::numeric_limits<double>::infinity();
            for (const double th : plan.theta) {
                std::vector<IndicatorSample> row;
                for (const auto& c : cells) {
                    if (c.needle == k && c.params.mu == mu_fit && c.params.theta == th && c.params.t_prime == tp) {
                        if (c.sample) {
                            row.push_back(*c.sample);
                        }
                    }
                }
                if (row.size() < 3) {
                    continue;
                }
                DistanceEstimate d;
                try {
                    d = estimate_distance(row);
                } catch (const ArityError&) {
                    continue; // degenerate (zero) indicators
                }
                d.theta = th;
                const double truth = dist_point_to_inclusion(plan.scenario, th, nd(th));
                dcsv << nd.name << ',' << format_double(mu_fit) << ',' << format_double(f.t_prime) << ','
                     << format_double(truth) << ',' << distance_csv_row(d) << '\n';
                json jd = json::parse(to_json(d));
                jd["t_prime"] = f.t_prime;
                jd["d_true"] = truth;
                dist.push_back(jd);
                if (d.slope > f.f_hat) {
                    f.f_hat = d.slope;
                    f.theta_best = th;
                }
            }
            if (std::isfinite(f.f_hat)) {
                fprof.push_back({{"t_prime", f.t_prime},
                                 {"f_hat", std::min(f.f_hat, 0.0)},
                                 {"theta_best", f.theta_best},
                                 {"f_true", -2.0 * dist_needle_to_inclusion(plan.scenario, nd, f.t_prime)}});
            }
        }
        for (const auto& c : cells) {
            if (c.needle == k && !c.refused.empty()) {
                refused.push_back({{"tau", c.params.tau},
                                   {"mu", c.params.mu},
                                   {"theta", c.params.theta},
                                   {"t_prime", c.params.t_prime},
                                   {"reason", c.refused}});
            }
        }
        jn["distances"] = dist;
        jn["f_profile"] = fprof;
        jn["refused_cells"] = refused;
        const auto truth = t_star_true(plan.scenario, nd);
        jn["t_star_true"] = truth ? json(*truth) : json("T+0");
        jn["clearance_horizon"] = ev[k]->clearance_horizon();
        if (plan.tstar && plan.scenario.contrast_sign() != 0) {
            SearchOptions so;
            so.theta_fractions = plan.theta_fractions;
            so.mu_ladder = plan.mu;
            so.tau_ladder = plan.tau;
            so.workers = plan.workers;
            const double delta = plan.delta.value_or(suggest_delta(plan.scenario, nd));
            try {
                const auto r = search_t_star(delta, plan.scenario.horizon, *ev[k], so);
                jn["tstar"] = json::parse(to_json(r));
            } catch (const NumericalError& e) {
                json d;
                d["plan_hash"] = ph;
                d["stage"] = "T* search, needle " + nd.name;
                d["error"] = e.what();
                write_file(out / "diagnostics.json", d.dump(2) + "\n", res);
                res.exit_code = 3;
                res.messages.push_back(std::string("solver failure: ") + e.what());
                return res;
            }
        } else {
            jn["tstar"] = nullptr;
        }
        if (plan.snapshots) {
            for (const double tau : plan.tau) {
                try {
                    const auto& c = ev[k]->cached(tau);
                    const ProbeParams& pp = c.reflected->params;
                    json meta{{"plan_hash", ph},
                              {"scenario_hash", sh},
                              {"needle", nd.name},
                              {"field", "w = exp(-tau^2 t) W"},
                              {"tau", pp.tau},
                              {"note", "w does not depend on mu, theta or T'"}};
                    const std::string stem =
                        (out / "snapshots" / (nd.name + "_tau" + format_double(tau))).string();
                    fs::create_directories(out / "snapshots");
                    write_snapshot(c.reflected->w, stem, meta.dump());
                    res.files.push_back(stem + ".f64");
                    res.files.push_back(stem + ".json");
                } catch (const PreconditionError&) {
                }
            }
        }
        needles.push_back(jn);
    }
    rec["needles"] = needles;
    write_file(out / "distances.csv", dcsv.str(), res);
    write_file(out / "reconstruction.json", rec.dump(2) + "\n", res);

    // Bound checks: analytic, seeded sample cloud for the phi range.
    json bounds;
    bounds["plan_hash"] = ph;
    bounds["seed"] = plan.seed;
    json checks = json::array();
    const std::vector<double> ladder{tau_min, 2 * tau_min, 4 * tau_min, 8 * tau_min};
    for (const auto& nd : plan.needles) {
        const double th = plan.theta.front();
        const double tp = plan.t_prime.back();
        const double dth = dist_point_to_inclusion(plan.scenario, th, nd(th));
        if (plan.scenario.contrast_sign() == 0 || mu_fit <= 0.0 || !(dth > 0.0)) {
            continue;
        }
        // The upper bound needs kappa to outrun the change of separation: mu > mu_1 = 2 * Lip(d).
        double lip = 0.0;
        double prev = dist_point_to_inclusion(plan.scenario, 0.0, nd(0.0));
        for (int i = 1; i <= 400; ++i) {
            const double t = tp * i / 400.0;
            const double d = dist_point_to_inclusion(plan.scenario, t, nd(t));
            lip = std::max(lip, std::abs(d - prev) * 400.0 / tp);
            prev = d;
        }
        const double mu_1 = 2.0 * lip;
        try {
            const auto b = check_spacetime_bounds(plan.scenario, nd, {.tau = tau_min, .mu = mu_fit, .theta = th, .t_prime = tp},
                                                  ladder, dth + 0.25);
            for (const auto* c : {&b.upper, &b.lower}) {
                json j = json::parse(to_json(*c));
                j["needle"] = nd.name;
                j["mu_1"] = mu_1;
                j["applicable"] = c == &b.lower || mu_fit > mu_1;
                checks.push_back(j);
            }
        } catch (const PreconditionError& e) {
            checks.push_back({{"needle", nd.name}, {"skipped", e.what()}});
        }
    }
    bounds["checks"] = checks;
    {
        std::mt19937_64 rng(plan.seed);
        std::uniform_real_distribution<double> ux(0.0, 1.0);
        const Box& b = plan.scenario.box;
        json cloud = json::array();
        for (const auto& nd : plan.needles) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = 0.0;
            for (int i = 0; i < 200; ++i) {
                const double t = plan.scenario.horizon * ux(rng);
                const Vec3 x{b.lo.x + (b.hi.x - b.lo.x) * ux(rng), b.lo.y + (b.hi.y - b.lo.y) * ux(rng),
                             b.lo.z + (b.hi.z - b.lo.z) * ux(rng)};
                if (distance(x, nd(t)) < 1e-3) {
                    continue;
                }
                ProbeParams pp{.tau = tau_min, .mu = mu_fit > 0 ? mu_fit : tau_min / 4, .theta = 0.5 * plan.scenario.horizon,
                               .t_prime = plan.scenario.horizon};
                for (const EtaMode m : {EtaMode::Zero, EtaMode::MuSign}) {
                    const double phi = phi_correction(pp.with_mode(m), nd, t, x).phi;
                    lo = std::min(lo, phi);
                    hi = std::max(hi, phi);
                }
            }
            cloud.push_back({{"needle", nd.name}, {"tau", tau_min}, {"phi_min", num(lo)}, {"phi_max", num(hi)}});
        }
        bounds["phi_cloud"] = cloud;
    }
    write_file(out / "bounds.json", bounds.dump(2) + "\n", res);

    for (auto& f : render_plots(out_dir)) {
        res.files.push_back(std::move(f));
    }
    return res;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& p)
{
    std::ifstream f(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) {
            cols.push_back(c);
        }
        rows.push_back(cols);
    }
    return rows;
}

double to_d(const std::string& s)
{
    if (s == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    return std::stod(s);
}

} // namespace

std::vector<std::string> render_plots(const std::string& out_dir)
{
    const fs::path out(out_dir);
    std::vector<std::string> files;
    auto save = [&](const std::string& name, const svg::Chart& c) {
        fs::create_directories(out / "plots");
        const fs::path p = out / "plots" / name;
        std::ofstream(p, std::ios::binary) << svg::render(c);
        files.push_back(p.string());
    };

    // ln|I| against tau, one series per (needle, theta, mu, T').
    const auto ind = read_csv(out / "indicators.csv");
    if (!ind.empty()) {
        std::map<std::string, svg::Series> by;
        const auto& h = ind.front();
        auto col = [&](const char* name) {
            return static_cast<std::size_t>(std::find(h.begin(), h.end(), name) - h.begin());
        };
        const std::size_t ci = col("needle"), ct = col("tau"), cm = col("mu"), cth = col("theta"), ctp = col("t_prime"),
                          cl = col("ln_abs_i_boundary");
        for (std::size_t r = 1; r < ind.size(); ++r) {
            const auto& row = ind[r];
            const std::string key =
                row[ci] + " theta=" + row[cth] + " mu=" + row[cm] + (row[ctp] == "1" ? "" : " T'=" + row[ctp]);
            auto& s = by[key];
            s.label = key;
            s.style = svg::Style::Line;
            s.x.push_back(to_d(row[ct]));
            s.y.push_back(to_d(row[cl]));
        }
        svg::Chart c{"ln|I| against tau", "tau", "ln |I|", {}};
        for (auto& [k, s] : by) {
            c.series.push_back(std::move(s));
        }
        save("ln_indicator_vs_tau.svg", c);
    }

    std::ifstream rf(out / "reconstruction.json");
    if (rf) {
        const auto rec = json::parse(rf);
        svg::Chart dc{"distance estimates", "theta", "distance", {}};
        svg::Chart fc{"F(T') and the t_n staircase", "T'", "F", {}};
        for (const auto& n : rec["needles"]) {
            const std::string name = n["name"];
            svg::Series est{name + " d_hat", {}, {}, svg::Style::Points};
            svg::Series tru{name + " truth", {}, {}, svg::Style::Line};
            for (const auto& d : n["distances"]) {
                if (d["d_hat"].is_number()) {
                    est.x.push_back(d["theta"]);
                    est.y.push_back(d["d_hat"]);
                    tru.x.push_back(d["theta"]);
                    tru.y.push_back(d["d_true"]);
                }
            }
            dc.series.push_back(est);
            dc.series.push_back(tru);
            svg::Series fh{name + " F_hat", {}, {}, svg::Style::Points};
            svg::Series ft{name + " -2 d", {}, {}, svg::Style::Line};
            for (const auto& f : n["f_profile"]) {
                fh.x.push_back(f["t_prime"]);
                fh.y.push_back(f["f_hat"]);
                ft.x.push_back(f["t_prime"]);
                ft.y.push_back(f["f_true"]);
            }
            fc.series.push_back(fh);
            fc.series.push_back(ft);
            if (n["tstar"].is_object()) {
                svg::Series st{name + " t_n", {}, {}, svg::Style::Steps};
                const auto& ts = n["tstar"]["t_sequence"];
                const auto& fs_ = n["tstar"]["f_values"];
                for (std::size_t i = 0; i < ts.size(); ++i) {
                    if (fs_[i].is_number()) {
                        st.x.push_back(ts[i]);
                        st.y.push_back(fs_[i]);
                    }
                }
                fc.series.push_back(st);
            }
        }
        save("distance_vs_theta.svg", dc);
        save("f_profile.svg", fc);
    }
    return files;
}

std::string run_report(const std::string& out_dir)
{
    const fs::path out(out_dir);
    std::ifstream rf(out / "reconstruction.json");
    if (!rf) {
        throw std::runtime_error("no reconstruction.json in " + out_dir);
    }
    const auto rec = json::parse(rf);
    std::ostringstream os;
    os << "plan " << rec["plan"].get<std::string>() << " (hash " << rec["plan_hash"].get<std::string>() << ")\n";
    for (const auto& n : rec["needles"]) {
        os << "needle " << n["name"].get<std::string>() << '\n';
        for (const auto& d : n["distances"]) {
            os << "  theta " << format_double(d["theta"]) << "  T' " << format_double(d["t_prime"]) << "  d_hat "
               << (d["d_hat"].is_number() ? format_double(d["d_hat"]) : std::string("-")) << "  truth "
               << format_double(d["d_true"]) << "  residual "
               << (d["fit_residual"].is_number() ? format_double(d["fit_residual"]) : std::string("-")) << '\n';
        }
        for (const auto& f : n["f_profile"]) {
            os << "  F(" << format_double(f["t_prime"]) << ") = " << format_double(f["f_hat"]) << "  (-2d = "
               << format_double(f["f_true"]) << ")\n";
        }
        if (n["tstar"].is_object()) {
            os << "  T* estimate " << n["tstar"]["t_star_hat"].get<std::string>() << " ("
               << n["tstar"]["stop_reason"].get<std::string>() << ", " << n["tstar"]["t_sequence"].size()
               << " iterates), truth "
               << (n["t_star_true"].is_string() ? n["t_star_true"].get<std::string>()
                                                : format_double(n["t_star_true"].get<double>()))
               << '\n';
        }
        if (!n["refused_cells"].empty()) {
            os << "  " << n["refused_cells"].size() << " cells refused (clearance)\n";
        }
    }
    std::ifstream bf(out / "bounds.json");
    if (bf) {
        const auto b = json::parse(bf);
        for (const auto& c : b["checks"]) {
            if (c.contains("name")) {
                os << "bound " << c["name"].get<std::string>() << " [" << c["needle"].get<std::string>()
                   << "]: " << (c["pass"].get<bool>() ? "pass" : "FAIL")
                   << (c.value("applicable", true) ? "" : " (mu below mu_1 = " + format_double(c["mu_1"]) + ", not applicable)")
                   << '\n';
            }
        }
    }
    return os.str();
}

} // namespace dprobe
