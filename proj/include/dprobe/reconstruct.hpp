#pragma once

#include "dprobe/indicator.hpp"
#include "dprobe/solver.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace dprobe {

struct DistanceEstimate {
    double theta = 0.0;
    double d_hat = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    /// RMS residual of the affine fit of ln|I| on tau.
    double fit_residual = 0.0;
    /// Fit slope was positive and d_hat was clamped to 0.
    bool clamped = false;
    /// Number of degenerate (zero) samples left out of the fit.
    int excluded = 0;
    std::vector<double> tau_ladder;
    std::vector<double> ln_abs;
};

/// Least squares of ln|I| (boundary form) on tau; d_hat = -slope/2.
/// Throws ArityError with fewer than 3 usable samples.
DistanceEstimate estimate_distance(const std::vector<IndicatorSample>& samples);
/// Same fit with ln energy_ref in place of ln|I|.
DistanceEstimate estimate_distance_energy(const std::vector<IndicatorSample>& samples);

/// Source of indicator samples for one needle.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    /// One sample. T' may be snapped by the evaluator; the returned params carry the value used.
    virtual IndicatorSample evaluate(const ProbeParams& params) = 0;
    /// T' actually used for a request.
    virtual double snap(double t_prime) const { return t_prime; }
    /// Smallest T' the evaluator accepts.
    virtual double min_t_prime() const { return 0.0; }
    virtual double horizon() const = 0;
};

enum class FluxSource {
    Limit,       // dW/dnu from solve_reflected
    Measurement, // Lambda_gamma f - Lambda_1 f from two Dirichlet solves
};

struct PipelineOptions {
    int n = 32;
    /// Time steps over the full horizon.
    int steps = 128;
    FluxSource source = FluxSource::Limit;
    bool with_volume = false;
    bool with_energy = true;
    int workers = 1;
    SolverOptions solver;
};

/// Solve -> flux -> indicator pipeline with one cached solve per tau. Solves run to the
/// last time level at which the clearance is still >= 2h; requests past it throw
/// PreconditionError.
class PipelineEvaluator : public Evaluator {
public:
    PipelineEvaluator(Scenario scenario, Needle needle, PipelineOptions options);

    IndicatorSample evaluate(const ProbeParams& params) override;
    double snap(double t_prime) const override;
    double min_t_prime() const override;
    double horizon() const override { return scenario_.horizon; }

    const Grid& grid() const { return grid_; }
    /// Last time usable as T' (clearance horizon of the solver).
    double clearance_horizon() const;
    /// Reflected solution and its boundary flux for one tau (computed on first use).
    struct Cached {
        std::shared_ptr<const ReflectedSolution> reflected;
        BoundaryTrace flux;
    };
    const Cached& cached(double tau);

private:
    struct Entry {
        std::once_flag once;
        Cached value;
    };
    Scenario scenario_;
    Needle needle_;
    PipelineOptions opt_;
    Grid grid_;
    int safe_level_ = 0;
    std::mutex mutex_;
    std::map<double, std::unique_ptr<Entry>> cache_;
};

/// Analytic stand-in: i_boundary := sign(k-1) energy_ref. Exercises the fit and
/// search machinery without a PDE solve.
class EnergyEvaluator : public Evaluator {
public:
    EnergyEvaluator(Scenario scenario, Needle needle) : scenario_(std::move(scenario)), needle_(std::move(needle)) {}
    IndicatorSample evaluate(const ProbeParams& params) override;
    double min_t_prime() const override { return 1e-3 * scenario_.horizon; }
    double horizon() const override { return scenario_.horizon; }

private:
    Scenario scenario_;
    Needle needle_;
};

/// dW/dnu emulated from boundary measurements: Lambda_gamma f - Lambda_1 f with
/// f = U_tau on the boundary, both solves in factored form (decay shift tau^2).
/// Requires the pole outside the closed box on [0, t_end].
BoundaryTrace measured_reflected_flux(const Scenario& scenario, const Grid& grid, const ProbeParams& params,
                                      const Needle& needle, const SolverOptions& options = {});

struct FEstimate {
    double t_prime = 0.0;
    double mu = 0.0;
    double f_hat = 0.0;
    double theta_best = 0.0;
    /// Max slope was positive and f_hat was clamped to 0.
    bool clamped = false;
    std::vector<DistanceEstimate> per_theta;
};

/// F(T') approximated by max over theta of the tau-slope of ln|I| at the largest
/// admissible mu (mu <= tau_min/4). Throws ArityError on empty ladders.
FEstimate estimate_F(double t_prime, const std::vector<double>& theta_grid, const std::vector<double>& mu_ladder,
                     const std::vector<double>& tau_ladder, Evaluator& evaluator, int workers = 1);

struct SearchOptions {
    /// theta = fraction * T'.
    std::vector<double> theta_fractions{0.25, 0.5, 0.75, 0.95};
    std::vector<double> mu_ladder{2.0};
    std::vector<double> tau_ladder{8.0, 12.0, 16.0, 20.0};
    /// Step floor as a fraction of the horizon.
    double eps_step = 1e-3;
    int max_iter = 200;
    int workers = 1;
};

struct TStarResult {
    std::vector<double> t_sequence;
    std::vector<double> f_values;
    double delta = 0.0;
    /// Empty means "T+0" (the sequence left [0, T]).
    std::optional<double> t_star_hat;
    std::string stop_reason;

    std::string label() const;
};

/// t_{n+1} = t_n + |F(t_n)|/delta from t_0 = 0 (evaluated at max(t_n, min_t_prime)).
TStarResult search_t_star(double delta, double horizon, Evaluator& evaluator, const SearchOptions& options = {});

/// Lipschitz rate in T' of -2 inf_{theta <= T'} d(y(theta), D(theta)) from ground truth, times `safety`.
double suggest_delta(const Scenario& scenario, const Needle& needle, double safety = 1.0);

struct ScanEntry {
    std::string needle;
    TStarResult search;
    /// Needle points (t, y(t)) before the estimated first contact: the cleared region.
    std::vector<std::pair<double, Vec3>> cleared;
};

using EvaluatorFactory = std::function<std::unique_ptr<Evaluator>(const Needle&)>;

/// search_t_star per needle, keyed by needle name.
std::map<std::string, ScanEntry> needle_scan(const std::vector<Needle>& needles, const EvaluatorFactory& factory,
                                             double delta, double horizon, const SearchOptions& options = {});

std::string to_json(const DistanceEstimate& d);
std::string to_json(const FEstimate& f);
std::string to_json(const TStarResult& r);
std::string distance_csv_header();
std::string distance_csv_row(const DistanceEstimate& d);

} // namespace dprobe
