#pragma once

#include "dprobe/probe.hpp"
#include "dprobe/solver.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace dprobe {

/// Signed value stored as (sign, ln|value|); sign 0 means exactly zero.
struct SignedLog {
    int sign = 0;
    double log_abs = -std::numeric_limits<double>::infinity();

    static SignedLog from(double v);
    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
    bool is_zero() const { return sign == 0; }
};

/// Compensated (Neumaier) sum of terms given in log form, rescaled to the largest
/// exponent seen so far so that no term under- or overflows on its own.
class LogSum {
public:
    void add(double v);
    void add(int sign, double log_abs);
    void add(const SignedLog& s) { add(s.sign, s.log_abs); }
    SignedLog result() const;

private:
    double ref_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct BoundaryIndicator {
    SignedLog value;   // flux integral minus the pole correction
    SignedLog raw;     // int_Gamma dW/dnu U* kappa before correction
    SignedLog pole;    // int kappa w(t, y(t)) dt over y(t) in Omega
    long terms = 0;    // boundary samples actually evaluated
    long skipped = 0;  // samples dropped as negligible
};

struct IndicatorOptions {
    int workers = 1;
    /// Samples whose a-priori bound is below this fraction of the total bound are skipped.
    double skip_fraction = 1e-14;
    QuadratureRule rule{};
};

/// Boundary form int_0^T' int_Gamma dW/dnu U* kappa dsigma dt in factored form
/// (dW/dnu U* = dw/dnu u*), trapezoidal in space and time. When the needle is
/// inside Omega the singular adjoint probe adds int kappa w(t,y(t)) dt to the flux
/// integral; `w` is then required and that term is removed. T' must be a time level.
BoundaryIndicator indicator_boundary(const BoundaryTrace& flux_w, const ProbeParams& params, const Needle& needle,
                                     const Grid& grid, const SpaceTimeField* w = nullptr,
                                     const IndicatorOptions& options = {});

struct VolumeIndicator {
    SignedLog value; // bulk + endpoint_T - endpoint_0
    SignedLog bulk;
    SignedLog endpoint_0;
    SignedLog endpoint_T;
};

/// Volume form int (gamma-1) grad V . grad U* kappa + [int kappa W U*]_0^T'. The bulk term is
/// summed over the cut faces of the scheme, with grad V = grad u + (face difference of w)
/// and grad u* at the face centers.
VolumeIndicator indicator_volume(const ReflectedSolution& reflected, const Scenario& scenario,
                                 const ProbeParams& params, const Needle& needle, const Grid& grid,
                                 const IndicatorOptions& options = {});

struct EnergyOptions {
    double time_tol = 1e-9;
    double space_tol = 1e-9;
};

/// ln of int_0^T' int_{D(t)} |gamma-1| |grad p_{tau,y(t)}|^2 kappa dx dt (no PDE solve);
/// -inf when the contrast vanishes.
double energy_reference(const Scenario& scenario, const ProbeParams& params, const Needle& needle,
                        const EnergyOptions& options = {});

/// Spatial part at one instant: int_{D(t)} |gamma-1| |grad p_{tau,y}|^2 dx.
double energy_density(const Scenario& scenario, double tau, double t, const Vec3& y, double rel_tol = 1e-9);

struct IndicatorSample {
    ProbeParams params;
    SignedLog i_boundary;
    SignedLog i_volume;
    double log_energy_ref = -std::numeric_limits<double>::infinity();
    SignedLog endpoint_0;
    SignedLog endpoint_T;
    SignedLog pole_term;
    double sandwich_ratio = 0.0;
};

struct SandwichResult {
    double ratio = 0.0;
    bool degenerate = false;
};

/// |I| / energy_ref for one sample; degenerate when the energy reference vanishes.
SandwichResult sandwich_check(const IndicatorSample& sample);

struct SandwichBand {
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    double spread = 0.0; // max/min
    bool sign_stable = true;
    bool pass = false;
};

/// Band of |I|/energy_ref across a ladder: passes when max/min <= c_star and the sign is constant.
SandwichBand sandwich_band(const std::vector<IndicatorSample>& samples, int expected_sign, double c_star = 10.0);

/// CSV columns of indicator rows.
std::string indicator_csv_header();
std::string indicator_csv_row(const IndicatorSample& s);

} // namespace dprobe
