#pragma once

#include "dprobe/quadrature.hpp"
#include "dprobe/scenario.hpp"

#include <span>
#include <string>
#include <vector>

namespace dprobe {

/// Zero: eta = 0, forward probe U. MuSign: eta = mu sgn(t - theta), adjoint probe U*.
enum class EtaMode { Zero, MuSign };

struct ProbeParams {
    double tau = 10.0;
    double mu = 2.0;
    double theta = 0.5;
    double t_prime = 1.0;
    EtaMode eta_mode = EtaMode::Zero;

    ProbeParams with_mode(EtaMode m) const
    {
        ProbeParams p = *this;
        p.eta_mode = m;
        return p;
    }
};

/// Invariant violations (empty when valid). `horizon` bounds T'; l0 enters mu > mu_{T',theta}.
std::vector<std::string> validate_params(const ProbeParams& params, double horizon, double l0 = 0.0);

struct YukawaValue {
    double value;
    Vec3 gradient;
};

/// p = e^{-tau r} / (4 pi r), r = |x - y|. Throws PoleError at x = y.
YukawaValue p_yukawa(double tau, const Vec3& y, const Vec3& x);
double log_p_yukawa(double tau, double r);

/// kappa(t) = e^{-tau mu |t - theta|}.
double kappa(const ProbeParams& params, double t);
double log_kappa(const ProbeParams& params, double t);
/// rho(t) = int_0^t eta; 0 in Zero mode, mu(|t - theta| - theta) in MuSign mode.
double rho(const ProbeParams& params, double t);

struct PhiResult {
    double phi = 1.0;
    Vec3 grad_phi{};
    double phi_plus = 1.0;
    double phi_minus = 0.0;
    /// Bound on the truncated alpha > alpha_max part of phi.
    double tail_estimate = 0.0;
    int nodes_used = 0;
};

/// Correction factor phi (Zero mode) or phi* (MuSign mode) at (t, x) for the given needle.
/// The moving-pole correction is the alpha-substituted heat-kernel integral
///   phi = (1/sqrt pi) int_0^vmax e^{-v^2} [ g(s)/(e c) + g(s~) e/c ] dv,
/// with q = v/sqrt(2 tau r), c = sqrt(1+q^2), e = c+q, s = (r/2tau) e^2, s~ = (r/2tau)/e^2.
PhiResult phi_correction(const ProbeParams& params, const Needle& needle, double t, const Vec3& x,
                         const QuadratureRule& rule = {});

/// Field = value * e^{log_time_factor}; value and gradient are the O(e^{-tau r}) parts.
struct ProbeValue {
    double value = 0.0;
    Vec3 gradient{};
    double log_time_factor = 0.0;
    double phi = 1.0;
};

/// U = e^{tau^2 t} phi p. Requires eta_mode Zero.
ProbeValue probe_U(const ProbeParams& params, const Needle& needle, double t, const Vec3& x,
                   const QuadratureRule& rule = {});
/// U* = e^{-tau^2 t} phi* p. Requires eta_mode MuSign.
ProbeValue probe_Ustar(const ProbeParams& params, const Needle& needle, double t, const Vec3& x,
                       const QuadratureRule& rule = {});

/// Batch forms over paired (t_i, x_i); results do not depend on `workers`.
std::vector<ProbeValue> probe_U_batch(const ProbeParams& params, const Needle& needle,
                                      std::span<const double> t, std::span<const Vec3> x,
                                      const QuadratureRule& rule = {}, int workers = 1);
std::vector<ProbeValue> probe_Ustar_batch(const ProbeParams& params, const Needle& needle,
                                          std::span<const double> t, std::span<const Vec3> x,
                                          const QuadratureRule& rule = {}, int workers = 1);

} // namespace dprobe
