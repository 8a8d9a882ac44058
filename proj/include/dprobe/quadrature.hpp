#pragma once

#include <vector>

namespace dprobe {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
    std::vector<double> x;
    std::vector<double> w;
};

/// Cached n-point rule (Newton iteration on P_n, accurate to a few ulp).
const GaussLegendre& gauss_legendre(int n);

/// Composite rule on [a, b] split at the sorted `breaks` (points outside (a,b) are ignored).
/// Appends nodes/weights to the output vectors.
void composite_gauss(double a, double b, const std::vector<double>& breaks, int order,
                     std::vector<double>& nodes, std::vector<double>& weights);

/// Rule for the alpha-integral with weight e^{-alpha} on [0, alpha_max].
/// Internally the integral is taken in v = sqrt(alpha) with composite Gauss-Legendre
/// panels (the e^{-alpha} weight becomes e^{-v^2}); extra panel breaks are added per
/// evaluation point where the integrand has kinks.
struct QuadratureRule {
    int order = 16;
    int panels = 4;
    double alpha_max = 60.0;

    static QuadratureRule with_nodes(int nodes = 64, double alpha_max = 60.0);

    int node_count() const { return order * panels; }
    double v_max() const;

    /// e^{-alpha}-weighted view: nodes alpha_i and positive weights w_i with
    /// sum_i w_i f(alpha_i) ~ int_0^{alpha_max} e^{-alpha} f(alpha) d alpha.
    void alpha_nodes(std::vector<double>& alpha, std::vector<double>& weight) const;
};

} // namespace dprobe
