#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mdm/optimizer.hpp"

namespace mdm {

// Reference operating point for SDE-reparameterized transfer. D's are token
// horizons, B's batch sizes in sequences.
struct SdeBase {
    double d_base;
    double b_base;
    double lr = 9e-4;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
};

// Loss model E + A*S~^-alpha + B*B~^-beta over the virtual step/batch split.
struct DriftHorizonFit {
    double e, a_coef, b_coef, alpha, beta;

    double gamma_star() const { return alpha / (alpha + beta); }
    double g_const() const;  // (alpha*A / (beta*B))^(1/(alpha+beta))
};

// kappa = (D_base/D)^gamma * (B/B_base)
double kappa(double d, double b, const SdeBase& base, double gamma);

struct AdamWTuple {
    double lr, beta1, beta2, eps;
};

// lr*sqrt(k), beta^k, eps/sqrt(k)
AdamWTuple rescale_adamw(const SdeBase& base, double k);

// S~ = G*(D/L)^(1-gamma), B~ = G^-1*(D/L)^gamma; conserves B~*S~*L = D.
std::pair<double, double> virtual_split(double d, double l, const DriftHorizonFit& fit);
std::pair<double, double> virtual_split(double d, double l, const DriftHorizonFit& fit,
                                        double gamma_override);

// Minimizes the fit's loss over the constraint curve B~*S~*L = D and returns
// the gamma parameterizing the minimizer. Requires D/L != 1 (the curve
// degenerates to a point there).
double gamma_star_numeric(const DriftHorizonFit& fit, double d, double l);

// Fits the drift/horizon loss model to (S~, B~, loss) observations.
struct DriftHorizonPoint {
    double s_virtual, b_virtual, loss;
};
DriftHorizonFit fit_drift_horizon(const std::vector<DriftHorizonPoint>& points,
                                  uint64_t seed = 2024, int restarts = 64);

// Step-count sweep at fixed (N, D): plateau = median of the largest-S
// tercile; S_crit = smallest S whose loss <= plateau*(1+delta).
struct SCritResult {
    double s_crit;
    double b_crit;  // D/(L*S_crit)
    double plateau;
};
SCritResult estimate_s_crit(std::vector<std::pair<double, double>> curve,  // (S, final loss)
                            double delta, double d, double l);

}  // namespace mdm
