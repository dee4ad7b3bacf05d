#include "mdm/sde_transfer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mdm/fitting.hpp"

namespace mdm {

double DriftHorizonFit::g_const() const {
    return std::pow(alpha * a_coef / (beta * b_coef), 1.0 / (alpha + beta));
}

double kappa(double d, double b, const SdeBase& base, double gamma) {
    if (d <= 0.0 || b <= 0.0 || base.d_base <= 0.0 || base.b_base <= 0.0) {
        throw std::invalid_argument("kappa: D and B must be positive");
    }
    return std::pow(base.d_base / d, gamma) * (b / base.b_base);
}

AdamWTuple rescale_adamw(const SdeBase& base, double k) {
    if (k <= 0.0) throw std::invalid_argument("rescale_adamw: kappa must be positive");
    const double rk = std::sqrt(k);
    return {base.lr * rk, std::pow(base.beta1, k), std::pow(base.beta2, k), base.eps / rk};
}

std::pair<double, double> virtual_split(double d, double l, const DriftHorizonFit& fit,
                                        double gamma_override) {
    const double ratio = d / l;
    const double g = fit.g_const();
    const double s = g * std::pow(ratio, 1.0 - gamma_override);
    return {s, ratio / s};  // exact token conservation by construction
}

std::pair<double, double> virtual_split(double d, double l, const DriftHorizonFit& fit) {
    return virtual_split(d, l, fit, fit.gamma_star());
}

double gamma_star_numeric(const DriftHorizonFit& fit, double d, double l) {
    const double ratio = d / l;
    if (std::abs(std::log(ratio)) < 1e-9) {
        throw std::invalid_argument(
            "gamma_star_numeric: D/L = 1 degenerates the constraint curve");
    }
    // minimize over u = ln(S~); B~ = ratio/S~
    auto obj = [&](double u) {
        return fit.a_coef * std::exp(-fit.alpha * u) +
               fit.b_coef * std::pow(ratio * std::exp(-u), -fit.beta);
    };
    // The minimizer sits at u* = ln G + (1-gamma*) ln(ratio); bracket widely.
    const double center = std::log(std::max(1e-12, fit.g_const())) + 0.5 * std::log(ratio);
    const double half = std::abs(std::log(ratio)) + std::abs(std::log(fit.g_const())) + 30.0;
    const double u = golden_section_min(obj, center - half, center + half, 1e-13);
    return 1.0 - (u - std::log(fit.g_const())) / std::log(ratio);
}

DriftHorizonFit fit_drift_horizon(const std::vector<DriftHorizonPoint>& points, uint64_t seed,
                                  int restarts) {
    if (points.size() < 5) {
        throw std::invalid_argument("fit_drift_horizon: need at least 5 observations");
    }
    // log-space parameters (lnE, lnA, lnB, ln alpha, ln beta)
    auto predict = [](const std::vector<double>& x, double s, double b) {
        return std::exp(x[0]) + std::exp(x[1]) * std::pow(s, -std::exp(x[3])) +
               std::exp(x[2]) * std::pow(b, -std::exp(x[4]));
    };
    auto obj = [&](const std::vector<double>& x) {
        double sum = 0.0;
        for (const auto& p : points) {
            const double r = std::log(predict(x, p.s_virtual, p.b_virtual)) - std::log(p.loss);
            sum += r * r;
        }
        return sum / points.size();
    };
    const std::vector<std::pair<double, double>> bounds = {
        {std::log(1e-3), std::log(10.0)}, {std::log(1e-3), std::log(1e3)},
        {std::log(1e-3), std::log(1e3)},  {std::log(0.02), std::log(2.0)},
        {std::log(0.02), std::log(2.0)},
    };
    const MinimizeResult r = minimize_multistart(obj, bounds, restarts, seed);
    return {std::exp(r.x[0]), std::exp(r.x[1]), std::exp(r.x[2]), std::exp(r.x[3]),
            std::exp(r.x[4])};
}

SCritResult estimate_s_crit(std::vector<std::pair<double, double>> curve, double delta, double d,
                            double l) {
    if (curve.size() < 4) throw std::invalid_argument("estimate_s_crit: need >= 4 points");
    std::sort(curve.begin(), curve.end());
    const double span = curve.back().first / curve.front().first;
    if (span < 100.0) {
        throw std::invalid_argument("estimate_s_crit: S values must span >= 2 decades");
    }
    const size_t n = curve.size();
    const size_t tercile = (n + 2) / 3;
    std::vector<double> tail;
    for (size_t i = n - tercile; i < n; ++i) tail.push_back(curve[i].second);
    std::sort(tail.begin(), tail.end());
    const double plateau = tail.size() % 2 == 1
                               ? tail[tail.size() / 2]
                               : 0.5 * (tail[tail.size() / 2 - 1] + tail[tail.size() / 2]);

    // smallest S from which the curve stays within tolerance for good
    const double cutoff = plateau * (1.0 + delta);
    size_t first_ok = n;
    for (size_t i = n; i-- > 0;) {
        if (curve[i].second > cutoff) break;
        first_ok = i;
    }
    if (first_ok == n) {
        throw std::runtime_error("estimate_s_crit: no step count within tolerance (plateau=" +
                                 std::to_string(plateau) + ", cutoff=" + std::to_string(cutoff) +
                                 "); widen delta");
    }
    const double s = curve[first_ok].first;
    return {s, d / (l * s), plateau};
}

}  // namespace mdm
