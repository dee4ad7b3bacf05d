#include "mdm/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "mdm/rng.hpp"

namespace mdm {

namespace {

std::vector<double> numeric_grad(const Objective& f, const std::vector<double>& x, int* evals) {
    const int n = static_cast<int>(x.size());
    std::vector<double> g(n);
    std::vector<double> xp = x;
    for (int i = 0; i < n; ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
        xp[i] = x[i] + h;
        const double fp = f(xp);
        xp[i] = x[i] - h;
        const double fm = f(xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
        *evals += 2;
    }
    return g;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm_inf(const std::vector<double>& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

MinimizeResult minimize_lbfgs(const Objective& f, std::vector<double> x0, int max_iters,
                              double grad_tol) {
    constexpr int kMemory = 8;
    const int n = static_cast<int>(x0.size());
    MinimizeResult res;
    res.x = std::move(x0);
    res.value = f(res.x);
    res.evals = 1;
    if (!std::isfinite(res.value)) return res;

    std::vector<double> g = numeric_grad(f, res.x, &res.evals);
    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;

    for (int iter = 0; iter < max_iters; ++iter) {
        if (norm_inf(g) < grad_tol) {
            res.converged = true;
            return res;
        }

        // two-loop recursion
        std::vector<double> q = g;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * dot(s_hist[i], q);
            for (int j = 0; j < n; ++j) q[j] -= alpha[i] * y_hist[i][j];
        }
        if (!s_hist.empty()) {
            const auto& s = s_hist.back();
            const auto& y = y_hist.back();
            const double gamma = dot(s, y) / std::max(dot(y, y), 1e-300);
            for (double& v : q) v *= gamma;
        }
        for (size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * dot(y_hist[i], q);
            for (int j = 0; j < n; ++j) q[j] += (alpha[i] - beta) * s_hist[i][j];
        }
        std::vector<double> dir(n);
        for (int j = 0; j < n; ++j) dir[j] = -q[j];

        double slope = dot(g, dir);
        if (slope >= 0.0) {  // not a descent direction; fall back to -g
            for (int j = 0; j < n; ++j) dir[j] = -g[j];
            slope = dot(g, dir);
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            if (slope >= 0.0) {
                res.converged = true;
                return res;
            }
        }

        // Armijo backtracking
        double step = 1.0;
        std::vector<double> x_new(n);
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < 50; ++ls) {
            for (int j = 0; j < n; ++j) x_new[j] = res.x[j] + step * dir[j];
            f_new = f(x_new);
            ++res.evals;
            if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) return res;

        std::vector<double> g_new = numeric_grad(f, x_new, &res.evals);
        std::vector<double> s(n), y(n);
        for (int j = 0; j < n; ++j) {
            s[j] = x_new[j] - res.x[j];
            y[j] = g_new[j] - g[j];
        }
        if (dot(s, y) > 1e-12 * std::sqrt(dot(s, s)) * std::sqrt(dot(y, y))) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / dot(s_hist.back(), y_hist.back()));
            if (static_cast<int>(s_hist.size()) > kMemory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        if (std::abs(res.value - f_new) <
            1e-14 * std::max(1.0, std::abs(res.value))) {
            res.x = std::move(x_new);
            res.value = f_new;
            res.converged = true;
            return res;
        }
        res.x = std::move(x_new);
        res.value = f_new;
        g = std::move(g_new);
    }
    return res;
}

MinimizeResult minimize_multistart(const Objective& f,
                                   const std::vector<std::pair<double, double>>& bounds,
                                   int restarts, uint64_t seed, int max_iters) {
    Rng rng(seed);
    const int n = static_cast<int>(bounds.size());
    MinimizeResult best;
    best.value = std::numeric_limits<double>::infinity();

    for (int r = 0; r < restarts; ++r) {
        std::vector<double> x0(n);
        const bool hop = r % 2 == 1 && std::isfinite(best.value);
        for (int i = 0; i < n; ++i) {
            if (hop) {
                const double span = bounds[i].second - bounds[i].first;
                x0[i] = best.x[i] + rng.normal(0.0, 0.05 * span);
            } else {
                x0[i] = rng.uniform(bounds[i].first, bounds[i].second);
            }
        }
        MinimizeResult local = minimize_lbfgs(f, std::move(x0), max_iters);
        local.evals += best.evals;
        if (local.value < best.value) {
            local.converged = local.converged || best.converged;
            best = std::move(local);
        } else {
            best.evals = local.evals;
        }
    }
    return best;
}

double golden_section_min(const std::function<double(double)>& f, double lo, double hi, double tol,
                          int max_iters) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < max_iters && (b - a) > tol * std::max(1.0, std::abs(a) + std::abs(b));
         ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace mdm
