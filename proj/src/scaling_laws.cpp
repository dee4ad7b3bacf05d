#include "mdm/scaling_laws.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mdm/fitting.hpp"
#include "mdm/rng.hpp"

namespace mdm {

namespace {
constexpr double kBillion = 1e9;
}

nlohmann::json RunRecord::to_json() const {
    return {{"n_nonembed", n_nonembed}, {"n_total", n_total}, {"d_tokens", d_tokens},
            {"batch", batch},           {"seq_len", seq_len}, {"steps", steps},
            {"final_loss", final_loss}, {"seed", seed},       {"schedule", schedule}};
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
    RunRecord r;
    r.n_nonembed = j.at("n_nonembed");
    r.n_total = j.at("n_total");
    r.d_tokens = j.at("d_tokens");
    r.batch = j.value("batch", 0);
    r.seq_len = j.value("seq_len", 0);
    r.steps = j.value("steps", 0);
    r.final_loss = j.at("final_loss");
    r.seed = j.value("seed", 0ull);
    r.schedule = j.value("schedule", "");
    return r;
}

std::vector<RunRecord> load_run_records(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open run records: " + path);
    std::vector<RunRecord> out;
    std::string line;
    bool csv = false;
    std::vector<std::string> header;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (out.empty() && header.empty() && line.find("n_nonembed") != std::string::npos &&
            line[0] != '{') {
            csv = true;
            std::stringstream ss(line);
            std::string col;
            while (std::getline(ss, col, ',')) {
                col.erase(std::remove_if(col.begin(), col.end(), ::isspace), col.end());
                header.push_back(col);
            }
            continue;
        }
        if (csv) {
            std::stringstream ss(line);
            std::string cell;
            RunRecord r;
            for (size_t i = 0; std::getline(ss, cell, ','); ++i) {
                if (i >= header.size()) break;
                const double v = std::stod(cell);
                if (header[i] == "n_nonembed") r.n_nonembed = v;
                else if (header[i] == "n_total") r.n_total = v;
                else if (header[i] == "d_tokens") r.d_tokens = v;
                else if (header[i] == "loss" || header[i] == "final_loss") r.final_loss = v;
            }
            out.push_back(r);
        } else {
            out.push_back(RunRecord::from_json(nlohmann::json::parse(line)));
        }
    }
    return out;
}

void save_run_records_jsonl(const std::string& path, const std::vector<RunRecord>& records) {
    std::ofstream f(path);
    if (!f) throw std::invalid_argument("cannot open for writing: " + path);
    for (const auto& r : records) f << r.to_json().dump() << "\n";
}

double ScalingFit::predict(double n, double d) const {
    if (form == LawForm::kaplan) {
        return e + std::pow(a_coef * std::pow(n, -a_exp / b_exp) + b_coef / d, b_exp);
    }
    return e + a_coef * std::pow(n, -a_exp) + b_coef * std::pow(d, -b_exp);
}

nlohmann::json ScalingFit::to_json() const {
    nlohmann::json j = {{"form", form == LawForm::kaplan ? "kaplan" : "additive"},
                        {"E", e},
                        {"A", a_coef},
                        {"B", b_coef},
                        {"a", a_exp},
                        {"b", b_exp},
                        {"r2", r2},
                        {"mre_heldout", mre_heldout},
                        {"frontier_exponent", frontier_exponent()},
                        {"tau", tau()},
                        {"units", "billions"}};
    j["bootstrap"] = nlohmann::json::array();
    for (const auto& s : bootstrap) j["bootstrap"].push_back(s);
    return j;
}

ScalingFit ScalingFit::from_json(const nlohmann::json& j) {
    ScalingFit f;
    f.form = j.at("form") == "kaplan" ? LawForm::kaplan : LawForm::additive;
    f.e = j.at("E");
    f.a_coef = j.at("A");
    f.b_coef = j.at("B");
    f.a_exp = j.at("a");
    f.b_exp = j.at("b");
    f.r2 = j.value("r2", 0.0);
    f.mre_heldout = j.value("mre_heldout", 0.0);
    for (const auto& s : j.value("bootstrap", nlohmann::json::array())) {
        f.bootstrap.push_back({s[0], s[1], s[2], s[3], s[4]});
    }
    return f;
}

namespace {

struct FitPoint {
    double n, d, loss;  // billions
};

double predict_logparams(LawForm form, const std::vector<double>& x, double n, double d) {
    const double E = std::exp(x[0]), A = std::exp(x[1]), B = std::exp(x[2]);
    const double a = std::exp(x[3]), b = std::exp(x[4]);
    if (form == LawForm::kaplan) {
        return E + std::pow(A * std::pow(n, -a / b) + B / d, b);
    }
    return E + A * std::pow(n, -a) + B * std::pow(d, -b);
}

std::vector<double> fit_points(LawForm form, const std::vector<FitPoint>& pts, int restarts,
                               uint64_t seed) {
    auto obj = [&](const std::vector<double>& x) {
        double sum = 0.0;
        for (const auto& p : pts) {
            const double pred = predict_logparams(form, x, p.n, p.d);
            if (!(pred > 0.0) || !std::isfinite(pred)) return 1e30;
            const double r = std::log(pred) - std::log(p.loss);
            sum += r * r;
        }
        return sum / pts.size();
    };
    const std::vector<std::pair<double, double>> bounds = {
        {std::log(1e-2), std::log(10.0)}, {std::log(1e-3), std::log(1e3)},
        {std::log(1e-3), std::log(1e4)},  {std::log(1e-2), std::log(1.0)},
        {std::log(1e-2), std::log(1.0)},
    };
    MinimizeResult r = minimize_multistart(obj, bounds, restarts, seed, 400);
    // polish the incumbent hard for near-noiseless data
    MinimizeResult p = minimize_lbfgs(obj, r.x, 2000, 1e-13);
    return p.value < r.value ? p.x : r.x;
}

}  // namespace

ScalingFit fit_power_law(const std::vector<RunRecord>& records, LawForm form, int restarts,
                         int bootstrap_k, uint64_t seed) {
    if (records.size() < 10) {
        throw std::invalid_argument("fit_power_law: need >= 10 records");
    }
    std::vector<FitPoint> pts;
    double n_min = 1e300, n_max = 0, d_min = 1e300, d_max = 0;
    for (const auto& r : records) {
        if (!std::isfinite(r.final_loss) || r.final_loss <= 0) {
            throw std::invalid_argument("fit_power_law: non-finite or non-positive loss");
        }
        pts.push_back({r.n_nonembed / kBillion, r.d_tokens / kBillion, r.final_loss});
        n_min = std::min(n_min, r.n_nonembed);
        n_max = std::max(n_max, r.n_nonembed);
        d_min = std::min(d_min, r.d_tokens);
        d_max = std::max(d_max, r.d_tokens);
    }
    if (n_max / n_min < 10.0) {
        throw std::invalid_argument("fit_power_law: ill-posed, N spans < 1 decade");
    }
    if (d_max / d_min < 10.0) {
        throw std::invalid_argument("fit_power_law: ill-posed, D spans < 1 decade");
    }

    const std::vector<double> x = fit_points(form, pts, restarts, seed);

    ScalingFit fit;
    fit.form = form;
    fit.e = std::exp(x[0]);
    fit.a_coef = std::exp(x[1]);
    fit.b_coef = std::exp(x[2]);
    fit.a_exp = std::exp(x[3]);
    fit.b_exp = std::exp(x[4]);

    // R^2 in log-loss space over the full set
    double ss_res = 0.0, ss_tot = 0.0, mean_log = 0.0;
    for (const auto& p : pts) mean_log += std::log(p.loss) / pts.size();
    for (const auto& p : pts) {
        const double r = std::log(fit.predict(p.n, p.d)) - std::log(p.loss);
        ss_res += r * r;
        const double c = std::log(p.loss) - mean_log;
        ss_tot += c * c;
    }
    fit.r2 = 1.0 - ss_res / ss_tot;

    // bootstrap: 90/10 cross-validation, held-out MRE
    Rng rng(mix_seed(seed ^ 0xb007));
    double mre_sum = 0.0;
    for (int k = 0; k < bootstrap_k; ++k) {
        std::vector<size_t> idx(pts.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng.engine());
        const size_t n_train = (pts.size() * 9) / 10;
        std::vector<FitPoint> train, held;
        for (size_t i = 0; i < idx.size(); ++i) {
            (i < n_train ? train : held).push_back(pts[idx[i]]);
        }
        const std::vector<double> xb =
            fit_points(form, train, std::max(8, restarts / 4), mix_seed(seed + 31 * k));
        double mre = 0.0;
        for (const auto& p : held) {
            mre += std::abs(predict_logparams(form, xb, p.n, p.d) - p.loss) / p.loss;
        }
        mre_sum += mre / held.size();
        fit.bootstrap.push_back({std::exp(xb[0]), std::exp(xb[1]), std::exp(xb[2]),
                                 std::exp(xb[3]), std::exp(xb[4])});
    }
    fit.mre_heldout = mre_sum / bootstrap_k;
    return fit;
}

double d_star_of_n(const ScalingFit& fit, double n) {
    if (fit.form != LawForm::kaplan) {
        throw std::invalid_argument("d_star_of_n: closed-form frontier requires the kaplan form");
    }
    if (n <= 0.0) throw std::invalid_argument("d_star_of_n: N must be positive");
    const double coef = fit.b_exp * fit.b_coef / (fit.a_exp * fit.a_coef);
    return coef * std::pow(n, fit.a_exp / fit.b_exp);
}

double FlopsModel::flops_per_token(double n_nonembed) const {
    if (mode == Mode::six_n) return 6.0 * n_nonembed;
    const double d = std::cbrt(n_nonembed * rho / 12.0);
    return 6.0 * (n_nonembed + 2.0 * vocab_size * d);
}

ComputeOptimal compute_optimal(const ScalingFit& fit, double c, const FlopsModel& flops) {
    if (c <= 0.0) throw std::invalid_argument("compute_optimal: C must be positive");
    if (flops.mode == FlopsModel::Mode::six_n && fit.form == LawForm::kaplan) {
        const double tau = fit.tau();
        const double g = fit.a_exp * fit.a_coef / (fit.b_exp * fit.b_coef);
        const double c6 = c / (6.0 * kBillion * kBillion);  // billions^2
        const double n_star_b = std::pow(g * c6, tau);
        const double n_star = n_star_b * kBillion;
        const double d_star = c / (6.0 * n_star);
        return {n_star, d_star, fit.predict(n_star_b, d_star / kBillion)};
    }
    // bracketed search over ln N
    auto loss_at = [&](double ln_n) {
        const double n = std::exp(ln_n);
        const double d = c / flops.flops_per_token(n);
        return fit.predict(n / kBillion, d / kBillion);
    };
    const double lo = std::log(1e3), hi = std::log(1e15);
    const double ln_n = golden_section_min(loss_at, lo, hi, 1e-12);
    if (ln_n < lo + 1e-3 || ln_n > hi - 1e-3) {
        throw std::runtime_error("compute_optimal: minimizer hit the search bracket [1e3, 1e15]");
    }
    const double n_star = std::exp(ln_n);
    const double d_star = c / flops.flops_per_token(n_star);
    return {n_star, d_star, fit.predict(n_star / kBillion, d_star / kBillion)};
}

std::vector<IsoLossCurve> iso_curves(const ScalingFit& fit, const std::vector<double>& levels,
                                     double n_min_b, double n_max_b, int grid) {
    std::vector<IsoLossCurve> out;
    for (double level : levels) {
        IsoLossCurve curve;
        curve.level = level;
        if (level > fit.e) {
            for (int i = 0; i < grid; ++i) {
                const double n = n_min_b * std::pow(n_max_b / n_min_b,
                                                    i / static_cast<double>(grid - 1));
                double d;
                if (fit.form == LawForm::kaplan) {
                    const double inner = std::pow(level - fit.e, 1.0 / fit.b_exp) -
                                         fit.a_coef * std::pow(n, -fit.a_exp / fit.b_exp);
                    if (inner <= 0.0) continue;  // unreachable at this N even with D -> inf
                    d = fit.b_coef / inner;
                } else {
                    const double rem =
                        level - fit.e - fit.a_coef * std::pow(n, -fit.a_exp);
                    if (rem <= 0.0) continue;
                    d = std::pow(fit.b_coef / rem, 1.0 / fit.b_exp);
                }
                curve.points.push_back({n, d});
            }
        }
        out.push_back(std::move(curve));
    }
    return out;
}

std::vector<IsoFlopsCurve> iso_flops(const ScalingFit& fit, const std::vector<double>& budgets,
                                     const FlopsModel& flops, int grid) {
    std::vector<IsoFlopsCurve> out;
    for (double c : budgets) {
        IsoFlopsCurve curve;
        curve.budget = c;
        const ComputeOptimal opt = compute_optimal(fit, c, flops);
        const double n_lo = opt.n_star / 100.0, n_hi = opt.n_star * 100.0;
        double best = 1e300;
        for (int i = 0; i < grid; ++i) {
            const double n = n_lo * std::pow(n_hi / n_lo, i / static_cast<double>(grid - 1));
            const double d = c / flops.flops_per_token(n);
            const double l = fit.predict(n / 1e9, d / 1e9);
            curve.points.push_back({n / 1e9, d / 1e9, l});
            if (l < best) {
                best = l;
                curve.argmin = i;
            }
        }
        out.push_back(std::move(curve));
    }
    return out;
}

}  // namespace mdm
