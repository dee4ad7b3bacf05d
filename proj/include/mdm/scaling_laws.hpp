#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace mdm {

// One training run, as consumed by the scaling-law fitter. Counts are raw
// (parameters, tokens); the fitter converts to billions internally.
struct RunRecord {
    double n_nonembed = 0;
    double n_total = 0;
    double d_tokens = 0;
    int batch = 0;
    int seq_len = 0;
    int steps = 0;
    double final_loss = 0;
    uint64_t seed = 0;
    std::string schedule;

    nlohmann::json to_json() const;
    static RunRecord from_json(const nlohmann::json& j);
};

// JSONL (one record per line) or CSV with header n_nonembed,n_total,d_tokens,loss.
std::vector<RunRecord> load_run_records(const std::string& path);
void save_run_records_jsonl(const std::string& path, const std::vector<RunRecord>& records);

enum class LawForm { kaplan, additive };

// Fitted loss law. kaplan: L = E + (A*N^(-a/b) + B/D)^b; additive:
// L = E + A*N^(-a) + B*D^(-b). N, D in billions.
struct ScalingFit {
    LawForm form = LawForm::kaplan;
    double e, a_coef, b_coef, a_exp, b_exp;
    double r2 = 0;            // log-residual R^2 over the full set
    double mre_heldout = 0;   // mean relative error on bootstrap held-out splits
    std::vector<std::array<double, 5>> bootstrap;  // (E, A, B, a, b) per resample

    double predict(double n_billion, double d_billion) const;
    double frontier_exponent() const { return a_exp / b_exp; }  // alpha = a/b
    double tau() const { return b_exp / (a_exp + b_exp); }

    nlohmann::json to_json() const;
    static ScalingFit from_json(const nlohmann::json& j);
};

ScalingFit fit_power_law(const std::vector<RunRecord>& records, LawForm form, int restarts = 64,
                         int bootstrap_k = 20, uint64_t seed = 7);

// Compute-optimal token count at parameter count N (billions -> billions):
// D*(N) = (b*B/(a*A)) * N^(a/b). Kaplan form only.
double d_star_of_n(const ScalingFit& fit, double n_billion);

// FLOPs-per-token cost model. six_n is the standard 6N rule on non-embedding
// parameters; detailed adds embedding parameters inferred from the family's
// width/depth ratio rho: d = (N*rho/12)^(1/3), embed = 2*V*d.
struct FlopsModel {
    enum class Mode { six_n, detailed };
    Mode mode = Mode::six_n;
    double vocab_size = 0;
    double rho = 128.0;

    double flops_per_token(double n_nonembed) const;
};

// Loss-minimizing allocation of budget C (raw FLOPs) between parameters and
// tokens. Returns raw counts; satisfies cost(N*) * D* = C.
struct ComputeOptimal {
    double n_star;  // parameters
    double d_star;  // tokens
    double loss;
};
ComputeOptimal compute_optimal(const ScalingFit& fit, double c_flops, const FlopsModel& flops);

// Plot-ready tables. Coordinates in billions.
struct IsoLossCurve {
    double level;
    std::vector<std::array<double, 2>> points;  // (N, D); empty when level <= E
};
std::vector<IsoLossCurve> iso_curves(const ScalingFit& fit, const std::vector<double>& levels,
                                     double n_min_b, double n_max_b, int grid = 64);

struct IsoFlopsCurve {
    double budget;                              // raw FLOPs
    std::vector<std::array<double, 3>> points;  // (N, D, predicted loss)
    int argmin = -1;
};
std::vector<IsoFlopsCurve> iso_flops(const ScalingFit& fit, const std::vector<double>& budgets,
                                     const FlopsModel& flops, int grid = 96);

}  // namespace mdm
