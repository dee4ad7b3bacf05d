// Command-line front end: corruption previews, training runs, sampling,
// SDE hyperparameter transfer and scaling-law fits, all driven by one
// key=value config plus -D overrides.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mdm/config.hpp"
#include "mdm/forward_process.hpp"
#include "mdm/sampler.hpp"
#include "mdm/scaling_laws.hpp"
#include "mdm/sde_transfer.hpp"
#include "mdm/synthetic.hpp"
#include "mdm/trainer.hpp"
#include "mdm/transformer.hpp"

using nlohmann::json;
using namespace mdm;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;

    Config resolve() const {
        Config c = config_path.empty() ? Config() : Config::load(config_path);
        for (const auto& kv : overrides) c.apply_override(kv);
        return c;
    }
};

void add_common(CLI::App* sub, Common& common) {
    sub->add_option("--config", common.config_path, "config file (key = value with [sections])");
    sub->add_option("-D,--set", common.overrides, "override, e.g. -D train.batch=4");
}

std::string hash_hex(const Config& c) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(c.hash()));
    return buf;
}

SyntheticSpec spec_from(const Config& c) {
    SyntheticSpec s;
    s.payload_sizes = {c.get_int("data.vocab_text"), c.get_int("data.vocab_image"),
                       c.get_int("data.vocab_audio")};
    s.seq_len = c.get_int("data.seq_len");
    s.n_sequences = c.get_int("data.n_sequences");
    s.mix.text = c.get_double("data.w_text");
    s.mix.image = c.get_double("data.w_image");
    s.mix.audio = c.get_double("data.w_audio");
    s.mix.enforce_floor = c.get_bool("data.mixture_floor");
    s.successor_prob = c.get_double("data.successor_prob");
    s.seed = c.get_u64("data.seed");
    return s;
}

ToyTransformerConfig model_from(const Config& c) {
    ToyTransformerConfig m;
    m.n_layers = c.get_int("model.n_layers");
    m.d_emb = c.get_int("model.d_emb");
    m.n_heads = c.get_int("model.n_heads");
    m.swiglu_factor = c.get_double("model.swiglu_factor");
    m.rope_base = c.get_double("model.rope_base");
    m.qk_norm = c.get_bool("model.qk_norm");
    m.use_rope = c.get_bool("model.use_rope");
    m.init_std = c.get_double("model.init_std");
    return m;
}

TrainConfig train_from(const Config& c) {
    TrainConfig t;
    t.schedule = MaskSchedule::parse(c.get("train.schedule"));
    t.hyper.lr = c.get_double("optimizer.lr");
    t.hyper.beta1 = c.get_double("optimizer.beta1");
    t.hyper.beta2 = c.get_double("optimizer.beta2");
    t.hyper.eps = c.get_double("optimizer.eps");
    t.hyper.weight_decay = c.get_double("optimizer.weight_decay");
    t.mults = c.get_bool("optimizer.tuned_multipliers") ? MultiplierTable::tuned_reference()
                                                        : MultiplierTable::identity();
    t.lambda_z = c.get_double("train.lambda_z");
    t.min_lr = c.get_double("optimizer.min_lr");
    t.batch = c.get_int("train.batch");
    t.budget_tokens = c.get_double("train.budget_tokens");
    t.anti_mask = c.get_bool("train.anti_mask");
    t.epochs = c.get_int("train.epochs");
    t.seed = c.get_u64("train.seed");
    return t;
}

json record_json(const RunRecord& r, const Config& c) {
    json j = r.to_json();
    j["config_hash"] = hash_hex(c);
    return j;
}

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream f(out_path);
        if (!f) throw std::invalid_argument("cannot open output file: " + out_path);
        f << j.dump(2) << "\n";
    }
}

TaskKind parse_task(const std::string& s) {
    if (s == "text") return TaskKind::text;
    if (s == "image_text") return TaskKind::image_text;
    if (s == "audio_text") return TaskKind::audio_text;
    throw std::invalid_argument("unknown task: " + s);
}

std::vector<std::pair<double, double>> load_curve(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open curve file: " + path);
    std::vector<std::pair<double, double>> curve;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("S,", 0) == 0) continue;
        std::istringstream in(line);
        double s, loss;
        char comma;
        if (!(in >> s >> comma >> loss)) {
            throw std::invalid_argument("bad curve line: " + line);
        }
        curve.emplace_back(s, loss);
    }
    return curve;
}

int run_corrupt(const Common& common, double t, uint64_t seed, int index) {
    const Config c = common.resolve();
    const auto ds = make_synthetic(spec_from(c));
    if (index < 0 || index >= static_cast<int>(ds.sequences.size())) {
        throw std::invalid_argument("sequence index out of range");
    }
    const auto sched = MaskSchedule::parse(c.get("train.schedule"));
    Rng rng(seed);
    const auto cs = corrupt(ds.vocab, ds.sequences[index], t, sched, rng);
    json j;
    j["config_hash"] = hash_hex(c);
    j["seed"] = seed;
    j["t"] = t;
    j["mask_fraction"] = sched.mask_fraction(t);
    j["elbo_weight"] = elbo_weight(t, sched);
    j["clean"] = ds.sequences[index].tokens;
    j["corrupted"] = cs.tokens_t;
    j["masked_positions"] = cs.masked;
    emit(j, "");
    return 0;
}

int run_train(const Common& common, const std::string& ckpt, const std::string& records_path) {
    const Config c = common.resolve();
    const auto ds = make_synthetic(spec_from(c));
    ToyTransformer model(ds.vocab, model_from(c));
    const auto tc = train_from(c);
    model.init_weights(tc.seed, tc.mults);
    const auto rec = train(model, ds, tc, ckpt);
    if (!records_path.empty()) {
        std::vector<RunRecord> all;
        if (std::ifstream(records_path).good()) all = load_run_records(records_path);
        all.push_back(rec);
        save_run_records_jsonl(records_path, all);
    }
    emit(record_json(rec, c), "");
    return 0;
}

int run_generate(const Common& common, const std::string& ckpt, const std::string& out) {
    const Config c = common.resolve();
    const auto ds = make_synthetic(spec_from(c));
    ToyTransformer model = ckpt.empty() ? [&] {
        ToyTransformer m(ds.vocab, model_from(c));
        m.init_weights(c.get_u64("train.seed"));
        return m;
    }() : ToyTransformer::load(ckpt);
    const auto& vocab = model.vocab();

    SamplerConfig sc;
    const std::string preset = c.get("sample.preset");
    if (preset == "image") sc = SamplerConfig::image_preset();
    else if (preset == "audio") sc = SamplerConfig::audio_preset();
    else if (preset == "text") sc = SamplerConfig::text_preset();
    else if (preset != "none") throw std::invalid_argument("unknown preset: " + preset);
    if (preset == "none") {
        sc.cfg_scale = c.get_double("sample.cfg_scale");
        sc.temperature = c.get_double("sample.temperature");
        sc.top_p = c.get_double("sample.top_p");
    }
    sc.steps = c.get_int("sample.steps");
    sc.schedule = MaskSchedule::parse(c.get("train.schedule"));
    sc.reveal = c.get("sample.reveal") == "random" ? RevealRule::random : RevealRule::confidence;

    const TaskKind task = parse_task(c.get("sample.task"));
    const Modality text = Modality::text;
    std::vector<int> prompt = {vocab.payload_begin(text), vocab.payload_begin(text) + 1};
    auto state = init_masked(vocab, task, prompt, c.get_int("sample.target_len"),
                             c.get_int("data.seq_len") + 8);

    const uint64_t seed = c.get_u64("sample.seed");
    Rng rng(seed);
    LogitsFn fn = [&](const std::vector<int>& tokens) { return model.forward(tokens); };
    const auto res = generate(vocab, fn, std::move(state), sc, rng);

    json j;
    j["config_hash"] = hash_hex(c);
    j["seed"] = seed;
    j["task"] = to_string(task);
    j["tokens"] = res.seq.tokens;
    j["steps"] = json::array();
    for (const auto& s : res.trace) {
        j["steps"].push_back({{"step", s.step},
                              {"revealed", s.revealed},
                              {"tokens", s.tokens},
                              {"confidence", s.confidence}});
    }
    emit(j, out);
    return 0;
}

int run_probe_variance(const Common& common, int n_batches) {
    const Config c = common.resolve();
    const auto ds = make_synthetic(spec_from(c));
    ToyTransformer model(ds.vocab, model_from(c));
    const uint64_t seed = c.get_u64("train.seed");
    model.init_weights(seed);
    const std::vector<double> grid = {0.1, 0.3, 0.5, 0.7, 0.9};
    const auto rep = grad_variance_probe(model, ds, grid, n_batches, c.get_int("train.batch"),
                                         c.get_double("train.lambda_z"), seed);
    json j;
    j["config_hash"] = hash_hex(c);
    j["seed"] = seed;
    j["iid_var"] = rep.iid_var;
    j["anti_var"] = rep.anti_var;
    j["t_stat"] = rep.t_stat;
    j["p_value"] = rep.p_value;
    j["n_batches"] = rep.n_batches;
    emit(j, "");
    return 0;
}

int run_sde_rescale(const Common& common, double d, double b) {
    const Config c = common.resolve();
    SdeBase base;
    base.d_base = c.get_double("sde.d_base");
    base.b_base = c.get_double("sde.b_base");
    base.lr = c.get_double("optimizer.lr");
    base.beta1 = c.get_double("optimizer.beta1");
    base.beta2 = c.get_double("optimizer.beta2");
    base.eps = c.get_double("optimizer.eps");
    const double gamma = c.get_double("sde.gamma");
    const double k = kappa(d, b, base, gamma);
    const auto tuned = rescale_adamw(base, k);
    json j;
    j["config_hash"] = hash_hex(c);
    j["d"] = d;
    j["b"] = b;
    j["gamma"] = gamma;
    j["kappa"] = k;
    j["lr"] = tuned.lr;
    j["beta1"] = tuned.beta1;
    j["beta2"] = tuned.beta2;
    j["eps"] = tuned.eps;
    emit(j, "");
    return 0;
}

int run_bcrit_scan(const Common& common, const std::string& curve_path, double delta, double d,
                   double l) {
    const Config c = common.resolve();
    const auto curve = load_curve(curve_path);
    const auto res = estimate_s_crit(curve, delta, d, l);
    json j;
    j["config_hash"] = hash_hex(c);
    j["delta"] = delta;
    j["d"] = d;
    j["seq_len"] = l;
    j["plateau"] = res.plateau;
    j["s_crit"] = res.s_crit;
    j["b_crit"] = res.b_crit;
    emit(j, "");
    return 0;
}

int run_gamma_sweep(const Common& common, const DriftHorizonFit& fit, double d, double l) {
    const Config c = common.resolve();
    const double closed = fit.gamma_star();
    const double numeric = gamma_star_numeric(fit, d, l);
    json j;
    j["config_hash"] = hash_hex(c);
    j["alpha"] = fit.alpha;
    j["beta"] = fit.beta;
    j["gamma_star_closed"] = closed;
    j["gamma_star_numeric"] = numeric;
    j["abs_diff"] = std::abs(closed - numeric);
    const auto [s, b] = virtual_split(d, l, fit);
    j["s_virtual"] = s;
    j["b_virtual"] = b;
    emit(j, "");
    return 0;
}

int run_fit_scaling(const Common& common, const std::string& records_path,
                    const std::string& out) {
    const Config c = common.resolve();
    const auto records = load_run_records(records_path);
    const LawForm form =
        c.get("scaling.form") == "additive" ? LawForm::additive : LawForm::kaplan;
    const auto fit = fit_power_law(records, form, c.get_int("scaling.restarts"),
                                   c.get_int("scaling.bootstrap"), c.get_u64("scaling.seed"));
    json j = fit.to_json();
    j["config_hash"] = hash_hex(c);
    j["seed"] = c.get_u64("scaling.seed");
    j["n_records"] = records.size();
    emit(j, out);
    return 0;
}

int run_frontier(const Common& common, const std::string& fit_path, double c_flops,
                 double n_min_b, double n_max_b, int grid) {
    const Config c = common.resolve();
    std::ifstream f(fit_path);
    if (!f) throw std::invalid_argument("cannot open fit file: " + fit_path);
    json fj;
    f >> fj;
    const auto fit = ScalingFit::from_json(fj);
    json j;
    j["config_hash"] = hash_hex(c);
    j["tau"] = fit.tau();
    j["frontier_exponent"] = fit.frontier_exponent();
    j["table"] = json::array();
    for (int i = 0; i < grid; ++i) {
        const double n = n_min_b * std::pow(n_max_b / n_min_b, i / static_cast<double>(grid - 1));
        const double d = d_star_of_n(fit, n);
        j["table"].push_back({{"n_billion", n},
                              {"d_star_billion", d},
                              {"loss", fit.predict(n, d)}});
    }
    if (c_flops > 0) {
        FlopsModel fm;
        fm.mode = c.get("flops.mode") == "detailed" ? FlopsModel::Mode::detailed
                                                    : FlopsModel::Mode::six_n;
        fm.vocab_size = c.get_double("data.vocab_text") + c.get_double("data.vocab_image") +
                        c.get_double("data.vocab_audio") + 13;
        fm.rho = c.get_double("flops.rho");
        const auto opt = compute_optimal(fit, c_flops, fm);
        j["compute_optimal"] = {{"c_flops", c_flops},
                                {"n_star", opt.n_star},
                                {"d_star", opt.d_star},
                                {"loss", opt.loss}};
    }
    emit(j, "");
    return 0;
}

int run_antimask_ablate(const Common& common, const std::string& out) {
    const Config c = common.resolve();
    const auto ds = make_synthetic(spec_from(c));
    auto tc = train_from(c);
    if (tc.batch % 2) throw std::invalid_argument("antimask-ablate needs an even train.batch");

    std::vector<RunRecord> records;
    for (bool anti : {false, true}) {
        ToyTransformer model(ds.vocab, model_from(c));
        model.init_weights(tc.seed, tc.mults);
        tc.anti_mask = anti;
        records.push_back(train(model, ds, tc));
    }
    if (records[0].d_tokens != records[1].d_tokens) {
        throw std::runtime_error("ablation arms are not compute matched");
    }
    if (!out.empty()) save_run_records_jsonl(out, records);
    json j;
    j["config_hash"] = hash_hex(c);
    j["seed"] = tc.seed;
    j["baseline"] = record_json(records[0], c);
    j["anti_mask"] = record_json(records[1], c);
    j["d_tokens"] = records[0].d_tokens;
    j["loss_delta"] = records[1].final_loss - records[0].final_loss;
    emit(j, "");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"masked multimodal diffusion toolkit"};
    app.require_subcommand(1);

    Common common;

    double corrupt_t = 0.5;
    uint64_t corrupt_seed = 1;
    int corrupt_index = 0;
    auto* corrupt_cmd = app.add_subcommand("corrupt", "preview the forward masking process");
    add_common(corrupt_cmd, common);
    corrupt_cmd->add_option("--t", corrupt_t, "diffusion time in (0, 1]");
    corrupt_cmd->add_option("--seed", corrupt_seed, "mask draw seed");
    corrupt_cmd->add_option("--index", corrupt_index, "corpus sequence index");

    std::string train_ckpt, train_records;
    auto* train_cmd = app.add_subcommand("train", "train a model on the synthetic corpus");
    add_common(train_cmd, common);
    train_cmd->add_option("--checkpoint", train_ckpt, "checkpoint output path");
    train_cmd->add_option("--records", train_records, "append the run record to this JSONL");

    std::string gen_ckpt, gen_out;
    auto* gen_cmd = app.add_subcommand("generate", "run modality-constrained reverse sampling");
    add_common(gen_cmd, common);
    gen_cmd->add_option("--checkpoint", gen_ckpt, "model checkpoint (fresh init when omitted)");
    gen_cmd->add_option("--out", gen_out, "write the generation JSON here");

    int probe_batches = 200;
    auto* probe_cmd = app.add_subcommand("probe-variance", "iid vs anti-mask gradient variance");
    add_common(probe_cmd, common);
    probe_cmd->add_option("--batches", probe_batches, "batches per arm (>= 100)");

    double sde_d = 0, sde_b = 0;
    auto* sde_cmd = app.add_subcommand("sde-rescale", "transfer AdamW settings across (D, B)");
    add_common(sde_cmd, common);
    sde_cmd->add_option("--d", sde_d, "target token horizon")->required();
    sde_cmd->add_option("--b", sde_b, "target batch size")->required();

    std::string bcrit_curve;
    double bcrit_delta = 0.005, bcrit_d = 0, bcrit_l = 0;
    auto* bcrit_cmd = app.add_subcommand("bcrit-scan", "critical batch size from an S sweep");
    add_common(bcrit_cmd, common);
    bcrit_cmd->add_option("--curve", bcrit_curve, "CSV of S,loss points")->required();
    bcrit_cmd->add_option("--delta", bcrit_delta, "plateau tolerance");
    bcrit_cmd->add_option("--d", bcrit_d, "token horizon D")->required();
    bcrit_cmd->add_option("--l", bcrit_l, "sequence length L")->required();

    DriftHorizonFit sweep_fit{1.0, 1.0, 1.0, 0.18, 0.23};
    double sweep_d = 38400, sweep_l = 24;
    auto* sweep_cmd = app.add_subcommand("gamma-sweep", "closed-form vs numeric gamma*");
    add_common(sweep_cmd, common);
    sweep_cmd->add_option("--e", sweep_fit.e, "irreducible loss");
    sweep_cmd->add_option("--a", sweep_fit.a_coef, "step-count coefficient A");
    sweep_cmd->add_option("--b", sweep_fit.b_coef, "batch-size coefficient B");
    sweep_cmd->add_option("--alpha", sweep_fit.alpha, "step-count exponent");
    sweep_cmd->add_option("--beta", sweep_fit.beta, "batch-size exponent");
    sweep_cmd->add_option("--d", sweep_d, "token horizon D");
    sweep_cmd->add_option("--l", sweep_l, "sequence length L");

    std::string fitsc_records, fitsc_out;
    auto* fitsc_cmd = app.add_subcommand("fit-scaling", "fit a loss law to run records");
    add_common(fitsc_cmd, common);
    fitsc_cmd->add_option("--records", fitsc_records, "JSONL or CSV of runs")->required();
    fitsc_cmd->add_option("--out", fitsc_out, "write the fit JSON here");

    std::string front_fit;
    double front_c = 0, front_nmin = 1e-2, front_nmax = 1e2;
    int front_grid = 16;
    auto* front_cmd = app.add_subcommand("frontier", "compute-optimal frontier tables");
    add_common(front_cmd, common);
    front_cmd->add_option("--fit", front_fit, "fit JSON from fit-scaling")->required();
    front_cmd->add_option("--flops", front_c, "also solve the allocation at this budget");
    front_cmd->add_option("--n-min", front_nmin, "table lower bound, billions");
    front_cmd->add_option("--n-max", front_nmax, "table upper bound, billions");
    front_cmd->add_option("--grid", front_grid, "table rows");

    std::string ablate_out;
    auto* ablate_cmd = app.add_subcommand("antimask-ablate", "compute-matched anti-mask ablation");
    add_common(ablate_cmd, common);
    ablate_cmd->add_option("--out", ablate_out, "write both run records to this JSONL");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*corrupt_cmd) return run_corrupt(common, corrupt_t, corrupt_seed, corrupt_index);
        if (*train_cmd) return run_train(common, train_ckpt, train_records);
        if (*gen_cmd) return run_generate(common, gen_ckpt, gen_out);
        if (*probe_cmd) return run_probe_variance(common, probe_batches);
        if (*sde_cmd) return run_sde_rescale(common, sde_d, sde_b);
        if (*bcrit_cmd) return run_bcrit_scan(common, bcrit_curve, bcrit_delta, bcrit_d, bcrit_l);
        if (*sweep_cmd) return run_gamma_sweep(common, sweep_fit, sweep_d, sweep_l);
        if (*fitsc_cmd) return run_fit_scaling(common, fitsc_records, fitsc_out);
        if (*front_cmd) return run_frontier(common, front_fit, front_c, front_nmin, front_nmax,
                                            front_grid);
        if (*ablate_cmd) return run_antimask_ablate(common, ablate_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
