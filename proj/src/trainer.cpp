#include "mdm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mdm {

namespace {

// Cycling shuffled pass over unique sample indices.
class SampleStream {
public:
    SampleStream(size_t n, Rng& rng) : order_(n), rng_(&rng) {
        std::iota(order_.begin(), order_.end(), 0);
        reshuffle();
    }
    size_t next() {
        if (pos_ >= order_.size()) {
            reshuffle();
        }
        return order_[pos_++];
    }

private:
    void reshuffle() {
        std::shuffle(order_.begin(), order_.end(), rng_->engine());
        pos_ = 0;
    }
    std::vector<size_t> order_;
    Rng* rng_;
    size_t pos_ = 0;
};

}  // namespace

RunRecord train(ToyTransformer& model, const Dataset& data, const TrainConfig& cfg,
                const std::string& checkpoint_path) {
    if (data.sequences.empty()) throw std::invalid_argument("train: empty dataset");
    const int L = data.sequences.front().length();
    for (const auto& s : data.sequences) {
        if (s.length() != L) throw std::invalid_argument("train: ragged sequence lengths");
    }
    const int B = cfg.batch;
    if (cfg.anti_mask && B % 2 != 0) {
        throw std::invalid_argument("train: anti-mask batches need an even batch size");
    }
    const long long steps = static_cast<long long>(cfg.budget_tokens / (B * L));
    if (steps < 1) throw std::invalid_argument("train: budget smaller than one batch");

    const LrSchedule lr_sched =
        LrSchedule::standard(cfg.hyper.lr, static_cast<int>(steps), cfg.min_lr);
    AdamW opt(model, cfg.hyper, cfg.mults);
    Rng rng(mix_seed(cfg.seed));
    SampleStream stream(data.sequences.size(), rng);

    for (long long step = 0; step < steps; ++step) {
        std::vector<CorruptedSequence> views;
        std::vector<double> weights;
        views.reserve(B);
        if (cfg.anti_mask) {
            for (int j = 0; j < B / 2; ++j) {
                const Sequence& s = data.sequences[stream.next()];
                const double t = rng.uniform(kTimeFloor, 1.0);
                auto [first, second] = anti_mask_pair(data.vocab, s, t, cfg.schedule, rng);
                const double w = elbo_weight(t, cfg.schedule);
                views.push_back(std::move(first));
                weights.push_back(w);
                views.push_back(std::move(second));
                weights.push_back(w);
            }
        } else {
            for (int j = 0; j < B; ++j) {
                const Sequence& s = data.sequences[stream.next()];
                const double t = rng.uniform(kTimeFloor, 1.0);
                views.push_back(corrupt(data.vocab, s, t, cfg.schedule, rng));
                weights.push_back(elbo_weight(t, cfg.schedule));
            }
        }
        std::vector<LossItem> items;
        items.reserve(views.size());
        for (size_t j = 0; j < views.size(); ++j) {
            items.push_back({&views[j].tokens_t, &views[j].base.tokens, &views[j].masked,
                             weights[j]});
        }
        std::vector<Matrix> grads = model.zero_grads();
        model.loss_and_grad(items, cfg.lambda_z, grads);
        opt.step(model, grads, lr_sched.lr_at(static_cast<int>(step)));
    }

    RunRecord rec;
    rec.n_nonembed = static_cast<double>(model.num_nonembed_params());
    rec.n_total = static_cast<double>(model.num_params());
    rec.batch = B;
    rec.seq_len = L;
    rec.steps = static_cast<int>(steps);
    rec.d_tokens = static_cast<double>(B) * L * steps;
    rec.seed = cfg.seed;
    rec.schedule = cfg.schedule.name();
    rec.final_loss = validation_loss(model, data, cfg.schedule, cfg.lambda_z, cfg.seed);
    if (!checkpoint_path.empty()) model.save(checkpoint_path);
    return rec;
}

double validation_loss(const ToyTransformer& model, const Dataset& data,
                       const MaskSchedule& schedule, double lambda_z, uint64_t seed) {
    std::vector<CorruptedSequence> views;
    std::vector<double> weights;
    for (int ti = 1; ti <= 9; ++ti) {
        const double t = 0.1 * ti;
        for (size_t si = 0; si < data.sequences.size(); ++si) {
            Rng r(mix_seed(seed ^ (static_cast<uint64_t>(ti) << 32) ^ si));
            views.push_back(corrupt(data.vocab, data.sequences[si], t, schedule, r));
            weights.push_back(elbo_weight(t, schedule));
        }
    }
    std::vector<LossItem> items;
    items.reserve(views.size());
    for (size_t j = 0; j < views.size(); ++j) {
        items.push_back({&views[j].tokens_t, &views[j].base.tokens, &views[j].masked, weights[j]});
    }
    return model.loss_only(items, lambda_z);
}

namespace {

// regularized incomplete beta, Lentz continued fraction
double betacf(double a, double b, double x) {
    const double eps = 3e-14, fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

double inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                      b * std::log(1.0 - x);
    const double front = std::exp(ln);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    const double x = df / (df + t * t);
    const double p = 0.5 * inc_beta(0.5 * df, 0.5, x);
    return t >= 0.0 ? 1.0 - p : p;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double var_of(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / (v.size() - 1);
}

}  // namespace

double welch_one_sided_p(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean_of(a), mb = mean_of(b);
    const double va = var_of(a, ma), vb = var_of(b, mb);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double se2 = va / na + vb / nb;
    if (se2 <= 0.0) return ma > mb ? 0.0 : 1.0;
    const double t = (ma - mb) / std::sqrt(se2);
    const double df = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) +
                                   (vb / nb) * (vb / nb) / (nb - 1.0));
    return 1.0 - student_t_cdf(t, df);
}

namespace {

// Mean gradient of one probe batch, deterministic in (seed, batch index).
std::vector<Matrix> probe_batch_grad(const ToyTransformer& model, const Dataset& data,
                                     const std::vector<double>& t_grid, int batch, bool anti,
                                     double lambda_z, uint64_t seed, int batch_idx,
                                     double* loss_out) {
    Rng rng(mix_seed(seed + 7919 * static_cast<uint64_t>(batch_idx) + (anti ? 1 : 0)));
    std::vector<CorruptedSequence> views;
    std::vector<double> weights;
    const int n_unique = anti ? batch / 2 : batch;
    for (int j = 0; j < n_unique; ++j) {
        const Sequence& s = data.sequences[rng.index(data.sequences.size())];
        const double t = t_grid[rng.index(t_grid.size())];
        const double w = elbo_weight(t, MaskSchedule::linear());
        if (anti) {
            auto [first, second] = anti_mask_pair(data.vocab, s, t, MaskSchedule::linear(), rng);
            views.push_back(std::move(first));
            weights.push_back(w);
            views.push_back(std::move(second));
            weights.push_back(w);
        } else {
            views.push_back(corrupt(data.vocab, s, t, MaskSchedule::linear(), rng));
            weights.push_back(w);
        }
    }
    std::vector<LossItem> items;
    for (size_t j = 0; j < views.size(); ++j) {
        items.push_back({&views[j].tokens_t, &views[j].base.tokens, &views[j].masked, weights[j]});
    }
    std::vector<Matrix> grads = model.zero_grads();
    const double loss = model.loss_and_grad(items, lambda_z, grads);
    if (loss_out) *loss_out = loss;
    return grads;
}

}  // namespace

VarianceReport grad_variance_probe(const ToyTransformer& model, const Dataset& data,
                                   const std::vector<double>& t_grid, int n_batches, int batch,
                                   double lambda_z, uint64_t seed) {
    if (n_batches < 100) throw std::invalid_argument("grad_variance_probe: n_batches >= 100");
    if (t_grid.empty()) throw std::invalid_argument("grad_variance_probe: empty t grid");

    VarianceReport rep;
    rep.n_batches = n_batches;
    std::vector<double> dev_iid, dev_anti;

    for (int mode = 0; mode < 2; ++mode) {
        const bool anti = mode == 1;
        // pass 1: mean gradient
        std::vector<Matrix> mean_g = model.zero_grads();
        for (int b = 0; b < n_batches; ++b) {
            const auto g = probe_batch_grad(model, data, t_grid, batch, anti, lambda_z, seed, b,
                                            nullptr);
            for (size_t p = 0; p < g.size(); ++p) {
                for (size_t j = 0; j < g[p].size(); ++j) {
                    mean_g[p].data[j] += g[p].data[j] / n_batches;
                }
            }
        }
        // pass 2: squared deviations (same seeds replay the same batches)
        std::vector<double>& dev = anti ? dev_anti : dev_iid;
        for (int b = 0; b < n_batches; ++b) {
            const auto g = probe_batch_grad(model, data, t_grid, batch, anti, lambda_z, seed, b,
                                            nullptr);
            double d2 = 0.0;
            for (size_t p = 0; p < g.size(); ++p) {
                for (size_t j = 0; j < g[p].size(); ++j) {
                    const double d = g[p].data[j] - mean_g[p].data[j];
                    d2 += d * d;
                }
            }
            dev.push_back(d2);
        }
    }

    rep.iid_var = mean_of(dev_iid) * n_batches / (n_batches - 1);
    rep.anti_var = mean_of(dev_anti) * n_batches / (n_batches - 1);
    rep.p_value = welch_one_sided_p(dev_iid, dev_anti);
    const double ma = mean_of(dev_iid), mb = mean_of(dev_anti);
    const double se2 = var_of(dev_iid, ma) / n_batches + var_of(dev_anti, mb) / n_batches;
    rep.t_stat = se2 > 0.0 ? (ma - mb) / std::sqrt(se2) : 0.0;
    return rep;
}

}  // namespace mdm
