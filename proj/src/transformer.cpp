#include "mdm/transformer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace mdm {

namespace {

constexpr double kNormEps = 1e-6;

void rmsnorm_forward(const double* x, const double* w, int d, double* y, double* rms_out) {
    double ss = 0.0;
    for (int j = 0; j < d; ++j) ss += x[j] * x[j];
    const double r = std::sqrt(ss / d + kNormEps);
    for (int j = 0; j < d; ++j) y[j] = w[j] * x[j] / r;
    *rms_out = r;
}

// accumulates into dx and dw
void rmsnorm_backward(const double* x, const double* w, double r, const double* dy, int d,
                      double* dx, double* dw) {
    double dot = 0.0;
    for (int j = 0; j < d; ++j) dot += w[j] * dy[j] * x[j];
    const double r3 = r * r * r;
    for (int j = 0; j < d; ++j) {
        dx[j] += w[j] * dy[j] / r - x[j] * dot / (d * r3);
        dw[j] += dy[j] * x[j] / r;
    }
}

// y += W x, W is (out x in)
void linear_forward(const Matrix& W, const double* x, double* y) {
    for (int o = 0; o < W.rows; ++o) {
        const double* row = W.row(o);
        double acc = 0.0;
        for (int j = 0; j < W.cols; ++j) acc += row[j] * x[j];
        y[o] += acc;
    }
}

// dW += dy x^T; dx += W^T dy
void linear_backward(const Matrix& W, const double* x, const double* dy, Matrix& dW, double* dx) {
    for (int o = 0; o < W.rows; ++o) {
        const double g = dy[o];
        if (g == 0.0) continue;
        double* drow = dW.row(o);
        const double* row = W.row(o);
        for (int j = 0; j < W.cols; ++j) {
            drow[j] += g * x[j];
            dx[j] += row[j] * g;
        }
    }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

struct ToyTransformer::Cache {
    int L = 0;
    std::vector<bool> visible;
    Matrix x0;  // embeddings
    struct Layer {
        Matrix x_in, a, qkv_pre, q_n, k_n, q_r, k_r, attn_out, x_mid, b, g_pre, u_pre, act;
        std::vector<double> rms1, rms2;
        Matrix rms_q, rms_k;               // L x n_heads
        std::vector<Matrix> probs;         // per head, L x L
    };
    std::vector<Layer> layers;
    Matrix x_final, y;
    std::vector<double> rms_f;
};

ToyTransformer::ToyTransformer(UnifiedVocab vocab, ToyTransformerConfig config)
    : vocab_(std::move(vocab)), config_(config) {
    if (config_.d_emb % config_.n_heads != 0) {
        throw std::invalid_argument("d_emb must be divisible by n_heads");
    }
    const int d = config_.d_emb;
    const int dh = config_.head_dim();
    const int H = config_.hidden_dim();

    auto add = [&](const std::string& name, ModuleClass cls, int bucket, int rows, int cols) {
        params_.push_back({name, ParamGroup{cls, bucket}, Matrix(rows, cols)});
        return static_cast<int>(params_.size()) - 1;
    };

    const ModuleClass emb_cls[3] = {ModuleClass::emb_text, ModuleClass::emb_image,
                                    ModuleClass::emb_audio};
    const ModuleClass unemb_cls[3] = {ModuleClass::unemb_text, ModuleClass::unemb_image,
                                      ModuleClass::unemb_audio};
    for (int m = 0; m < 3; ++m) {
        const int rows = vocab_.table_rows(static_cast<Modality>(m));
        emb_[m] = add(std::string("emb.") + to_string(static_cast<Modality>(m)), emb_cls[m], -1,
                      rows, d);
        unemb_[m] = add(std::string("unemb.") + to_string(static_cast<Modality>(m)), unemb_cls[m],
                        -1, rows, d);
    }
    unemb_norm_ = add("unemb_norm", ModuleClass::unemb_norm, -1, 1, d);

    for (int l = 0; l < config_.n_layers; ++l) {
        const int bucket = (2 * l < config_.n_layers) ? 0 : 1;
        const std::string p = "layer." + std::to_string(l) + ".";
        LayerIdx idx;
        idx.norm1 = add(p + "norm1", ModuleClass::norm1, bucket, 1, d);
        idx.qkv = add(p + "attn_qkv", ModuleClass::attn_qkv, bucket, 3 * d, d);
        idx.q_norm = add(p + "attn_q_norm", ModuleClass::attn_q_norm, bucket, 1, dh);
        idx.k_norm = add(p + "attn_k_norm", ModuleClass::attn_k_norm, bucket, 1, dh);
        idx.proj = add(p + "attn_proj", ModuleClass::attn_proj, bucket, d, d);
        idx.norm2 = add(p + "norm2", ModuleClass::norm2, bucket, 1, d);
        idx.gate = add(p + "mlp_gate", ModuleClass::mlp_gate, bucket, H, d);
        idx.fc1 = add(p + "mlp_fc1", ModuleClass::mlp_fc1, bucket, H, d);
        idx.fc2 = add(p + "mlp_fc2", ModuleClass::mlp_fc2, bucket, d, H);
        layers_.push_back(idx);
    }
}

void ToyTransformer::init_weights(uint64_t seed, const MultiplierTable& mults) {
    Rng rng(seed);
    auto trunc_normal = [&](double std) {
        double x;
        do {
            x = rng.normal(0.0, std);
        } while (std::abs(x) > 2.0 * std);
        return x;
    };
    for (auto& p : params_) {
        const Multipliers m = mults.effective(p.group);
        const bool is_norm = p.value.rows == 1;
        for (auto& w : p.value.data) {
            w = is_norm ? m.init : m.init * trunc_normal(config_.init_std);
        }
    }
}

Logits ToyTransformer::forward(const std::vector<int>& tokens) const {
    return forward_impl(tokens, nullptr);
}

Logits ToyTransformer::forward_impl(const std::vector<int>& tokens, Cache* cache) const {
    const int L = static_cast<int>(tokens.size());
    const int d = config_.d_emb;
    const int nh = config_.n_heads;
    const int dh = config_.head_dim();
    const int H = config_.hidden_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    std::vector<bool> visible(L);
    for (int i = 0; i < L; ++i) {
        if (!vocab_.valid(tokens[i])) {
            throw std::invalid_argument("forward: token id out of range at position " +
                                        std::to_string(i));
        }
        visible[i] = !vocab_.is_pad(tokens[i]);
    }

    Matrix x(L, d);
    for (int i = 0; i < L; ++i) {
        const auto slot = vocab_.embed_slot(tokens[i]);
        const Matrix& table = P(emb_[static_cast<int>(slot.table)]);
        std::memcpy(x.row(i), table.row(slot.row), sizeof(double) * d);
    }
    if (cache) {
        cache->L = L;
        cache->visible = visible;
        cache->x0 = x;
        cache->layers.resize(layers_.size());
    }

    for (size_t l = 0; l < layers_.size(); ++l) {
        const LayerIdx& idx = layers_[l];
        Cache::Layer* cl = cache ? &cache->layers[l] : nullptr;
        if (cl) cl->x_in = x;

        // attention
        Matrix a(L, d);
        std::vector<double> rms1(L);
        for (int i = 0; i < L; ++i) {
            rmsnorm_forward(x.row(i), P(idx.norm1).row(0), d, a.row(i), &rms1[i]);
        }
        Matrix qkv(L, 3 * d);
        for (int i = 0; i < L; ++i) linear_forward(P(idx.qkv), a.row(i), qkv.row(i));

        Matrix q_n(L, d), k_n(L, d);
        Matrix rms_q(L, nh), rms_k(L, nh);
        for (int i = 0; i < L; ++i) {
            for (int h = 0; h < nh; ++h) {
                const double* q = qkv.row(i) + h * dh;
                const double* k = qkv.row(i) + d + h * dh;
                if (config_.qk_norm) {
                    rmsnorm_forward(q, P(idx.q_norm).row(0), dh, q_n.row(i) + h * dh,
                                    &rms_q(i, h));
                    rmsnorm_forward(k, P(idx.k_norm).row(0), dh, k_n.row(i) + h * dh,
                                    &rms_k(i, h));
                } else {
                    std::memcpy(q_n.row(i) + h * dh, q, sizeof(double) * dh);
                    std::memcpy(k_n.row(i) + h * dh, k, sizeof(double) * dh);
                }
            }
        }

        Matrix q_r = q_n, k_r = k_n;
        if (config_.use_rope) {
            for (int i = 0; i < L; ++i) {
                for (int h = 0; h < nh; ++h) {
                    double* q = q_r.row(i) + h * dh;
                    double* k = k_r.row(i) + h * dh;
                    for (int j = 0; j < dh / 2; ++j) {
                        const double theta =
                            i * std::pow(config_.rope_base, -2.0 * j / dh);
                        const double c = std::cos(theta), s = std::sin(theta);
                        const double q0 = q[2 * j], q1 = q[2 * j + 1];
                        q[2 * j] = q0 * c - q1 * s;
                        q[2 * j + 1] = q0 * s + q1 * c;
                        const double k0 = k[2 * j], k1 = k[2 * j + 1];
                        k[2 * j] = k0 * c - k1 * s;
                        k[2 * j + 1] = k0 * s + k1 * c;
                    }
                }
            }
        }

        Matrix attn_out(L, d);
        std::vector<Matrix> probs;
        if (cl) probs.resize(nh);
        for (int h = 0; h < nh; ++h) {
            Matrix p(L, L);
            for (int i = 0; i < L; ++i) {
                double mx = -1e300;
                std::vector<double> s(L, -1e300);
                for (int j = 0; j < L; ++j) {
                    if (!visible[j]) continue;
                    double acc = 0.0;
                    const double* qi = q_r.row(i) + h * dh;
                    const double* kj = k_r.row(j) + h * dh;
                    for (int c = 0; c < dh; ++c) acc += qi[c] * kj[c];
                    s[j] = acc * scale;
                    mx = std::max(mx, s[j]);
                }
                double z = 0.0;
                for (int j = 0; j < L; ++j) {
                    if (!visible[j]) continue;
                    p(i, j) = std::exp(s[j] - mx);
                    z += p(i, j);
                }
                for (int j = 0; j < L; ++j) {
                    if (visible[j]) p(i, j) /= z;
                }
                double* out = attn_out.row(i) + h * dh;
                for (int j = 0; j < L; ++j) {
                    if (!visible[j]) continue;
                    const double* vj = qkv.row(j) + 2 * d + h * dh;
                    for (int c = 0; c < dh; ++c) out[c] += p(i, j) * vj[c];
                }
            }
            if (cl) probs[h] = std::move(p);
        }

        Matrix x_mid = x;
        for (int i = 0; i < L; ++i) linear_forward(P(idx.proj), attn_out.row(i), x_mid.row(i));

        // MLP
        Matrix b(L, d);
        std::vector<double> rms2(L);
        for (int i = 0; i < L; ++i) {
            rmsnorm_forward(x_mid.row(i), P(idx.norm2).row(0), d, b.row(i), &rms2[i]);
        }
        Matrix g_pre(L, H), u_pre(L, H), act(L, H);
        for (int i = 0; i < L; ++i) {
            linear_forward(P(idx.gate), b.row(i), g_pre.row(i));
            linear_forward(P(idx.fc1), b.row(i), u_pre.row(i));
            for (int j = 0; j < H; ++j) {
                act(i, j) = g_pre(i, j) * sigmoid(g_pre(i, j)) * u_pre(i, j);
            }
        }
        Matrix x_out = x_mid;
        for (int i = 0; i < L; ++i) linear_forward(P(idx.fc2), act.row(i), x_out.row(i));

        if (cl) {
            cl->a = std::move(a);
            cl->rms1 = std::move(rms1);
            cl->qkv_pre = std::move(qkv);
            cl->q_n = std::move(q_n);
            cl->k_n = std::move(k_n);
            cl->rms_q = std::move(rms_q);
            cl->rms_k = std::move(rms_k);
            cl->q_r = std::move(q_r);
            cl->k_r = std::move(k_r);
            cl->probs = std::move(probs);
            cl->attn_out = std::move(attn_out);
            cl->x_mid = std::move(x_mid);
            cl->b = std::move(b);
            cl->rms2 = std::move(rms2);
            cl->g_pre = std::move(g_pre);
            cl->u_pre = std::move(u_pre);
            cl->act = std::move(act);
        }
        x = std::move(x_out);
    }

    Matrix y(L, d);
    std::vector<double> rms_f(L);
    for (int i = 0; i < L; ++i) {
        rmsnorm_forward(x.row(i), P(unemb_norm_).row(0), d, y.row(i), &rms_f[i]);
    }

    Logits logits(L, vocab_.size());
    for (int i = 0; i < L; ++i) {
        for (int v = 0; v < vocab_.size(); ++v) {
            const auto slot = vocab_.embed_slot(v);
            const double* row = P(unemb_[static_cast<int>(slot.table)]).row(slot.row);
            double acc = 0.0;
            for (int c = 0; c < d; ++c) acc += row[c] * y(i, c);
            logits(i, v) = acc;
        }
    }
    if (cache) {
        cache->x_final = std::move(x);
        cache->y = std::move(y);
        cache->rms_f = std::move(rms_f);
    }
    return logits;
}

void ToyTransformer::backward_impl(const std::vector<int>& tokens, const Cache& cache,
                                   const Matrix& dlogits, std::vector<Matrix>& grads) const {
    const int L = cache.L;
    const int d = config_.d_emb;
    const int nh = config_.n_heads;
    const int dh = config_.head_dim();
    const int H = config_.hidden_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const std::vector<bool>& visible = cache.visible;

    // unembedding
    Matrix dy(L, d);
    for (int i = 0; i < L; ++i) {
        for (int v = 0; v < vocab_.size(); ++v) {
            const double g = dlogits(i, v);
            if (g == 0.0) continue;
            const auto slot = vocab_.embed_slot(v);
            const int tbl = unemb_[static_cast<int>(slot.table)];
            const double* row = P(tbl).row(slot.row);
            double* drow = grads[tbl].row(slot.row);
            for (int c = 0; c < d; ++c) {
                dy(i, c) += g * row[c];
                drow[c] += g * cache.y(i, c);
            }
        }
    }

    Matrix dx(L, d);
    for (int i = 0; i < L; ++i) {
        rmsnorm_backward(cache.x_final.row(i), P(unemb_norm_).row(0), cache.rms_f[i], dy.row(i), d,
                         dx.row(i), grads[unemb_norm_].row(0));
    }

    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
        const LayerIdx& idx = layers_[l];
        const Cache::Layer& cl = cache.layers[l];

        // MLP: x_out = x_mid + fc2(act)
        Matrix dact(L, H);
        for (int i = 0; i < L; ++i) {
            // dx is d(x_out); residual flows through unchanged
            for (int o = 0; o < d; ++o) {
                const double g = dx(i, o);
                if (g == 0.0) continue;
                const double* row = P(idx.fc2).row(o);
                double* drow = grads[idx.fc2].row(o);
                for (int j = 0; j < H; ++j) {
                    dact(i, j) += row[j] * g;
                    drow[j] += g * cl.act(i, j);
                }
            }
        }
        Matrix db(L, d);
        for (int i = 0; i < L; ++i) {
            std::vector<double> dg(H), du(H);
            for (int j = 0; j < H; ++j) {
                const double g = cl.g_pre(i, j);
                const double sg = sigmoid(g);
                const double silu = g * sg;
                dg[j] = dact(i, j) * cl.u_pre(i, j) * sg * (1.0 + g * (1.0 - sg));
                du[j] = dact(i, j) * silu;
            }
            linear_backward(P(idx.gate), cl.b.row(i), dg.data(), grads[idx.gate], db.row(i));
            linear_backward(P(idx.fc1), cl.b.row(i), du.data(), grads[idx.fc1], db.row(i));
        }
        Matrix dx_mid = dx;  // residual branch
        for (int i = 0; i < L; ++i) {
            rmsnorm_backward(cl.x_mid.row(i), P(idx.norm2).row(0), cl.rms2[i], db.row(i), d,
                             dx_mid.row(i), grads[idx.norm2].row(0));
        }

        // attention: x_mid = x_in + proj(attn_out)
        Matrix dattn(L, d);
        for (int i = 0; i < L; ++i) {
            linear_backward(P(idx.proj), cl.attn_out.row(i), dx_mid.row(i), grads[idx.proj],
                            dattn.row(i));
        }

        Matrix dq_r(L, d), dk_r(L, d), dqkv(L, 3 * d);
        for (int h = 0; h < nh; ++h) {
            const Matrix& p = cl.probs[h];
            for (int i = 0; i < L; ++i) {
                const double* doi = dattn.row(i) + h * dh;
                // dp and v grads
                std::vector<double> dp(L, 0.0);
                double dot = 0.0;
                for (int j = 0; j < L; ++j) {
                    if (!visible[j]) continue;
                    const double* vj = cl.qkv_pre.row(j) + 2 * d + h * dh;
                    double acc = 0.0;
                    for (int c = 0; c < dh; ++c) acc += doi[c] * vj[c];
                    dp[j] = acc;
                    dot += p(i, j) * acc;
                    double* dvj = dqkv.row(j) + 2 * d + h * dh;
                    for (int c = 0; c < dh; ++c) dvj[c] += p(i, j) * doi[c];
                }
                for (int j = 0; j < L; ++j) {
                    if (!visible[j]) continue;
                    const double ds = p(i, j) * (dp[j] - dot) * scale;
                    if (ds == 0.0) continue;
                    const double* kj = cl.k_r.row(j) + h * dh;
                    const double* qi = cl.q_r.row(i) + h * dh;
                    double* dqi = dq_r.row(i) + h * dh;
                    double* dkj = dk_r.row(j) + h * dh;
                    for (int c = 0; c < dh; ++c) {
                        dqi[c] += ds * kj[c];
                        dkj[c] += ds * qi[c];
                    }
                }
            }
        }

        // rope backward (inverse rotation), then qk-norm backward
        Matrix dq_n = dq_r, dk_n = dk_r;
        if (config_.use_rope) {
            for (int i = 0; i < L; ++i) {
                for (int h = 0; h < nh; ++h) {
                    double* dq = dq_n.row(i) + h * dh;
                    double* dk = dk_n.row(i) + h * dh;
                    for (int j = 0; j < dh / 2; ++j) {
                        const double theta =
                            i * std::pow(config_.rope_base, -2.0 * j / dh);
                        const double c = std::cos(theta), s = std::sin(theta);
                        double g0 = dq[2 * j], g1 = dq[2 * j + 1];
                        dq[2 * j] = g0 * c + g1 * s;
                        dq[2 * j + 1] = -g0 * s + g1 * c;
                        g0 = dk[2 * j];
                        g1 = dk[2 * j + 1];
                        dk[2 * j] = g0 * c + g1 * s;
                        dk[2 * j + 1] = -g0 * s + g1 * c;
                    }
                }
            }
        }
        for (int i = 0; i < L; ++i) {
            for (int h = 0; h < nh; ++h) {
                if (config_.qk_norm) {
                    rmsnorm_backward(cl.qkv_pre.row(i) + h * dh, P(idx.q_norm).row(0),
                                     cl.rms_q(i, h), dq_n.row(i) + h * dh, dh,
                                     dqkv.row(i) + h * dh, grads[idx.q_norm].row(0));
                    rmsnorm_backward(cl.qkv_pre.row(i) + d + h * dh, P(idx.k_norm).row(0),
                                     cl.rms_k(i, h), dk_n.row(i) + h * dh, dh,
                                     dqkv.row(i) + d + h * dh, grads[idx.k_norm].row(0));
                } else {
                    for (int c = 0; c < dh; ++c) {
                        dqkv(i, h * dh + c) += dq_n(i, h * dh + c);
                        dqkv(i, d + h * dh + c) += dk_n(i, h * dh + c);
                    }
                }
            }
        }

        Matrix da(L, d);
        for (int i = 0; i < L; ++i) {
            linear_backward(P(idx.qkv), cl.a.row(i), dqkv.row(i), grads[idx.qkv], da.row(i));
        }
        Matrix dx_in = dx_mid;  // residual branch
        for (int i = 0; i < L; ++i) {
            rmsnorm_backward(cl.x_in.row(i), P(idx.norm1).row(0), cl.rms1[i], da.row(i), d,
                             dx_in.row(i), grads[idx.norm1].row(0));
        }
        dx = std::move(dx_in);
    }

    // embeddings
    for (int i = 0; i < L; ++i) {
        const auto slot = vocab_.embed_slot(tokens[i]);
        double* drow = grads[emb_[static_cast<int>(slot.table)]].row(slot.row);
        for (int c = 0; c < d; ++c) drow[c] += dx(i, c);
    }
}

std::vector<Matrix> ToyTransformer::zero_grads() const {
    std::vector<Matrix> g;
    g.reserve(params_.size());
    for (const auto& p : params_) g.emplace_back(p.value.rows, p.value.cols);
    return g;
}

double ToyTransformer::loss_and_grad(const std::vector<LossItem>& items, double lambda_z,
                                     std::vector<Matrix>& grads) const {
    const double inv_n = 1.0 / static_cast<double>(items.size());
    double total = 0.0;
    for (const auto& item : items) {
        Cache cache;
        Logits logits = forward_impl(*item.tokens_t, &cache);
        LossBreakdown lb =
            masked_loss(logits, *item.s0, *item.masked, item.weight, lambda_z);
        total += lb.total * inv_n;
        if (item.masked->empty()) continue;

        const double inv_m = 1.0 / static_cast<double>(item.masked->size());
        Matrix dlogits(logits.rows, logits.cols);
        size_t mi = 0;
        for (int i : *item.masked) {
            const double lse = lb.per_position[mi] + logits(i, (*item.s0)[i]);
            ++mi;
            for (int v = 0; v < logits.cols; ++v) {
                const double pv = std::exp(logits(i, v) - lse);
                double g = item.weight * inv_m * pv;
                if (v == (*item.s0)[i]) g -= item.weight * inv_m;
                g += 2.0 * lambda_z * lse * inv_m * pv;
                dlogits(i, v) = g * inv_n;
            }
        }
        backward_impl(*item.tokens_t, cache, dlogits, grads);
    }
    return total;
}

double ToyTransformer::loss_only(const std::vector<LossItem>& items, double lambda_z) const {
    const double inv_n = 1.0 / static_cast<double>(items.size());
    double total = 0.0;
    for (const auto& item : items) {
        Logits logits = forward(*item.tokens_t);
        total += masked_loss(logits, *item.s0, *item.masked, item.weight, lambda_z).total * inv_n;
    }
    return total;
}

long long ToyTransformer::num_params() const {
    long long n = 0;
    for (const auto& p : params_) n += static_cast<long long>(p.value.size());
    return n;
}

long long ToyTransformer::num_nonembed_params() const {
    long long n = 0;
    for (const auto& p : params_) {
        if (!is_embedding_module(p.group.cls)) n += static_cast<long long>(p.value.size());
    }
    return n;
}

int ToyTransformer::pidx(const std::string& name) const {
    for (size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) return static_cast<int>(i);
    }
    throw std::runtime_error("unknown parameter: " + name);
}

void ToyTransformer::save(const std::string& path) const {
    nlohmann::json header;
    header["version"] = 1;
    header["config"] = {
        {"n_layers", config_.n_layers},       {"d_emb", config_.d_emb},
        {"n_heads", config_.n_heads},         {"swiglu_factor", config_.swiglu_factor},
        {"rope_base", config_.rope_base},     {"qk_norm", config_.qk_norm},
        {"use_rope", config_.use_rope},       {"init_std", config_.init_std},
        {"width_depth_ratio", config_.width_depth_ratio()},
    };
    header["vocab"] = vocab_.to_json();
    nlohmann::json plist = nlohmann::json::array();
    for (const auto& p : params_) {
        plist.push_back({{"name", p.name},
                         {"rows", p.value.rows},
                         {"cols", p.value.cols},
                         {"group", to_string(p.group.cls)},
                         {"depth_bucket", p.group.depth_bucket}});
    }
    header["params"] = plist;
    const std::string hs = header.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    f.write("MDMCKPT1", 8);
    const uint64_t hlen = hs.size();
    f.write(reinterpret_cast<const char*>(&hlen), 8);
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& p : params_) {
        f.write(reinterpret_cast<const char*>(p.value.data.data()),
                static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    }
}

ToyTransformer ToyTransformer::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    f.read(magic, 8);
    if (std::string(magic, 8) != "MDMCKPT1") throw std::runtime_error("bad checkpoint magic");
    uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 8);
    std::string hs(hlen, '\0');
    f.read(hs.data(), static_cast<std::streamsize>(hlen));
    const auto header = nlohmann::json::parse(hs);

    UnifiedVocab vocab = UnifiedVocab::from_json(header.at("vocab"));
    const auto& jc = header.at("config");
    ToyTransformerConfig cfg;
    cfg.n_layers = jc.at("n_layers");
    cfg.d_emb = jc.at("d_emb");
    cfg.n_heads = jc.at("n_heads");
    cfg.swiglu_factor = jc.at("swiglu_factor");
    cfg.rope_base = jc.at("rope_base");
    cfg.qk_norm = jc.at("qk_norm");
    cfg.use_rope = jc.at("use_rope");
    cfg.init_std = jc.at("init_std");

    ToyTransformer model(vocab, cfg);
    const auto& plist = header.at("params");
    if (plist.size() != model.params_.size()) throw std::runtime_error("checkpoint param count mismatch");
    for (size_t i = 0; i < model.params_.size(); ++i) {
        auto& p = model.params_[i];
        if (plist[i].at("name") != p.name || plist[i].at("rows") != p.value.rows ||
            plist[i].at("cols") != p.value.cols) {
            throw std::runtime_error("checkpoint shape mismatch at " + p.name);
        }
        f.read(reinterpret_cast<char*>(p.value.data.data()),
               static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("truncated checkpoint: " + path);
    return model;
}

}  // namespace mdm
