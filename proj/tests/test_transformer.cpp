#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>

#include "mdm/forward_process.hpp"
#include "mdm/transformer.hpp"

using namespace mdm;

namespace {

ToyTransformer make_model(bool use_rope = true, uint64_t seed = 17) {
    ToyTransformerConfig cfg;
    cfg.n_layers = 2;
    cfg.d_emb = 16;
    cfg.n_heads = 4;
    cfg.use_rope = use_rope;
    ToyTransformer model(UnifiedVocab::build({5, 4, 3}), cfg);
    model.init_weights(seed);
    return model;
}

}  // namespace

TEST_CASE("forward output shape and finiteness") {
    auto model = make_model();
    const auto& v = model.vocab();
    const auto s = assemble_pair(v, TaskKind::image_text, {5, 6, 7}, {0, 1}, 12);
    const Logits l = model.forward(s.tokens);
    CHECK(l.rows == 12);
    CHECK(l.cols == v.size());
    for (double x : l.data) CHECK(std::isfinite(x));
}

TEST_CASE("invalid token id rejected") {
    auto model = make_model();
    CHECK_THROWS_AS(model.forward({0, model.vocab().size()}), std::invalid_argument);
}

TEST_CASE("full permutation equivariance with RoPE disabled") {
    auto model = make_model(/*use_rope=*/false);
    const auto& v = model.vocab();
    std::vector<int> tokens = {v.task(TaskKind::text), 0, 1, 2, 3, 4, 0, 1};
    const Logits base = model.forward(tokens);

    std::vector<int> permuted = tokens;
    std::swap(permuted[2], permuted[5]);
    const Logits perm = model.forward(permuted);
    for (int vcol = 0; vcol < base.cols; ++vcol) {
        CHECK(perm(2, vcol) == doctest::Approx(base(5, vcol)).epsilon(1e-12));
        CHECK(perm(5, vcol) == doctest::Approx(base(2, vcol)).epsilon(1e-12));
        CHECK(perm(3, vcol) == doctest::Approx(base(3, vcol)).epsilon(1e-12));
    }
}

TEST_CASE("RoPE breaks permutation symmetry") {
    auto model = make_model(/*use_rope=*/true);
    const auto& v = model.vocab();
    std::vector<int> tokens = {v.task(TaskKind::text), 0, 1, 2, 3};
    const Logits base = model.forward(tokens);
    std::vector<int> permuted = tokens;
    std::swap(permuted[1], permuted[4]);
    const Logits perm = model.forward(permuted);
    double max_diff = 0.0;
    for (int c = 0; c < base.cols; ++c) {
        max_diff = std::max(max_diff, std::abs(perm(1, c) - base(4, c)));
    }
    CHECK(max_diff > 1e-8);
}

TEST_CASE("appended pads leave non-pad logits untouched") {
    auto model = make_model();
    const auto& v = model.vocab();
    const auto s = assemble_pair(v, TaskKind::audio_text, {9, 10}, {0, 1}, 9);   // no pads
    const auto sp = assemble_pair(v, TaskKind::audio_text, {9, 10}, {0, 1}, 14);  // 5 pads
    const Logits a = model.forward(s.tokens);
    const Logits b = model.forward(sp.tokens);
    for (int i = 0; i < 9; ++i) {
        for (int c = 0; c < a.cols; ++c) {
            CHECK(b(i, c) == doctest::Approx(a(i, c)).epsilon(1e-12));
        }
    }
}

TEST_CASE("analytic gradients match finite differences") {
    auto model = make_model();
    const auto& v = model.vocab();
    const auto s = assemble_pair(v, TaskKind::image_text, {5, 6, 7, 8}, {0, 1, 2}, 14);
    Rng rng(23);
    const auto c1 = corrupt(v, s, 0.6, MaskSchedule::linear(), rng);
    const auto c2 = corrupt(v, s, 0.3, MaskSchedule::linear(), rng);
    std::vector<LossItem> items = {
        {&c1.tokens_t, &c1.base.tokens, &c1.masked, elbo_weight(0.6, MaskSchedule::linear())},
        {&c2.tokens_t, &c2.base.tokens, &c2.masked, elbo_weight(0.3, MaskSchedule::linear())},
    };
    const double lambda_z = 1e-5;
    auto grads = model.zero_grads();
    model.loss_and_grad(items, lambda_z, grads);

    Rng probe_rng(31);
    const double h = 1e-6;
    for (int probe = 0; probe < 12; ++probe) {
        const size_t pi = probe_rng.index(model.params().size());
        auto& p = model.params()[pi];
        const size_t j = probe_rng.index(p.value.size());
        const double orig = p.value.data[j];
        p.value.data[j] = orig + h;
        const double fp = model.loss_only(items, lambda_z);
        p.value.data[j] = orig - h;
        const double fm = model.loss_only(items, lambda_z);
        p.value.data[j] = orig;
        const double fd = (fp - fm) / (2 * h);
        const double an = grads[pi].data[j];
        CHECK(an == doctest::Approx(fd).epsilon(1e-3));
    }
}

TEST_CASE("empty mask set contributes nothing") {
    auto model = make_model();
    const auto& v = model.vocab();
    const auto s = assemble_pair(v, TaskKind::image_text, {5, 6}, {0}, 10);
    const std::vector<int> none;
    std::vector<LossItem> items = {{&s.tokens, &s.tokens, &none, 1.0}};
    auto grads = model.zero_grads();
    const double loss = model.loss_and_grad(items, 1e-5, grads);
    CHECK(loss == 0.0);
    for (const auto& g : grads) {
        for (double x : g.data) CHECK(x == 0.0);
    }
}

TEST_CASE("parameter counts split embeddings from the rest") {
    auto model = make_model();
    long long total = 0, emb = 0;
    for (const auto& p : model.params()) {
        total += static_cast<long long>(p.value.size());
        if (is_embedding_module(p.group.cls)) emb += static_cast<long long>(p.value.size());
    }
    CHECK(model.num_params() == total);
    CHECK(model.num_nonembed_params() == total - emb);
    CHECK(emb > 0);
}

TEST_CASE("init multipliers scale initial weights") {
    ToyTransformerConfig cfg;
    cfg.n_layers = 2;
    cfg.d_emb = 16;
    cfg.n_heads = 4;
    const auto vocab = UnifiedVocab::build({5, 4, 3});
    ToyTransformer a(vocab, cfg), b(vocab, cfg);
    MultiplierTable scaled = MultiplierTable::identity();
    scaled.module[ModuleClass::attn_qkv].init = 2.0;
    a.init_weights(99, MultiplierTable::identity());
    b.init_weights(99, scaled);
    for (size_t i = 0; i < a.params().size(); ++i) {
        const auto& pa = a.params()[i];
        const auto& pb = b.params()[i];
        const double f = pa.group.cls == ModuleClass::attn_qkv ? 2.0 : 1.0;
        for (size_t j = 0; j < pa.value.size(); ++j) {
            CHECK(pb.value.data[j] == doctest::Approx(f * pa.value.data[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("checkpoint roundtrip is bit-exact") {
    auto model = make_model();
    const std::string path = "ckpt_roundtrip_test.bin";
    model.save(path);
    auto loaded = ToyTransformer::load(path);
    std::remove(path.c_str());
    REQUIRE(loaded.params().size() == model.params().size());
    for (size_t i = 0; i < model.params().size(); ++i) {
        CHECK(loaded.params()[i].name == model.params()[i].name);
        CHECK(loaded.params()[i].value.data == model.params()[i].value.data);
    }
    const auto s = assemble_pair(model.vocab(), TaskKind::image_text, {5, 6}, {0}, 10);
    const Logits la = model.forward(s.tokens);
    const Logits lb = loaded.forward(s.tokens);
    CHECK(la.data == lb.data);
}

TEST_CASE("depth buckets split layers in half") {
    auto model = make_model();
    for (const auto& p : model.params()) {
        if (p.name.rfind("layer.0.", 0) == 0) CHECK(p.group.depth_bucket == 0);
        if (p.name.rfind("layer.1.", 0) == 0) CHECK(p.group.depth_bucket == 1);
        if (!is_block_module(p.group.cls)) CHECK(p.group.depth_bucket == -1);
    }
}
