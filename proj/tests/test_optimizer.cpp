#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "mdm/optimizer.hpp"

using namespace mdm;

namespace {

ToyTransformer tiny_model(uint64_t seed = 5) {
    ToyTransformerConfig cfg;
    cfg.n_layers = 2;
    cfg.d_emb = 8;
    cfg.n_heads = 2;
    ToyTransformer m(UnifiedVocab::build({3, 2, 2}), cfg);
    m.init_weights(seed);
    return m;
}

}  // namespace

TEST_CASE("zero gradients with zero weight decay leave parameters fixed") {
    auto model = tiny_model();
    auto before = model.params();
    AdamWHyper hyper;
    hyper.weight_decay = 0.0;
    AdamW opt(model, hyper);
    auto grads = model.zero_grads();
    opt.step(model, grads, hyper.lr);
    for (size_t i = 0; i < before.size(); ++i) {
        CHECK(model.params()[i].value.data == before[i].value.data);
    }
}

TEST_CASE("first step moves by -lr to first order") {
    auto model = tiny_model();
    AdamWHyper hyper;
    hyper.weight_decay = 0.0;
    hyper.lr = 1e-3;
    AdamW opt(model, hyper);
    auto grads = model.zero_grads();
    const double w0 = model.params()[0].value.data[0];
    grads[0].data[0] = 1.0;
    opt.step(model, grads, hyper.lr);
    // bias-corrected mhat = vhat^(1/2) = 1 on the first step
    const double expect = w0 - hyper.lr * (1.0 / (1.0 + hyper.eps));
    CHECK(model.params()[0].value.data[0] == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("lr multiplier doubles the group's first-step update") {
    auto a = tiny_model(7);
    auto b = tiny_model(7);
    AdamWHyper hyper;
    hyper.weight_decay = 0.0;
    MultiplierTable doubled = MultiplierTable::identity();
    doubled.module[a.params()[0].group.cls].lr = 2.0;
    AdamW opt_a(a, hyper), opt_b(b, hyper, doubled);
    auto ga = a.zero_grads();
    auto gb = b.zero_grads();
    ga[0].data[0] = gb[0].data[0] = 0.3;
    const double wa = a.params()[0].value.data[0];
    const double wb = b.params()[0].value.data[0];
    opt_a.step(a, ga, hyper.lr);
    opt_b.step(b, gb, hyper.lr);
    const double da = a.params()[0].value.data[0] - wa;
    const double db = b.params()[0].value.data[0] - wb;
    CHECK(db == doctest::Approx(2.0 * da).epsilon(1e-12));
}

TEST_CASE("decoupled weight decay shrinks weights multiplicatively") {
    auto model = tiny_model();
    AdamWHyper hyper;
    hyper.weight_decay = 0.1;
    hyper.lr = 1e-2;
    AdamW opt(model, hyper);
    const double w0 = model.params()[0].value.data[0];
    auto grads = model.zero_grads();
    opt.step(model, grads, hyper.lr);
    CHECK(model.params()[0].value.data[0] ==
          doctest::Approx(w0 * (1.0 - hyper.lr * hyper.weight_decay)).epsilon(1e-12));
}

TEST_CASE("non-finite gradient names the parameter") {
    auto model = tiny_model();
    AdamW opt(model, AdamWHyper{});
    auto grads = model.zero_grads();
    grads[3].data[0] = std::numeric_limits<double>::quiet_NaN();
    try {
        opt.step(model, grads, 1e-3);
        FAIL("expected throw");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(model.params()[3].name) != std::string::npos);
    }
}

TEST_CASE("effective beta semantics") {
    CHECK(effective_beta(0.9, 1.0) == doctest::Approx(0.9));
    CHECK(effective_beta(0.9, 2.0) == doctest::Approx(0.8));   // halved half-life
    CHECK(effective_beta(0.9, 0.5) == doctest::Approx(0.95));  // doubled half-life
    CHECK(effective_beta(0.9, 20.0) == 0.0);                   // clipped low
    CHECK(effective_beta(0.999, 1e-9) == doctest::Approx(1.0 - 1e-6));  // clipped high
}

TEST_CASE("lr schedule: warmup cap and cosine tail") {
    const auto s = LrSchedule::standard(1e-3, 10000);
    CHECK(s.warmup_steps == 1000);  // min(1000, 2500)
    CHECK(s.lr_at(0) == doctest::Approx(1e-3 / 1000));
    CHECK(s.lr_at(999) == doctest::Approx(1e-3));
    CHECK(s.lr_at(9999) == doctest::Approx(1e-6).epsilon(1e-3));
    // monotone decay after warmup
    double prev = s.lr_at(1000);
    for (int k = 1100; k < 10000; k += 500) {
        CHECK(s.lr_at(k) < prev);
        prev = s.lr_at(k);
    }

    const auto small = LrSchedule::standard(1e-3, 100);
    CHECK(small.warmup_steps == 25);  // 25% cap binds
}
