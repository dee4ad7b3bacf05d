#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "mdm/forward_process.hpp"

using namespace mdm;

namespace {

// One long maskable text sequence for marginal statistics.
Sequence big_text_sequence(const UnifiedVocab& v, int n) {
    std::vector<int> stream(n, v.payload_begin(Modality::text));
    return pack_text(v, stream, n + 1);
}

}  // namespace

TEST_CASE("corrupt masks everything at t=1 and validates t") {
    const auto v = UnifiedVocab::build({5, 4, 3});
    const auto s = assemble_pair(v, TaskKind::image_text, {5, 6, 7}, {0, 1}, 12);
    Rng rng(1);
    const auto c = corrupt(v, s, 1.0, MaskSchedule::linear(), rng);
    int n_maskable = 0;
    for (bool b : s.maskable) n_maskable += b;
    CHECK(static_cast<int>(c.masked.size()) == n_maskable);
    for (int i : c.masked) {
        CHECK(s.maskable[i]);
        CHECK(c.tokens_t[i] == v.mask(*v.modality_of(s.tokens[i])));
    }
    CHECK_THROWS_AS(corrupt(v, s, 0.0, MaskSchedule::linear(), rng), std::invalid_argument);
    CHECK_THROWS_AS(corrupt(v, s, 1.5, MaskSchedule::linear(), rng), std::invalid_argument);
}

TEST_CASE("mask tokens are per-modality") {
    const auto v = UnifiedVocab::build({5, 4, 3});
    const auto s = assemble_pair(v, TaskKind::audio_text, {9, 10}, {0, 1}, 12);
    Rng rng(3);
    const auto c = corrupt(v, s, 1.0, MaskSchedule::linear(), rng);
    CHECK(c.tokens_t[2] == v.mask(Modality::audio));
    CHECK(c.tokens_t[6] == v.mask(Modality::text));
}

TEST_CASE("binomial concentration of the mask count") {
    const auto v = UnifiedVocab::build({5, 4, 3});
    const auto s = big_text_sequence(v, 10000);
    Rng rng(7);
    const auto c = corrupt(v, s, 0.5, MaskSchedule::linear(), rng);
    // 3 sigma of Binomial(1e4, 0.5)
    CHECK(std::abs(static_cast<double>(c.masked.size()) - 5000.0) <= 150.0);
}

TEST_CASE("empirical marginals track every schedule") {
    const auto v = UnifiedVocab::build({5, 4, 3});
    const auto s = big_text_sequence(v, 10000);
    const MaskSchedule scheds[] = {MaskSchedule::linear(), MaskSchedule::cosine(),
                                   MaskSchedule::polynomial(2.0), MaskSchedule::geometric(20.0)};
    for (const auto& sched : scheds) {
        for (double t : {0.2, 0.6, 0.9}) {
            Rng rng(11);
            const auto c = corrupt(v, s, t, sched, rng);
            const double p = sched.mask_fraction(t);
            const double sigma = std::sqrt(10000.0 * p * (1 - p));
            CHECK(std::abs(c.masked.size() - 10000.0 * p) <= 3.0 * sigma + 1.0);
        }
    }
}

TEST_CASE("monotone coupling with shared uniforms") {
    const auto v = UnifiedVocab::build({5, 4, 3});
    const auto s = big_text_sequence(v, 500);
    Rng rng(5);
    const auto u = draw_position_uniforms(s, rng);
    const auto sched = MaskSchedule::cosine();
    std::vector<int> prev;
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.95}) {
        const auto c = corrupt_with_uniforms(v, s, t, sched, u);
        for (int i : prev) {
            CHECK(c.is_masked(i));  // earlier mask sets are nested in later ones
        }
        prev = c.masked;
    }
}

TEST_CASE("anti-mask pair partitions the maskable set") {
    const auto v = UnifiedVocab::build({5, 4, 3});
    const auto s = assemble_pair(v, TaskKind::image_text, {5, 6, 7, 8}, {0, 1, 2}, 16);
    Rng rng(9);
    const auto [first, second] = anti_mask_pair(v, s, 0.5, MaskSchedule::linear(), rng);
    std::vector<bool> covered(s.length(), false);
    for (int i : first.masked) {
        CHECK_FALSE(covered[i]);
        covered[i] = true;
    }
    for (int i : second.masked) {
        CHECK_FALSE(covered[i]);
        covered[i] = true;
    }
    for (int i = 0; i < s.length(); ++i) CHECK(covered[i] == s.maskable[i]);
}

TEST_CASE("anti-mask degenerate complement at t=1") {
    const auto v = UnifiedVocab::build({5, 4, 3});
    const auto s = assemble_pair(v, TaskKind::image_text, {5, 6}, {0}, 10);
    Rng rng(13);
    const auto [first, second] = anti_mask_pair(v, s, 1.0, MaskSchedule::linear(), rng);
    CHECK(second.masked.empty());
    CHECK(first.masked.size() == 3);
}

TEST_CASE("posterior pi values") {
    const auto lin = MaskSchedule::linear();
    CHECK(posterior_pi(0.5, 0.01, lin) == doctest::Approx(0.02));
    CHECK(posterior_pi(0.01, 0.01, lin) == doctest::Approx(1.0));  // first step
    CHECK(posterior_pi_continuous(0.25, lin) == doctest::Approx(4.0));
    CHECK_THROWS_AS(posterior_pi(0.01, 0.02, lin), std::invalid_argument);
}

TEST_CASE("elbo weights") {
    const auto lin = MaskSchedule::linear();
    CHECK(elbo_weight(0.5, lin) == doctest::Approx(2.0));
    CHECK(elbo_weight(1.0, lin) == doctest::Approx(1.0));
    CHECK(elbo_weight(0.5, MaskSchedule::polynomial(2.0)) == doctest::Approx(4.0));
    CHECK_THROWS_AS(elbo_weight(1e-4, lin), std::invalid_argument);
    // generalized weight agrees with finite differences of alpha_bar
    const auto cos = MaskSchedule::cosine();
    const double t = 0.4, h = 1e-6;
    const double fd = -(cos.alpha_bar(t + h) - cos.alpha_bar(t - h)) / (2 * h);
    CHECK(elbo_weight(t, cos) == doctest::Approx(fd / (1.0 - cos.alpha_bar(t))).epsilon(1e-6));
}
