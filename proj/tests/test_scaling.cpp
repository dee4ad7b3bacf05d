#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>

#include "mdm/fitting.hpp"
#include "mdm/rng.hpp"
#include "mdm/scaling_laws.hpp"

using namespace mdm;

namespace {

// Planted loss-law parameters used across the fitter tests.
constexpr double kE = 1.2, kA = 0.5, kB = 300.0, ka = 0.14, kb = 0.17;

double planted_loss(double n_b, double d_b) {
    return kE + std::pow(kA * std::pow(n_b, -ka / kb) + kB / d_b, kb);
}

std::vector<RunRecord> planted_records(int n, double noise, uint64_t seed) {
    Rng rng(seed);
    std::vector<RunRecord> recs;
    for (int i = 0; i < n; ++i) {
        const double n_b = std::pow(10.0, rng.uniform(-2.0, 1.5));   // 1e-2..~30 B params
        const double d_b = std::pow(10.0, rng.uniform(0.0, 3.0));    // 1..1000 B tokens
        RunRecord r;
        r.n_nonembed = n_b * 1e9;
        r.n_total = r.n_nonembed * 1.1;
        r.d_tokens = d_b * 1e9;
        r.final_loss = planted_loss(n_b, d_b) * (1.0 + noise * rng.normal());
        recs.push_back(r);
    }
    return recs;
}

}  // namespace

TEST_CASE("noiseless planted data is recovered to high precision") {
    const auto fit = fit_power_law(planted_records(60, 0.0, 3), LawForm::kaplan, 48, 5, 21);
    CHECK(fit.e == doctest::Approx(kE).epsilon(1e-6));
    CHECK(fit.a_coef == doctest::Approx(kA).epsilon(1e-6));
    CHECK(fit.b_coef == doctest::Approx(kB).epsilon(1e-6));
    CHECK(fit.a_exp == doctest::Approx(ka).epsilon(1e-6));
    CHECK(fit.b_exp == doctest::Approx(kb).epsilon(1e-6));
    CHECK(fit.r2 > 0.999999);
}

TEST_CASE("fitter rejects thin data") {
    CHECK_THROWS_AS(fit_power_law(planted_records(8, 0.0, 3), LawForm::kaplan),
                    std::invalid_argument);
    auto recs = planted_records(20, 0.0, 3);
    for (auto& r : recs) r.n_nonembed = 1e9;  // collapse the N axis
    try {
        fit_power_law(recs, LawForm::kaplan);
        FAIL("expected ill-posed error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("N spans") != std::string::npos);
    }
}

TEST_CASE("additive form fits kaplan data strictly worse") {
    const auto recs = planted_records(120, 0.005, 5);
    const auto kap = fit_power_law(recs, LawForm::kaplan, 32, 10, 9);
    const auto add = fit_power_law(recs, LawForm::additive, 32, 10, 9);
    CHECK(kap.mre_heldout < add.mre_heldout);
}

TEST_CASE("d_star closed form matches numeric frontier minimization") {
    const auto fit = fit_power_law(planted_records(60, 0.0, 3), LawForm::kaplan, 48, 5, 21);
    CHECK(fit.frontier_exponent() == doctest::Approx(ka / kb).epsilon(1e-4));
    for (double n : {1e-2, 1.0, 1e2}) {
        // numeric: minimize predicted loss over D at the compute budget 6*N*D
        // implied by the closed form, then compare token counts
        const double d_closed = d_star_of_n(fit, n);
        const double c = 6.0 * n * d_closed;  // billions^2 budget
        const double ln_d = golden_section_min(
            [&](double ld) {
                const double d = std::exp(ld);
                return fit.predict(c / (6.0 * d), d);
            },
            std::log(d_closed) - 5.0, std::log(d_closed) + 5.0, 1e-12);
        CHECK(d_closed == doctest::Approx(std::exp(ln_d)).epsilon(0.005));
    }
}

TEST_CASE("linear frontier when a equals b") {
    ScalingFit fit;
    fit.form = LawForm::kaplan;
    fit.e = 1.0;
    fit.a_coef = 2.0;
    fit.b_coef = 10.0;
    fit.a_exp = 0.15;
    fit.b_exp = 0.15;
    CHECK(d_star_of_n(fit, 2.0) / d_star_of_n(fit, 1.0) == doctest::Approx(2.0));
    CHECK(fit.tau() == doctest::Approx(0.5));
}

TEST_CASE("compute_optimal closed form vs bracketed search over 4 decades") {
    const auto fit = fit_power_law(planted_records(60, 0.0, 3), LawForm::kaplan, 48, 5, 21);
    FlopsModel closed;  // six_n -> closed form
    FlopsModel numeric;
    numeric.mode = FlopsModel::Mode::detailed;
    numeric.vocab_size = 0.0;  // detailed with zero embeddings == 6N, via the search path
    for (double c = 1e20; c <= 1e24; c *= 10.0) {
        const auto a = compute_optimal(fit, c, closed);
        const auto b = compute_optimal(fit, c, numeric);
        CHECK(a.n_star == doctest::Approx(b.n_star).epsilon(1e-3));
        CHECK(a.d_star == doctest::Approx(b.d_star).epsilon(1e-3));
        CHECK(6.0 * a.n_star * a.d_star == doctest::Approx(c).epsilon(1e-6));
    }
}

TEST_CASE("tau exponent from a log-log regression of N*(C)") {
    const auto fit = fit_power_law(planted_records(60, 0.0, 3), LawForm::kaplan, 48, 5, 21);
    FlopsModel fm;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (double c = 1e20; c <= 1e23; c *= 1.5) {
        const double x = std::log(c);
        const double y = std::log(compute_optimal(fit, c, fm).n_star);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == doctest::Approx(kb / (ka + kb)).epsilon(0.005));
}

TEST_CASE("detailed flops model includes embeddings and stays monotone") {
    FlopsModel fm;
    fm.mode = FlopsModel::Mode::detailed;
    fm.vocab_size = 117708.0;
    fm.rho = 128.0;
    CHECK(fm.flops_per_token(1e9) > 6e9);
    double prev = 0.0;
    for (double n = 1e6; n < 1e12; n *= 3.0) {
        const double c = fm.flops_per_token(n);
        CHECK(c > prev);
        prev = c;
    }
}

TEST_CASE("iso-loss contours") {
    const auto fit = fit_power_law(planted_records(60, 0.0, 3), LawForm::kaplan, 48, 5, 21);
    const auto curves = iso_curves(fit, {fit.e, fit.e + 1.0}, 1e-2, 1e2, 32);
    REQUIRE(curves.size() == 2);
    CHECK(curves[0].points.empty());  // level at E is unreachable
    CHECK_FALSE(curves[1].points.empty());
    for (const auto& [n, d] : curves[1].points) {
        CHECK(fit.predict(n, d) == doctest::Approx(fit.e + 1.0).epsilon(1e-9));
    }
}

TEST_CASE("iso-flops curves are U-shaped with argmin at the optimum") {
    const auto fit = fit_power_law(planted_records(60, 0.0, 3), LawForm::kaplan, 48, 5, 21);
    FlopsModel fm;
    const auto curves = iso_flops(fit, {1e21}, fm, 97);
    REQUIRE(curves.size() == 1);
    const auto& c = curves[0];
    REQUIRE(c.argmin > 0);
    REQUIRE(c.argmin < static_cast<int>(c.points.size()) - 1);
    // decreasing to the argmin, increasing after
    for (int i = 1; i <= c.argmin; ++i) CHECK(c.points[i][2] <= c.points[i - 1][2]);
    for (int i = c.argmin + 1; i < static_cast<int>(c.points.size()); ++i) {
        CHECK(c.points[i][2] >= c.points[i - 1][2]);
    }
    const auto opt = compute_optimal(fit, 1e21, fm);
    const double n_grid = c.points[c.argmin][0] * 1e9;
    CHECK(std::abs(std::log(n_grid / opt.n_star)) < std::log(c.points[1][0] / c.points[0][0]) * 1.5);
}

TEST_CASE("predictions respect the floor and monotonicity") {
    const auto fit = fit_power_law(planted_records(60, 0.0, 3), LawForm::kaplan, 48, 5, 21);
    for (double n : {0.01, 0.5, 7.0}) {
        for (double d : {1.0, 30.0, 800.0}) {
            CHECK(fit.predict(n, d) > fit.e);
            CHECK(fit.predict(n * 2, d) < fit.predict(n, d));
            CHECK(fit.predict(n, d * 2) < fit.predict(n, d));
        }
    }
}

TEST_CASE("run record serialization roundtrips through jsonl") {
    std::vector<RunRecord> recs = planted_records(12, 0.0, 5);
    recs[0].batch = 8;
    recs[0].seq_len = 24;
    recs[0].steps = 100;
    recs[0].seed = 42;
    recs[0].schedule = "linear";
    const std::string path = "runs_roundtrip_test.jsonl";
    save_run_records_jsonl(path, recs);
    const auto loaded = load_run_records(path);
    std::remove(path.c_str());
    REQUIRE(loaded.size() == recs.size());
    CHECK(loaded[0].n_nonembed == recs[0].n_nonembed);
    CHECK(loaded[0].final_loss == recs[0].final_loss);
    CHECK(loaded[0].schedule == "linear");
    CHECK(loaded[0].seed == 42);
}

TEST_CASE("csv ingestion") {
    const std::string path = "runs_csv_test.csv";
    FILE* f = fopen(path.c_str(), "w");
    fputs("n_nonembed,n_total,d_tokens,loss\n1e8,1.2e8,5e9,2.31\n2e9,2.2e9,7e10,1.98\n", f);
    fclose(f);
    const auto recs = load_run_records(path);
    std::remove(path.c_str());
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].n_nonembed == doctest::Approx(1e8));
    CHECK(recs[1].final_loss == doctest::Approx(1.98));
}

TEST_CASE("scaling fit json roundtrip") {
    auto fit = fit_power_law(planted_records(30, 0.0, 3), LawForm::kaplan, 16, 3, 21);
    const auto j = fit.to_json();
    const auto back = ScalingFit::from_json(j);
    CHECK(back.e == fit.e);
    CHECK(back.a_exp == fit.a_exp);
    CHECK(back.bootstrap.size() == fit.bootstrap.size());
    CHECK(j.at("tau").get<double>() == doctest::Approx(fit.tau()));
}
