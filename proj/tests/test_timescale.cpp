#include <cmath>
#include <vector>

#include "doctest.h"
#include "powerlines/timescale.hpp"

using namespace powerlines;

namespace {

RunRecord make_run(const std::string& id, std::int64_t n, std::int64_t d,
                   std::int64_t batch_seq, double eta, double lambda, double loss) {
    RunRecord r;
    r.run_id = id;
    r.n_params = n;
    r.d_tokens = d;
    r.batch_sequences = batch_seq;
    r.seq_len = 2048;
    r.eta_peak = eta;
    r.weight_decay = lambda;
    r.val_loss = loss;
    return r;
}

TauLaw make_law(double c, double m, double tpp_lo = 10.0, double tpp_hi = 320.0) {
    TauLaw law;
    law.law.coeff = c;
    law.law.exponent = m;
    law.law.r_squared = 1.0;
    law.fit_points = {{tpp_lo, c * std::pow(tpp_lo, m), 0, 0},
                      {tpp_hi, c * std::pow(tpp_hi, m), 0, 0}};
    return law;
}

}  // namespace

TEST_CASE("tau_ema identity and the 610M/20TPP setting") {
    CHECK(tau_ema(1.0, 1.0, 1.0, 1.0) == 1.0);
    CHECK(tau_ema(252.0 * 2048.0, 2.025e-3, 0.1, 12.1e9) ==
          doctest::Approx(0.2106299).epsilon(1e-6));
    CHECK_THROWS_AS(tau_ema(252.0 * 2048.0, 2.025e-3, 0.0, 12.1e9), NonPositive);
}

TEST_CASE("tau_ema is invariant under joint (B, D) scaling") {
    const double base = tau_ema(129024.0, 2.025e-3, 0.05, 12.1e9);
    for (double k : {2.0, 7.5, 1e-3})
        CHECK(tau_ema(k * 129024.0, 2.025e-3, 0.05, k * 12.1e9) ==
              doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("mup_adjust_lr applies the width ratio") {
    CHECK(mup_adjust_lr(1.62e-2, 256, 2048) == 2.025e-3);  // exact /8
    CHECK(mup_adjust_lr(1.62e-2, 256, 256) == 1.62e-2);
    CHECK(mup_adjust_lr(1.62e-2, 256, 768) == doctest::Approx(5.4e-3).epsilon(1e-12));
    CHECK_THROWS_AS(mup_adjust_lr(0.0, 256, 2048), NonPositive);
}

TEST_CASE("find_opt_tau matches the closed-form parabola vertex") {
    const double eta = 2.025e-3;
    const std::int64_t n = 610000000, d = 12100000000;
    const std::vector<double> lambdas{0.05, 0.1, 0.2};
    const std::vector<double> losses{2.60, 2.58, 2.61};
    std::vector<RunRecord> sweep;
    for (std::size_t i = 0; i < lambdas.size(); ++i)
        sweep.push_back(make_run("t" + std::to_string(i), n, d, 252, eta, lambdas[i],
                                 losses[i]));
    const OptTau got = find_opt_tau(sweep);
    CHECK(got.tpp == doctest::Approx(12.1e9 / 610e6).epsilon(1e-12));

    // Independent 3-point quadratic vertex in (ln tau, ln L).
    std::vector<double> u, v;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        u.push_back(std::log(252.0 * 2048.0 / (eta * lambdas[i] * 12.1e9)));
        v.push_back(std::log(losses[i]));
    }
    // Lagrange form of the parabola through three points.
    const double d10 = (v[1] - v[0]) / (u[1] - u[0]);
    const double d21 = (v[2] - v[1]) / (u[2] - u[1]);
    const double a = (d21 - d10) / (u[2] - u[0]);
    const double vertex = 0.5 * (u[0] + u[1]) - d10 / (2.0 * a);
    CHECK(std::log(got.tau_opt) == doctest::Approx(vertex).epsilon(1e-9));

    const double tau_lo = 252.0 * 2048.0 / (eta * 0.2 * 12.1e9);
    const double tau_hi = 252.0 * 2048.0 / (eta * 0.05 * 12.1e9);
    CHECK(got.tau_opt > tau_lo);
    CHECK(got.tau_opt < tau_hi);
}

TEST_CASE("find_opt_tau rejects mixed groups and tolerates duplicates") {
    std::vector<RunRecord> sweep{
        make_run("a", 610000000, 12100000000, 252, 2e-3, 0.05, 2.60),
        make_run("b", 111000000, 12100000000, 252, 2e-3, 0.1, 2.58)};
    CHECK_THROWS_AS(find_opt_tau(sweep), MixedGroup);

    std::vector<RunRecord> clean{
        make_run("a", 610000000, 12100000000, 252, 2e-3, 0.05, 2.60),
        make_run("b", 610000000, 12100000000, 252, 2e-3, 0.1, 2.58),
        make_run("c", 610000000, 12100000000, 252, 2e-3, 0.2, 2.61)};
    const OptTau base = find_opt_tau(clean);
    // Duplicate with a worse loss at the same tau collapses to the minimum.
    std::vector<RunRecord> dup = clean;
    dup.push_back(make_run("d", 610000000, 12100000000, 252, 2e-3, 0.1, 2.71));
    const OptTau again = find_opt_tau(dup);
    CHECK(again.tau_opt == base.tau_opt);
}

TEST_CASE("fit_tau_law recovers a planted law exactly") {
    const double c = 1.084, m = -0.527;
    std::vector<TauPoint> pts;
    for (double tpp : {10.0, 31.6, 100.0, 316.0})
        pts.push_back({tpp, c * std::pow(tpp, m), 100000000,
                       static_cast<std::int64_t>(tpp * 1e8)});
    const TauLaw law = fit_tau_law(pts);
    CHECK(law.law.coeff == doctest::Approx(c).epsilon(1e-12));
    CHECK(law.law.exponent == doctest::Approx(m).epsilon(1e-12));
    // tau_opt at 1 TPP is the coefficient itself.
    CHECK(law.predict(1.0) == doctest::Approx(1.084).epsilon(1e-12));

    CHECK_THROWS_AS(fit_tau_law(std::vector<TauPoint>{pts[0], pts[1]}), TooFewPoints);
    // Less than a decade of TPP span.
    std::vector<TauPoint> narrow{{20.0, 0.2, 0, 0}, {40.0, 0.15, 0, 0}, {80.0, 0.1, 0, 0}};
    CHECK_THROWS_AS(fit_tau_law(narrow), DegenerateInput);
}

TEST_CASE("lambda_opt reproduces the hand-derived 610M recommendation") {
    const TauLaw law = make_law(1.084, -0.527);
    const double b_tokens = 63.0 * 2048.0;
    const double eta = 2.025e-3, d = 12.1e9, n = 610e6;
    const double lambda = lambda_opt(b_tokens, eta, d, n, law);

    // Independent route: B * TPP^{-m} / (c * eta * D).
    const double tpp = d / n;
    const double oracle = b_tokens * std::pow(tpp, 0.527) / (1.084 * eta * d);
    CHECK(lambda == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(lambda == doctest::Approx(0.023452540185662927).epsilon(1e-12));

    // Back-substitution: the recommended lambda restores the law's tau.
    CHECK(tau_ema(b_tokens, eta, lambda, d) ==
          doctest::Approx(law.predict(tpp)).epsilon(1e-12));
}

TEST_CASE("lambda_opt is exactly linear in B") {
    const TauLaw law = make_law(1.084, -0.527);
    const double l1 = lambda_opt(63.0 * 2048.0, 2.025e-3, 12.1e9, 610e6, law);
    const double l2 = lambda_opt(2.0 * 63.0 * 2048.0, 2.025e-3, 12.1e9, 610e6, law);
    CHECK(l2 == 2.0 * l1);
}

TEST_CASE("lambda_opt warns on TPP extrapolation and past B_crit") {
    const TauLaw law = make_law(1.084, -0.527, 10.0, 320.0);
    std::vector<std::string> warnings;
    lambda_opt(63.0 * 2048.0, 2e-3, 1e13, 1e8, law, &warnings);  // TPP = 1e5
    CHECK(warnings.size() == 1);
    warnings.clear();
    lambda_opt(63.0 * 2048.0, 2e-3, 2e9, 1e8, law, &warnings);  // TPP = 20, in range
    CHECK(warnings.empty());
    lambda_opt(63.0 * 2048.0, 2e-3, 2e9, 1e8, law, &warnings,
               /*b_crit_tokens_hint=*/1000.0);
    CHECK(warnings.size() == 1);
}

TEST_CASE("derived_eta_law closed forms") {
    {
        const TauLaw law = make_law(1.0, -0.520);
        const EtaDataLaw eta = derived_eta_law(law, 1e8, 0.1);
        CHECK(eta.exp_eta_d == -0.48);  // exact in doubles
    }
    {
        const TauLaw law = make_law(1.084, -0.527);
        const EtaDataLaw eta = derived_eta_law(law, 2.8e7, 0.1);
        CHECK(eta.coeff_eta_d == doctest::Approx(0.0011).epsilon(0.05));
        CHECK(eta.coeff_eta_d ==
              doctest::Approx(std::pow(2.8e7, -0.527) / (0.1 * 1.084)).epsilon(1e-12));
        // Exponent relation holds bit-exact.
        CHECK(eta.exp_eta_d == -(law.law.exponent + 1.0));
    }
    {
        const TauLaw law = make_law(1.0, -1.0);
        CHECK(derived_eta_law(law, 1e8, 0.1).exp_eta_d == 0.0);
    }
}
