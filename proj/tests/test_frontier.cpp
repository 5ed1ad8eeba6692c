#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "powerlines/frontier.hpp"
#include "powerlines/rng.hpp"
#include "powerlines/synth_world.hpp"

using namespace powerlines;

namespace {

RunRecord surface_run(const std::string& id, std::int64_t n, std::int64_t d, double loss) {
    RunRecord r;
    r.run_id = id;
    r.n_params = n;
    r.d_tokens = d;
    r.batch_sequences = 1;
    r.seq_len = 2048;
    r.eta_peak = 1e-3;
    r.weight_decay = 0.1;
    r.val_loss = loss;
    return r;
}

RunSet surface_grid(const ChinchillaFit& truth, double sigma, std::uint64_t seed) {
    RunSet rs;
    rng::Stream noise(seed);
    int idx = 0;
    for (std::int64_t n : {111000000, 266000000, 610000000}) {
        for (double tpp : {20.0, 80.0, 320.0, 1280.0}) {
            const std::int64_t d =
                static_cast<std::int64_t>(tpp * static_cast<double>(n));
            double loss = truth.predict(static_cast<double>(n), static_cast<double>(d));
            if (sigma > 0) loss += sigma * noise.next_gauss();
            rs.records.push_back(
                surface_run("s" + std::to_string(idx++), n, d, loss));
        }
    }
    return rs;
}

BatchScalingLaw make_crit_law(double coeff, double exponent) {
    BatchScalingLaw law;
    law.kind = BatchLawKind::BcritInDmin;
    law.units = BatchUnits::Sequences;
    law.seq_len = 2048;
    law.law.coeff = coeff;
    law.law.exponent = exponent;
    return law;
}

// O(n^2) dominance oracle, independent of the sweep implementation.
bool dominated_by_any(const ParetoPoint& p, const std::vector<ParetoPoint>& all) {
    for (const auto& q : all) {
        const bool weakly = q.time <= p.time && q.c_plus <= p.c_plus;
        const bool strictly = q.time < p.time || q.c_plus < p.c_plus;
        if (weakly && strictly) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("fit_chinchilla recovers a planted surface") {
    const ChinchillaFit truth{1.8, 400.0, 0.313, 410.0, 0.282, 1.0};
    const ChinchillaFit fit = fit_chinchilla(surface_grid(truth, 0.0, 0));
    CHECK(fit.alpha == doctest::Approx(truth.alpha).epsilon(1e-3));
    CHECK(fit.beta == doctest::Approx(truth.beta).epsilon(1e-3));
    CHECK(fit.irreducible == doctest::Approx(truth.irreducible).epsilon(1e-3));
    CHECK(fit.n_const == doctest::Approx(truth.n_const).epsilon(2e-3));
    CHECK(fit.d_const == doctest::Approx(truth.d_const).epsilon(2e-3));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fit_chinchilla stays close under seed-level loss noise") {
    const ChinchillaFit truth{1.8, 400.0, 0.313, 410.0, 0.282, 1.0};
    const ChinchillaFit fit = fit_chinchilla(surface_grid(truth, 0.002, 21));
    CHECK(std::abs(fit.alpha - truth.alpha) < 0.03);
    CHECK(std::abs(fit.beta - truth.beta) < 0.03);
}

TEST_CASE("fit_chinchilla error paths") {
    const ChinchillaFit truth{1.8, 400.0, 0.313, 410.0, 0.282, 1.0};
    RunSet rs;
    int idx = 0;
    for (double tpp : {20.0, 40.0, 80.0, 160.0, 320.0, 640.0}) {
        const std::int64_t n = 111000000;
        const std::int64_t d = static_cast<std::int64_t>(tpp * n);
        rs.records.push_back(surface_run("x" + std::to_string(idx++), n, d,
                                         truth.predict(n, d)));
    }
    CHECK_THROWS_AS(fit_chinchilla(rs), RankDeficient);
    rs.records.resize(4);
    CHECK_THROWS_AS(fit_chinchilla(rs), TooFewPoints);
}

TEST_CASE("contour_dmin inverts the surface") {
    const ChinchillaFit fit{1.8, 400.0, 0.313, 410.0, 0.282, 1.0};
    // Forward-then-invert round trip.
    for (double n : {1.5e8, 6.1e8}) {
        for (double d : {3e9, 8e10}) {
            const double target = fit.predict(n, d);
            CHECK(contour_dmin(fit, target, n) == doctest::Approx(d).epsilon(1e-9));
        }
    }
    CHECK_THROWS_AS(contour_dmin(fit, fit.model_floor(1e8), 1e8), BelowModelFloor);

    // With no model-size term this is exactly the saturating-law inverse.
    const ChinchillaFit data_only{2.0, 0.0, 0.313, 10.0, 0.5, 1.0};
    SaturatingLawFit sat;
    sat.irreducible = 2.0;
    sat.scale = 10.0;
    sat.beta = 0.5;
    sat.fit_domain_lo = 1.0;
    sat.fit_domain_hi = 1e12;
    CHECK(contour_dmin(data_only, 2.1, 1e8) ==
          doctest::Approx(invert_saturating(sat, 2.1).d_tokens).epsilon(1e-12));
}

TEST_CASE("compute_optimal_allocation closed forms") {
    // Symmetric surface: equal split.
    const ChinchillaFit sym{1.6, 500.0, 0.3, 500.0, 0.3, 1.0};
    const Allocation a = compute_optimal_allocation(sym, 6e18);
    CHECK(a.n_opt == doctest::Approx(std::sqrt(1e18)).epsilon(1e-12));
    CHECK(a.d_opt == doctest::Approx(std::sqrt(1e18)).epsilon(1e-12));
    CHECK(a.tpp_opt == doctest::Approx(1.0).epsilon(1e-12));

    // Homogeneity in the budget.
    const ChinchillaFit fit{1.8, 400.0, 0.313, 410.0, 0.282, 1.0};
    const Allocation b1 = compute_optimal_allocation(fit, 1e20);
    const Allocation b2 = compute_optimal_allocation(fit, 2e20);
    CHECK(b2.n_opt / b1.n_opt ==
          doctest::Approx(std::pow(2.0, fit.beta / (fit.alpha + fit.beta)))
              .epsilon(1e-12));

    // First-order optimality at the allocation: the loss gradient along the
    // budget constraint vanishes.
    const double h = 1e-4;
    const double c = 1e20;
    auto loss_at = [&](double n) { return fit.predict(n, (c / 6.0) / n); };
    const Allocation opt = compute_optimal_allocation(fit, c);
    const double up = loss_at(opt.n_opt * (1 + h));
    const double down = loss_at(opt.n_opt * (1 - h));
    const double here = loss_at(opt.n_opt);
    CHECK(up >= here);
    CHECK(down >= here);
}

TEST_CASE("a surface built for a 20.6 TPP optimum round-trips") {
    const double alpha = 0.313, beta = 0.282;
    const double n_star = 1e9, tpp_star = 20.6, loss_star = 2.6;
    const double d_star = tpp_star * n_star;
    const double n_const = 400.0;
    // First-order condition pins d_const; the loss level pins E.
    const double d_const = (alpha / beta) * n_const * std::pow(n_star, -alpha) *
                           std::pow(d_star, beta);
    const double e = loss_star - n_const * std::pow(n_star, -alpha) -
                     d_const * std::pow(d_star, -beta);
    REQUIRE(e > 0.0);
    const ChinchillaFit fit{e, n_const, alpha, d_const, beta, 1.0};

    const double c_star = 6.0 * n_star * d_star;
    const Allocation a = compute_optimal_allocation(fit, c_star);
    CHECK(a.n_opt == doctest::Approx(n_star).epsilon(1e-12));
    CHECK(a.d_opt == doctest::Approx(d_star).epsilon(1e-12));
    CHECK(a.tpp_opt == doctest::Approx(20.6).epsilon(1e-12));
    CHECK(fit.predict(a.n_opt, a.d_opt) == doctest::Approx(2.6).epsilon(1e-12));
}

TEST_CASE("flops_plus and batch_for_budget") {
    const BatchScalingLaw crit = make_crit_law(0.0471, 0.462);
    const double n = 266e6, d_min = 80.0 * 266e6;
    const double b_crit = crit.predict_sequences(d_min);

    CHECK(flops_plus(n, d_min, 0.0, crit) == 6.0 * n * d_min);
    CHECK(flops_plus(n, d_min, b_crit, crit) ==
          doctest::Approx(2.0 * 6.0 * n * d_min).epsilon(1e-12));
    CHECK(flops_plus(n, d_min, 2.0 * b_crit, crit) ==
          doctest::Approx(3.0 * 6.0 * n * d_min).epsilon(1e-12));

    CHECK(batch_for_budget(n, d_min, 2.0 * 6.0 * n * d_min, crit) ==
          doctest::Approx(b_crit).epsilon(1e-12));
    CHECK(batch_for_budget(n, d_min, 6.0 * n * d_min, crit) == 0.0);
    CHECK_THROWS_AS(batch_for_budget(n, d_min, 5.9 * n * d_min, crit), BudgetBelowBase);

    BatchScalingLaw wrong = crit;
    wrong.kind = BatchLawKind::BoptInD;
    CHECK_THROWS_AS(flops_plus(n, d_min, 100.0, wrong), UnitMismatch);

    // Round trip at random budgets.
    rng::Stream stream(4);
    for (int i = 0; i < 200; ++i) {
        const double c_hat = 6.0 * n * d_min * (1.0 + 10.0 * stream.next_unit());
        const double b = batch_for_budget(n, d_min, c_hat, crit);
        CHECK(flops_plus(n, d_min, b, crit) == doctest::Approx(c_hat).epsilon(1e-12));
    }
}

TEST_CASE("make_iso_loss_curve orders points and tracks the extra-data factor") {
    const ChinchillaFit fit{1.8, 400.0, 0.313, 410.0, 0.282, 1.0};
    const BatchScalingLaw crit = make_crit_law(0.0471, 0.462);
    const IsoLossCurve curve = make_iso_loss_curve(fit, 2.6, 1e9, crit);
    REQUIRE(curve.points.size() > 10);
    CHECK(curve.base_dmin ==
          doctest::Approx(contour_dmin(fit, 2.6, 1e9)).epsilon(1e-12));

    const double c_base = 6.0 * 1e9 * curve.base_dmin;
    CHECK(curve.points.front().c_plus == doctest::Approx(c_base).epsilon(1e-12));
    const double b_crit_tok = crit.predict_tokens(curve.base_dmin);
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const ParetoPoint& p = curve.points[i];
        CHECK(p.c_plus >= c_base * (1.0 - 1e-12));
        if (i > 0) {
            CHECK(p.b_sequences > curve.points[i - 1].b_sequences);
            // actual TPP follows the extra-data relation.
            const double d_actual =
                extra_data(curve.base_dmin, b_crit_tok, p.b_sequences * 2048.0);
            CHECK(p.actual_tpp == doctest::Approx(d_actual / 1e9).epsilon(1e-12));
            CHECK(p.c_plus == doctest::Approx(6.0 * 1e9 * d_actual).epsilon(1e-12));
        }
    }

    // With a B_opt law the base point sits at its prediction.
    BatchScalingLaw bopt = make_crit_law(0.02, 0.4);
    bopt.kind = BatchLawKind::BoptInD;
    const IsoLossCurve curve2 = make_iso_loss_curve(fit, 2.6, 1e9, crit, &bopt);
    CHECK(curve2.points.front().b_sequences ==
          doctest::Approx(bopt.predict_sequences(curve2.base_dmin)).epsilon(1e-12));
    for (std::size_t i = 1; i < curve2.points.size(); ++i)
        CHECK(curve2.points[i].b_sequences > curve2.points[i - 1].b_sequences);
}

TEST_CASE("pareto_frontier on a single curve keeps its base point") {
    const ChinchillaFit fit{1.8, 400.0, 0.313, 410.0, 0.282, 1.0};
    const BatchScalingLaw crit = make_crit_law(0.0471, 0.462);
    const IsoLossCurve curve = make_iso_loss_curve(fit, 2.6, 1e9, crit);

    const std::vector<ParetoPoint> frontier =
        pareto_frontier(std::vector<IsoLossCurve>{curve}, TimeModel::FlopsPerBatch);
    REQUIRE(!frontier.empty());

    // The base point has the curve's lowest compute, so it survives.
    bool base_found = false;
    for (const auto& p : frontier)
        if (p.b_sequences == curve.points.front().b_sequences) base_found = true;
    CHECK(base_found);

    // Non-dominance against the quadratic oracle, and time-sortedness.
    for (const auto& p : frontier) CHECK_FALSE(dominated_by_any(p, frontier));
    for (std::size_t i = 1; i < frontier.size(); ++i)
        CHECK(frontier[i].time >= frontier[i - 1].time);

    // On a single hyperbolic curve every point trades time against compute,
    // so nothing is dominated.
    CHECK(frontier.size() == curve.points.size());
}

TEST_CASE("annotate_dominance flags exactly the dominated points") {
    const ChinchillaFit fit{1.8, 400.0, 0.313, 410.0, 0.282, 1.0};
    const BatchScalingLaw crit = make_crit_law(0.0471, 0.462);
    std::vector<IsoLossCurve> curves;
    for (double n : {6e8, 1.2e9, 2.4e9})
        curves.push_back(make_iso_loss_curve(fit, 2.6, n, crit));

    const std::vector<ParetoPoint> all =
        annotate_dominance(curves, TimeModel::FlopsPerBatch);
    std::size_t expected = 0;
    for (const auto& c : curves) expected += c.points.size();
    CHECK(all.size() == expected);
    for (const auto& p : all) {
        const bool oracle = dominated_by_any(p, all);
        CHECK(p.dominated == oracle);
    }
}

TEST_CASE("pareto_frontier rejects mixed loss targets") {
    const ChinchillaFit fit{1.8, 400.0, 0.313, 410.0, 0.282, 1.0};
    const BatchScalingLaw crit = make_crit_law(0.0471, 0.462);
    std::vector<IsoLossCurve> curves{make_iso_loss_curve(fit, 2.6, 1e9, crit),
                                     make_iso_loss_curve(fit, 2.7, 1e9, crit)};
    CHECK_THROWS_AS(pareto_frontier(curves, TimeModel::Steps), MixedLossTargets);
}

TEST_CASE("time models: flops-per-batch vs steps") {
    const ChinchillaFit fit{1.8, 400.0, 0.313, 410.0, 0.282, 1.0};
    const BatchScalingLaw crit = make_crit_law(0.0471, 0.462);
    const IsoLossCurve curve = make_iso_loss_curve(fit, 2.6, 1e9, crit);
    const auto a = annotate_dominance(std::vector<IsoLossCurve>{curve},
                                      TimeModel::FlopsPerBatch);
    const auto b =
        annotate_dominance(std::vector<IsoLossCurve>{curve}, TimeModel::Steps);
    // Model A: time = C+ / B_tokens; model B: time = steps = D_actual / B_tokens.
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double b_tokens = a[i].b_sequences * 2048.0;
        CHECK(a[i].time == doctest::Approx(a[i].c_plus / b_tokens).epsilon(1e-12));
        const double d_actual = b[i].actual_tpp * b[i].n_params;
        CHECK(b[i].time == doctest::Approx(d_actual / b_tokens).epsilon(1e-12));
        // Model A time is 6N x steps.
        CHECK(a[i].time ==
              doctest::Approx(6.0 * a[i].n_params * b[i].time).epsilon(1e-12));
    }
}
