#include "powerlines/timescale.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace powerlines {

double TauLaw::min_fit_tpp() const {
    double v = fit_points.front().tpp;
    for (const auto& p : fit_points) v = std::min(v, p.tpp);
    return v;
}

double TauLaw::max_fit_tpp() const {
    double v = fit_points.front().tpp;
    for (const auto& p : fit_points) v = std::max(v, p.tpp);
    return v;
}

double tau_ema(double batch_tokens, double eta_peak, double weight_decay,
               double d_tokens) {
    if (batch_tokens <= 0 || eta_peak <= 0 || weight_decay <= 0 || d_tokens <= 0)
        throw NonPositive("tau_ema requires positive B, eta, lambda, D");
    return batch_tokens / (eta_peak * weight_decay * d_tokens);
}

double mup_adjust_lr(double eta_base, std::int64_t proxy_width,
                     std::int64_t target_width) {
    if (eta_base <= 0 || proxy_width <= 0 || target_width <= 0)
        throw NonPositive("mup_adjust_lr requires positive inputs");
    return eta_base * static_cast<double>(proxy_width) /
           static_cast<double>(target_width);
}

OptTau find_opt_tau(std::span<const RunRecord> sweep) {
    if (sweep.empty()) throw TooFewPoints("find_opt_tau on an empty sweep");
    const std::int64_t n = sweep.front().n_params;
    const std::int64_t d = sweep.front().d_tokens;
    for (const auto& r : sweep)
        if (r.n_params != n || r.d_tokens != d)
            throw MixedGroup("find_opt_tau requires a single (N, D) group");

    std::vector<XY> pts;
    pts.reserve(sweep.size());
    for (const auto& r : sweep) {
        const double tau = tau_ema(static_cast<double>(r.batch_tokens()), r.eta_peak,
                                   r.weight_decay, static_cast<double>(r.d_tokens));
        pts.push_back({tau, r.val_loss});
    }
    OptTau out;
    out.tau_opt = fit_log_parabola_min(pts);
    out.tpp = static_cast<double>(d) / static_cast<double>(n);
    return out;
}

TauLaw fit_tau_law(std::span<const TauPoint> points, const BootstrapConfig& bootstrap) {
    if (points.size() < 3)
        throw TooFewPoints("fit_tau_law needs >= 3 (TPP, tau_opt) points, got " +
                           std::to_string(points.size()));
    std::vector<XY> xy;
    xy.reserve(points.size());
    double lo = points[0].tpp, hi = points[0].tpp;
    for (const auto& p : points) {
        xy.push_back({p.tpp, p.tau_opt});
        lo = std::min(lo, p.tpp);
        hi = std::max(hi, p.tpp);
    }
    if (hi < 10.0 * lo)
        throw DegenerateInput("tau-law fit points span less than one decade of TPP");

    TauLaw law;
    law.law = fit_power_law(xy);
    if (xy.size() >= 5) {
        const auto q = bootstrap_exponent(xy, bootstrap.frac, bootstrap.iters,
                                          bootstrap.seed);
        law.law.has_quantiles = true;
        law.law.exp_q10 = q.q10;
        law.law.exp_q90 = q.q90;
    }
    law.fit_points.assign(points.begin(), points.end());
    return law;
}

double lambda_opt(double batch_tokens, double eta_peak, double d_tokens, double n_params,
                  const TauLaw& law, std::vector<std::string>* warnings,
                  double b_crit_tokens_hint) {
    if (batch_tokens <= 0 || eta_peak <= 0 || d_tokens <= 0 || n_params <= 0)
        throw NonPositive("lambda_opt requires positive inputs");
    const double tpp = d_tokens / n_params;
    if (warnings && !law.fit_points.empty()) {
        if (tpp < 0.2 * law.min_fit_tpp() || tpp > 5.0 * law.max_fit_tpp())
            warnings->push_back("TPP " + std::to_string(tpp) +
                                " extrapolates the tau law fit range [" +
                                std::to_string(law.min_fit_tpp()) + ", " +
                                std::to_string(law.max_fit_tpp()) + "]");
    }
    if (warnings && b_crit_tokens_hint > 0 && batch_tokens > b_crit_tokens_hint)
        warnings->push_back("B exceeds the predicted critical batch size; optimal "
                            "tau_ema drifts in this regime");
    return batch_tokens / (eta_peak * d_tokens * law.predict(tpp));
}

EtaDataLaw derived_eta_law(const TauLaw& law, double n_params, double weight_decay) {
    if (n_params <= 0 || weight_decay <= 0)
        throw NonPositive("derived_eta_law requires positive N and lambda");
    EtaDataLaw out;
    out.n_params = n_params;
    out.weight_decay = weight_decay;
    out.coeff_eta_d =
        std::pow(n_params, law.law.exponent) / (weight_decay * law.law.coeff);
    out.exp_eta_d = -(law.law.exponent + 1.0);
    return out;
}

TauLaw fit_tau_pipeline(const RunSet& rs, const BootstrapConfig& bootstrap) {
    auto groups = group_runs(rs, {RunField::NParams, RunField::DTokens});
    std::vector<TauPoint> points;
    points.reserve(groups.size());
    for (const auto& [key, records] : groups) {
        const OptTau opt = find_opt_tau(records);
        points.push_back({opt.tpp, opt.tau_opt, key[0], key[1]});
    }
    return fit_tau_law(points, bootstrap);
}

}  // namespace powerlines
