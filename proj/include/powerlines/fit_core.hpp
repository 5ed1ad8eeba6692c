#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "powerlines/errors.hpp"

namespace powerlines {

struct XY {
    double x = 0.0;
    double y = 0.0;
};

// y = coeff * x^exponent, fitted by OLS in log-log space.
struct PowerLawFit {
    double coeff = 0.0;
    double exponent = 0.0;
    double r_squared = 0.0;  // of the log-log regression
    int n_points = 0;
    bool has_quantiles = false;
    double exp_q10 = 0.0;  // bootstrap quantiles of the exponent
    double exp_q90 = 0.0;

    double predict(double x) const { return coeff * std::pow(x, exponent); }
};

// L(D) = irreducible + scale * D^(-beta), fitted in loss space.
struct SaturatingLawFit {
    double irreducible = 0.0;
    double scale = 0.0;
    double beta = 0.0;
    double r_squared = 0.0;
    double fit_domain_lo = 0.0;
    double fit_domain_hi = 0.0;

    double predict(double d) const { return irreducible + scale * std::pow(d, -beta); }
    // log_slack is the allowed overshoot beyond the fit domain, as a
    // fraction of the domain's log-width.
    bool within_domain(double d, double log_slack = 0.0) const;
};

// The data/steps tradeoff: D(S) = d_min * S / (S - s_min) for S > s_min.
struct TradeoffFit {
    double d_min = 0.0;  // tokens
    double s_min = 0.0;  // steps
    double r_squared_log = 0.0;

    double b_crit_tokens() const { return d_min / s_min; }
    double data_required(double steps) const { return d_min * steps / (steps - s_min); }
};

struct LossAtData {
    double d_tokens = 0.0;
    double loss = 0.0;
};

struct TradeoffPoint {
    double d_tokens = 0.0;
    double steps = 0.0;
};

struct InvertResult {
    double d_tokens = 0.0;
    bool extrapolated = false;  // outside the fit domain
};

struct BootstrapQuantiles {
    double q10 = 0.0;
    double q90 = 0.0;
};

PowerLawFit fit_power_law(std::span<const XY> points);

SaturatingLawFit fit_saturating_law(std::span<const LossAtData> points);

InvertResult invert_saturating(const SaturatingLawFit& fit, double loss_target);

// Least-squares parabola in (ln x, ln L); returns exp of the vertex.
// Multiple losses at one x collapse to the minimum before fitting.
double fit_log_parabola_min(std::span<const XY> points);

TradeoffFit fit_hyperbolic_tradeoff(std::span<const TradeoffPoint> pairs,
                                    std::vector<std::string>* warnings = nullptr);

// 10th/90th percentiles of the exponent over `iters` refits, each on a
// ceil(frac*n) subset drawn without replacement. Deterministic in seed.
BootstrapQuantiles bootstrap_exponent(std::span<const XY> points, double frac = 0.8,
                                      int iters = 1000, std::uint64_t seed = 0);

}  // namespace powerlines
