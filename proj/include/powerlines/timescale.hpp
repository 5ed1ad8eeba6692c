#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "powerlines/fit_core.hpp"
#include "powerlines/run_store.hpp"

namespace powerlines {

struct BootstrapConfig {
    double frac = 0.8;
    int iters = 1000;
    std::uint64_t seed = 0;
};

struct TauPoint {
    double tpp = 0.0;
    double tau_opt = 0.0;
    std::int64_t n_params = 0;
    std::int64_t d_tokens = 0;
};

// tau_opt(TPP) = c_tau * TPP^m_tau, fitted over per-(N, D) optima.
struct TauLaw {
    PowerLawFit law;
    std::vector<TauPoint> fit_points;

    double predict(double tpp) const { return law.predict(tpp); }
    double min_fit_tpp() const;
    double max_fit_tpp() const;
};

// eta_opt = B * coeff_eta_d * D^exp_eta_d at fixed (N, lambda), implied by
// a TauLaw: coeff_eta_d = N^m_tau / (lambda * c_tau), exp_eta_d = -(m_tau + 1).
struct EtaDataLaw {
    double coeff_eta_d = 0.0;
    double exp_eta_d = 0.0;
    double n_params = 0.0;
    double weight_decay = 0.0;

    double predict(double batch_tokens, double d_tokens) const {
        return batch_tokens * coeff_eta_d * std::pow(d_tokens, exp_eta_d);
    }
};

// B/(eta * lambda * D), with B and D in tokens and eta the peak LR.
double tau_ema(double batch_tokens, double eta_peak, double weight_decay,
               double d_tokens);

double mup_adjust_lr(double eta_base, std::int64_t proxy_width,
                     std::int64_t target_width);

struct OptTau {
    double tau_opt = 0.0;
    double tpp = 0.0;
};

// Optimal timescale of one (N, D) sweep: per-record tau_ema, lowest loss
// per tau, then the analytic vertex of the log-space parabola.
OptTau find_opt_tau(std::span<const RunRecord> sweep);

TauLaw fit_tau_law(std::span<const TauPoint> points, const BootstrapConfig& bootstrap = {});

// Eq.-style lambda recommendation: B / (eta * D * tau_opt(TPP)). Warns when
// TPP falls outside [0.2x, 5x] of the law's fit range, and optionally when
// B exceeds a critical-batch prediction (tau drifts past B_crit).
double lambda_opt(double batch_tokens, double eta_peak, double d_tokens, double n_params,
                  const TauLaw& law, std::vector<std::string>* warnings = nullptr,
                  double b_crit_tokens_hint = 0.0);

EtaDataLaw derived_eta_law(const TauLaw& law, double n_params, double weight_decay);

// Whole pipeline: group by (N, D), extract each group's optimum, fit the law.
TauLaw fit_tau_pipeline(const RunSet& rs, const BootstrapConfig& bootstrap = {});

}  // namespace powerlines
