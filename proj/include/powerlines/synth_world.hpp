#pragma once

#include <cstdint>
#include <span>

#include "powerlines/frontier.hpp"
#include "powerlines/run_store.hpp"

namespace powerlines {

// Planted ground truth: a closed-form training outcome consistent with the
// loss surface, the extra-data relation, and the timescale law. Every
// pipeline is tested by generating from one of these and recovering its
// parameters.
struct WorldSpec {
    ChinchillaFit chinchilla;     // E, N_const, alpha, D_const, beta
    double c_crit = 0.0471;       // B_crit(d_min) in sequences, d_min in tokens
    double m_crit = 0.462;
    double c_tau = 1.084;         // tau_opt(TPP)
    double m_tau = -0.527;
    double mistune_curvature = 0.01;  // loss penalty per squared log tau ratio
    double noise_sigma = 0.0;
    std::int64_t seq_len = kDefaultSeqLen;
    std::uint64_t seed = 0;

    double bcrit_sequences(double d_min) const {
        return c_crit * std::pow(d_min, m_crit);
    }
    double tau_opt(double tpp) const { return c_tau * std::pow(tpp, m_tau); }
    BatchScalingLaw crit_law() const;
};

void validate_world(const WorldSpec& world);

// Unique D_min with d_tokens = D_min * (1 + B / B_crit(D_min)), by bisection.
// The map is strictly increasing in D_min for m_crit in (0, 1).
double solve_dmin(double d_tokens, double b_sequences, double c_crit, double m_crit);

double synth_loss(double n_params, double d_tokens, double b_sequences,
                  double weight_decay, double eta_peak, const WorldSpec& world);

struct DesignRow {
    double n_params = 0.0;
    double d_tokens = 0.0;
    double batch_sequences = 0.0;
    double weight_decay = 0.0;
    double eta_peak = 0.0;
};

RunSet gen_design(const WorldSpec& world, std::span<const DesignRow> design);

}  // namespace powerlines
