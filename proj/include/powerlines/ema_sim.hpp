#pragma once

#include <cstdint>
#include <vector>

#include "powerlines/errors.hpp"

namespace powerlines {

// Linear warmup to eta_peak over the first ~warmup_frac of steps, then
// linear decay to zero on the final step. Step grid is 1..total_steps.
struct LrSchedule {
    std::int64_t total_steps = 0;
    double warmup_frac = 0.10;
    double eta_peak = 0.0;

    std::int64_t warmup_steps() const;
};

double schedule_lr(const LrSchedule& sched, std::int64_t step);

// Contribution of each weight update to the final parameters when AdamW is
// read as an EMA with smoothing alpha_t = eta_t * lambda.
struct EmaCoefficients {
    std::int64_t total_steps = 0;
    double warmup_frac = 0.0;
    std::vector<double> coeffs;  // coeffs[i-1] is c_{S,i}
    double init_residual = 0.0;  // weight left on the initial parameters
};

EmaCoefficients ema_coefficients(const LrSchedule& sched, double weight_decay,
                                 bool alpha1_is_one = false);

// Same computation over an explicit smoothing sequence (index 0 is step 1).
EmaCoefficients ema_coefficients_from_alphas(std::vector<double> alphas,
                                             bool alpha1_is_one = false,
                                             double warmup_frac = 0.0);

// Max relative deviation between per-data-fraction coefficient densities,
// sampled at 256 fractions in [0.02, 0.98]. Schedules must share shape.
double compare_shapes(const EmaCoefficients& a, const EmaCoefficients& b);

}  // namespace powerlines
