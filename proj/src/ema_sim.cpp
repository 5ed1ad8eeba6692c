#include "powerlines/ema_sim.hpp"

#include <algorithm>
#include <cmath>

namespace powerlines {

std::int64_t LrSchedule::warmup_steps() const {
    const std::int64_t w = std::llround(warmup_frac * static_cast<double>(total_steps));
    // The schedule invariants (a first warmup step, a real decay leg) need
    // at least one step on each side.
    return std::clamp<std::int64_t>(w, 1, total_steps - 1);
}

double schedule_lr(const LrSchedule& sched, std::int64_t step) {
    if (sched.total_steps < 2) throw Error("schedule needs total_steps >= 2");
    if (sched.eta_peak <= 0) throw NonPositive("eta_peak must be positive");
    if (sched.warmup_frac <= 0 || sched.warmup_frac >= 1)
        throw Error("warmup_frac must lie in (0, 1)");
    if (step < 1 || step > sched.total_steps)
        throw StepOutOfRange(step, sched.total_steps);
    const std::int64_t w = sched.warmup_steps();
    if (step <= w)
        return sched.eta_peak * static_cast<double>(step) / static_cast<double>(w);
    return sched.eta_peak * static_cast<double>(sched.total_steps - step) /
           static_cast<double>(sched.total_steps - w);
}

EmaCoefficients ema_coefficients(const LrSchedule& sched, double weight_decay,
                                 bool alpha1_is_one) {
    if (weight_decay < 0) throw NonPositive("weight_decay must be non-negative");
    std::vector<double> alpha(static_cast<std::size_t>(sched.total_steps));
    for (std::int64_t t = 1; t <= sched.total_steps; ++t)
        alpha[static_cast<std::size_t>(t - 1)] = schedule_lr(sched, t) * weight_decay;
    return ema_coefficients_from_alphas(std::move(alpha), alpha1_is_one,
                                        sched.warmup_frac);
}

EmaCoefficients ema_coefficients_from_alphas(std::vector<double> alpha,
                                             bool alpha1_is_one, double warmup_frac) {
    const std::int64_t s = static_cast<std::int64_t>(alpha.size());
    if (s < 1) throw Error("ema_coefficients needs at least one step");
    if (alpha1_is_one) alpha[0] = 1.0;
    for (std::int64_t t = 1; t <= s; ++t) {
        const double a = alpha[static_cast<std::size_t>(t - 1)];
        if (a < 0.0 || a > 1.0) throw AlphaOutOfRange(t, a);
    }

    EmaCoefficients out;
    out.total_steps = s;
    out.warmup_frac = warmup_frac;
    out.coeffs.resize(static_cast<std::size_t>(s));

    // Single backward pass over the suffix product of (1 - alpha_j). The
    // extended precision keeps the conservation identity tight for long
    // schedules.
    long double suffix = 1.0L;
    for (std::int64_t i = s; i >= 1; --i) {
        const double a = alpha[static_cast<std::size_t>(i - 1)];
        double c = static_cast<double>(suffix * a);
        if (c < 1e-300) c = 0.0;
        out.coeffs[static_cast<std::size_t>(i - 1)] = c;
        suffix *= (1.0L - static_cast<long double>(a));
    }
    out.init_residual = static_cast<double>(suffix);
    if (out.init_residual < 1e-300) out.init_residual = 0.0;
    return out;
}

double compare_shapes(const EmaCoefficients& a, const EmaCoefficients& b) {
    if (a.warmup_frac != b.warmup_frac)
        throw ShapeMismatch("warmup fractions differ: " + std::to_string(a.warmup_frac) +
                            " vs " + std::to_string(b.warmup_frac));

    // Step i covers data fraction i/S; interpolating between adjacent steps
    // removes the index-quantization error that otherwise dwarfs the real
    // shape difference at coarse step counts.
    auto density_at = [](const EmaCoefficients& e, double f) {
        const double s = static_cast<double>(e.total_steps);
        const double u = f * s;
        std::int64_t i0 = static_cast<std::int64_t>(std::floor(u));
        i0 = std::clamp<std::int64_t>(i0, 1, e.total_steps - 1);
        const double t = std::clamp(u - static_cast<double>(i0), 0.0, 1.0);
        const double c0 = e.coeffs[static_cast<std::size_t>(i0 - 1)];
        const double c1 = e.coeffs[static_cast<std::size_t>(i0)];
        return (c0 + t * (c1 - c0)) * s;
    };

    constexpr int kSamples = 256;
    constexpr double kLo = 0.02, kHi = 0.98;
    double max_dev = 0.0;
    for (int k = 0; k < kSamples; ++k) {
        const double f = kLo + (kHi - kLo) * static_cast<double>(k) / (kSamples - 1);
        const double da = density_at(a, f);
        const double db = density_at(b, f);
        const double denom = std::max({std::abs(da), std::abs(db), 1e-300});
        max_dev = std::max(max_dev, std::abs(da - db) / denom);
    }
    return max_dev;
}

}  // namespace powerlines
