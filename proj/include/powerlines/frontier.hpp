#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "powerlines/batch_laws.hpp"
#include "powerlines/run_store.hpp"

namespace powerlines {

// Five-parameter loss surface L(N, D) = E + N_const*N^-alpha + D_const*D^-beta.
struct ChinchillaFit {
    double irreducible = 0.0;  // E
    double n_const = 0.0;
    double alpha = 0.0;
    double d_const = 0.0;
    double beta = 0.0;
    double r_squared = 0.0;

    double predict(double n, double d) const {
        return irreducible + n_const * std::pow(n, -alpha) + d_const * std::pow(d, -beta);
    }
    // Loss floor at D -> infinity for a given model size.
    double model_floor(double n) const {
        return irreducible + n_const * std::pow(n, -alpha);
    }
};

struct ParetoPoint {
    double n_params = 0.0;
    double d_min = 0.0;        // tokens
    double b_sequences = 0.0;
    double c_plus = 0.0;       // total FLOPs including the extra-data factor
    double time = 0.0;         // units depend on the time model
    double actual_tpp = 0.0;
    bool dominated = false;
};

struct IsoLossCurve {
    double loss_target = 0.0;
    std::int64_t base_n = 0;
    double base_dmin = 0.0;
    std::int64_t seq_len = kDefaultSeqLen;
    std::vector<ParetoPoint> points;  // ordered by increasing B
};

enum class TimeModel {
    FlopsPerBatch,  // time = C+ / B_tokens = 6N * steps
    Steps,          // time = steps
};

// Reduces to the lowest loss per (N, D), then fits the surface by
// multi-start over (alpha, beta, E) with exact inner linear solves.
ChinchillaFit fit_chinchilla(const RunSet& rs);
ChinchillaFit fit_chinchilla_points(std::span<const RunRecord> records);

// Tokens needed to reach loss_target at model size n_params.
double contour_dmin(const ChinchillaFit& fit, double loss_target, double n_params);

struct Allocation {
    double n_opt = 0.0;
    double d_opt = 0.0;
    double tpp_opt = 0.0;
};

// Loss-optimal split of a FLOP budget under C = 6 N D.
Allocation compute_optimal_allocation(const ChinchillaFit& fit, double c_budget);

double flops_plus(double n_params, double d_min, double b_sequences,
                  const BatchScalingLaw& crit_law);

double batch_for_budget(double n_params, double d_min, double c_hat,
                        const BatchScalingLaw& crit_law);

struct CurveGrid {
    int count = 64;
    double mult_lo = 1.0 + 1e-3;  // budget multipliers C_hat / C
    double mult_hi = 64.0;
};

// One iso-loss curve: the base setting at its reference optimal batch plus
// a sweep of budget multipliers along the extra-data relation. When no
// B_opt law is supplied the reference batch is the smallest sweep batch.
IsoLossCurve make_iso_loss_curve(const ChinchillaFit& fit, double loss_target,
                                 double n_params, const BatchScalingLaw& crit_law,
                                 const BatchScalingLaw* bopt_law = nullptr,
                                 const CurveGrid& grid = {});

// All curve points with times filled in for the model and dominance flags
// set; ordered by time, ties toward smaller C+.
std::vector<ParetoPoint> annotate_dominance(std::span<const IsoLossCurve> curves,
                                            TimeModel model);

// The non-dominated subset, in time order.
std::vector<ParetoPoint> pareto_frontier(std::span<const IsoLossCurve> curves,
                                         TimeModel model);

}  // namespace powerlines
