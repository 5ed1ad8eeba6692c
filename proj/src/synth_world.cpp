#include "powerlines/synth_world.hpp"

#include <bit>
#include <cmath>
#include <cstdio>

#include "powerlines/rng.hpp"
#include "powerlines/timescale.hpp"

namespace powerlines {

namespace {

std::uint64_t hash_inputs(const WorldSpec& world, double n, double d, double b,
                          double lambda, double eta) {
    std::uint64_t h = rng::mix(0x73796e7468ULL, world.seed);
    for (double v : {n, d, b, lambda, eta}) h = rng::mix(h, std::bit_cast<std::uint64_t>(v));
    return h;
}

}  // namespace

BatchScalingLaw WorldSpec::crit_law() const {
    BatchScalingLaw law;
    law.kind = BatchLawKind::BcritInDmin;
    law.units = BatchUnits::Sequences;
    law.seq_len = seq_len;
    law.law.coeff = c_crit;
    law.law.exponent = m_crit;
    law.law.r_squared = 1.0;
    return law;
}

void validate_world(const WorldSpec& world) {
    if (world.chinchilla.irreducible < 0 || world.chinchilla.n_const <= 0 ||
        world.chinchilla.alpha <= 0 || world.chinchilla.d_const <= 0 ||
        world.chinchilla.beta <= 0)
        throw NonPositive("world loss-surface parameters must be positive");
    if (world.c_crit <= 0 || world.c_tau <= 0)
        throw NonPositive("world law coefficients must be positive");
    if (world.mistune_curvature < 0)
        throw NonPositive("mistune_curvature must be non-negative");
    if (world.noise_sigma < 0 || world.noise_sigma >= 0.01)
        throw Error("noise_sigma must lie in [0, 0.01)");
    if (world.seq_len <= 0) throw NonPositive("seq_len must be positive");
}

double solve_dmin(double d_tokens, double b_sequences, double c_crit, double m_crit) {
    if (d_tokens <= 0 || b_sequences < 0 || c_crit <= 0)
        throw NonPositive("solve_dmin requires positive d_tokens and c_crit");
    if (b_sequences == 0) return d_tokens;

    auto forward = [&](double d_min) {
        return d_min * (1.0 + b_sequences / (c_crit * std::pow(d_min, m_crit)));
    };

    double hi = d_tokens;
    double lo = d_tokens / (1.0 + 2.0 * b_sequences / (c_crit * std::pow(d_tokens, m_crit)));
    // The bracket above covers moderate B/B_crit; extend downward otherwise.
    int guard = 0;
    while (forward(lo) > d_tokens) {
        lo *= 0.5;
        if (++guard > 200) throw NoConvergence("solve_dmin bracket search");
    }

    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);  // bisect in log space
        if (forward(mid) > d_tokens)
            hi = mid;
        else
            lo = mid;
        if (hi - lo <= 1e-10 * hi) return 0.5 * (lo + hi);
    }
    throw NoConvergence("solve_dmin bisection hit the iteration cap");
}

double synth_loss(double n_params, double d_tokens, double b_sequences,
                  double weight_decay, double eta_peak, const WorldSpec& world) {
    if (n_params <= 0 || d_tokens <= 0 || b_sequences <= 0 || weight_decay <= 0 ||
        eta_peak <= 0)
        throw NonPositive("synth_loss requires positive inputs");

    const double d_min = solve_dmin(d_tokens, b_sequences, world.c_crit, world.m_crit);
    double loss = world.chinchilla.irreducible +
                  world.chinchilla.n_const * std::pow(n_params, -world.chinchilla.alpha) +
                  world.chinchilla.d_const * std::pow(d_min, -world.chinchilla.beta);

    if (world.mistune_curvature > 0) {
        const double b_tokens = b_sequences * static_cast<double>(world.seq_len);
        const double tau = tau_ema(b_tokens, eta_peak, weight_decay, d_tokens);
        const double ratio = std::log(tau) - std::log(world.tau_opt(d_tokens / n_params));
        loss += world.mistune_curvature * ratio * ratio;
    }

    if (world.noise_sigma > 0) {
        rng::Stream stream(
            hash_inputs(world, n_params, d_tokens, b_sequences, weight_decay, eta_peak));
        loss += world.noise_sigma * stream.next_gauss();
    }
    return loss;
}

RunSet gen_design(const WorldSpec& world, std::span<const DesignRow> design) {
    validate_world(world);
    if (design.empty()) throw TooFewPoints("gen_design needs a non-empty design");

    RunSet rs;
    rs.seq_len_default = world.seq_len;
    rs.records.reserve(design.size());
    int idx = 0;
    for (const auto& row : design) {
        RunRecord r;
        char id[32];
        std::snprintf(id, sizeof(id), "synth-%06d", idx++);
        r.run_id = id;
        r.n_params = std::llround(row.n_params);
        r.d_tokens = std::llround(row.d_tokens);
        r.batch_sequences = std::llround(row.batch_sequences);
        r.seq_len = world.seq_len;
        r.weight_decay = row.weight_decay;
        r.eta_peak = row.eta_peak;
        r.val_loss = synth_loss(static_cast<double>(r.n_params),
                                static_cast<double>(r.d_tokens),
                                static_cast<double>(r.batch_sequences), r.weight_decay,
                                r.eta_peak, world);
        rs.records.push_back(std::move(r));
    }
    validate_run_set(rs);
    return rs;
}

}  // namespace powerlines
