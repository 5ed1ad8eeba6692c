#include "powerlines/batch_laws.hpp"

#include <algorithm>
#include <cmath>

namespace powerlines {

LossLawFamily fit_loss_family(std::span<const RunRecord> runs,
                              std::optional<std::int64_t> min_batch_sequences) {
    if (runs.empty()) throw TooFewPoints("fit_loss_family on an empty run list");
    LossLawFamily family;
    family.n_params = runs.front().n_params;
    family.seq_len = runs.front().seq_len;

    std::map<std::int64_t, std::vector<LossAtData>> by_batch;
    for (const auto& r : runs) {
        if (r.n_params != family.n_params)
            throw MixedN("fit_loss_family requires a single model size");
        if (r.seq_len != family.seq_len)
            throw UnitMismatch("fit_loss_family requires a single seq_len");
        if (min_batch_sequences && r.batch_sequences < *min_batch_sequences) continue;
        by_batch[r.batch_sequences].push_back(
            {static_cast<double>(r.d_tokens), r.val_loss});
    }

    for (const auto& [b, pts] : by_batch) {
        if (pts.size() < 3)
            throw TooFewPoints("batch size " + std::to_string(b) + " has " +
                               std::to_string(pts.size()) + " D points, needs >= 3");
        family.laws.emplace(b, fit_saturating_law(pts));
    }
    if (family.laws.empty()) throw TooFewPoints("no batch groups to fit");
    return family;
}

CritPoint bcrit_at_loss(const LossLawFamily& family, double loss_target,
                        double log_slack, std::vector<std::string>* warnings) {
    // Invert every law whose floor admits the target; laws that cannot
    // reach the target carry no point at this loss.
    std::vector<TradeoffPoint> pairs;
    std::vector<std::int64_t> rejected;
    for (const auto& [b, law] : family.laws) {
        if (loss_target <= law.irreducible) continue;
        const InvertResult inv = invert_saturating(law, loss_target);
        if (!law.within_domain(inv.d_tokens, log_slack)) {
            rejected.push_back(b);
            continue;
        }
        const double b_tokens =
            static_cast<double>(b) * static_cast<double>(family.seq_len);
        pairs.push_back({inv.d_tokens, inv.d_tokens / b_tokens});
    }
    if (!rejected.empty()) {
        std::string names;
        for (std::int64_t b : rejected) names += (names.empty() ? "" : ", ") + std::to_string(b);
        throw ExtrapolationRejected("loss " + std::to_string(loss_target) +
                                    " requires extrapolating B in {" + names + "}");
    }
    if (pairs.size() < 3)
        throw TooFewInvertible("loss " + std::to_string(loss_target) + " invertible for " +
                               std::to_string(pairs.size()) + " laws, needs >= 3");

    const TradeoffFit fit = fit_hyperbolic_tradeoff(pairs, warnings);
    CritPoint cp;
    cp.loss_target = loss_target;
    cp.d_min = fit.d_min;
    cp.s_min = fit.s_min;
    cp.b_crit_tokens = fit.b_crit_tokens();
    cp.b_crit_sequences = cp.b_crit_tokens / static_cast<double>(family.seq_len);
    cp.seq_len = family.seq_len;
    return cp;
}

double extra_data(double d_min, double b_crit_tokens, double b_tokens) {
    if (d_min <= 0 || b_crit_tokens <= 0)
        throw NonPositive("extra_data requires positive d_min and b_crit");
    if (b_tokens < 0) throw NonPositive("extra_data requires b >= 0");
    return d_min * (1.0 + b_tokens / b_crit_tokens);
}

double two_point_bcrit(double b1_sequences, double d1_tokens, double b2_sequences,
                       double d2_tokens) {
    if (b1_sequences <= 0 || d1_tokens <= 0)
        throw NonPositive("two_point_bcrit requires positive pairs");
    if (!(b2_sequences > b1_sequences) || !(d2_tokens > d1_tokens))
        throw DegenerateRatio("two_point_bcrit requires b2 > b1 and d2 > d1");
    const double r = d2_tokens / d1_tokens;
    const double b_crit = (b2_sequences - r * b1_sequences) / (r - 1.0);
    if (b_crit <= 0)
        throw NegativeResult("pairs are inconsistent with the extra-data relation");
    return b_crit;
}

double measure_bopt(std::span<const RunRecord> sweep,
                    std::optional<std::int64_t> min_batch_sequences) {
    if (sweep.empty()) throw TooFewPoints("measure_bopt on an empty sweep");
    const std::int64_t n = sweep.front().n_params;
    const std::int64_t d = sweep.front().d_tokens;
    std::map<std::int64_t, double> best_by_batch;
    for (const auto& r : sweep) {
        if (r.n_params != n || r.d_tokens != d)
            throw MixedGroup("measure_bopt requires a single (N, D) group");
        if (min_batch_sequences && r.batch_sequences < *min_batch_sequences) continue;
        auto [it, inserted] = best_by_batch.emplace(r.batch_sequences, r.val_loss);
        if (!inserted) it->second = std::min(it->second, r.val_loss);
    }
    std::vector<XY> pts;
    pts.reserve(best_by_batch.size());
    for (const auto& [b, loss] : best_by_batch)
        pts.push_back({static_cast<double>(b), loss});
    return fit_log_parabola_min(pts);
}

BatchScalingLaw fit_batch_scaling_law(std::span<const XY> points, BatchLawKind kind,
                                      BatchUnits units, std::int64_t seq_len,
                                      const BootstrapConfig& bootstrap) {
    if (points.size() < 3)
        throw TooFewPoints("fit_batch_scaling_law needs >= 3 points, got " +
                           std::to_string(points.size()));
    BatchScalingLaw out;
    out.kind = kind;
    out.units = units;
    out.seq_len = seq_len;
    out.law = fit_power_law(points);
    if (points.size() >= 5) {
        const auto q =
            bootstrap_exponent(points, bootstrap.frac, bootstrap.iters, bootstrap.seed);
        out.law.has_quantiles = true;
        out.law.exp_q10 = q.q10;
        out.law.exp_q90 = q.q90;
    }
    return out;
}

BatchScalingLaw convert_zhang_law(double coeff_tokens, double exponent,
                                  std::int64_t seq_len) {
    if (coeff_tokens <= 0 || seq_len <= 0)
        throw NonPositive("convert_zhang_law requires positive coefficient and seq_len");
    BatchScalingLaw out;
    out.kind = BatchLawKind::BcritInDmin;
    out.units = BatchUnits::Sequences;
    out.seq_len = seq_len;
    // Their threshold is D = 1.2 * D_min; ours is 2x, so scale by 5, then
    // report in sequences.
    out.law.coeff = coeff_tokens * 5.0 / static_cast<double>(seq_len);
    out.law.exponent = exponent;
    out.law.r_squared = 1.0;
    out.law.n_points = 0;
    return out;
}

BatchPrediction deepseek_bopt(double c_flops, std::int64_t seq_len) {
    if (c_flops <= 0 || seq_len <= 0)
        throw NonPositive("deepseek_bopt requires positive compute and seq_len");
    BatchPrediction p;
    p.tokens = 0.292 * std::pow(c_flops, 0.3271);
    p.sequences = p.tokens / static_cast<double>(seq_len);
    return p;
}

LiteratureForm parse_literature_form(const std::string& form) {
    if (form == "zhang") return LiteratureForm::Zhang;
    if (form == "deepseek") return LiteratureForm::Deepseek;
    throw UnknownForm(form);
}

BcritPipelineResult bcrit_pipeline(const RunSet& rs, std::span<const double> loss_targets,
                                   const BootstrapConfig& bootstrap,
                                   std::optional<std::int64_t> min_batch_sequences,
                                   std::vector<std::string>* warnings) {
    BcritPipelineResult out;
    auto by_n = group_runs(rs, {RunField::NParams});
    std::int64_t seq_len = kDefaultSeqLen;
    for (const auto& [key, records] : by_n) {
        LossLawFamily family = fit_loss_family(records, min_batch_sequences);
        seq_len = family.seq_len;
        for (double target : loss_targets)
            out.points.push_back(bcrit_at_loss(family, target, kInterpolationSlack, warnings));
        out.families.emplace(key[0], std::move(family));
    }
    std::vector<XY> pts;
    pts.reserve(out.points.size());
    for (const auto& cp : out.points) pts.push_back({cp.d_min, cp.b_crit_sequences});
    out.law = fit_batch_scaling_law(pts, BatchLawKind::BcritInDmin, BatchUnits::Sequences,
                                    seq_len, bootstrap);
    return out;
}

}  // namespace powerlines
