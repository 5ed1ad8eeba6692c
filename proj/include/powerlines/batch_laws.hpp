#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "powerlines/fit_core.hpp"
#include "powerlines/run_store.hpp"
#include "powerlines/timescale.hpp"

namespace powerlines {

// Per-batch-size loss laws L_B(D) at a single model size.
struct LossLawFamily {
    std::int64_t n_params = 0;
    std::int64_t seq_len = 0;
    std::map<std::int64_t, SaturatingLawFit> laws;  // batch_sequences -> fit
};

struct CritPoint {
    double loss_target = 0.0;
    double d_min = 0.0;            // tokens
    double s_min = 0.0;            // steps
    double b_crit_tokens = 0.0;    // d_min / s_min
    double b_crit_sequences = 0.0;
    std::int64_t seq_len = 0;
};

enum class BatchLawKind { BoptInD, BcritInDmin };
enum class BatchUnits { Sequences, Tokens };

// B(D) power law; output units are tagged, input is always tokens.
struct BatchScalingLaw {
    BatchLawKind kind = BatchLawKind::BcritInDmin;
    PowerLawFit law;
    BatchUnits units = BatchUnits::Sequences;
    std::int64_t seq_len = kDefaultSeqLen;

    double predict_sequences(double d_tokens) const {
        const double v = law.predict(d_tokens);
        return units == BatchUnits::Sequences ? v : v / static_cast<double>(seq_len);
    }
    double predict_tokens(double d_tokens) const {
        const double v = law.predict(d_tokens);
        return units == BatchUnits::Tokens ? v : v * static_cast<double>(seq_len);
    }
};

// Fits one saturating law per batch size; all runs must share N (and
// seq_len, so batch units stay coherent). Batches below min_batch_sequences
// are dropped before fitting.
LossLawFamily fit_loss_family(std::span<const RunRecord> runs,
                              std::optional<std::int64_t> min_batch_sequences = {});

// Interpolation slack when inverting the family's laws, as a fraction of
// each law's log-D domain width.
inline constexpr double kInterpolationSlack = 0.10;

CritPoint bcrit_at_loss(const LossLawFamily& family, double loss_target,
                        double log_slack = kInterpolationSlack,
                        std::vector<std::string>* warnings = nullptr);

// D needed at batch size b: d_min * (1 + b / b_crit). Tokens throughout.
double extra_data(double d_min, double b_crit_tokens, double b_tokens);

// Two-point estimator from (B, D) pairs at the same target loss:
// r = d2/d1, b_crit = (b2 - r*b1) / (r - 1). Sequence units in and out.
double two_point_bcrit(double b1_sequences, double d1_tokens, double b2_sequences,
                       double d2_tokens);

// Optimal batch size of one (N, D) sweep over B with lambda tuned per B:
// lowest loss per batch, then the log-parabola vertex. Sequences.
double measure_bopt(std::span<const RunRecord> sweep,
                    std::optional<std::int64_t> min_batch_sequences = {});

BatchScalingLaw fit_batch_scaling_law(std::span<const XY> points, BatchLawKind kind,
                                      BatchUnits units = BatchUnits::Sequences,
                                      std::int64_t seq_len = kDefaultSeqLen,
                                      const BootstrapConfig& bootstrap = {});

// Literature conversions (batch-size laws reported by other groups).
BatchScalingLaw convert_zhang_law(double coeff_tokens, double exponent,
                                  std::int64_t seq_len);

struct BatchPrediction {
    double tokens = 0.0;
    double sequences = 0.0;
};

BatchPrediction deepseek_bopt(double c_flops, std::int64_t seq_len);

enum class LiteratureForm { Zhang, Deepseek };
LiteratureForm parse_literature_form(const std::string& form);  // throws UnknownForm

// Full critical-batch pipeline over a run set: per-N loss families, crit
// points at each target, then the B_crit(D_min) power law.
struct BcritPipelineResult {
    std::vector<CritPoint> points;
    BatchScalingLaw law;
    std::map<std::int64_t, LossLawFamily> families;  // by n_params
};

BcritPipelineResult bcrit_pipeline(const RunSet& rs, std::span<const double> loss_targets,
                                   const BootstrapConfig& bootstrap = {},
                                   std::optional<std::int64_t> min_batch_sequences = {},
                                   std::vector<std::string>* warnings = nullptr);

}  // namespace powerlines
