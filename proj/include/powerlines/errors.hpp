#pragma once

#include <stdexcept>
#include <string>

namespace powerlines {

// Base for all toolkit errors. Subclasses carry the failure category in
// the type and a human-readable detail in what().
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// run_store
struct MissingColumn : Error {
    explicit MissingColumn(const std::string& column)
        : Error("missing required column: " + column), column(column) {}
    std::string column;
};

struct InvariantViolation : Error {
    InvariantViolation(const std::string& run_id, const std::string& rule)
        : Error("invariant violated for run '" + run_id + "': " + rule),
          run_id(run_id),
          rule(rule) {}
    std::string run_id;
    std::string rule;
};

struct ParseError : Error {
    ParseError(long line, const std::string& detail)
        : Error("parse error at line " + std::to_string(line) + ": " + detail),
          line(line) {}
    long line;
};

// fit_core
struct TooFewPoints : Error {
    explicit TooFewPoints(const std::string& msg) : Error("too few points: " + msg) {}
};

struct NonPositive : Error {
    explicit NonPositive(const std::string& msg) : Error("non-positive input: " + msg) {}
};

struct DegenerateInput : Error {
    explicit DegenerateInput(const std::string& msg) : Error("degenerate input: " + msg) {}
};

struct NoDescent : Error {
    explicit NoDescent(const std::string& msg) : Error("no descent: " + msg) {}
};

struct TargetBelowIrreducible : Error {
    TargetBelowIrreducible(double target, double irreducible)
        : Error("loss target " + std::to_string(target) +
                " not above irreducible loss " + std::to_string(irreducible)) {}
};

struct NoInteriorMinimum : Error {
    explicit NoInteriorMinimum(const std::string& msg)
        : Error("no interior minimum: " + msg) {}
};

struct InfeasibleSmin : Error {
    explicit InfeasibleSmin(const std::string& msg) : Error("infeasible steps: " + msg) {}
};

// timescale
struct MixedGroup : Error {
    explicit MixedGroup(const std::string& msg) : Error("mixed group: " + msg) {}
};

// batch_laws
struct MixedN : Error {
    explicit MixedN(const std::string& msg) : Error("mixed model sizes: " + msg) {}
};

struct TooFewInvertible : Error {
    explicit TooFewInvertible(const std::string& msg)
        : Error("too few invertible laws: " + msg) {}
};

struct ExtrapolationRejected : Error {
    explicit ExtrapolationRejected(const std::string& msg)
        : Error("extrapolation rejected: " + msg) {}
};

struct DegenerateRatio : Error {
    explicit DegenerateRatio(const std::string& msg) : Error("degenerate ratio: " + msg) {}
};

struct NegativeResult : Error {
    explicit NegativeResult(const std::string& msg) : Error("negative result: " + msg) {}
};

struct UnknownForm : Error {
    explicit UnknownForm(const std::string& form)
        : Error("unknown literature form: " + form) {}
};

// ema_sim
struct StepOutOfRange : Error {
    StepOutOfRange(long long step, long long total)
        : Error("step " + std::to_string(step) + " outside [1, " +
                std::to_string(total) + "]") {}
};

struct AlphaOutOfRange : Error {
    AlphaOutOfRange(long long step, double alpha)
        : Error("eta*lambda = " + std::to_string(alpha) + " at step " +
                std::to_string(step) + " leaves [0, 1]"),
          step(step) {}
    long long step;
};

struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& msg) : Error("shape mismatch: " + msg) {}
};

// frontier
struct RankDeficient : Error {
    explicit RankDeficient(const std::string& msg) : Error("rank deficient: " + msg) {}
};

struct BelowModelFloor : Error {
    BelowModelFloor(double target, double floor)
        : Error("loss target " + std::to_string(target) +
                " at or below model floor " + std::to_string(floor)),
          floor(floor) {}
    double floor;
};

struct UnitMismatch : Error {
    explicit UnitMismatch(const std::string& msg) : Error("unit mismatch: " + msg) {}
};

struct BudgetBelowBase : Error {
    BudgetBelowBase(double budget, double base)
        : Error("FLOP budget " + std::to_string(budget) +
                " below base cost " + std::to_string(base)) {}
};

struct MixedLossTargets : Error {
    explicit MixedLossTargets(const std::string& msg)
        : Error("mixed loss targets: " + msg) {}
};

// synth_world
struct NoConvergence : Error {
    explicit NoConvergence(const std::string& msg) : Error("no convergence: " + msg) {}
};

}  // namespace powerlines
