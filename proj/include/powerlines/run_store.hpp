#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "powerlines/errors.hpp"

namespace powerlines {

inline constexpr std::int64_t kDefaultSeqLen = 2048;
inline constexpr std::int64_t kDefaultProxyWidth = 256;

// One completed training run. D and B are canonically tokens internally;
// batches are ingested in sequences with an explicit seq_len so the
// conversion stays lossless.
struct RunRecord {
    std::string run_id;
    std::int64_t n_params = 0;
    std::int64_t d_tokens = 0;
    std::int64_t batch_sequences = 0;
    std::int64_t seq_len = 0;
    std::optional<double> eta_base;  // base LR before width adjustment
    double eta_peak = 0.0;           // width-adjusted peak LR
    double weight_decay = 0.0;
    double val_loss = 0.0;
    std::optional<std::int64_t> width;
    std::map<std::string, std::string> tags;

    std::int64_t batch_tokens() const { return batch_sequences * seq_len; }
    // Real, not integer: synthetic designs and inverted laws produce
    // fractional step counts.
    double steps() const {
        return static_cast<double>(d_tokens) / static_cast<double>(batch_tokens());
    }
    double tpp() const {
        return static_cast<double>(d_tokens) / static_cast<double>(n_params);
    }
};

struct RunSet {
    std::vector<RunRecord> records;
    std::int64_t seq_len_default = kDefaultSeqLen;
};

enum class RunFormat { Csv, Jsonl };

// Throws InvariantViolation when a field or derived quantity breaks the
// record contract.
void validate_record(const RunRecord& r, std::int64_t proxy_width = kDefaultProxyWidth);
void validate_run_set(const RunSet& rs, std::int64_t proxy_width = kDefaultProxyWidth);

RunSet load_runs(const std::filesystem::path& path, RunFormat format,
                 std::int64_t proxy_width = kDefaultProxyWidth);
void write_runs(const RunSet& rs, const std::filesystem::path& path,
                RunFormat format = RunFormat::Csv);

enum class RunField { NParams, DTokens, BatchSequences };

using GroupKey = std::vector<std::int64_t>;

// Partition of the records; the union of all groups is the input.
std::map<GroupKey, std::vector<RunRecord>> group_runs(const RunSet& rs,
                                                      const std::vector<RunField>& keys);

}  // namespace powerlines
