#pragma once

// Command implementations behind tools/ceql. Each returns the process exit
// code: 0 success, 1 failed or degenerate model, 2 config or IO error.

#include <iosfwd>
#include <optional>
#include <string>

#include "ceql/config.hpp"

namespace ceql {

inline constexpr int kExitOk = 0;
inline constexpr int kExitModelFailure = 1;
inline constexpr int kExitUsage = 2;

int exit_code_for(ErrorCode code);

/// Every (id, seed) of the config, `jobs` at a time. Writes into out_dir:
/// config.json, runs/<id>_seed<s>.json, histories/<id>_seed<s>.csv,
/// networks/<id>_seed<s>.json, expressions.txt, results.json (every run),
/// aggregate.csv and aggregate_meta.json (std convention, run counts).
int cmd_bench(const RunConfig& config, std::ostream& log);

/// Trains on `config.train_csv`, writes network.json, expression.txt and
/// history.csv into out_dir and prints the expression.
int cmd_fit(const RunConfig& config, std::uint64_t seed, std::ostream& out);

/// Writes n rows of a benchmark split as CSV to `out_csv` (stdout when empty).
int cmd_gen_data(const std::string& id, Split split, Index n, std::uint64_t seed,
                 const std::string& out_csv, std::ostream& out);

/// Extracts the expression of a saved network.
int cmd_extract(const std::string& network_json, bool as_json, std::ostream& out);

/// Writes the trajectory CSV (step,re_a,im_a,loss).
int cmd_demo_division(const DivisionDemoConfig& config, const std::string& out_csv, std::ostream& out);

/// Fits the FRF surrogate to `data_csv`, or to synthetic data when empty.
/// Writes model.json, model.txt, peaks.csv, history.csv (and data.csv for
/// synthetic runs) into out_dir.
int cmd_frf(const RunConfig& config, const std::optional<std::string>& data_csv, std::uint64_t seed,
            std::ostream& out);

}  // namespace ceql
