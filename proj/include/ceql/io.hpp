#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ceql/bench.hpp"
#include "ceql/network.hpp"
#include "ceql/train.hpp"

namespace ceql {

using Json = nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);

/// Writes through a temporary sibling file and a rename, creating parent
/// directories as needed.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Every structural edge with its position, complex weight and active flag.
/// Doubles are written in shortest round-trip form, so reading back is exact.
Json network_to_json(const Network& net);
Network network_from_json(const Json& j);

/// Header x1[,x2,...],y with 17 significant digits.
std::string dataset_to_csv(const Dataset& d);
Dataset dataset_from_csv(const std::string& text, Split split = Split::Train);

std::string history_to_csv(const History& h);

Json metrics_to_json(const RunMetrics& m);

/// Columns: expression_id, interp_mse_mean, interp_mse_std, extrap_mse_mean,
/// extrap_mse_std, nc_mean, nc_std, failed_runs.
std::string aggregate_to_csv(const std::vector<AggregateRow>& rows);

std::string format_double(double v);

}  // namespace ceql
