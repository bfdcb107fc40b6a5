#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ceql/bench.hpp"
#include "ceql/frf.hpp"
#include "ceql/train.hpp"

namespace ceql {

struct FrfRunConfig {
    FrfFitConfig fit;
    std::vector<double> levels{0.0, 2.0, 4.0, 6.0};
    double noise_sd = 0.0;  // absolute, synthetic data only
    Index n_per_level = 400;
    Index repetitions = 1;
    std::uint64_t data_seed = 0;
    std::vector<PeakWindow> windows = default_windows();
};

/// Everything a command needs to reproduce a run. The schedule is stored
/// unscaled; `scale` is applied when the run starts.
struct RunConfig {
    PhaseSchedule schedule = PhaseSchedule::defaults();
    double scale = 1.0;
    Layer1Variant layer1 = Layer1Variant::AsPrinted;
    std::vector<LayerSpec> layers;  // empty: the benchmark library
    InitPolicy init;
    bool skip_inputs = true;
    Index n_train = 128;
    Index n_test = 8192;
    Index record_stride = 100;
    std::vector<std::string> ids;
    std::vector<std::uint64_t> seeds{0};
    std::optional<std::string> train_csv;
    Index jobs = 1;
    std::string out_dir = "out";
    FrfRunConfig frf;

    PhaseSchedule effective_schedule() const { return schedule.scaled(scale); }
    BenchConfig bench_config() const;
};

/// Benchmark-free defaults for FRF fitting.
FrfRunConfig default_frf_run_config();

nlohmann::json to_json(const PhaseSchedule& s);
/// Keys absent from `j` keep the values of `base`.
PhaseSchedule schedule_from_json(const nlohmann::json& j, const PhaseSchedule& base = PhaseSchedule::defaults());

nlohmann::json to_json(const RunConfig& c);
/// Missing keys keep their defaults; unknown keys and malformed values throw
/// InvalidConfig.
RunConfig config_from_json(const nlohmann::json& j);

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& c, const std::string& path);

/// The config named by CEQL_DEFAULT_CONFIG, or the built-in defaults.
RunConfig default_config();

}  // namespace ceql
