#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ceql/expr.hpp"
#include "ceql/network.hpp"
#include "ceql/train.hpp"

namespace ceql {

enum class IllPosedness { None, UndefinedRegion, Pole };

const char* to_string(IllPosedness p);

struct Benchmark {
    std::string id;
    Expr expr;
    Index input_dim = 1;
    IllPosedness illposedness = IllPosedness::None;
    int pole_count = 0;
};

/// E-1 ... E-10 with their fixed coefficients.
const std::vector<Benchmark>& registry();

/// Looks up a benchmark by id; throws InvalidConfig for unknown ids.
const Benchmark& find_benchmark(std::string_view id);

/// Expands "E-1,E-3" and ranges such as "E-1..E-10".
std::vector<std::string> parse_benchmark_ids(std::string_view spec);

/// Two-decimal signed coefficient c = s*u, s = +-1, u ~ U(0.5, 3).
double round_coefficient(double c);

/// Refills every coefficient of `tmpl` (all constants except exponents) with
/// an independent signed uniform draw.
Expr sample_coefficients(const Expr& tmpl, std::uint64_t seed);

/// Rejection sampling of `n` rows of `b` on the split's domain. Draws whose
/// evaluation is flagged or exceeds 100 in magnitude are discarded.
Dataset sample_dataset(const Benchmark& b, Split split, Index n, std::uint64_t seed);

/// Independent stream seeds derived from one run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct SplitError {
    double mse = 0.0;
    Index flagged = 0;
};

/// MSE over the rows where the model evaluates; flagged rows are counted.
SplitError split_error(const Expr& model, const Dataset& data);
SplitError split_error(const Network& model, const Dataset& data);

struct RunMetrics {
    std::string id;
    std::uint64_t seed = 0;
    double train_mse = 0.0;
    double interp_mse = 0.0;
    double extrap_mse = 0.0;
    /// Node count of the reported expression (coefficients at 5 decimals).
    Index node_count = 0;
    /// Node count of the unrounded extracted expression.
    Index node_count_raw = 0;
    Index interp_flagged = 0;
    Index extrap_flagged = 0;
    bool failed = false;
    std::string status = "ok";
};

/// Decimals of the reported expression whose size is the NC metric.
inline constexpr int kReportDecimals = 5;

RunMetrics evaluate_model(const Expr& model, const Dataset& interp, const Dataset& extrap);

/// Uses the extracted expression when extraction succeeds, the network itself
/// otherwise (node_count is then 0).
RunMetrics evaluate_model(const Network& model, const Dataset& interp, const Dataset& extrap);

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // population
};

Summary summarize(const std::vector<double>& values);

struct AggregateRow {
    std::string id;
    Summary interp_mse;
    Summary extrap_mse;
    Summary node_count;
    Index runs = 0;
    Index failed_runs = 0;
};

/// Mean and population standard deviation over the successful runs.
AggregateRow aggregate(const std::vector<RunMetrics>& runs);

struct BenchConfig {
    PhaseSchedule schedule = PhaseSchedule::defaults();
    Layer1Variant layer1 = Layer1Variant::AsPrinted;
    /// Overrides the benchmark library when non-empty.
    std::vector<LayerSpec> layers;
    InitPolicy init;
    bool skip_inputs = true;
    Index n_train = 128;
    Index n_test = 8192;
    Index record_stride = 100;
};

struct BenchRun {
    RunMetrics metrics;
    std::optional<Expr> expression;
    Network network;
    History history;
    double im_mass = 0.0;  // sum Im(w)^2 over active weights
};

/// Samples the three datasets of `b` for `seed`, trains, extracts, evaluates.
BenchRun run_benchmark(const Benchmark& b, const BenchConfig& config, std::uint64_t seed);

// Division pathology: fit Re(1/(x + a)) to 1/x over one complex parameter a.

/// Per-sample gradient a / (x (x + a)^3) of (1/2)(1/(x+a) - 1/x)^2 for real a.
double division_sample_gradient(double x, double a);

struct DivisionDemoConfig {
    Complex init{1.5, 0.5};
    bool restrict_real = false;
    Index steps = 20000;
    double lr = 1e-2;
    std::uint64_t seed = 0;
    Index points = 100;
};

struct DivisionStep {
    Index step = 0;
    Complex a;
    double loss = 0.0;
};

struct DivisionDemoResult {
    std::vector<DivisionStep> trajectory;  // step 0 is the initial point
    Complex final_a;
    double final_loss = 0.0;
    Index flagged = 0;
};

DivisionDemoResult division_pathology_demo(const DivisionDemoConfig& config);

}  // namespace ceql
