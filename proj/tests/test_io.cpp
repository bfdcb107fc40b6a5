#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "ceql/cli.hpp"
#include "ceql/io.hpp"
#include "support.hpp"

using namespace ceql;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ceql_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("network json is lossless") {
    Network net = test::random_full_library(17, 2);
    net.deactivate(net.output_edge(3));
    net.set_weight(net.summation_edge(1, 2, 0), Complex(0.1 + 0.2, -1.0 / 3.0));
    const Json j = network_to_json(net);
    const Network back = network_from_json(Json::parse(j.dump()));
    CHECK(back == net);
    CHECK(back.weights() == net.weights());
    CHECK(back.active().cast<int>().matrix() == net.active().cast<int>().matrix());
    CHECK(back.layers() == net.layers());
    CHECK(back.skip_inputs());

    Json broken = j;
    broken["edges"][0]["kind"] = "sideways";
    CHECK_THROWS_AS(network_from_json(broken), Error);
}

TEST_CASE("dataset csv round trip") {
    const Dataset d = sample_dataset(find_benchmark("E-2"), Split::Train, 50, 4);
    const std::string csv = dataset_to_csv(d);
    CHECK(csv.rfind("x1,x2,y\n", 0) == 0);
    const Dataset back = dataset_from_csv(csv);
    CHECK(back.X == d.X);
    CHECK(back.y == d.y);
    CHECK_THROWS_AS(dataset_from_csv("x1,y\n1,2,3\n"), Error);
    CHECK_THROWS_AS(dataset_from_csv("x1,y\n1,abc\n"), Error);
    CHECK_THROWS_AS(dataset_from_csv("a,b\n1,2\n"), Error);
    CHECK_THROWS_AS(dataset_from_csv(""), Error);
}

TEST_CASE("number formatting") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(metrics_to_json(RunMetrics{}).at("interp_mse") == 0.0);
    RunMetrics bad;
    bad.interp_mse = std::numeric_limits<double>::quiet_NaN();
    CHECK(metrics_to_json(bad).at("interp_mse").is_null());
}

TEST_CASE("aggregate csv columns") {
    AggregateRow r;
    r.id = "E-1";
    r.interp_mse = {1e-12, 0.0};
    const std::string csv = aggregate_to_csv({r});
    CHECK(csv.rfind("expression_id,interp_mse_mean,interp_mse_std,extrap_mse_mean,extrap_mse_std,nc_mean,nc_std,"
                    "failed_runs\nE-1,",
                    0) == 0);
}

TEST_CASE("config round trip") {
    RunConfig c;
    c.scale = 0.25;
    c.layer1 = Layer1Variant::IdSubstituted;
    c.ids = {"E-3", "E-7"};
    c.seeds = {2, 9};
    c.schedule = PhaseSchedule::defaults(1e-3);
    c.schedule.phases[1].pruning->min_edges = 12;
    c.frf.noise_sd = 0.3;
    c.frf.windows = {{0.1, 0.4}};
    c.train_csv = "data.csv";
    const RunConfig back = config_from_json(Json::parse(to_json(c).dump()));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.schedule.phases[2].loss.lambda_im == 1e-3);
    CHECK(back.effective_schedule().phases[0].epochs == 25000);

    const fs::path dir = scratch("config");
    save_config(c, (dir / "c.json").string());
    CHECK(to_json(load_config((dir / "c.json").string())) == to_json(c));
}

TEST_CASE("config validation") {
    auto code_of = [](const Json& j) {
        try {
            config_from_json(j);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Io;
    };
    CHECK(code_of(Json{{"sclae", 0.2}}) == ErrorCode::InvalidConfig);
    CHECK(code_of(Json{{"scale", -1}}) == ErrorCode::InvalidConfig);
    CHECK(code_of(Json{{"scale", "big"}}) == ErrorCode::InvalidConfig);
    CHECK(code_of(Json{{"ids", {"E-12"}}}) == ErrorCode::InvalidConfig);
    CHECK(code_of(Json{{"layer1_variant", "typo"}}) == ErrorCode::InvalidConfig);
    CHECK(code_of(Json{{"schedule", Json::array()}}) == ErrorCode::InvalidConfig);
    CHECK(code_of(Json{{"frf", {{"terms", 0}}}}) == ErrorCode::InvalidConfig);
    CHECK(code_of(Json::object()) == ErrorCode::Io);  // valid: no throw
    CHECK_THROWS_AS(load_config("/nonexistent/ceql.json"), Error);
}

TEST_CASE("exit codes") {
    CHECK(exit_code_for(ErrorCode::DegenerateModel) == 1);
    CHECK(exit_code_for(ErrorCode::ImaginaryResidue) == 1);
    CHECK(exit_code_for(ErrorCode::InvalidConfig) == 2);
    CHECK(exit_code_for(ErrorCode::Io) == 2);
}

TEST_CASE("gen-data and extract commands") {
    const fs::path dir = scratch("cmds");
    std::ostringstream out;
    CHECK(cmd_gen_data("E-7", Split::Train, 128, 3, (dir / "e7.csv").string(), out) == 0);
    const Dataset d = dataset_from_csv(read_text_file(dir / "e7.csv"));
    CHECK(d.rows() == 128);
    CHECK(d.X.cwiseAbs().maxCoeff() <= 2.0);

    Network net = make_network(1, {polynomial_layer()}, true);
    net.clear();
    net.set_weight(net.bias_edge(0, 1), 2.01);
    net.set_weight(net.output_edge(1), 1.0);
    net.set_weight(net.output_edge(4), 1.87);
    write_file_atomic(dir / "net.json", network_to_json(net).dump());
    std::ostringstream text;
    CHECK(cmd_extract((dir / "net.json").string(), false, text) == 0);
    CHECK(text.str() == "1.87*x1 + 2.01\n");
    CHECK_THROWS_AS(cmd_extract((dir / "missing.json").string(), false, text), Error);
}

TEST_CASE("bench command writes every artifact") {
    RunConfig c;
    c.ids = {"E-1"};
    c.seeds = {0, 1};
    c.scale = 0.001;
    c.n_test = 256;
    c.out_dir = scratch("bench").string();
    std::ostringstream log;
    CHECK(cmd_bench(c, log) == 0);
    const fs::path out = c.out_dir;
    for (const char* f : {"config.json", "results.json", "aggregate.csv", "aggregate_meta.json", "expressions.txt",
                          "runs/E-1_seed0.json", "runs/E-1_seed1.json"})
        CHECK(fs::exists(out / f));
    const Json results = Json::parse(read_text_file(out / "results.json"));
    CHECK(results.is_array());
    CHECK(results.size() == 2);
    CHECK(Json::parse(read_text_file(out / "aggregate_meta.json")).at("std_convention") == "population");

    // Re-running the persisted config reproduces the results.
    RunConfig again = load_config((out / "config.json").string());
    again.out_dir = scratch("bench2").string();
    CHECK(cmd_bench(again, log) == 0);
    CHECK(read_text_file(fs::path(again.out_dir) / "aggregate.csv") == read_text_file(out / "aggregate.csv"));
    CHECK(read_text_file(fs::path(again.out_dir) / "expressions.txt") == read_text_file(out / "expressions.txt"));
}
