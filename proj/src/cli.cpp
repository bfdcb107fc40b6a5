#include "ceql/cli.hpp"

#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include "ceql/io.hpp"

namespace ceql {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::DegenerateModel:
    case ErrorCode::ImaginaryResidue:
    case ErrorCode::EmptyBatch:
    case ErrorCode::NonFiniteGradient: return kExitModelFailure;
    default: return kExitUsage;
    }
}

namespace {

std::string run_name(const std::string& id, std::uint64_t seed) { return id + "_seed" + std::to_string(seed); }

std::string reported(const Expr& e) { return render(round_coefficients(e, kReportDecimals)); }

}  // namespace

int cmd_bench(const RunConfig& config, std::ostream& log) {
    if (config.ids.empty()) throw Error(ErrorCode::InvalidConfig, "no benchmark ids given");
    if (config.seeds.empty()) throw Error(ErrorCode::InvalidConfig, "no seeds given");
    const fs::path out = config.out_dir;
    save_config(config, (out / "config.json").string());
    const BenchConfig bench = config.bench_config();

    struct Job {
        std::string id;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto& id : config.ids)
        for (auto s : config.seeds) jobs.push_back({id, s});

    std::vector<RunMetrics> metrics(jobs.size());
    std::vector<std::string> expressions(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
            const Job& job = jobs[k];
            const std::string name = run_name(job.id, job.seed);
            RunMetrics m;
            try {
                BenchRun run = run_benchmark(find_benchmark(job.id), bench, job.seed);
                m = run.metrics;
                expressions[k] = run.expression ? reported(*run.expression) : "<" + m.status + ">";
                write_file_atomic(out / "histories" / (name + ".csv"), history_to_csv(run.history));
                write_file_atomic(out / "networks" / (name + ".json"), network_to_json(run.network).dump(1) + "\n");
            } catch (const Error& err) {
                m.id = job.id;
                m.seed = job.seed;
                m.failed = true;
                m.status = err.what();
                expressions[k] = "<" + m.status + ">";
            }
            write_file_atomic(out / "runs" / (name + ".json"), metrics_to_json(m).dump(2) + "\n");
            metrics[k] = m;
            std::lock_guard lock(log_mutex);
            log << name << ": " << (m.failed ? "FAILED " + m.status : "interp " + format_double(m.interp_mse) +
                                                                           " extrap " + format_double(m.extrap_mse) +
                                                                           " NC " + std::to_string(m.node_count))
                << "\n";
        }
    };
    const Index threads = std::max<Index>(1, std::min<Index>(config.jobs, static_cast<Index>(jobs.size())));
    std::vector<std::thread> pool;
    for (Index t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::string text;
    std::vector<AggregateRow> rows;
    for (const auto& id : config.ids) {
        std::vector<RunMetrics> group;
        for (std::size_t k = 0; k < jobs.size(); ++k) {
            if (jobs[k].id != id) continue;
            group.push_back(metrics[k]);
            text += run_name(id, jobs[k].seed) + ": " + expressions[k] + "\n";
        }
        rows.push_back(aggregate(group));
        rows.back().id = id;
    }
    Json results = Json::array();
    for (const auto& m : metrics) results.push_back(metrics_to_json(m));
    Json meta;
    meta["std_convention"] = "population";
    meta["rows"] = Json::array();
    for (const auto& r : rows)
        meta["rows"].push_back({{"expression_id", r.id}, {"runs", r.runs}, {"failed_runs", r.failed_runs}});
    write_file_atomic(out / "expressions.txt", text);
    write_file_atomic(out / "results.json", results.dump(2) + "\n");
    write_file_atomic(out / "aggregate.csv", aggregate_to_csv(rows));
    write_file_atomic(out / "aggregate_meta.json", meta.dump(2) + "\n");
    return kExitOk;
}

int cmd_fit(const RunConfig& config, std::uint64_t seed, std::ostream& out) {
    if (!config.train_csv) throw Error(ErrorCode::InvalidConfig, "no training CSV given");
    const Dataset data = dataset_from_csv(read_text_file(*config.train_csv));
    const fs::path dir = config.out_dir;
    RunConfig persisted = config;
    persisted.seeds = {seed};
    save_config(persisted, (dir / "config.json").string());

    Network net = Network::build(data.input_dim(),
                                 config.layers.empty() ? benchmark_library(config.layer1) : config.layers,
                                 config.skip_inputs, config.init, derive_seed(seed, 4));
    TrainedNetwork trained = run_training(std::move(net), data, config.effective_schedule(), seed, config.record_stride);
    write_file_atomic(dir / "history.csv", history_to_csv(trained.history));
    write_file_atomic(dir / "network.json", network_to_json(trained.model.network()).dump(1) + "\n");
    if (trained.failed) {
        out << "training failed: " << trained.failure << "\n";
        return kExitModelFailure;
    }
    ExtractOptions opt;
    opt.domain = data.X;
    const Expr e = extract(trained.model.network(), opt);
    const std::string text = reported(e);
    write_file_atomic(dir / "expression.txt", text + "\n");
    write_file_atomic(dir / "expression.json", to_json(e).dump(1) + "\n");
    out << text << "\n";
    out << "train MSE " << format_double(split_error(e, data).mse) << "\n";
    return kExitOk;
}

int cmd_gen_data(const std::string& id, Split split, Index n, std::uint64_t seed, const std::string& out_csv,
                 std::ostream& out) {
    if (n < 1) throw Error(ErrorCode::InvalidConfig, "row count must be positive");
    const Dataset d = sample_dataset(find_benchmark(id), split, n, seed);
    const std::string csv = dataset_to_csv(d);
    if (out_csv.empty()) out << csv;
    else write_file_atomic(out_csv, csv);
    return kExitOk;
}

int cmd_extract(const std::string& network_json, bool as_json, std::ostream& out) {
    Json j;
    try {
        j = Json::parse(read_text_file(network_json));
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::Io, network_json + ": " + e.what());
    }
    const Expr e = extract(network_from_json(j));
    if (as_json) out << to_json(e).dump(2) << "\n";
    else out << reported(e) << "\n";
    return kExitOk;
}

int cmd_demo_division(const DivisionDemoConfig& config, const std::string& out_csv, std::ostream& out) {
    const DivisionDemoResult r = division_pathology_demo(config);
    std::string csv = "step,re_a,im_a,loss\n";
    for (const auto& s : r.trajectory)
        csv += std::to_string(s.step) + "," + format_double(s.a.real()) + "," + format_double(s.a.imag()) + "," +
               format_double(s.loss) + "\n";
    if (out_csv.empty()) out << csv;
    else write_file_atomic(out_csv, csv);
    out << "final a = " << format_double(r.final_a.real()) << (r.final_a.imag() < 0 ? " - " : " + ")
        << format_double(std::abs(r.final_a.imag())) << "i, |a| = " << format_double(std::abs(r.final_a))
        << ", loss = " << format_double(r.final_loss) << "\n";
    return kExitOk;
}

int cmd_frf(const RunConfig& config, const std::optional<std::string>& data_csv, std::uint64_t seed,
            std::ostream& out) {
    const fs::path dir = config.out_dir;
    const FrfRunConfig& f = config.frf;
    FrfData data;
    if (data_csv) {
        data = frf_data_from_csv(read_text_file(*data_csv));
    } else {
        data = synth_frf(three_resonance_truth(), f.levels, f.noise_sd, f.n_per_level, f.data_seed, f.repetitions);
        write_file_atomic(dir / "data.csv", frf_data_to_csv(data));
    }
    RunConfig persisted = config;
    persisted.seeds = {seed};
    save_config(persisted, (dir / "config.json").string());

    FrfFitConfig fit_cfg = f.fit;
    fit_cfg.schedule = f.fit.schedule.scaled(config.scale);
    fit_cfg.seed = seed;
    fit_cfg.record_stride = config.record_stride;
    const FrfFit fit = fit_frf(data, fit_cfg);
    write_file_atomic(dir / "history.csv", history_to_csv(fit.history));
    if (fit.failed) {
        out << "FRF fit failed: " << fit.failure << "\n";
        return kExitModelFailure;
    }
    write_file_atomic(dir / "model.json", frf_to_json(fit.model).dump(1) + "\n");
    const std::string text = render_frf(fit.model);
    write_file_atomic(dir / "model.txt", text);
    std::vector<std::string> warnings;
    const auto rows = peak_report(fit.model, data, f.windows, damage_levels(data), &warnings);
    write_file_atomic(dir / "peaks.csv", peak_report_csv(rows));
    for (const auto& w : warnings) out << "warning: " << w << "\n";
    out << text;
    return kExitOk;
}

}  // namespace ceql
