#include <iostream>

#include <CLI11.hpp>

#include "ceql/cli.hpp"

using namespace ceql;

namespace {

struct Common {
    std::string config_path;
    double scale = -1.0;
    std::uint64_t seed = 0;
    Index jobs = 0;
    std::string out;
    double phase3_lambda_im = 0.0;
    std::string layer1;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "JSON run config");
    cmd->add_option("--scale", c.scale, "multiply epochs, pruning interval and patience")->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", c.seed, "run seed");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--phase3-lambda-im", c.phase3_lambda_im, "phase-3 imaginary penalty (1e3 or 1e-3)");
    cmd->add_option("--layer1", c.layer1, "layer-1 library")->check(CLI::IsMember({"as_printed", "id_substituted"}));
}

RunConfig resolve(const Common& c) {
    RunConfig cfg = c.config_path.empty() ? default_config() : load_config(c.config_path);
    if (c.scale >= 0.0) cfg.scale = c.scale;
    if (c.jobs > 0) cfg.jobs = c.jobs;
    if (!c.out.empty()) cfg.out_dir = c.out;
    if (c.phase3_lambda_im > 0.0) cfg.schedule.phases[2].loss.lambda_im = c.phase3_lambda_im;
    if (c.layer1 == "as_printed") cfg.layer1 = Layer1Variant::AsPrinted;
    if (c.layer1 == "id_substituted") cfg.layer1 = Layer1Variant::IdSubstituted;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Complex-weight equation learner"};
    app.require_subcommand(1);

    Common bench_c;
    std::string ids;
    Index seed_count = 0;
    auto* bench = app.add_subcommand("bench", "run benchmark sweeps");
    add_common(bench, bench_c);
    bench->add_option("--ids", ids, "benchmark ids, e.g. E-1,E-3 or E-1..E-10");
    bench->add_option("--seeds", seed_count, "number of seeds (0..n-1)")->check(CLI::PositiveNumber);
    bench->add_option("--jobs", bench_c.jobs, "concurrent runs")->check(CLI::PositiveNumber);

    Common fit_c;
    std::string train_csv;
    auto* fit = app.add_subcommand("fit", "train on a CSV dataset and print the expression");
    add_common(fit, fit_c);
    fit->add_option("train_csv", train_csv, "dataset with header x1[,x2],y")->required();

    std::string gen_id, gen_split;
    Index gen_n = 0;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-data", "sample a benchmark split");
    gen->add_option("benchmark", gen_id)->required();
    gen->add_option("split", gen_split)->required()->check(CLI::IsMember({"train", "interp", "extrap"}));
    gen->add_option("n", gen_n)->required()->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed);
    gen->add_option("--out", gen_out, "CSV path (stdout when omitted)");

    std::string net_path;
    bool as_json = false;
    auto* ext = app.add_subcommand("extract", "extract the expression of a saved network");
    ext->add_option("network", net_path)->required();
    ext->add_flag("--json", as_json, "print the expression tree as JSON");

    DivisionDemoConfig demo;
    double re = demo.init.real(), im = demo.init.imag();
    std::string demo_out;
    auto* div = app.add_subcommand("demo-division", "fit Re(1/(x+a)) to 1/x over complex a");
    div->add_option("--re", re);
    div->add_option("--im", im);
    div->add_flag("--restrict-real", demo.restrict_real, "keep a real");
    div->add_option("--steps", demo.steps)->check(CLI::NonNegativeNumber);
    div->add_option("--lr", demo.lr)->check(CLI::PositiveNumber);
    div->add_option("--points", demo.points)->check(CLI::PositiveNumber);
    div->add_option("--seed", demo.seed);
    div->add_option("--out", demo_out, "trajectory CSV (stdout when omitted)");

    Common frf_c;
    std::string frf_data;
    bool synthetic = false;
    double noise = -1.0;
    auto* frf = app.add_subcommand("frf", "fit the frequency-response surrogate");
    add_common(frf, frf_c);
    frf->add_option("data_csv", frf_data, "omega_khz,damage_pct,magnitude_linear,repetition_id");
    frf->add_flag("--synthetic", synthetic, "fit generated three-resonance data");
    frf->add_option("--noise", noise, "synthetic noise as a fraction of max(y)")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*bench) {
            RunConfig cfg = resolve(bench_c);
            if (!ids.empty()) cfg.ids = parse_benchmark_ids(ids);
            if (seed_count > 0) {
                cfg.seeds.clear();
                for (Index s = 0; s < seed_count; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
            }
            return cmd_bench(cfg, std::cout);
        }
        if (*fit) {
            RunConfig cfg = resolve(fit_c);
            cfg.train_csv = train_csv;
            return cmd_fit(cfg, fit_c.seed, std::cout);
        }
        if (*gen) return cmd_gen_data(gen_id, split_from_string(gen_split), gen_n, gen_seed, gen_out, std::cout);
        if (*ext) return cmd_extract(net_path, as_json, std::cout);
        if (*div) {
            demo.init = Complex(re, demo.restrict_real ? 0.0 : im);
            return cmd_demo_division(demo, demo_out, std::cout);
        }
        if (*frf) {
            RunConfig cfg = resolve(frf_c);
            if (frf_data.empty() && !synthetic) throw Error(ErrorCode::InvalidConfig, "give a data CSV or --synthetic");
            if (!frf_data.empty() && synthetic) throw Error(ErrorCode::InvalidConfig, "--synthetic takes no data CSV");
            if (noise >= 0.0) {
                const auto clean = synth_frf(three_resonance_truth(), cfg.frf.levels, 0.0, cfg.frf.n_per_level,
                                             cfg.frf.data_seed, cfg.frf.repetitions);
                double ymax = 0.0;
                for (const auto& s : clean) ymax = std::max(ymax, s.y);
                cfg.frf.noise_sd = noise * ymax;
            }
            return cmd_frf(cfg, frf_data.empty() ? std::nullopt : std::optional<std::string>(frf_data), frf_c.seed,
                           std::cout);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
