#include "ceql/config.hpp"

#include <cstdlib>
#include <set>

#include "ceql/io.hpp"

namespace ceql {

BenchConfig RunConfig::bench_config() const {
    BenchConfig b;
    b.schedule = effective_schedule();
    b.layer1 = layer1;
    b.layers = layers;
    b.init = init;
    b.skip_inputs = skip_inputs;
    b.n_train = n_train;
    b.n_test = n_test;
    b.record_stride = record_stride;
    return b;
}

FrfRunConfig default_frf_run_config() { return {}; }

namespace {

void only_keys(const Json& j, std::initializer_list<const char*> keys, const char* where) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, std::string(where) + " must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw Error(ErrorCode::InvalidConfig, std::string("unknown key '") + k + "' in " + where);
}

template <class T>
void read(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

const char* data_term_name(DataTerm t) { return t == DataTerm::MSE ? "mse" : "relative_mse"; }

DataTerm data_term_from(const std::string& s) {
    if (s == "mse") return DataTerm::MSE;
    if (s == "relative_mse") return DataTerm::RelativeMSE;
    throw Error(ErrorCode::InvalidConfig, "unknown data term '" + s + "'");
}

Json layers_to_json(const std::vector<LayerSpec>& layers) {
    Json arr = Json::array();
    for (const auto& l : layers) {
        Json o;
        o["unary"] = Json::array();
        o["binary"] = Json::array();
        for (auto k : l.unary_ops) o["unary"].push_back(to_string(k));
        for (auto k : l.binary_ops) o["binary"].push_back(to_string(k));
        arr.push_back(o);
    }
    return arr;
}

std::vector<LayerSpec> layers_from_json(const Json& arr) {
    std::vector<LayerSpec> layers;
    for (const auto& o : arr) {
        only_keys(o, {"unary", "binary"}, "layer");
        LayerSpec l;
        for (const auto& k : o.at("unary")) l.unary_ops.push_back(operator_from_string(k.get<std::string>()));
        for (const auto& k : o.at("binary")) l.binary_ops.push_back(operator_from_string(k.get<std::string>()));
        layers.push_back(l);
    }
    return layers;
}

Json init_to_json(const InitPolicy& p) {
    return {{"re_low", p.re_low}, {"re_high", p.re_high}, {"im_low", p.im_low}, {"im_high", p.im_high}};
}

InitPolicy init_from_json(const Json& j) {
    only_keys(j, {"re_low", "re_high", "im_low", "im_high"}, "init");
    InitPolicy p;
    read(j, "re_low", p.re_low);
    read(j, "re_high", p.re_high);
    read(j, "im_low", p.im_low);
    read(j, "im_high", p.im_high);
    if (!(p.re_low <= p.re_high && p.im_low <= p.im_high))
        throw Error(ErrorCode::InvalidConfig, "init ranges must satisfy low <= high");
    return p;
}

Json frf_to_json(const FrfRunConfig& f) {
    Json j;
    j["terms"] = f.fit.terms;
    j["schedule"] = to_json(f.fit.schedule);
    j["init"] = {{"A0", f.fit.init.A0},
                 {"gamma0", f.fit.init.gamma0},
                 {"center_lo", f.fit.init.center_lo},
                 {"center_hi", f.fit.init.center_hi},
                 {"weight_scale", f.fit.init.weight_scale}};
    j["levels"] = f.levels;
    j["noise_sd"] = f.noise_sd;
    j["n_per_level"] = f.n_per_level;
    j["repetitions"] = f.repetitions;
    j["data_seed"] = f.data_seed;
    j["windows"] = Json::array();
    for (const auto& w : f.windows) j["windows"].push_back({w.lo, w.hi});
    return j;
}

FrfRunConfig frf_from_json(const Json& j) {
    only_keys(j, {"terms", "schedule", "init", "levels", "noise_sd", "n_per_level", "repetitions", "data_seed", "windows"},
              "frf");
    FrfRunConfig f;
    read(j, "terms", f.fit.terms);
    if (j.contains("schedule")) f.fit.schedule = schedule_from_json(j.at("schedule"), f.fit.schedule);
    if (j.contains("init")) {
        const Json& i = j.at("init");
        only_keys(i, {"A0", "gamma0", "center_lo", "center_hi", "weight_scale"}, "frf.init");
        read(i, "A0", f.fit.init.A0);
        read(i, "gamma0", f.fit.init.gamma0);
        read(i, "center_lo", f.fit.init.center_lo);
        read(i, "center_hi", f.fit.init.center_hi);
        read(i, "weight_scale", f.fit.init.weight_scale);
    }
    read(j, "levels", f.levels);
    read(j, "noise_sd", f.noise_sd);
    read(j, "n_per_level", f.n_per_level);
    read(j, "repetitions", f.repetitions);
    read(j, "data_seed", f.data_seed);
    if (j.contains("windows")) {
        f.windows.clear();
        for (const auto& w : j.at("windows")) {
            if (!w.is_array() || w.size() != 2) throw Error(ErrorCode::InvalidConfig, "windows are [lo, hi] pairs");
            f.windows.push_back({w[0].get<double>(), w[1].get<double>()});
        }
    }
    if (f.fit.terms < 1) throw Error(ErrorCode::InvalidConfig, "frf.terms must be at least 1");
    return f;
}

}  // namespace

Json to_json(const PhaseSchedule& s) {
    Json arr = Json::array();
    for (const auto& p : s.phases) {
        Json o;
        o["epochs"] = p.epochs;
        o["lr"] = p.lr;
        o["loss"] = {{"data_term", data_term_name(p.loss.data_term)},
                     {"lambda_im", p.loss.lambda_im},
                     {"lambda_l1", p.loss.lambda_l1},
                     {"lambda_arg", p.loss.lambda_arg}};
        if (p.pruning) {
            const auto& pr = *p.pruning;
            o["pruning"] = {{"kind", pr.kind == PruneKind::ThresholdOnce ? "threshold_once" : "impact_iterative"},
                            {"threshold", pr.threshold},
                            {"interval_epochs", pr.interval_epochs},
                            {"fraction", pr.fraction},
                            {"min_edges", pr.min_edges}};
        } else {
            o["pruning"] = nullptr;
        }
        if (p.plateau) {
            const auto& pl = *p.plateau;
            o["plateau"] = {{"patience", pl.patience}, {"factor", pl.factor}, {"min_lr", pl.min_lr}, {"threshold", pl.threshold}};
        } else {
            o["plateau"] = nullptr;
        }
        arr.push_back(o);
    }
    return arr;
}

PhaseSchedule schedule_from_json(const Json& j, const PhaseSchedule& base) {
    if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::InvalidConfig, "schedule must list exactly 3 phases");
    PhaseSchedule s = base;
    for (std::size_t i = 0; i < 3; ++i) {
        const Json& o = j[i];
        only_keys(o, {"epochs", "lr", "loss", "pruning", "plateau"}, "phase");
        PhaseConfig& p = s.phases[i];
        read(o, "epochs", p.epochs);
        read(o, "lr", p.lr);
        if (p.epochs < 0) throw Error(ErrorCode::InvalidConfig, "epochs must be non-negative");
        if (!(p.lr > 0.0)) throw Error(ErrorCode::InvalidConfig, "lr must be positive");
        if (o.contains("loss")) {
            const Json& l = o.at("loss");
            only_keys(l, {"data_term", "lambda_im", "lambda_l1", "lambda_arg"}, "loss");
            if (l.contains("data_term")) p.loss.data_term = data_term_from(l.at("data_term").get<std::string>());
            read(l, "lambda_im", p.loss.lambda_im);
            read(l, "lambda_l1", p.loss.lambda_l1);
            read(l, "lambda_arg", p.loss.lambda_arg);
        }
        if (o.contains("pruning")) {
            const Json& pr = o.at("pruning");
            if (pr.is_null()) {
                p.pruning.reset();
            } else {
                only_keys(pr, {"kind", "threshold", "interval_epochs", "fraction", "min_edges"}, "pruning");
                PrunePolicy pol = p.pruning.value_or(PrunePolicy{});
                if (pr.contains("kind")) {
                    const auto k = pr.at("kind").get<std::string>();
                    if (k == "threshold_once") pol.kind = PruneKind::ThresholdOnce;
                    else if (k == "impact_iterative") pol.kind = PruneKind::ImpactIterative;
                    else throw Error(ErrorCode::InvalidConfig, "unknown pruning kind '" + k + "'");
                }
                read(pr, "threshold", pol.threshold);
                read(pr, "interval_epochs", pol.interval_epochs);
                read(pr, "fraction", pol.fraction);
                read(pr, "min_edges", pol.min_edges);
                if (pol.kind == PruneKind::ImpactIterative && pol.interval_epochs < 1)
                    throw Error(ErrorCode::InvalidConfig, "pruning interval must be at least 1");
                if (!(pol.fraction >= 0.0 && pol.fraction <= 1.0))
                    throw Error(ErrorCode::InvalidConfig, "pruning fraction must lie in [0, 1]");
                p.pruning = pol;
            }
        }
        if (o.contains("plateau")) {
            const Json& pl = o.at("plateau");
            if (pl.is_null()) {
                p.plateau.reset();
            } else {
                only_keys(pl, {"patience", "factor", "min_lr", "threshold"}, "plateau");
                PlateauConfig c = p.plateau.value_or(PlateauConfig{});
                read(pl, "patience", c.patience);
                read(pl, "factor", c.factor);
                read(pl, "min_lr", c.min_lr);
                read(pl, "threshold", c.threshold);
                p.plateau = c;
            }
        }
    }
    return s;
}

Json to_json(const RunConfig& c) {
    Json j;
    j["schedule"] = to_json(c.schedule);
    j["scale"] = c.scale;
    j["layer1_variant"] = c.layer1 == Layer1Variant::AsPrinted ? "as_printed" : "id_substituted";
    j["layers"] = layers_to_json(c.layers);
    j["init"] = init_to_json(c.init);
    j["skip_inputs"] = c.skip_inputs;
    j["n_train"] = c.n_train;
    j["n_test"] = c.n_test;
    j["record_stride"] = c.record_stride;
    j["ids"] = c.ids;
    j["seeds"] = c.seeds;
    j["train_csv"] = c.train_csv ? Json(*c.train_csv) : Json(nullptr);
    j["jobs"] = c.jobs;
    j["out_dir"] = c.out_dir;
    j["frf"] = frf_to_json(c.frf);
    return j;
}

RunConfig config_from_json(const Json& j) {
    try {
        only_keys(j, {"schedule", "scale", "layer1_variant", "layers", "init", "skip_inputs", "n_train", "n_test",
                      "record_stride", "ids", "seeds", "train_csv", "jobs", "out_dir", "frf"},
                  "config");
        RunConfig c;
        if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"));
        read(j, "scale", c.scale);
        if (!(c.scale >= 0.0)) throw Error(ErrorCode::InvalidConfig, "scale must be non-negative");
        if (j.contains("layer1_variant")) {
            const auto v = j.at("layer1_variant").get<std::string>();
            if (v == "as_printed") c.layer1 = Layer1Variant::AsPrinted;
            else if (v == "id_substituted") c.layer1 = Layer1Variant::IdSubstituted;
            else throw Error(ErrorCode::InvalidConfig, "unknown layer1_variant '" + v + "'");
        }
        if (j.contains("layers")) c.layers = layers_from_json(j.at("layers"));
        if (j.contains("init")) c.init = init_from_json(j.at("init"));
        read(j, "skip_inputs", c.skip_inputs);
        read(j, "n_train", c.n_train);
        read(j, "n_test", c.n_test);
        read(j, "record_stride", c.record_stride);
        read(j, "ids", c.ids);
        read(j, "seeds", c.seeds);
        if (j.contains("train_csv") && !j.at("train_csv").is_null()) c.train_csv = j.at("train_csv").get<std::string>();
        read(j, "jobs", c.jobs);
        read(j, "out_dir", c.out_dir);
        if (j.contains("frf")) c.frf = frf_from_json(j.at("frf"));
        if (c.n_train < 2 || c.n_test < 1) throw Error(ErrorCode::InvalidConfig, "dataset sizes too small");
        if (c.jobs < 1) throw Error(ErrorCode::InvalidConfig, "jobs must be at least 1");
        if (c.record_stride < 1) throw Error(ErrorCode::InvalidConfig, "record_stride must be at least 1");
        for (const auto& id : c.ids) find_benchmark(id);
        return c;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed config: ") + e.what());
    }
}

RunConfig load_config(const std::string& path) {
    const std::string text = read_text_file(path);
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const RunConfig& c, const std::string& path) { write_file_atomic(path, to_json(c).dump(2) + "\n"); }

RunConfig default_config() {
    if (const char* p = std::getenv("CEQL_DEFAULT_CONFIG"); p && *p) return load_config(p);
    return RunConfig{};
}

}  // namespace ceql
