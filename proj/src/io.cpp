#include "ceql/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ceql {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        out << content;
        if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

const char* kind_name(EdgeKind k) {
    switch (k) {
    case EdgeKind::Summation: return "summation";
    case EdgeKind::Bias: return "bias";
    case EdgeKind::Output: return "output";
    }
    return "summation";
}

}  // namespace

Json network_to_json(const Network& net) {
    Json j;
    j["input_dim"] = net.input_dim();
    j["skip_inputs"] = net.skip_inputs();
    j["layers"] = Json::array();
    for (const auto& spec : net.layers()) {
        Json l;
        l["unary"] = Json::array();
        for (auto k : spec.unary_ops) l["unary"].push_back(to_string(k));
        l["binary"] = Json::array();
        for (auto k : spec.binary_ops) l["binary"].push_back(to_string(k));
        j["layers"].push_back(l);
    }
    j["edges"] = Json::array();
    for (Index e = 0; e < net.parameter_count(); ++e) {
        if (!net.structural()[e]) continue;
        const EdgeInfo info = net.edge_info(e);
        Json edge;
        edge["kind"] = kind_name(info.kind);
        edge["layer"] = info.layer;
        edge["source"] = info.source;
        edge["target"] = info.target;
        edge["re"] = net.weight(e).real();
        edge["im"] = net.weight(e).imag();
        edge["active"] = static_cast<bool>(net.active()[e]);
        j["edges"].push_back(edge);
    }
    return j;
}

Network network_from_json(const Json& j) {
    try {
        std::vector<LayerSpec> layers;
        for (const auto& l : j.at("layers")) {
            LayerSpec spec;
            for (const auto& k : l.at("unary")) spec.unary_ops.push_back(operator_from_string(k.get<std::string>()));
            for (const auto& k : l.at("binary")) spec.binary_ops.push_back(operator_from_string(k.get<std::string>()));
            layers.push_back(spec);
        }
        Network net = make_network(j.at("input_dim").get<Index>(), layers, j.at("skip_inputs").get<bool>());
        net.clear();
        for (const auto& edge : j.at("edges")) {
            const std::string kind = edge.at("kind").get<std::string>();
            const Index layer = edge.at("layer").get<Index>();
            const Index source = edge.at("source").get<Index>();
            const Index target = edge.at("target").get<Index>();
            Index e = 0;
            if (kind == "summation")
                e = net.summation_edge(layer, source, target);
            else if (kind == "bias")
                e = net.bias_edge(layer, target);
            else if (kind == "output")
                e = net.output_edge(source);
            else
                throw Error(ErrorCode::Io, "unknown edge kind '" + kind + "'");
            if (!edge.at("active").get<bool>()) continue;
            net.set_weight(e, Complex(edge.at("re").get<double>(), edge.at("im").get<double>()));
        }
        return net;
    } catch (const Json::exception& ex) {
        throw Error(ErrorCode::Io, std::string("malformed network JSON: ") + ex.what());
    } catch (const std::invalid_argument& ex) {
        throw Error(ErrorCode::Io, std::string("malformed network JSON: ") + ex.what());
    }
}

std::string dataset_to_csv(const Dataset& d) {
    std::string out;
    for (Index j = 0; j < d.input_dim(); ++j) out += "x" + std::to_string(j + 1) + ",";
    out += "y\n";
    for (Index i = 0; i < d.rows(); ++i) {
        for (Index j = 0; j < d.input_dim(); ++j) out += format_double(d.X(i, j)) + ",";
        out += format_double(d.y[i]) + "\n";
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, std::size_t line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::Io, "line " + std::to_string(line) + ": not a number '" + s + "'");
    }
}

}  // namespace

Dataset dataset_from_csv(const std::string& text, Split split) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Io, "empty dataset file");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header.back() != "y") throw Error(ErrorCode::Io, "dataset header must be x1[,x2,...],y");
    for (std::size_t j = 0; j + 1 < header.size(); ++j)
        if (header[j] != "x" + std::to_string(j + 1)) throw Error(ErrorCode::Io, "dataset header must be x1[,x2,...],y");
    const Index dim = static_cast<Index>(header.size()) - 1;
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (static_cast<Index>(f.size()) != dim + 1)
            throw Error(ErrorCode::Io, "line " + std::to_string(lineno) + ": expected " + std::to_string(dim + 1) + " fields");
        std::vector<double> r;
        for (const auto& s : f) r.push_back(parse_double(s, lineno));
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw Error(ErrorCode::Io, "dataset has no rows");
    Dataset d;
    d.split = split;
    d.X.resize(static_cast<Index>(rows.size()), dim);
    d.y.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (Index j = 0; j < dim; ++j) d.X(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
        d.y[static_cast<Index>(i)] = rows[i].back();
    }
    return d;
}

std::string history_to_csv(const History& h) {
    std::string out = "epoch,phase,loss,data_mse,l1_mass,im_mass,arg_penalty,active_edges,lr,flagged_samples\n";
    for (const auto& r : h.epochs) {
        out += std::to_string(r.epoch) + "," + std::to_string(r.phase) + "," + format_double(r.loss) + "," +
               format_double(r.data_mse) + "," + format_double(r.l1_mass) + "," + format_double(r.im_mass) + "," +
               format_double(r.arg_penalty) + "," + std::to_string(r.active_edges) + "," + format_double(r.lr) + "," +
               std::to_string(r.flagged_samples) + "\n";
    }
    return out;
}

Json metrics_to_json(const RunMetrics& m) {
    auto num = [](double v) -> Json { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    Json j;
    j["expression_id"] = m.id;
    j["seed"] = m.seed;
    j["status"] = m.status;
    j["failed"] = m.failed;
    j["train_mse"] = num(m.train_mse);
    j["interp_mse"] = num(m.interp_mse);
    j["extrap_mse"] = num(m.extrap_mse);
    j["node_count"] = m.node_count;
    j["node_count_raw"] = m.node_count_raw;
    j["interp_flagged"] = m.interp_flagged;
    j["extrap_flagged"] = m.extrap_flagged;
    return j;
}

std::string aggregate_to_csv(const std::vector<AggregateRow>& rows) {
    std::string out = "expression_id,interp_mse_mean,interp_mse_std,extrap_mse_mean,extrap_mse_std,nc_mean,nc_std,failed_runs\n";
    for (const auto& r : rows) {
        out += r.id + "," + format_double(r.interp_mse.mean) + "," + format_double(r.interp_mse.std) + "," +
               format_double(r.extrap_mse.mean) + "," + format_double(r.extrap_mse.std) + "," +
               format_double(r.node_count.mean) + "," + format_double(r.node_count.std) + "," +
               std::to_string(r.failed_runs) + "\n";
    }
    return out;
}

}  // namespace ceql
