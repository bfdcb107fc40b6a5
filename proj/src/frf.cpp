#include "ceql/frf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ceql/bench.hpp"
#include "ceql/io.hpp"
#include "ceql/prune.hpp"

namespace ceql {

std::vector<LayerSpec> frf_h_library() { return {polynomial_layer(), polynomial_layer()}; }

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Levels {
    std::vector<double> values;
    std::vector<Index> of_sample;

    MatrixXr matrix() const {
        MatrixXr D(static_cast<Index>(values.size()), 1);
        for (std::size_t k = 0; k < values.size(); ++k) D(static_cast<Index>(k), 0) = values[k];
        return D;
    }
};

Levels group_levels(const Eigen::Ref<const VectorXr>& d) {
    Levels lv;
    lv.values.assign(d.data(), d.data() + d.size());
    std::sort(lv.values.begin(), lv.values.end());
    lv.values.erase(std::unique(lv.values.begin(), lv.values.end()), lv.values.end());
    lv.of_sample.resize(static_cast<std::size_t>(d.size()));
    for (Index i = 0; i < d.size(); ++i)
        lv.of_sample[static_cast<std::size_t>(i)] =
            std::lower_bound(lv.values.begin(), lv.values.end(), d[i]) - lv.values.begin();
    return lv;
}

// One evaluation of the surrogate over a batch. `use[i]` selects the terms
// that take part; traces and denominators are kept for the reverse pass.
struct Pass {
    VectorXr prediction;
    std::vector<OpStatus> status;
    Levels levels;
    std::vector<Trace> traces;  // per term (empty for skipped terms)
    std::vector<VectorXc> h;    // per term, per level
};

Pass frf_pass(const FrfModel& m, const std::vector<bool>& use, const MatrixXr& X) {
    if (X.cols() != 2) throw Error(ErrorCode::InvalidConfig, "FRF inputs are (omega, d) pairs");
    const Index n = X.rows();
    Pass p;
    p.status.assign(static_cast<std::size_t>(n), OpStatus::Ok);
    p.levels = group_levels(X.col(1));
    const MatrixXr D = p.levels.matrix();
    p.prediction = m.a * X.col(0).array() + m.b;
    p.traces.resize(m.terms.size());
    p.h.resize(m.terms.size());

    auto flag = [&](Index i, OpStatus s) {
        auto& st = p.status[static_cast<std::size_t>(i)];
        if (st == OpStatus::Ok) st = s;
    };

    for (std::size_t t = 0; t < m.terms.size(); ++t) {
        if (!use[t]) continue;
        const FrfTerm& term = m.terms[t];
        p.traces[t] = forward(term.h, D);
        const Trace& tr = p.traces[t];
        p.h[t] = tr.output;
        for (Index i = 0; i < n; ++i) {
            const Index k = p.levels.of_sample[static_cast<std::size_t>(i)];
            if (!tr.valid(k)) {
                flag(i, tr.status[static_cast<std::size_t>(k)]);
                continue;
            }
            const Complex diff = X(i, 0) - p.h[t][k];
            const auto r = surrogate_div(Complex(term.A), diff * diff + term.gamma);
            if (!r.ok()) flag(i, r.status);
            else p.prediction[i] += r.value.real();
        }
    }
    for (Index i = 0; i < n; ++i)
        if (p.status[static_cast<std::size_t>(i)] != OpStatus::Ok) p.prediction[i] = kNaN;
    return p;
}

std::vector<bool> all_terms(const FrfModel& m) { return std::vector<bool>(m.terms.size(), true); }

}  // namespace

FrfBatch frf_forward(const FrfModel& m, const MatrixXr& X) {
    Pass p = frf_pass(m, all_terms(m), X);
    return {std::move(p.prediction), std::move(p.status)};
}

FrfEval frf_forward(const FrfModel& m, double omega, double d) {
    MatrixXr X(1, 2);
    X << omega, d;
    const FrfBatch b = frf_forward(m, X);
    return {b.status[0] == OpStatus::Ok ? b.prediction[0] : kNaN, b.status[0]};
}

Network wire_polynomial(std::span<const double> coeffs) {
    double c[5] = {0, 0, 0, 0, 0};
    if (coeffs.size() > 5) throw Error(ErrorCode::InvalidConfig, "h(d) polynomials have degree at most 4");
    std::copy(coeffs.begin(), coeffs.end(), c);

    Network net = make_network(1, frf_h_library(), true);
    net.clear();
    // Layer 1: act0 = d, act2 = d^2.
    net.set_weight(net.summation_edge(0, 0, 0), 1.0);
    net.set_weight(net.summation_edge(0, 0, 2), 1.0);
    // Layer 2 sources: 0 = d, 1 = const, 2 = d^2, 3 = mul, 4 = raw d.
    if (c[1] != 0.0) net.set_weight(net.summation_edge(1, 0, 0), c[1]);
    if (c[2] != 0.0) net.set_weight(net.summation_edge(1, 2, 0), c[2]);
    if (c[1] != 0.0 || c[2] != 0.0) net.set_weight(net.output_edge(0), 1.0);
    if (c[0] != 0.0) {
        net.set_weight(net.bias_edge(1, 1), c[0]);
        net.set_weight(net.output_edge(1), 1.0);
    }
    if (c[4] != 0.0) {
        net.set_weight(net.summation_edge(1, 2, 2), 1.0);
        net.set_weight(net.output_edge(2), c[4]);
    }
    if (c[3] != 0.0) {
        net.set_weight(net.summation_edge(1, 0, 3), 1.0);
        net.set_weight(net.summation_edge(1, 2, 4), 1.0);
        net.set_weight(net.output_edge(3), c[3]);
    }
    cascade_cleanup(net);
    return net;
}

FrfModel beam_model() {
    struct Row {
        double A, gamma;
        std::vector<double> h;
    };
    const std::vector<Row> rows = {
        {0.08445, -0.01625, {0.89, 0.00386, 0.0, -0.00217, 0.0007}},
        {0.0577, -0.1399, {1.26425, 0.25854, -0.05572}},
        {0.47169, -0.36363, {-0.17194, 0.37289, -0.03456}},
        {2.42351, -0.0339, {0.23462, -0.061, 0.02541}},
        {-0.76141, 0.04658, {0.50138, -0.08937, 0.03146}},
        {-0.26376, 0.00551, {0.76732, 0.20983}},
        {0.48817, 0.31504, {0.20312, 0.27162}},
        {0.08136, -0.14816, {0.76341, 0.52067}},
        {0.29455, 0.06101, {0.69792}},
    };
    FrfModel m;
    m.a = 5.21654;
    m.b = -0.3154;
    for (const auto& r : rows) m.terms.push_back({r.A, r.gamma, wire_polynomial(r.h)});
    return m;
}

double term_center(const FrfTerm& t, double d) {
    const double x[1] = {d};
    return forward(t.h, std::span<const double>(x)).trace.output[0].real();
}

std::vector<double> real_poles(const FrfModel& m, double d) {
    std::vector<double> poles;
    for (const auto& t : m.terms) {
        if (!(t.gamma < 0.0) || t.A == 0.0) continue;
        const double c = term_center(t, d);
        const double r = std::sqrt(-t.gamma);
        poles.push_back(c - r);
        poles.push_back(c + r);
    }
    std::sort(poles.begin(), poles.end());
    return poles;
}

// Data

Dataset to_dataset(const FrfData& data) {
    Dataset ds;
    const Index n = static_cast<Index>(data.size());
    ds.X.resize(n, 2);
    ds.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        const auto& s = data[static_cast<std::size_t>(i)];
        ds.X(i, 0) = s.omega;
        ds.X(i, 1) = s.d;
        ds.y[i] = s.y;
    }
    return ds;
}

std::vector<double> damage_levels(const FrfData& data) {
    std::vector<double> lv;
    for (const auto& s : data) lv.push_back(s.d);
    std::sort(lv.begin(), lv.end());
    lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
    return lv;
}

namespace {

double eval_poly(const std::vector<double>& c, double d) {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * d + *it;
    return v;
}

}  // namespace

double FrfTruth::operator()(double omega, double d) const {
    double y = a * omega + b;
    for (const auto& t : terms) {
        const double diff = omega - eval_poly(t.h, d);
        y += t.A / (diff * diff + t.gamma);
    }
    return y;
}

FrfTruth three_resonance_truth() {
    FrfTruth t;
    t.a = 0.5;
    t.b = 0.2;
    t.terms = {
        {0.05, 0.0025, {0.75, -0.02}},
        {0.04, 0.002, {1.18, -0.015}},
        {0.02, 0.003, {1.6, -0.01}},
    };
    return t;
}

FrfData synth_frf(const FrfTruth& truth, const std::vector<double>& levels, double noise_sd,
                  Index n_per_level, std::uint64_t seed, Index repetitions) {
    for (const auto& t : truth.terms)
        if (!(t.gamma > 0.0)) throw Error(ErrorCode::InvalidConfig, "generator terms need gamma > 0");
    if (n_per_level < 2) throw Error(ErrorCode::InvalidConfig, "need at least 2 points per level");
    if (repetitions < 1) throw Error(ErrorCode::InvalidConfig, "need at least 1 repetition");
    if (!(noise_sd >= 0.0)) throw Error(ErrorCode::InvalidConfig, "noise_sd must be non-negative");
    if (levels.empty()) throw Error(ErrorCode::InvalidConfig, "no damage levels");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    FrfData data;
    data.reserve(static_cast<std::size_t>(n_per_level * repetitions) * levels.size());
    for (double d : levels)
        for (Index r = 0; r < repetitions; ++r)
            for (Index k = 0; k < n_per_level; ++k) {
                const double w = 2.0 * static_cast<double>(k) / static_cast<double>(n_per_level - 1);
                double y = truth(w, d);
                if (noise_sd > 0.0) y = std::max(0.0, y + noise_sd * noise(rng));
                data.push_back({w, d, y, static_cast<int>(r)});
            }
    return data;
}

std::string frf_data_to_csv(const FrfData& data) {
    std::string out = "omega_khz,damage_pct,magnitude_linear,repetition_id\n";
    for (const auto& s : data)
        out += format_double(s.omega) + "," + format_double(s.d) + "," + format_double(s.y) + "," +
               std::to_string(s.repetition) + "\n";
    return out;
}

FrfData frf_data_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Io, "empty FRF file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "omega_khz,damage_pct,magnitude_linear,repetition_id")
        throw Error(ErrorCode::Io, "FRF header must be omega_khz,damage_pct,magnitude_linear,repetition_id");
    FrfData data;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string f[4];
        int k = 0;
        while (k < 4 && std::getline(row, f[k], ',')) ++k;
        std::string extra;
        if (k != 4 || std::getline(row, extra))
            throw Error(ErrorCode::Io, "line " + std::to_string(lineno) + ": expected 4 fields");
        FrfSample s;
        try {
            s.omega = std::stod(f[0]);
            s.d = std::stod(f[1]);
            s.y = std::stod(f[2]);
            s.repetition = std::stoi(f[3]);
        } catch (const std::exception&) {
            throw Error(ErrorCode::Io, "line " + std::to_string(lineno) + ": malformed number");
        }
        if (!(s.omega >= 0.0 && s.omega <= 2.0))
            throw Error(ErrorCode::Io, "line " + std::to_string(lineno) + ": omega outside [0, 2] kHz");
        if (!(s.y >= 0.0)) throw Error(ErrorCode::Io, "line " + std::to_string(lineno) + ": negative magnitude");
        if (!std::isfinite(s.d)) throw Error(ErrorCode::Io, "line " + std::to_string(lineno) + ": non-finite damage");
        data.push_back(s);
    }
    return data;
}

// Peaks

std::vector<PeakWindow> default_windows() { return {PeakWindow::around(0.75), PeakWindow::around(1.18)}; }

namespace {

void check_window(const PeakWindow& w) {
    if (!(w.lo < w.hi) || w.lo < 0.0 || w.hi > 2.0)
        throw Error(ErrorCode::InvalidWindow, "window must satisfy 0 <= lo < hi <= 2 kHz");
}

}  // namespace

double detect_peak(const FrfData& data, const PeakWindow& window, double level) {
    check_window(window);
    struct Best {
        double omega = 0.0;
        double y = -std::numeric_limits<double>::infinity();
    };
    std::vector<std::pair<int, Best>> reps;
    for (const auto& s : data) {
        if (s.d != level || s.omega < window.lo || s.omega > window.hi) continue;
        auto it = std::find_if(reps.begin(), reps.end(), [&](const auto& r) { return r.first == s.repetition; });
        if (it == reps.end()) {
            reps.push_back({s.repetition, {}});
            it = std::prev(reps.end());
        }
        if (s.y > it->second.y) it->second = {s.omega, s.y};
    }
    if (reps.empty()) throw Error(ErrorCode::InvalidWindow, "no samples of the level inside the window");
    double sum = 0.0;
    for (const auto& r : reps) sum += r.second.omega;
    return sum / static_cast<double>(reps.size());
}

double detect_peak(const FrfModel& model, const PeakWindow& window, double level, double step) {
    check_window(window);
    if (!(step > 0.0)) throw Error(ErrorCode::InvalidConfig, "grid step must be positive");
    const Index n = static_cast<Index>(std::floor((window.hi - window.lo) / step + 1e-9)) + 1;
    MatrixXr X(n, 2);
    for (Index k = 0; k < n; ++k) X.row(k) << window.lo + static_cast<double>(k) * step, level;
    const FrfBatch b = frf_forward(model, X);
    Index best = -1;
    for (Index k = 0; k < n; ++k)
        if (b.status[static_cast<std::size_t>(k)] == OpStatus::Ok && (best < 0 || b.prediction[k] > b.prediction[best]))
            best = k;
    if (best < 0) throw Error(ErrorCode::InvalidWindow, "model is flagged on the whole window");
    return X(best, 0);
}

std::vector<PeakRow> peak_report(const FrfModel& model, const FrfData& data,
                                 const std::vector<PeakWindow>& windows,
                                 const std::vector<double>& levels, std::vector<std::string>* warnings) {
    std::vector<PeakRow> rows;
    for (std::size_t w = 0; w < windows.size(); ++w) {
        check_window(windows[w]);
        for (double level : levels) {
            const bool present = std::any_of(data.begin(), data.end(), [&](const FrfSample& s) {
                return s.d == level && s.omega >= windows[w].lo && s.omega <= windows[w].hi;
            });
            if (!present) {
                if (warnings)
                    warnings->push_back("no samples at damage " + format_double(level) + " in window " +
                                        std::to_string(w) + "; row omitted");
                continue;
            }
            rows.push_back({static_cast<Index>(w), level, detect_peak(data, windows[w], level),
                            detect_peak(model, windows[w], level)});
        }
    }
    return rows;
}

std::string peak_report_csv(const std::vector<PeakRow>& rows) {
    std::string out = "window,damage_pct,measured_khz,predicted_khz\n";
    for (const auto& r : rows)
        out += std::to_string(r.window) + "," + format_double(r.level) + "," + format_double(r.measured) + "," +
               format_double(r.predicted) + "\n";
    return out;
}

// Fitting

FrfTrainable::FrfTrainable(FrfModel model) : model_(std::move(model)) {
    alive_.assign(model_.terms.size(), true);
    amp_active_.assign(model_.terms.size(), true);
    Index off = scalar_count();
    for (const auto& t : model_.terms) {
        if (t.h.input_dim() != 1) throw Error(ErrorCode::InvalidConfig, "h networks take the single input d");
        offsets_.push_back(off);
        off += t.h.parameter_count();
    }
    size_ = off;
}

FrfModel FrfTrainable::compact() const {
    FrfModel m;
    m.a = model_.a;
    m.b = model_.b;
    for (std::size_t i = 0; i < model_.terms.size(); ++i)
        if (alive_[i] && amp_active_[i]) m.terms.push_back(model_.terms[i]);
    return m;
}

VectorXc FrfTrainable::parameters() const {
    VectorXc w(size_);
    w[0] = model_.a;
    w[1] = model_.b;
    for (std::size_t i = 0; i < model_.terms.size(); ++i) {
        const auto& t = model_.terms[i];
        w[amplitude_slot(i)] = t.A;
        w[amplitude_slot(i) + 1] = t.gamma;
        w.segment(offsets_[i], t.h.parameter_count()) = t.h.weights();
    }
    return w;
}

void FrfTrainable::set_parameters(const VectorXc& w) {
    if (w.size() != size_) throw Error(ErrorCode::InvalidConfig, "parameter vector size mismatch");
    model_.a = w[0].real();
    model_.b = w[1].real();
    for (std::size_t i = 0; i < model_.terms.size(); ++i) {
        auto& t = model_.terms[i];
        if (!alive_[i]) continue;
        if (amp_active_[i]) t.A = w[amplitude_slot(i)].real();
        t.gamma = w[amplitude_slot(i) + 1].real();
        t.h.set_weights(w.segment(offsets_[i], t.h.parameter_count()));
    }
}

ArrayXb FrfTrainable::active() const {
    ArrayXb a = ArrayXb::Constant(size_, false);
    a[0] = a[1] = true;
    for (std::size_t i = 0; i < model_.terms.size(); ++i) {
        if (!alive_[i]) continue;
        a[amplitude_slot(i)] = amp_active_[i];
        a[amplitude_slot(i) + 1] = true;
        a.segment(offsets_[i], model_.terms[i].h.parameter_count()) = model_.terms[i].h.active();
    }
    return a;
}

ArrayXb FrfTrainable::prunable() const {
    ArrayXb p = ArrayXb::Constant(size_, false);
    for (std::size_t i = 0; i < model_.terms.size(); ++i) {
        p[amplitude_slot(i)] = true;
        p.segment(offsets_[i], model_.terms[i].h.parameter_count()) = model_.terms[i].h.structural();
    }
    return p;
}

ArrayXb FrfTrainable::real_only() const {
    ArrayXb r = ArrayXb::Constant(size_, false);
    r.head(scalar_count()).setConstant(true);
    return r;
}

LossBreakdown FrfTrainable::evaluate(const Dataset& data, const LossSpec& spec, Gradient* grad,
                                     MatrixXr* branch_args) const {
    std::vector<bool> use(model_.terms.size());
    for (std::size_t i = 0; i < use.size(); ++i) use[i] = alive_[i] && amp_active_[i];
    const Pass p = frf_pass(model_, use, data.X);

    LossBreakdown out;
    VectorXr adjoint;
    out.data = data_term(p.prediction, p.status, data.y, spec.data_term, &out.data_mse, grad ? &adjoint : nullptr);
    for (auto s : p.status) out.flagged += s != OpStatus::Ok;
    out.valid = data.rows() - out.flagged;
    out.total = out.data;

    const VectorXc w = parameters();
    if (grad) {
        grad->setZero(w.size());
        const Index n = data.rows();
        for (Index i = 0; i < n; ++i) {
            (*grad)[0] += adjoint[i] * data.X(i, 0);
            (*grad)[1] += adjoint[i];
        }
        for (std::size_t t = 0; t < model_.terms.size(); ++t) {
            if (!use[t]) continue;
            const FrfTerm& term = model_.terms[t];
            VectorXc adj_h = VectorXc::Zero(static_cast<Index>(p.levels.values.size()));
            double gA = 0.0;
            double gGamma = 0.0;
            for (Index i = 0; i < n; ++i) {
                if (p.status[static_cast<std::size_t>(i)] != OpStatus::Ok) continue;
                const Index k = p.levels.of_sample[static_cast<std::size_t>(i)];
                const Complex diff = data.X(i, 0) - p.h[t][k];
                const Complex den = diff * diff + term.gamma;
                const auto [adjA, adjDen] = binary_adjoint(OperatorKind::Divide, Complex(term.A), den, Complex(adjoint[i]));
                gA += adjA.real();
                gGamma += adjDen.real();
                adj_h[k] += adjDen * std::conj(-2.0 * diff);
            }
            (*grad)[amplitude_slot(t)] += gA;
            (*grad)[amplitude_slot(t) + 1] += gGamma;
            Gradient gh = Gradient::Zero(term.h.parameter_count());
            backpropagate(term.h, p.traces[t], adj_h, 0.0, gh);
            grad->segment(offsets_[t], gh.size()) += gh;
        }
    }
    add_weight_penalties(w, active() && prunable(), spec, out, grad);
    if (grad) *grad = active().select(*grad, Complex(0.0));
    if (branch_args) branch_args->resize(data.rows(), 0);
    return out;
}

void FrfTrainable::deactivate(Index e) {
    for (std::size_t i = 0; i < model_.terms.size(); ++i) {
        if (e == amplitude_slot(i)) {
            model_.terms[i].A = 0.0;
            amp_active_[i] = false;
            return;
        }
        const Index off = offsets_[i];
        if (e >= off && e < off + model_.terms[i].h.parameter_count()) {
            model_.terms[i].h.deactivate(e - off);
            return;
        }
    }
    throw Error(ErrorCode::InvalidConfig, "not a prunable FRF parameter: " + std::to_string(e));
}

Index FrfTrainable::cascade_cleanup() {
    Index removed = 0;
    for (std::size_t i = 0; i < model_.terms.size(); ++i) {
        if (!alive_[i]) continue;
        auto& t = model_.terms[i];
        if (!amp_active_[i] || !has_output_path(t.h)) {
            removed += t.h.active_edge_count() + (amp_active_[i] ? 1 : 0);
            t.h.clear();
            t.A = 0.0;
            t.gamma = 0.0;
            alive_[i] = false;
            amp_active_[i] = false;
            continue;
        }
        removed += ceql::cascade_cleanup(t.h);
    }
    return removed;
}

Index FrfTrainable::active_edge_count() const {
    Index n = 0;
    for (std::size_t i = 0; i < model_.terms.size(); ++i) {
        if (!alive_[i]) continue;
        n += (amp_active_[i] ? 1 : 0) + model_.terms[i].h.active_edge_count();
    }
    return n;
}

// The trend a w + b is never pruned, so a model without resonances is still a model.
bool FrfTrainable::degenerate() const { return false; }

PhaseSchedule FrfFitConfig::frf_default_schedule() {
    PhaseSchedule s = PhaseSchedule::defaults();
    s.phases[1].pruning->min_edges = 50;
    for (auto& p : s.phases) p.lr = 1e-3;
    return s;
}

FrfModel initial_frf_model(const FrfFitConfig& config) {
    if (config.terms < 1) throw Error(ErrorCode::InvalidConfig, "need at least one resonant term");
    const FrfInit& in = config.init;
    std::mt19937_64 rng(derive_seed(config.seed, 4));
    std::uniform_real_distribution<double> u(-in.weight_scale, in.weight_scale);
    FrfModel m;
    for (Index i = 0; i < config.terms; ++i) {
        Network h = make_network(1, frf_h_library(), true);
        for (Index e = 0; e < h.parameter_count(); ++e)
            if (h.structural()[e]) h.set_weight(e, Complex(u(rng), u(rng)));
        const double frac = config.terms > 1 ? static_cast<double>(i) / static_cast<double>(config.terms - 1) : 0.5;
        h.set_weight(h.bias_edge(1, 1), in.center_lo + frac * (in.center_hi - in.center_lo));
        h.set_weight(h.output_edge(1), 1.0);
        m.terms.push_back({in.A0, in.gamma0, std::move(h)});
    }
    return m;
}

FrfFit fit_frf(const FrfData& data, const FrfFitConfig& config) {
    if (data.size() < 100) throw Error(ErrorCode::InvalidConfig, "FRF fitting needs at least 100 samples");
    if (damage_levels(data).size() < 2) throw Error(ErrorCode::InvalidConfig, "FRF fitting needs at least 2 damage levels");
    TrainOptions opts;
    opts.seed = config.seed;
    opts.record_stride = std::max<Index>(1, config.record_stride);
    auto result = run_phases(FrfTrainable(initial_frf_model(config)), to_dataset(data), config.schedule, opts);
    FrfFit fit;
    fit.model = result.model.compact();
    fit.history = std::move(result.history);
    fit.failed = result.failed;
    fit.failure = result.failure;
    return fit;
}

std::vector<Expr> extract_locations(const FrfModel& m, const ExtractOptions& options) {
    std::vector<Expr> out;
    for (const auto& t : m.terms) out.push_back(extract(t.h, options));
    return out;
}

namespace {

std::string with_d(std::string s) {
    for (std::size_t pos = s.find("x1"); pos != std::string::npos; pos = s.find("x1", pos)) s.replace(pos, 2, "d");
    return s;
}

std::string fmt(double v, int precision) {
    std::ostringstream ss;
    ss.precision(precision);
    ss << std::fixed << v;
    std::string s = ss.str();
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.push_back('0');
    }
    return s;
}

}  // namespace

std::string render_frf(const FrfModel& m, int precision) {
    std::string out = "H(w, d) = " + fmt(m.a, precision) + " w " + (m.b < 0 ? "- " : "+ ") +
                      fmt(std::abs(m.b), precision) + "\n";
    for (const auto& t : m.terms) {
        std::string h;
        try {
            h = with_d(render(round_coefficients(extract(t.h), precision), precision));
        } catch (const Error&) {
            h = "h(d)";
        }
        out += std::string("    ") + (t.A < 0 ? "- " : "+ ") + fmt(std::abs(t.A), precision) + " / ((w - (" + h +
               "))^2 " + (t.gamma < 0 ? "- " : "+ ") + fmt(std::abs(t.gamma), precision) + ")\n";
    }
    return out;
}

nlohmann::json frf_to_json(const FrfModel& m) {
    Json j;
    j["trend"] = {{"a", m.a}, {"b", m.b}};
    j["terms"] = Json::array();
    for (const auto& t : m.terms) {
        Json term;
        term["A"] = t.A;
        term["gamma"] = t.gamma;
        try {
            const Expr h = extract(t.h);
            term["h"] = to_json(h);
            term["h_text"] = with_d(render(h));
        } catch (const Error& e) {
            term["h"] = nullptr;
            term["h_text"] = nullptr;
            term["h_error"] = e.what();
        }
        term["network"] = network_to_json(t.h);
        j["terms"].push_back(term);
    }
    return j;
}

}  // namespace ceql
