#include "ceql/bench.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace ceql {

const char* to_string(IllPosedness p) {
    switch (p) {
    case IllPosedness::None: return "none";
    case IllPosedness::UndefinedRegion: return "undefined_region";
    case IllPosedness::Pole: return "pole";
    }
    return "none";
}

namespace {

using E = Expr;

E c(double v) { return E::constant(v); }
E x(int i) { return E::var(i); }
E cx(double k, int i) { return E::product({c(k), x(i)}); }
E cx2(double k, int i) { return E::product({c(k), E::power(x(i), 2.0)}); }

std::vector<Benchmark> make_registry() {
    using P = IllPosedness;
    std::vector<Benchmark> r;
    r.push_back({"E-1", E::sum({cx(1.87, 1), c(2.01)}), 1, P::None, 0});
    r.push_back({"E-2", E::sum({cx(1.56, 1), cx(1.59, 2), c(-2.91)}), 2, P::None, 0});
    r.push_back({"E-3", E::sum({cx2(2.48, 1), cx(1.92, 1), c(-0.68)}), 1, P::None, 0});
    r.push_back({"E-4",
                 E::sum({cx2(0.55, 1), E::product({c(2.45), x(1), x(2)}), cx2(2.95, 2), cx(1.65, 1),
                         cx(0.80, 2), c(0.86)}),
                 2, P::None, 0});
    r.push_back({"E-5", E::product({c(-2.05), E::log(E::sum({cx2(1.56, 1), cx(-0.55, 1), c(-2.15)}))}), 1,
                 P::UndefinedRegion, 0});
    r.push_back({"E-6", E::product({c(2.31), E::sqrt(E::sum({cx2(2.52, 1), cx(-1.52, 1), c(-2.24)}))}), 1,
                 P::UndefinedRegion, 0});
    r.push_back({"E-7", E::divide(E::sum({c(0.53), cx(-2.94, 1)}), E::sum({cx(2.32, 1), c(1.80)})), 1, P::Pole, 1});
    r.push_back({"E-8",
                 E::divide(E::sum({cx(1.00, 1), cx(2.48, 2), c(-1.36)}), E::sum({cx(2.26, 1), cx(-0.91, 2), c(1.94)})),
                 2, P::Pole, 1});
    r.push_back({"E-9",
                 E::divide(E::sum({cx2(2.84, 1), cx(1.84, 1), c(-2.33)}), E::sum({cx2(-0.66, 1), cx(2.94, 1), c(1.35)})),
                 1, P::Pole, 1});
    r.push_back({"E-10",
                 E::divide(E::sum({cx2(-1.08, 1), cx(-2.85, 1), c(-2.08)}), E::sum({cx2(2.56, 1), cx(1.78, 1), c(-0.74)})),
                 1, P::Pole, 2});
    return r;
}

}  // namespace

const std::vector<Benchmark>& registry() {
    static const std::vector<Benchmark> r = make_registry();
    return r;
}

const Benchmark& find_benchmark(std::string_view id) {
    for (const auto& b : registry())
        if (b.id == id) return b;
    throw Error(ErrorCode::InvalidConfig, "unknown benchmark '" + std::string(id) + "'");
}

namespace {

int benchmark_number(std::string_view id) {
    if (id.size() < 3 || id.substr(0, 2) != "E-") throw Error(ErrorCode::InvalidConfig, "bad benchmark id '" + std::string(id) + "'");
    int n = 0;
    for (char ch : id.substr(2)) {
        if (ch < '0' || ch > '9') throw Error(ErrorCode::InvalidConfig, "bad benchmark id '" + std::string(id) + "'");
        n = n * 10 + (ch - '0');
    }
    find_benchmark(id);
    return n;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s;
}

}  // namespace

std::vector<std::string> parse_benchmark_ids(std::string_view spec) {
    std::vector<std::string> ids;
    while (!spec.empty()) {
        const auto comma = spec.find(',');
        const std::string_view item = trim(spec.substr(0, comma));
        spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
        if (item.empty()) continue;
        if (const auto dots = item.find(".."); dots != std::string_view::npos) {
            const int lo = benchmark_number(trim(item.substr(0, dots)));
            const int hi = benchmark_number(trim(item.substr(dots + 2)));
            if (lo > hi) throw Error(ErrorCode::InvalidConfig, "empty benchmark range '" + std::string(item) + "'");
            for (int i = lo; i <= hi; ++i) ids.push_back("E-" + std::to_string(i));
        } else {
            benchmark_number(item);
            ids.emplace_back(item);
        }
    }
    if (ids.empty()) throw Error(ErrorCode::InvalidConfig, "no benchmark ids given");
    return ids;
}

double round_coefficient(double v) { return std::round(v * 100.0) / 100.0; }

namespace {

Expr refill(const Expr& e, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mag(0.5, 3.0);
    std::bernoulli_distribution sign(0.5);
    switch (e.kind()) {
    case Expr::Kind::Const: {
        const double u = mag(rng);
        return Expr::constant(round_coefficient(sign(rng) ? u : -u));
    }
    case Expr::Kind::Var: return e;
    case Expr::Kind::Power: return Expr::power(refill(e.child(0), rng), e.child(1));
    case Expr::Kind::Log: return Expr::log(refill(e.child(0), rng));
    case Expr::Kind::Sqrt: return Expr::sqrt(refill(e.child(0), rng));
    case Expr::Kind::Divide: return Expr::divide(refill(e.child(0), rng), refill(e.child(1), rng));
    case Expr::Kind::Sum:
    case Expr::Kind::Product: {
        std::vector<Expr> ch;
        for (const auto& k : e.children()) ch.push_back(refill(k, rng));
        return e.kind() == Expr::Kind::Sum ? Expr::sum(std::move(ch)) : Expr::product(std::move(ch));
    }
    }
    return e;
}

}  // namespace

Expr sample_coefficients(const Expr& tmpl, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return refill(tmpl, rng);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the combined value
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Dataset sample_dataset(const Benchmark& b, Split split, Index n, std::uint64_t seed) {
    if (n < 1) throw Error(ErrorCode::InvalidConfig, "dataset size must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> inner(-2.0, 2.0);
    std::uniform_real_distribution<double> outer(2.0, 4.0);
    std::bernoulli_distribution sign(0.5);

    Dataset d;
    d.split = split;
    d.X.resize(n, b.input_dim);
    d.y.resize(n);
    std::vector<double> row(static_cast<std::size_t>(b.input_dim));
    Index accepted = 0;
    std::uint64_t draws = 0;
    constexpr std::uint64_t probe = 1000000;
    while (accepted < n) {
        for (auto& v : row) {
            if (split == Split::Extrap) {
                const double m = outer(rng);
                v = sign(rng) ? m : -m;
            } else {
                v = inner(rng);
            }
        }
        ++draws;
        const EvalResult r = eval_expr(b.expr, row);
        if (r.ok() && std::abs(r.value) <= 100.0) {
            for (Index j = 0; j < b.input_dim; ++j) d.X(accepted, j) = row[static_cast<std::size_t>(j)];
            d.y[accepted] = r.value;
            ++accepted;
        }
        if (draws >= probe && static_cast<double>(accepted) < 1e-4 * static_cast<double>(draws))
            throw Error(ErrorCode::SamplingStarved,
                        b.id + ": acceptance rate below 1e-4 after " + std::to_string(draws) + " draws");
    }
    return d;
}

SplitError split_error(const Expr& model, const Dataset& data) {
    SplitError out;
    double acc = 0.0;
    Index valid = 0;
    std::vector<double> row(static_cast<std::size_t>(data.input_dim()));
    for (Index i = 0; i < data.rows(); ++i) {
        for (Index j = 0; j < data.input_dim(); ++j) row[static_cast<std::size_t>(j)] = data.X(i, j);
        const EvalResult r = eval_expr(model, row);
        if (!r.ok()) {
            ++out.flagged;
            continue;
        }
        const double e = r.value - data.y[i];
        acc += e * e;
        ++valid;
    }
    out.mse = valid ? acc / static_cast<double>(valid) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

SplitError split_error(const Network& model, const Dataset& data) {
    const Trace t = forward(model, data.X);
    SplitError out;
    double acc = 0.0;
    Index valid = 0;
    for (Index i = 0; i < data.rows(); ++i) {
        if (!t.valid(i)) {
            ++out.flagged;
            continue;
        }
        const double e = t.prediction[i] - data.y[i];
        acc += e * e;
        ++valid;
    }
    out.mse = valid ? acc / static_cast<double>(valid) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

RunMetrics evaluate_model(const Expr& model, const Dataset& interp, const Dataset& extrap) {
    RunMetrics m;
    const SplitError i = split_error(model, interp);
    const SplitError e = split_error(model, extrap);
    m.interp_mse = i.mse;
    m.interp_flagged = i.flagged;
    m.extrap_mse = e.mse;
    m.extrap_flagged = e.flagged;
    m.node_count = node_count(round_coefficients(model, kReportDecimals));
    m.node_count_raw = node_count(model);
    return m;
}

RunMetrics evaluate_model(const Network& model, const Dataset& interp, const Dataset& extrap) {
    try {
        ExtractOptions opt;
        opt.domain = interp.X;
        return evaluate_model(extract(model, opt), interp, extrap);
    } catch (const Error& err) {
        if (err.code() != ErrorCode::ImaginaryResidue && err.code() != ErrorCode::DegenerateModel) throw;
        RunMetrics m;
        const SplitError i = split_error(model, interp);
        const SplitError e = split_error(model, extrap);
        m.interp_mse = i.mse;
        m.interp_flagged = i.flagged;
        m.extrap_mse = e.mse;
        m.extrap_flagged = e.flagged;
        m.node_count = 0;
        m.status = err.what();
        return m;
    }
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    if (values.empty()) {
        s.mean = s.std = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(var / static_cast<double>(values.size()));
    return s;
}

AggregateRow aggregate(const std::vector<RunMetrics>& runs) {
    if (runs.empty()) throw Error(ErrorCode::InvalidConfig, "aggregate needs at least one run");
    AggregateRow row;
    row.id = runs.front().id;
    row.runs = static_cast<Index>(runs.size());
    std::vector<double> interp, extrap, nc;
    for (const auto& r : runs) {
        if (r.failed) {
            ++row.failed_runs;
            continue;
        }
        interp.push_back(r.interp_mse);
        extrap.push_back(r.extrap_mse);
        if (r.node_count > 0) nc.push_back(static_cast<double>(r.node_count));
    }
    row.interp_mse = summarize(interp);
    row.extrap_mse = summarize(extrap);
    row.node_count = summarize(nc);
    return row;
}

BenchRun run_benchmark(const Benchmark& b, const BenchConfig& config, std::uint64_t seed) {
    const Dataset train = sample_dataset(b, Split::Train, config.n_train, derive_seed(seed, 1));
    const Dataset interp = sample_dataset(b, Split::Interp, config.n_test, derive_seed(seed, 2));
    const Dataset extrap = sample_dataset(b, Split::Extrap, config.n_test, derive_seed(seed, 3));

    const auto layers = config.layers.empty() ? benchmark_library(config.layer1) : config.layers;
    Network net = Network::build(b.input_dim, layers, config.skip_inputs, config.init, derive_seed(seed, 4));
    TrainedNetwork trained = run_training(std::move(net), train, config.schedule, seed, config.record_stride);

    BenchRun run;
    run.network = trained.model.network();
    run.history = std::move(trained.history);
    for (Index e = 0; e < run.network.parameter_count(); ++e)
        if (run.network.active()[e]) run.im_mass += std::norm(run.network.weight(e).imag());

    if (trained.failed) {
        run.metrics.failed = true;
        run.metrics.status = trained.failure;
    } else {
        try {
            ExtractOptions opt;
            opt.domain = train.X;
            run.expression = extract(run.network, opt);
            run.metrics = evaluate_model(*run.expression, interp, extrap);
        } catch (const Error& err) {
            if (err.code() != ErrorCode::ImaginaryResidue && err.code() != ErrorCode::DegenerateModel) throw;
            run.metrics = evaluate_model(run.network, interp, extrap);
        }
        run.metrics.train_mse = split_error(run.network, train).mse;
    }
    run.metrics.id = b.id;
    run.metrics.seed = seed;
    return run;
}

double division_sample_gradient(double x, double a) {
    const double s = x + a;
    return a / (x * s * s * s);
}

DivisionDemoResult division_pathology_demo(const DivisionDemoConfig& config) {
    if (config.points < 1 || config.steps < 0 || !(config.lr > 0.0))
        throw Error(ErrorCode::InvalidConfig, "division demo needs points >= 1, steps >= 0, lr > 0");
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    std::vector<double> xs(static_cast<std::size_t>(config.points));
    for (auto& v : xs) v = dist(rng);

    VectorXc a(1);
    a[0] = config.init;
    if (config.restrict_real) a[0].imag(0.0);
    const ArrayXb active = ArrayXb::Constant(1, true);
    Adam adam(1);
    DivisionDemoResult out;

    auto evaluate = [&](Complex av, Complex* grad, Index* flagged) {
        double loss = 0.0;
        Complex g = 0.0;
        Index valid = 0;
        std::vector<std::pair<double, double>> residuals;
        for (double xi : xs) {
            const auto r = surrogate_div<double>(Complex(1.0), Complex(xi) + av);
            if (!r.ok() || xi == 0.0) {
                ++*flagged;
                continue;
            }
            residuals.emplace_back(xi, r.value.real() - 1.0 / xi);
            ++valid;
        }
        if (valid == 0) throw Error(ErrorCode::EmptyBatch, "every sample collides with the pole");
        const double inv = 1.0 / static_cast<double>(valid);
        for (const auto& [xi, res] : residuals) {
            loss += res * res * inv;
            if (grad) g += binary_adjoint(OperatorKind::Divide, Complex(1.0), Complex(xi) + av, Complex(2.0 * res * inv)).second;
        }
        if (grad) *grad = g;
        return loss;
    };

    Index flagged = 0;
    out.trajectory.push_back({0, a[0], evaluate(a[0], nullptr, &flagged)});
    for (Index t = 1; t <= config.steps; ++t) {
        VectorXc g(1);
        Complex gv;
        evaluate(a[0], &gv, &flagged);
        g[0] = gv;
        if (config.restrict_real) g[0].imag(0.0);
        adam.step(a, g, active, config.lr);
        if (config.restrict_real) a[0].imag(0.0);
        out.trajectory.push_back({t, a[0], evaluate(a[0], nullptr, &flagged)});
    }
    out.final_a = a[0];
    out.final_loss = out.trajectory.back().loss;
    out.flagged = flagged;
    return out;
}

}  // namespace ceql
