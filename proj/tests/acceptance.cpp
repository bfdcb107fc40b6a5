// Acceptance run: one PASS/FAIL line per criterion.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "ceql/bench.hpp"
#include "ceql/frf.hpp"
#include "ceql/prune.hpp"
#include "support.hpp"

using namespace ceql;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// Benchmark runs are shared by criteria 3, 4, 5, 7 and 8.
std::map<std::string, std::vector<BenchRun>> g_runs;

const std::vector<BenchRun>& bench_runs(const std::string& id, double scale) {
    auto it = g_runs.find(id);
    if (it != g_runs.end()) return it->second;
    BenchConfig cfg;
    cfg.schedule = PhaseSchedule::defaults().scaled(scale);
    std::vector<BenchRun> runs;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto t0 = std::chrono::steady_clock::now();
        runs.push_back(run_benchmark(find_benchmark(id), cfg, seed));
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const RunMetrics& m = runs.back().metrics;
        std::printf("  %s seed %llu: interp %s extrap %s nc %lld status %s (%.1f s)\n", id.c_str(),
                    static_cast<unsigned long long>(seed), fmt(m.interp_mse).c_str(), fmt(m.extrap_mse).c_str(),
                    static_cast<long long>(m.node_count), m.status.c_str(), secs);
        if (runs.back().expression)
            std::printf("    %s\n", render(round_coefficients(*runs.back().expression, kReportDecimals)).c_str());
        std::fflush(stdout);
    }
    return g_runs.emplace(id, std::move(runs)).first->second;
}

void ensure_all_bench_runs() {
    bench_runs("E-1", 0.2);
    bench_runs("E-2", 0.2);
    bench_runs("E-7", 0.5);
    bench_runs("E-5", 0.5);
}

Outcome gradient_correctness() {
    const LossSpec spec{DataTerm::MSE, 1e-3, 1e-4, 1.0};
    Index checked = 0, passed = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Network net = test::random_full_library(1000 + seed, 1 + static_cast<Index>(seed % 2));
        test::Gen gen(seed);
        const Dataset d = test::guarded_batch(net, gen, 8, 0.1);
        if (d.rows() < 8) continue;
        Gradient g;
        backward(net, d, spec, &g);
        const double err = test::relative_error(g, finite_difference_oracle(net, d, spec, 1e-6));
        worst = std::max(worst, err);
        ++checked;
        if (err < 1e-5) ++passed;
    }
    return {checked == 100 && passed == checked,
            std::to_string(passed) + "/" + std::to_string(checked) + " nets within 1e-5 (of 100), worst " +
                fmt(worst)};
}

Outcome node_count_oracle() {
    const std::vector<std::pair<std::string, Index>> want{{"E-1", 5}, {"E-2", 8}, {"E-3", 10}, {"E-4", 22}};
    bool ok = true;
    std::string detail;
    for (const auto& [id, nc] : want) {
        const Index got = node_count(find_benchmark(id).expr);
        ok = ok && got == nc;
        detail += id + "->" + std::to_string(got) + " ";
    }
    return {ok, detail};
}

Outcome polynomial_recovery() {
    bool ok = true;
    std::string detail;
    for (const auto& [id, nc] : std::vector<std::pair<std::string, Index>>{{"E-1", 5}, {"E-2", 8}}) {
        int good = 0;
        for (const BenchRun& r : bench_runs(id, 0.2)) {
            const RunMetrics& m = r.metrics;
            if (!m.failed && m.interp_mse < 1e-8 && m.extrap_mse < 1e-8 && m.node_count == nc) ++good;
        }
        ok = ok && good >= 4;
        detail += id + " " + std::to_string(good) + "/5 ";
    }
    return {ok, detail};
}

bool has_root_near_pole(const Expr& e) {
    for (const Expr& div : find_divides(e))
        for (double r : real_roots(div.child(1), 1))
            if (r > -0.83 && r < -0.72) return true;
    return false;
}

Outcome pole_recovery() {
    int mse_ok = 0, root_ok = 0, both = 0;
    for (const BenchRun& r : bench_runs("E-7", 0.5)) {
        const RunMetrics& m = r.metrics;
        const bool a = !m.failed && m.interp_mse < 1e-5 && m.extrap_mse < 1e-5;
        const bool b = r.expression && has_root_near_pole(*r.expression);
        mse_ok += a;
        root_ok += b;
        both += a && b;
    }
    return {both >= 3, "MSE < 1e-5 in " + std::to_string(mse_ok) + "/5, root in (-0.83,-0.72) in " +
                           std::to_string(root_ok) + "/5, both in " + std::to_string(both) + "/5"};
}

Outcome branch_cut_robustness() {
    int good = 0, aborted = 0;
    Index flagged = 0;
    for (const BenchRun& r : bench_runs("E-5", 0.5)) {
        const RunMetrics& m = r.metrics;
        if (m.failed) ++aborted;
        flagged += r.history.total_flagged;
        if (!m.failed && m.interp_mse < 1e-4) ++good;
    }
    return {aborted == 0 && good >= 3, "aborts " + std::to_string(aborted) + ", interp MSE < 1e-4 in " +
                                           std::to_string(good) + "/5, flagged sample-epochs " +
                                           std::to_string(flagged)};
}

Outcome division_pathology() {
    DivisionDemoConfig cplx;
    cplx.init = Complex(1.5, 0.5);
    DivisionDemoConfig real;
    real.init = 1.5;
    real.restrict_real = true;
    const DivisionDemoResult c = division_pathology_demo(cplx);
    const DivisionDemoResult r = division_pathology_demo(real);
    const bool ok = std::abs(c.final_a) < 0.05 && c.final_loss <= 1e-2 * r.final_loss;
    return {ok, "complex |a| " + fmt(std::abs(c.final_a)) + " loss " + fmt(c.final_loss) + "; real a " +
                    fmt(r.final_a.real()) + " loss " + fmt(r.final_loss)};
}

Outcome pruning_invariants() {
    test::Gen gen(7);
    int mismatches = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Network net = test::random_full_library(2000 + seed, 1 + static_cast<Index>(seed % 2));
        for (int k = 0; k < 25; ++k) {
            const Index e = gen.index(net.parameter_count());
            if (net.active()[e]) net.deactivate(e);
        }
        MatrixXr X(64, net.input_dim());
        for (Index i = 0; i < X.size(); ++i) X.data()[i] = gen.uniform(-2, 2);
        const Trace before = forward(net, X);
        Network cleaned = net;
        cascade_cleanup(cleaned);
        if (cleaned.active_edge_count() == 0) continue;
        const Trace after = forward(cleaned, X);
        for (Index i = 0; i < X.rows(); ++i)
            if (before.valid(i) && after.prediction[i] != before.prediction[i]) ++mismatches;
    }

    ensure_all_bench_runs();
    const Index floor = PhaseSchedule::defaults().phases[1].pruning->min_edges;
    int non_monotone = 0, floor_violations = 0, histories = 0;
    for (const auto& [id, runs] : g_runs)
        for (const BenchRun& r : runs) {
            ++histories;
            Index last = -1;
            for (const EpochRecord& e : r.history.epochs) {
                if (e.phase < 2) continue;
                if (last >= 0 && e.active_edges > last) ++non_monotone;
                last = e.active_edges;
            }
            for (const PruneEvent& p : r.history.prunes)
                if (p.kind == PruneKind::ImpactIterative && p.pruned > 0 && p.active_after < floor)
                    ++floor_violations;
        }
    return {mismatches == 0 && non_monotone == 0 && floor_violations == 0,
            "cleanup mismatches " + std::to_string(mismatches) + ", non-monotone steps " +
                std::to_string(non_monotone) + ", floor violations " + std::to_string(floor_violations) + " over " +
                std::to_string(histories) + " runs"};
}

Outcome extraction_faithfulness() {
    ensure_all_bench_runs();
    int converged = 0, faithful = 0;
    Index compared = 0;
    double worst = 0.0, worst_im = 0.0;
    for (const auto& [id, runs] : g_runs)
        for (const BenchRun& r : runs) {
            if (r.metrics.failed || !r.expression) continue;
            ++converged;
            const Dataset pts = sample_dataset(find_benchmark(id), Split::Interp, 1000, derive_seed(r.metrics.seed, 9));
            const Trace t = forward(r.network, pts.X);
            double err = 0.0;
            for (Index i = 0; i < pts.rows(); ++i) {
                std::vector<double> row(static_cast<std::size_t>(pts.X.cols()));
                for (Index j = 0; j < pts.X.cols(); ++j) row[static_cast<std::size_t>(j)] = pts.X(i, j);
                const EvalResult v = eval_expr(*r.expression, row);
                if (!t.valid(i) || v.status != EvalStatus::Ok) continue;
                err = std::max(err, std::abs(v.value - t.prediction[i]));
                ++compared;
            }
            if (err > 1e-9 || r.im_mass >= 1e-6) {
                // Extraction keeps Re(w) only; compare against the network with Im(w) dropped too.
                Network real = r.network;
                for (Index e = 0; e < real.parameter_count(); ++e)
                    if (real.active()[e]) real.set_weight(e, real.weight(e).real());
                const Trace tr = forward(real, pts.X);
                double err_real = 0.0;
                for (Index i = 0; i < pts.rows(); ++i) {
                    std::vector<double> row(static_cast<std::size_t>(pts.X.cols()));
                    for (Index j = 0; j < pts.X.cols(); ++j) row[static_cast<std::size_t>(j)] = pts.X(i, j);
                    const EvalResult v = eval_expr(*r.expression, row);
                    if (!tr.valid(i) || v.status != EvalStatus::Ok) continue;
                    err_real = std::max(err_real, std::abs(v.value - tr.prediction[i]));
                }
                std::printf("  %s seed %llu: max |diff| %s, sum Im(w)^2 %s, max |diff| with Im(w) dropped %s\n",
                            id.c_str(), static_cast<unsigned long long>(r.metrics.seed), fmt(err).c_str(),
                            fmt(r.im_mass).c_str(), fmt(err_real).c_str());
            }
            worst = std::max(worst, err);
            worst_im = std::max(worst_im, r.im_mass);
            if (err <= 1e-9 && r.im_mass < 1e-6) ++faithful;
        }
    return {converged > 0 && faithful == converged,
            std::to_string(faithful) + "/" + std::to_string(converged) + " converged models faithful, worst |diff| " +
                fmt(worst) + " over " + std::to_string(compared) + " points, worst sum Im(w)^2 " + fmt(worst_im)};
}

FrfModel wire_truth(const FrfTruth& t) {
    FrfModel m;
    m.a = t.a;
    m.b = t.b;
    for (const auto& term : t.terms) m.terms.push_back({term.A, term.gamma, wire_polynomial(term.h)});
    return m;
}

// Worst relative peak error over resonances and levels, and whether every h_i has degree <= 4.
std::pair<double, bool> frf_recovery(double noise_fraction) {
    const FrfTruth truth = three_resonance_truth();
    const std::vector<double> levels{0.0, 2.0, 4.0, 6.0};
    const FrfData clean = synth_frf(truth, levels, 0.0, 400, 11);
    double ymax = 0.0;
    for (const auto& s : clean) ymax = std::max(ymax, s.y);
    const FrfData data = noise_fraction > 0 ? synth_frf(truth, levels, noise_fraction * ymax, 400, 11) : clean;

    FrfFitConfig cfg;
    cfg.schedule = FrfFitConfig::frf_default_schedule().scaled(0.25);
    const FrfFit fit = fit_frf(data, cfg);
    if (fit.failed) {
        std::printf("  fit failed: %s\n", fit.failure.c_str());
        return {1.0, false};
    }
    std::printf("%s", render_frf(fit.model).c_str());

    bool low_degree = true;
    try {
        for (const Expr& h : extract_locations(fit.model)) {
            const int deg = polynomial_degree(h, 1);
            low_degree = low_degree && deg >= 0 && deg <= 4;
        }
    } catch (const Error& e) {
        std::printf("  extraction: %s\n", e.what());
        low_degree = false;
    }

    const FrfModel reference = wire_truth(truth);
    double worst = 0.0;
    for (const auto& term : truth.terms) {
        const PeakWindow w = PeakWindow::around(term.h[0]);
        for (double d : levels) {
            const double want = detect_peak(reference, w, d);
            const double got = detect_peak(fit.model, w, d);
            worst = std::max(worst, std::abs(got - want) / want);
        }
    }
    return {worst, low_degree};
}

// The degree bound applies to the noiseless fit; the noisy fit is judged on peaks only.
Outcome frf_synthetic_recovery() {
    const auto [clean_err, clean_deg] = frf_recovery(0.0);
    const auto [noisy_err, noisy_deg] = frf_recovery(0.05);
    return {clean_err <= 0.02 && clean_deg && noisy_err <= 0.05,
            "noiseless worst peak error " + fmt(100 * clean_err) + "%, h degree <= 4: " + (clean_deg ? "yes" : "no") +
                "; noisy worst peak error " + fmt(100 * noisy_err) + "% (noisy h extracted: " +
                (noisy_deg ? "yes" : "no") + ")"};
}

Outcome beam_model_reevaluation() {
    const FrfModel m = beam_model();
    const double radius = 0.01;
    Index bad = 0, excluded = 0, points = 0;
    for (double d : {0.0, 5.92}) {
        const std::vector<double> poles = real_poles(m, d);
        for (int k = 0; k <= 2000; ++k) {
            const double w = 1e-3 * k;
            const bool near = std::any_of(poles.begin(), poles.end(), [&](double p) { return std::abs(w - p) < radius; });
            if (near) {
                ++excluded;
                continue;
            }
            ++points;
            const FrfEval e = frf_forward(m, w, d);
            if (!e.ok() || !std::isfinite(e.value)) ++bad;
        }
    }
    const PeakWindow first = default_windows()[0];
    std::string inside;
    for (const FrfTerm& t : m.terms) {
        const double c = term_center(t, 0.0);
        if (c >= first.lo && c <= first.hi) inside += (inside.empty() ? "" : ", ") + fmt(c);
    }
    return {bad == 0 && !inside.empty(), std::to_string(bad) + " non-finite of " + std::to_string(points) +
                                             " grid points (" + std::to_string(excluded) +
                                             " within 0.01 of a real pole skipped); minima in [0.6, 0.9] at d=0: " +
                                             (inside.empty() ? "none" : inside)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CEQL acceptance criteria"};
    std::vector<int> only;
    std::vector<int> known;
    app.add_option("--only", only, "Criteria to run (default: all)");
    app.add_option("--known-failure", known, "Criteria whose FAIL does not fail the run");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradient correctness", gradient_correctness},
        {"node count oracle", node_count_oracle},
        {"linear/polynomial recovery", polynomial_recovery},
        {"pole recovery", pole_recovery},
        {"branch-cut robustness", branch_cut_robustness},
        {"division pathology", division_pathology},
        {"pruning invariants", pruning_invariants},
        {"extraction faithfulness", extraction_faithfulness},
        {"FRF synthetic recovery", frf_synthetic_recovery},
        {"beam model re-evaluation", beam_model_reevaluation},
    };

    std::vector<std::string> lines;
    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int n = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), n) == only.end()) continue;
        std::printf("criterion %d: %s\n", n, criteria[i].first.c_str());
        std::fflush(stdout);
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool tolerated = std::find(known.begin(), known.end(), n) != known.end();
        std::ostringstream line;
        line << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << criteria[i].first << "): " << o.detail
             << " [" << fmt(secs) << " s]" << (!o.pass && tolerated ? " (known failure)" : "");
        lines.push_back(line.str());
        std::printf("%s\n", lines.back().c_str());
        std::fflush(stdout);
        if (!o.pass && !tolerated) ++unexpected;
    }
    std::printf("\nsummary\n");
    for (const auto& l : lines) std::printf("%s\n", l.c_str());
    return unexpected == 0 ? 0 : 1;
}
