#include <doctest.h>

#include <cmath>

#include "ceql/frf.hpp"
#include "support.hpp"

using namespace ceql;

namespace {

double horner(const std::vector<double>& c, double d) {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * d + *it;
    return v;
}

// The beam model as printed, one quotient per line.
double printed(double w, double d) {
    const double d2 = d * d, d3 = d2 * d, d4 = d3 * d;
    auto q = [](double a, double s, double g) { return a / (s * s + g); };
    return 5.21654 * w - 0.3154 + q(0.08445, -0.0007 * d4 + 0.00217 * d3 - 0.00386 * d + w - 0.89, -0.01625) +
           q(0.0577, 0.05572 * d2 - 0.25854 * d + w - 1.26425, -0.1399) +
           q(0.47169, 0.03456 * d2 - 0.37289 * d + w + 0.17194, -0.36363) +
           q(2.42351, -0.02541 * d2 + 0.061 * d + w - 0.23462, -0.0339) -
           q(0.76141, -0.03146 * d2 + 0.08937 * d + w - 0.50138, 0.04658) -
           q(0.26376, -0.20983 * d + w - 0.76732, 0.00551) + q(0.48817, -0.27162 * d + w - 0.20312, 0.31504) +
           q(0.08136, -0.52067 * d + w - 0.76341, -0.14816) + q(0.29455, w - 0.69792, 0.06101);
}

FrfModel from_truth(const FrfTruth& t) {
    FrfModel m;
    m.a = t.a;
    m.b = t.b;
    for (const auto& term : t.terms) m.terms.push_back({term.A, term.gamma, wire_polynomial(term.h)});
    return m;
}

FrfModel single_term(double center, double gamma, double A) {
    FrfModel m;
    const double c[] = {center};
    m.terms.push_back({A, gamma, wire_polynomial(c)});
    return m;
}

}  // namespace

TEST_CASE("frf forward") {
    FrfModel trend = beam_model();
    for (auto& t : trend.terms) t.A = 0.0;
    for (double w : {0.0, 0.37, 1.2, 2.0}) CHECK(frf_forward(trend, w, 3.0).value == doctest::Approx(5.21654 * w - 0.3154));

    const FrfModel one = single_term(0.7, 0.01, 1.0);
    CHECK(frf_forward(one, 0.7, 2.5).value == doctest::Approx(100.0).epsilon(1e-12));

    // A vanishing denominator is flagged, not propagated.
    const FrfModel pole = single_term(0.5, -0.25, 1.0);
    const FrfEval e = frf_forward(pole, 1.0, 0.0);
    CHECK_FALSE(e.ok());
    CHECK(real_poles(pole, 0.0) == std::vector<double>{0.0, 1.0});
    CHECK(real_poles(one, 0.0).empty());
}

TEST_CASE("wired polynomials") {
    const std::vector<double> c{0.89, 0.00386, 0.0, -0.00217, 0.0007};
    const Network h = wire_polynomial(c);
    for (double d = 0.0; d <= 6.0; d += 0.25) {
        FrfTerm t{1.0, 1.0, h};
        CHECK(term_center(t, d) == doctest::Approx(horner(c, d)).epsilon(1e-13));
    }
    CHECK(wire_polynomial(std::vector<double>{}).active_edge_count() == 0);
    const double lin[] = {0.75, -0.02};
    CHECK(polynomial_degree(extract(wire_polynomial(lin)), 1) == 1);
}

TEST_CASE("beam model") {
    const FrfModel m = beam_model();
    CHECK(m.terms.size() == 9);
    // Last quotient at its centre: A / gamma.
    const FrfTerm& last = m.terms.back();
    CHECK(term_center(last, 4.0) == doctest::Approx(0.69792));
    CHECK(last.A / last.gamma == doctest::Approx(4.82790).epsilon(1e-5));
    test::Gen g(61);
    for (int n = 0; n < 500; ++n) {
        const double w = g.uniform(0, 2), d = g.uniform(0, 6);
        const FrfEval e = frf_forward(m, w, d);
        if (!e.ok()) continue;
        CHECK(e.value == doctest::Approx(printed(w, d)).epsilon(1e-10));
    }
    // Every gamma < 0 term contributes two real poles.
    CHECK(real_poles(m, 0.0).size() == 2 * 5);
    const auto rows = peak_report(m, synth_frf(three_resonance_truth(), {0.0, 5.92}, 0.0, 200, 0), default_windows(),
                                  {0.0, 5.92});
    CHECK(rows.size() == 4);
}

TEST_CASE("property: positive gammas never flag") {
    const FrfModel m = from_truth(three_resonance_truth());
    for (double d : {0.0, 2.0, 4.0, 6.0})
        for (double w = 0.0; w <= 2.0; w += 1e-3) {
            const FrfEval e = frf_forward(m, w, d);
            CHECK(e.ok());
            CHECK(std::isfinite(e.value));
        }
}

TEST_CASE("wired truth matches the generator") {
    const FrfTruth truth = three_resonance_truth();
    const FrfModel m = from_truth(truth);
    test::Gen g(62);
    for (int n = 0; n < 200; ++n) {
        const double w = g.uniform(0, 2), d = g.uniform(0, 6);
        double direct = truth.a * w + truth.b;
        for (const auto& t : truth.terms) {
            const double s = w - horner(t.h, d);
            direct += t.A / (s * s + t.gamma);
        }
        CHECK(truth(w, d) == doctest::Approx(direct).epsilon(1e-13));
        CHECK(frf_forward(m, w, d).value == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("property: deleting a zero-amplitude term is exact") {
    test::Gen g(63);
    FrfModel base = from_truth(three_resonance_truth());
    FrfModel extended = base;
    const double c[] = {1.0, 0.1};
    extended.terms.insert(extended.terms.begin() + 1, FrfTerm{0.0, 0.02, wire_polynomial(c)});
    MatrixXr X(300, 2);
    for (Index i = 0; i < 300; ++i) {
        X(i, 0) = g.uniform(0, 2);
        X(i, 1) = g.uniform(0, 6);
    }
    const FrfBatch a = frf_forward(base, X);
    const FrfBatch b = frf_forward(extended, X);
    for (Index i = 0; i < 300; ++i) CHECK(a.prediction[i] == b.prediction[i]);
}

TEST_CASE("synthetic data") {
    const FrfTruth truth = three_resonance_truth();
    const std::vector<double> levels{0, 2, 4, 6};
    const FrfData clean = synth_frf(truth, levels, 0.0, 400, 1);
    CHECK(clean.size() == 1600);
    for (const auto& s : clean) {
        CHECK(s.y == truth(s.omega, s.d));
        CHECK(s.omega >= 0.0);
        CHECK(s.omega <= 2.0);
    }
    CHECK(damage_levels(clean) == levels);

    const FrfData n1 = synth_frf(truth, levels, 0.5, 100, 7, 3);
    const FrfData n2 = synth_frf(truth, levels, 0.5, 100, 7, 3);
    CHECK(n1.size() == 1200);
    bool same = true;
    for (std::size_t i = 0; i < n1.size(); ++i) same = same && n1[i].y == n2[i].y;
    CHECK(same);
    for (const auto& s : n1) CHECK(s.y >= 0.0);

    // Each level's argmax near the first resonance sits within one grid step of h(d).
    const double step = 2.0 / 399.0;
    for (double d : levels) {
        const double peak = detect_peak(clean, PeakWindow::around(0.75), d);
        CHECK(std::abs(peak - horner(truth.terms[0].h, d)) <= step);
    }

    FrfTruth bad = truth;
    bad.terms[0].gamma = -0.01;
    CHECK_THROWS_AS(synth_frf(bad, levels, 0.0, 100, 0), Error);
}

TEST_CASE("peak detection") {
    const FrfTruth truth = three_resonance_truth();
    const FrfData clean = synth_frf(truth, {0, 3}, 0.0, 400, 0);
    CHECK_THROWS_AS(detect_peak(clean, PeakWindow{0.9, 0.8}, 0.0), Error);
    CHECK_THROWS_AS(detect_peak(clean, PeakWindow{1.9, 2.3}, 0.0), Error);
    CHECK_THROWS_AS(detect_peak(clean, PeakWindow::around(0.75), 5.0), Error);
    try {
        detect_peak(clean, PeakWindow{0.9, 0.8}, 0.0);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidWindow);
    }

    // Mean over repetitions.
    FrfData reps;
    for (int r = 0; r < 2; ++r)
        for (int k = 0; k <= 10; ++k) reps.push_back({0.7 + 0.01 * k, 0.0, (k == 2 + 4 * r) ? 5.0 : 1.0, r});
    CHECK(detect_peak(reps, PeakWindow{0.6, 0.9}, 0.0) == doctest::Approx((0.72 + 0.76) / 2));

    // A perfect model agrees with the data up to the sample grid.
    const FrfModel m = from_truth(truth);
    std::vector<std::string> warnings;
    const auto rows = peak_report(m, clean, default_windows(), {0.0, 3.0, 6.0}, &warnings);
    CHECK(rows.size() == 4);
    CHECK(warnings.size() == 2);
    for (const auto& r : rows) CHECK(std::abs(r.measured - r.predicted) <= 2.0 / 399.0);
    const std::string csv = peak_report_csv(rows);
    CHECK(csv.rfind("window,damage_pct,measured_khz,predicted_khz\n", 0) == 0);
}

TEST_CASE("trainable adapter") {
    FrfFitConfig cfg;
    cfg.terms = 3;
    cfg.seed = 5;
    cfg.init.weight_scale = 0.3;
    const FrfTrainable t(initial_frf_model(cfg));
    const VectorXc w = t.parameters();
    CHECK(w.size() == 2 + 2 * 3 + 3 * t.model().terms[0].h.parameter_count());
    CHECK(t.real_only().head(8).all());
    CHECK_FALSE(t.real_only().tail(1)[0]);
    CHECK(t.prunable()[2]);
    CHECK_FALSE(t.prunable()[0]);
    CHECK_FALSE(t.prunable()[3]);

    FrfTrainable u = t;
    u.set_parameters(w);
    CHECK(u.parameters() == w);
    u.deactivate(2);
    CHECK(u.cascade_cleanup() > 0);
    CHECK_FALSE(u.term_alive(0));
    CHECK(u.compact().terms.size() == 2);
    CHECK(u.active_edge_count() < t.active_edge_count());
    CHECK_FALSE(u.degenerate());
}

TEST_CASE("property: frf gradient matches central differences") {
    const FrfData data = synth_frf(three_resonance_truth(), {0, 4}, 0.0, 60, 0);
    const Dataset d = to_dataset(data);
    const LossSpec spec{DataTerm::MSE, 1e-3, 1e-4, 0.0};
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        FrfFitConfig cfg;
        cfg.terms = 3;
        cfg.seed = seed;
        cfg.init.weight_scale = 0.3;
        cfg.init.gamma0 = 0.05;
        const FrfTrainable t(initial_frf_model(cfg));
        Gradient g;
        t.evaluate(d, spec, &g, nullptr);
        const VectorXc w = t.parameters();
        const ArrayXb active = t.active();
        const ArrayXb real_only = t.real_only();
        const double h = 1e-6;
        for (Index e = 0; e < w.size(); ++e) {
            if (!active[e]) {
                CHECK(g[e] == Complex(0));
                continue;
            }
            auto loss_at = [&](Complex delta) {
                FrfTrainable p = t;
                VectorXc v = w;
                v[e] += delta;
                p.set_parameters(v);
                return p.evaluate(d, spec, nullptr, nullptr).total;
            };
            const double re = (loss_at(h) - loss_at(-h)) / (2 * h);
            CHECK(std::abs(g[e].real() - re) <= 1e-6 * std::abs(re) + 1e-7);
            if (real_only[e]) continue;
            const double im = (loss_at(Complex(0, h)) - loss_at(Complex(0, -h))) / (2 * h);
            CHECK(std::abs(g[e].imag() - im) <= 1e-6 * std::abs(im) + 1e-7);
        }
    }
}

TEST_CASE("fit preconditions and trend-only fits") {
    FrfFitConfig cfg;
    cfg.terms = 2;
    cfg.schedule = FrfFitConfig::frf_default_schedule().scaled(0.005);
    const FrfData small = synth_frf(three_resonance_truth(), {0, 2}, 0.0, 40, 0);
    CHECK_THROWS_AS(fit_frf(small, cfg), Error);
    const FrfData single = synth_frf(three_resonance_truth(), {0}, 0.0, 200, 0);
    CHECK_THROWS_AS(fit_frf(single, cfg), Error);

    // Pruning every resonance leaves the trend, which is still a valid model.
    FrfData flat = synth_frf(three_resonance_truth(), {0, 2}, 0.0, 100, 0);
    for (auto& s : flat) s.y = 1.5;
    cfg.schedule = FrfFitConfig::frf_default_schedule().scaled(0.01);
    cfg.schedule.phases[0].pruning->threshold = 1e9;
    const FrfFit fit = fit_frf(flat, cfg);
    REQUIRE_FALSE(fit.failed);
    CHECK(fit.model.terms.empty());
    CHECK(frf_forward(fit.model, 1.0, 0.0).value == doctest::Approx(1.5).epsilon(0.05));
    CHECK(render_frf(fit.model).find("H(w, d) = ") == 0);
}

TEST_CASE("frf data csv") {
    const FrfData data = synth_frf(three_resonance_truth(), {0, 2}, 0.1, 50, 3, 2);
    const FrfData back = frf_data_from_csv(frf_data_to_csv(data));
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back[i].omega == data[i].omega);
        CHECK(back[i].d == data[i].d);
        CHECK(back[i].y == data[i].y);
        CHECK(back[i].repetition == data[i].repetition);
    }
    CHECK_THROWS_AS(frf_data_from_csv("omega_khz,damage_pct,magnitude_linear,repetition_id\n2.5,0,1,0\n"), Error);
    CHECK_THROWS_AS(frf_data_from_csv("omega_khz,damage_pct,magnitude_linear,repetition_id\n1.0,0,-1,0\n"), Error);
    CHECK_THROWS_AS(frf_data_from_csv("w,d,y\n1,0,1\n"), Error);
}
