#pragma once

// Frequency-response surrogate
//
//   H(w, d) = a w + b + sum_i A_i / ((w - h_i(d))^2 + gamma_i)
//
// with each resonance location h_i(d) produced by a two-layer equation
// learner over the damage indicator d. Frequencies are in kHz.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ceql/expr.hpp"
#include "ceql/network.hpp"
#include "ceql/train.hpp"

namespace ceql {

struct FrfTerm {
    double A = 0.0;
    double gamma = 0.0;
    Network h;
};

struct FrfModel {
    double a = 0.0;
    double b = 0.0;
    std::vector<FrfTerm> terms;
};

/// The h_i(d) library: two {id, const, square, mul} layers with skip inputs.
std::vector<LayerSpec> frf_h_library();

struct FrfEval {
    double value = 0.0;
    OpStatus status = OpStatus::Ok;

    bool ok() const { return status == OpStatus::Ok; }
};

/// One evaluation. Each resonance is the surrogate quotient
/// Re(A / ((w - h(d))^2 + gamma)); a vanishing denominator flags the point.
FrfEval frf_forward(const FrfModel& m, double omega, double d);

struct FrfBatch {
    VectorXr prediction;  // NaN where flagged
    std::vector<OpStatus> status;
};

/// Rows of `X` are (omega, d).
FrfBatch frf_forward(const FrfModel& m, const MatrixXr& X);

/// h(d) = c[0] + c[1] d + c[2] d^2 + c[3] d^3 + c[4] d^4 wired into the
/// h library with real weights (missing coefficients are zero).
Network wire_polynomial(std::span<const double> coeffs);

/// The recovered nine-term beam model.
FrfModel beam_model();

/// Real poles (w with vanishing denominator) of every gamma < 0 term at d.
std::vector<double> real_poles(const FrfModel& m, double d);

/// Location of min_w |denominator| of term i at d, i.e. Re h_i(d).
double term_center(const FrfTerm& t, double d);

// Data

struct FrfSample {
    double omega = 0.0;
    double d = 0.0;
    double y = 0.0;
    int repetition = 0;
};

using FrfData = std::vector<FrfSample>;

Dataset to_dataset(const FrfData& data);
std::vector<double> damage_levels(const FrfData& data);

/// Generating model with polynomial resonance locations.
struct FrfTruthTerm {
    double A = 0.0;
    double gamma = 0.0;
    std::vector<double> h;  // coefficients in d, constant first
};

struct FrfTruth {
    double a = 0.0;
    double b = 0.0;
    std::vector<FrfTruthTerm> terms;

    double operator()(double omega, double d) const;
};

/// Three resonances near 0.75, 1.18 and 1.6 kHz drifting linearly with d.
FrfTruth three_resonance_truth();

/// Samples on a uniform grid over [0, 2] kHz per level and repetition, with
/// additive Gaussian noise clipped at zero. Requires gamma > 0 for every term.
FrfData synth_frf(const FrfTruth& truth, const std::vector<double>& levels, double noise_sd,
                  Index n_per_level, std::uint64_t seed, Index repetitions = 1);

/// CSV with header omega_khz,damage_pct,magnitude_linear,repetition_id.
std::string frf_data_to_csv(const FrfData& data);
FrfData frf_data_from_csv(const std::string& text);

// Peaks

struct PeakWindow {
    double lo = 0.0;
    double hi = 0.0;

    static PeakWindow around(double center, double half_width = 0.15) {
        return {center - half_width, center + half_width};
    }
};

std::vector<PeakWindow> default_windows();

/// Mean over repetitions of the argmax of the samples at `level` inside the window.
double detect_peak(const FrfData& data, const PeakWindow& window, double level);

/// Argmax of the model over a grid of `step` inside the window at `level`.
/// Flagged grid points are skipped.
double detect_peak(const FrfModel& model, const PeakWindow& window, double level, double step = 1e-4);

struct PeakRow {
    Index window = 0;
    double level = 0.0;
    double measured = 0.0;
    double predicted = 0.0;
};

/// Measured versus predicted peak per window and damage level. Levels with no
/// samples in a window are skipped and reported through `warnings`.
std::vector<PeakRow> peak_report(const FrfModel& model, const FrfData& data,
                                 const std::vector<PeakWindow>& windows,
                                 const std::vector<double>& levels,
                                 std::vector<std::string>* warnings = nullptr);

/// Columns window,damage_pct,measured_khz,predicted_khz.
std::string peak_report_csv(const std::vector<PeakRow>& rows);

// Fitting

/// Trainer adapter. Parameters are laid out as
/// [a, b, (A_i, gamma_i) for every term, weights of h_0, h_1, ...].
/// a, b, A_i and gamma_i are real; A_i and the h edges are prunable.
class FrfTrainable {
public:
    FrfTrainable() = default;
    explicit FrfTrainable(FrfModel model);

    const FrfModel& model() const { return model_; }
    /// The model with dead terms removed.
    FrfModel compact() const;
    bool term_alive(std::size_t i) const { return alive_[i]; }

    VectorXc parameters() const;
    void set_parameters(const VectorXc& w);
    ArrayXb active() const;
    ArrayXb prunable() const;
    ArrayXb real_only() const;
    LossBreakdown evaluate(const Dataset& data, const LossSpec& spec, Gradient* grad,
                           MatrixXr* branch_args) const;
    void deactivate(Index e);
    Index cascade_cleanup();
    Index active_edge_count() const;
    bool degenerate() const;

private:
    Index amplitude_slot(std::size_t i) const { return 2 + 2 * static_cast<Index>(i); }

    Index scalar_count() const { return 2 + 2 * static_cast<Index>(model_.terms.size()); }

    FrfModel model_;
    std::vector<bool> alive_;
    std::vector<bool> amp_active_;
    std::vector<Index> offsets_;  // start of each h_i in the flat vector
    Index size_ = 0;
};

struct FrfInit {
    double A0 = 0.01;
    double gamma0 = 0.01;
    double center_lo = 0.05;
    double center_hi = 1.95;
    /// Uniform range of the remaining h weights (real and imaginary parts).
    double weight_scale = 0.01;
};

struct FrfFitConfig {
    Index terms = 20;
    PhaseSchedule schedule = frf_default_schedule();
    FrfInit init;
    std::uint64_t seed = 0;
    Index record_stride = 100;

    static PhaseSchedule frf_default_schedule();
};

FrfModel initial_frf_model(const FrfFitConfig& config);

struct FrfFit {
    FrfModel model;  // compacted
    History history;
    bool failed = false;
    std::string failure;
};

/// Needs at least 100 samples over at least two damage levels.
FrfFit fit_frf(const FrfData& data, const FrfFitConfig& config);

/// Extracted h_i(d) of every term, with x1 standing for d.
std::vector<Expr> extract_locations(const FrfModel& m, const ExtractOptions& options = {});

/// Text in the layout of the beam model, one term per line.
std::string render_frf(const FrfModel& m, int precision = 5);

nlohmann::json frf_to_json(const FrfModel& m);

}  // namespace ceql
