// Two-stage protocol runner: an estimation stage where the filter locks onto
// the measured system from the record alone, then a control stage where the
// selected feedback law (driven by the filter state) is applied to the
// measured system and the filter alike.
#pragma once

#include "qfc/controllers.hpp"
#include "qfc/estimator.hpp"
#include "qfc/scenarios.hpp"

namespace qfc {

enum class Stage { estimate_only, estimate_then_control, closed_loop_from_t0 };

enum class EstimatorInit { scenario_default, matched, mixed, random };

struct LawConfig {
    FeedbackVariant variant = FeedbackVariant::none;
    double gamma = 0.2;              // two-qubit overlap threshold
    double trigger = -0.9;           // reset pulse threshold on <sigma_z>_e
    Eigen::VectorXd policy_weights;  // parametric policy
    int delay_steps = 0;             // observation delay N_M, in steps
};

struct LoopOptions {
    Stage stage = Stage::estimate_then_control;
    LawConfig law;
    int est_steps = 0;      // estimation budget; stage ends at min(t_f, budget)
    int control_steps = 0;
    double threshold = 0.99;
    int window = 50;       // consecutive fidelity samples at or above threshold
    int stride = 1;        // output sampling stride
    int fid_stride = 1;    // estimation-stage fidelity sampling stride
    std::uint64_t trajectory_index = 0;
    MismatchSpec mismatch;
    EstimatorInit est_init = EstimatorInit::scenario_default;
    std::optional<DensityMatrix> rho0;  // override the scenario initial state
    bool end_estimation_at_tf = true;
    bool keep_record = false;
    // Evolve only the measured system and read observations straight from it;
    // exact for matched initialization (the filter reproduces the trajectory
    // identically), used by policy training.
    bool truth_only = false;
    // Extra expectation-value columns sampled at the stride.
    std::vector<std::pair<std::string, ComplexMatrix>> extra_observables;
};

struct HysteresisTransition {
    int step = 0;
    double t = 0.0;
    HysteresisRegion from = HysteresisRegion::below_half_gamma;
    HysteresisRegion to = HysteresisRegion::below_half_gamma;
    double overlap = 0.0;
};

struct LoopResult {
    // Sampled every `stride` steps (t = 0 included). NaN marks columns that
    // are undefined for the mode.
    std::vector<double> t;
    std::vector<double> current;
    std::vector<double> exp_a_true;
    std::vector<double> exp_a_est;
    std::vector<double> fid_truth_est;
    std::vector<double> fid_target_true;
    std::vector<double> purity_true;
    std::vector<double> purity_est;
    std::vector<std::vector<double>> controls;              // [n_controls][sample]
    std::vector<std::vector<double>> extra;                 // [observable][sample]
    std::vector<std::string> control_names;
    std::vector<std::string> extra_names;

    ConvergenceReport report;  // from the estimation stage
    int est_end_step = 0;
    double est_end_t = 0.0;
    bool tf_reached = false;

    std::vector<HysteresisTransition> transitions;
    std::optional<int> pulse_step;

    DensityMatrix final_truth;
    DensityMatrix final_est;
    MeasurementRecord record;

    bool aborted = false;               // positivity abort, reported not thrown
    double mean_fid_target = 0.0;       // time-mean of F(truth, target), control stage
    double final_fid_target = 0.0;
    double max_top_two_population = 0.0;
};

LoopResult run_closed_loop(const ScenarioSpec& scenario, const LoopOptions& opt);

}  // namespace qfc
