// The conditional-state tomography filter: evolves an estimator density
// matrix from any initial guess using only the noisy measurement record,
// reports convergence against the true trajectory when one is available, and
// supports deliberate model mismatch.
#pragma once

#include <optional>

#include "qfc/scenarios.hpp"
#include "qfc/sme.hpp"

namespace qfc {

struct EstimatorState {
    DensityMatrix rho_e;
    double t = 0.0;
};

struct ConvergenceReport {
    std::optional<double> t_f;  // first time F >= threshold held for `window` samples
    std::vector<std::pair<double, double>> fidelity_series;  // (t, F)
    double threshold = 0.99;
    int window = 50;
};

// Scalar multiplier on the estimator's model Hamiltonian (imperfect knowledge
// of the system frequency).
struct MismatchSpec {
    double lambda_scale = 1.0;
};

// rho_e += (-i[H,rho_e] + kappa D[A]rho_e + extra dissipators) dt
//          + 2 kappa eta (I - <A>_e) H[A]rho_e dt, then hermitize/repair/
// renormalize. Deterministic: no random draws inside.
EstimatorState estimator_step(const EstimatorState& est, const ComplexMatrix& h_total_est,
                              const ComplexMatrix& a, const SmeConfig& cfg, double current);

// NaN marks a column that is undefined for the mode (no truth available).
struct EstimationSeries {
    std::vector<double> t;
    std::vector<double> exp_a_est;
    std::vector<double> purity_est;
    std::vector<double> fidelity;    // vs truth
    std::vector<double> exp_a_true;
    std::vector<double> purity_true;
};

struct EstimationResult {
    std::vector<EstimatorState> history;  // sampled every `stride` steps, plus t=0
    EstimationSeries series;
    ConvergenceReport report;
    DensityMatrix final_state;
};

// Replays the record once in order. `truth_history` (when given) must be
// sampled at stride 1 from the same time grid; enables the fidelity series.
EstimationResult run_estimation(const MeasurementRecord& record, const ScenarioSpec& model,
                                const DensityMatrix& rho_e0, const MismatchSpec& mismatch,
                                double threshold, int window,
                                const std::vector<TrajectoryState>* truth_history = nullptr,
                                int stride = 1);

// Simulates the true system and runs the filter against the live record in
// one pass (no full truth history in memory). Equivalent to run_trajectory +
// run_estimation by the determinism contract.
struct SimEstimateOptions {
    int n_steps = 1000;
    std::uint64_t trajectory_index = 0;
    double threshold = 0.99;
    int window = 50;
    int stride = 1;              // output/fidelity sampling stride
    MismatchSpec mismatch;
    std::optional<DensityMatrix> rho_e0;     // default: scenario estimator_init
    std::optional<DensityMatrix> rho0;       // default: scenario initial_true
    bool keep_record = false;
};

struct SimEstimateResult {
    EstimationSeries series;
    ConvergenceReport report;
    DensityMatrix final_truth;
    DensityMatrix final_est;
    MeasurementRecord record;  // only when keep_record
    double max_top_two_population = 0.0;
};

SimEstimateResult run_sim_and_estimate(const ScenarioSpec& model, const SimEstimateOptions& opt);

enum class SweepAxis { eta, kappa };

struct SweepRow {
    double value = 0.0;
    double median_tf = 0.0;  // censored runs enter the median at the horizon
    int n_converged = 0;
    int n_censored = 0;
};

// Median convergence time over seeds for each parameter value.
std::vector<SweepRow> sweep_tf(SweepAxis axis, const std::vector<double>& values, int n_seeds,
                               const ScenarioSpec& model, int horizon_steps, double threshold,
                               int window, int stride = 1);

struct PlateauRow {
    double value = 0.0;
    double median_plateau = 0.0;  // median over seeds of the late-time mean fidelity
};

// Mismatch sweep: plateau fidelity (mean over the trailing fraction of the
// run) as a function of the Hamiltonian scale factor.
std::vector<PlateauRow> sweep_lambda_plateau(const std::vector<double>& lambda_values,
                                             int n_seeds, const ScenarioSpec& model,
                                             int horizon_steps, double plateau_fraction = 0.25,
                                             int stride = 1);

// Tr[sqrt(rho) (A + <A>) rho_e (A + <A>) sqrt(rho)] with <A> = Tr[A rho];
// nonnegative up to round-off as a trace of a PSD congruence.
double overlap_growth_check(const DensityMatrix& rho, const DensityMatrix& rho_e,
                            const ComplexMatrix& a);

}  // namespace qfc
