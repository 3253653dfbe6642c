// Euler-Maruyama integration of the conditioned stochastic master equation
// with diffusive (homodyne-style) measurement backaction, plus the noisy
// current synthesis and the deterministic/pure-state cross-check integrators.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "qfc/hilbert.hpp"

namespace qfc {

struct Dissipator {
    ComplexMatrix op;
    double rate = 0.0;
};

// Steps between periodic spectral-guard passes in the run loops.
inline constexpr int kSpectralCadence = 8;

struct SmeConfig {
    double kappa = 1.0;   // measurement rate
    double eta = 1.0;     // detector efficiency, in (0, 1]
    double dt = 1e-3;     // integrator step
    std::uint64_t seed = 0;
    std::vector<Dissipator> extra_dissipators;  // unmonitored channels
    double stability_guard = 0.05;              // warn when dt*kappa exceeds this
    // Eigenvalue clip tolerance for the periodic spectral guard; 0 selects
    // max(1e-3, 10 kappa dt).
    double psd_clip_tol = 0.0;

    void validate() const;  // throws ValidationError; warns on guard violation
    double clip_tolerance() const;
};

// Seeded Gaussian increment stream, dW ~ N(0, dt). Streams are derived from
// (master seed, trajectory index) so ensembles stay reproducible under any
// parallel schedule. `negate` yields the antithetic partner of a stream.
class WienerStream {
  public:
    WienerStream(std::uint64_t master_seed, std::uint64_t trajectory_index, double dt,
                 bool negate = false);

    double next();

  private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> gauss_;
    double sqrt_dt_;
    double sign_;
};

// Time series of measured currents I(t) together with the parameters that
// produced it; the only input the estimator needs besides the model.
struct MeasurementRecord {
    std::vector<double> times;
    std::vector<double> currents;
    double kappa = 0.0;
    double eta = 0.0;
    double dt = 0.0;

    std::size_t size() const { return currents.size(); }
};

struct TrajectoryState {
    DensityMatrix rho;
    double t = 0.0;
    MeasurementRecord record_so_far;  // left empty in history snapshots
};

// D[A]rho = A rho A† - (A†A rho + rho A†A)/2. Traceless for any inputs.
ComplexMatrix dissipator(const ComplexMatrix& a, const DensityMatrix& rho);

// H[A]rho = A rho + rho A† - rho Tr[A rho + rho A†]. Traceless by construction.
ComplexMatrix innovation_superop(const ComplexMatrix& a, const DensityMatrix& rho);

// I(t) = <A> + dW/(dt sqrt(4 kappa eta)). The dW passed here must be the same
// draw fed to the state update for the interval: record and backaction share
// one noise realization.
double sample_current(const DensityMatrix& rho, const ComplexMatrix& a, const SmeConfig& cfg,
                      double dw);

// Precomputed operator products for the inner loop. The truth update and the
// record-driven filter update share this so their arithmetic is identical term
// by term.
class SmeStepper {
  public:
    SmeStepper(ComplexMatrix a, const SmeConfig& cfg);

    // rho += (-i[H,rho] + kappa D[A]rho + sum_j gamma_j D[L_j]rho) dt
    //        + sqrt(kappa eta) H[A]rho dW, then hermitize/repair/renormalize.
    void step(ComplexMatrix& rho, const ComplexMatrix& h_total, double dw) const;

    // Same drift, with the innovation term 2 kappa eta (I - <A>) H[A]rho dt
    // in place of the noise term. Deterministic given the current.
    void filter_step(ComplexMatrix& rho, const ComplexMatrix& h_total, double current) const;

    // Drift only (unconditional master equation step).
    void lindblad_step(ComplexMatrix& rho, const ComplexMatrix& h_total) const;

    // Periodic spectral guard at the config's clip tolerance; run loops call
    // this every few steps and at sampling points.
    void spectral_clean(ComplexMatrix& rho) const { spectral_guard(rho, clip_tol_); }

    double expect_a(const ComplexMatrix& rho) const;
    const ComplexMatrix& a() const { return a_; }
    const SmeConfig& config() const { return cfg_; }

  private:
    ComplexMatrix drift(const ComplexMatrix& rho, const ComplexMatrix& h_total) const;
    void apply_euler(ComplexMatrix& rho, const ComplexMatrix& h_total, double meas_coeff) const;

    ComplexMatrix a_;
    ComplexMatrix adag_a_;
    SmeConfig cfg_;
    std::vector<std::pair<ComplexMatrix, ComplexMatrix>> lindblad_ops_;  // (L, rate L†L)
    double noise_gain_;  // sqrt(kappa eta)
    double clip_tol_;
};

// One conditioned step; convenience wrapper over SmeStepper for callers that
// hold loose state.
TrajectoryState sme_step(const TrajectoryState& state, const ComplexMatrix& h_total,
                         const ComplexMatrix& a, const SmeConfig& cfg, double dw);

// Hamiltonian supplier for time/control-dependent runs; evaluated once per
// step (controls are piecewise-constant over dt).
using HamiltonianFn = std::function<ComplexMatrix(double t, const DensityMatrix& rho)>;

struct TrajectoryResult {
    std::vector<TrajectoryState> history;  // sampled every `stride` steps, plus t=0
    MeasurementRecord record;
};

TrajectoryResult run_trajectory(const HamiltonianFn& h_fn, const ComplexMatrix& a,
                                const DensityMatrix& rho0, const SmeConfig& cfg, int n_steps,
                                std::uint64_t trajectory_index = 0, int stride = 1);

TrajectoryResult run_trajectory(const ComplexMatrix& h0, const ComplexMatrix& a,
                                const DensityMatrix& rho0, const SmeConfig& cfg, int n_steps,
                                std::uint64_t trajectory_index = 0, int stride = 1);

// Unconditional master-equation evolution with the same stepper, noise term
// dropped; the oracle the conditioned ensemble mean must reproduce.
struct LindbladResult {
    std::vector<TrajectoryState> history;
};
LindbladResult run_lindblad(const ComplexMatrix& h0, const ComplexMatrix& a,
                            const DensityMatrix& rho0, const SmeConfig& cfg, int n_steps,
                            int stride = 1);

// Mean <A>(t) over an ensemble of conditioned trajectories, sampled every
// `stride` steps (t=0 included). With `antithetic`, trajectory 2k+1 reuses the
// negated noise of trajectory 2k, halving the Monte-Carlo variance of the mean.
std::vector<double> ensemble_mean_expectation(const ComplexMatrix& h0, const ComplexMatrix& a,
                                              const DensityMatrix& rho0, const SmeConfig& cfg,
                                              int n_steps, int n_trajectories, int stride,
                                              bool antithetic = false);

// Pure-state unraveling d|psi> = {-iH dt - k(X-<X>)^2 dt + sqrt(2k)(X-<X>) dW}|psi>
// with k = kappa/2, renormalized each step. Valid for eta = 1 and no extra
// dissipators; used as a cross-check oracle against the density-matrix path.
struct SseResult {
    std::vector<double> times;
    std::vector<ComplexVector> states;
};
SseResult run_sse_trajectory(const ComplexMatrix& h0, const ComplexMatrix& x,
                             const ComplexVector& psi0, const SmeConfig& cfg, int n_steps,
                             std::uint64_t trajectory_index = 0, int stride = 1);

}  // namespace qfc
