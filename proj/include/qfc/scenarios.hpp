// Named builders for the physical systems the simulator supports, with
// reference parameters as defaults: driven qubit, harmonic and quartic
// oscillators, collectively measured qubit pair, dispersive qubit readout,
// Fock-projector-monitored cavity, and the double-well cat preparation.
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qfc/controllers.hpp"
#include "qfc/sme.hpp"

namespace qfc {

struct QubitParams {
    double epsilon = 0.1;  // bare splitting
    double delta = 1.0;    // tunneling rate
};

// Simulated in units of g (time in 1/g).
struct CqedParams {
    double g = 1.0;
    double detuning = 10.0;      // qubit-drive detuning, Delta
    double chi = 0.1;            // dispersive shift g^2/Delta
    double drive = 0.173;        // |Omega_c|
    double gamma = 1e-4;         // qubit decay
    double gamma_phi = 1e-4;     // qubit dephasing
    double kappa = 0.2;          // measurement rate of the cavity quadrature

    bool dispersive_regime() const { return detuning >= 5.0 * g; }
};

struct MeasurementChannel {
    ComplexMatrix projector;
    double rate = 0.0;
};

struct ScenarioSpec {
    std::string name;
    HilbertSpace space;
    ComplexMatrix h0;
    ComplexMatrix a;  // Hermitian measurement operator
    SmeConfig cfg;    // scenario defaults (seed filled in by the caller)
    DensityMatrix initial_true;
    DensityMatrix estimator_init;
    std::optional<DensityMatrix> target;

    // Control surface. control_hamiltonian maps a (clamped) signal to the
    // feedback term added to the Hamiltonian of truth and estimator alike.
    std::vector<std::string> control_names;
    std::vector<double> control_bounds;
    std::function<ComplexMatrix(const ControlSignal&)> control_hamiltonian;

    // Observation assembly for parametric policies (reads the filter state).
    int observation_dim = 0;
    std::function<Eigen::VectorXd(const DensityMatrix&)> observation;

    // Named helper operators ("x", "p", "num", "sz", "pulse", ...).
    std::map<std::string, ComplexMatrix> ops;

    // Independent projector channels; nonempty only for the multi-channel
    // photon-number scenario.
    std::vector<MeasurementChannel> channels;

    int default_est_steps = 0;
    int default_control_steps = 0;

    int n_controls() const { return static_cast<int>(control_names.size()); }
    bool multichannel() const { return !channels.empty(); }
};

// Known names: qubit, qho, quartic, two_qubit, cqed, fock_cavity, double_well.
// Overrides apply to declared scalar parameters only (unknown keys throw).
ScenarioSpec build_scenario(const std::string& name,
                            const std::map<std::string, double>& overrides = {});

std::vector<std::string> scenario_names();

// V = -alpha x^2 + beta x^4 on the truncated Fock basis, with a guard that
// the resulting low doublet stays confined away from the truncation edge.
ComplexMatrix double_well_potential(double alpha, double beta, int n);

ComplexMatrix jc_hamiltonian(const CqedParams& p, int n_cavity);
ComplexMatrix dispersive_hamiltonian(const CqedParams& p, int n_cavity);

// Ground state of a Hermitian Hamiltonian (lowest eigenvector).
DensityMatrix ground_state_of(const ComplexMatrix& h);

// One Euler step of the multi-channel projector SME:
// rho += -i[H,rho]dt + sum_n (kappa_n/2 D[P_n]rho dt + sqrt(kappa_n/2) H[P_n]rho dW_n),
// then hermitize/repair/renormalize. One independent dW per channel.
TrajectoryState multi_channel_step(const TrajectoryState& state,
                                   const std::vector<MeasurementChannel>& channels,
                                   const ComplexMatrix& h_total, const SmeConfig& cfg,
                                   const std::vector<double>& dw_vector);

}  // namespace qfc
