// Feedback laws mapping the filter's state to a control Hamiltonian each
// step: oscillator damping, the two-qubit hysteresis laws, dispersive-readout
// qubit reset, and a generic bounded affine policy for policy search.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qfc/hilbert.hpp"

namespace qfc {

// Small list of named control values, clamped to the law's bounds.
struct ControlSignal {
    std::vector<double> values;
};

enum class FeedbackVariant {
    none,
    damping,
    two_qubit_sym,
    two_qubit_asym,
    qubit_reset,
    parametric_policy,
};

// F = -<x>_e p, to be added to the bare Hamiltonian of BOTH the measured
// system and the estimator.
ComplexMatrix damping_feedback(const DensityMatrix& rho_e, const ComplexMatrix& x_op,
                               const ComplexMatrix& p_op);

enum class TwoQubitTarget { symmetric, antisymmetric };

enum class HysteresisRegion {
    above_gamma,
    in_band_from_above,
    in_band_from_below,
    below_half_gamma,
};

struct HysteresisState {
    HysteresisRegion last_region = HysteresisRegion::below_half_gamma;
};

const char* to_string(HysteresisRegion r);

// Target projectors and the tensored sigma_y operators, built once.
class TwoQubitLaw {
  public:
    explicit TwoQubitLaw(TwoQubitTarget target, double gamma);

    // The three-regime law on the overlap Tr[rho rho_mu]:
    //   overlap >= gamma      : u1 = 1 - Tr[i[sy1,rho]rho_mu],
    //                           u2 = s - Tr[i[sy2,rho]rho_mu]
    //                           (s = +1 antisymmetric, -1 symmetric)
    //   overlap <= gamma/2    : (u1, u2) = (1, 0)
    //   band between          : regime-1 formula iff the band was last entered
    //                           through the gamma boundary, else (1, 0)
    std::pair<ControlSignal, HysteresisState> controls(const DensityMatrix& rho_e,
                                                       const HysteresisState& hstate) const;

    double overlap(const DensityMatrix& rho_e) const;
    const DensityMatrix& target_state() const { return target_state_; }
    const ComplexMatrix& sy1() const { return sy1_; }
    const ComplexMatrix& sy2() const { return sy2_; }
    double gamma() const { return gamma_; }

  private:
    TwoQubitTarget target_;
    double gamma_;
    double u2_base_;
    DensityMatrix target_state_;
    ComplexMatrix sy1_, sy2_;
};

// Convenience wrapper matching the law's free-function shape.
std::tuple<double, double, HysteresisState> two_qubit_controls(const DensityMatrix& rho_e,
                                                               TwoQubitTarget target,
                                                               double gamma,
                                                               const HysteresisState& hstate);

// Builds the symmetric/antisymmetric two-qubit target states.
DensityMatrix two_qubit_target_state(TwoQubitTarget target);

// When <sigma_z>_e < trigger the qubit is flipped with one instantaneous
// pi pulse (unitary sigma_x on the qubit factor); otherwise no action.
// sigma_z convention here is |g><g| - |e><e|, so excited means <sigma_z> -> -1.
std::optional<ComplexMatrix> reset_controller(const DensityMatrix& rho_e,
                                              const ComplexMatrix& sigma_z_full,
                                              const ComplexMatrix& pulse_op,
                                              double trigger = -0.9);

// Affine map obs -> controls followed by tanh squashing into the bounds:
// u_i = bound_i * tanh(W_i . obs + b_i). Weight layout per control i is
// [W_i (n_obs), b_i], controls concatenated.
struct PolicySpec {
    int n_obs = 0;
    std::vector<double> bounds;  // one per control

    int n_controls() const { return static_cast<int>(bounds.size()); }
    int n_weights() const { return n_controls() * (n_obs + 1); }
};

ControlSignal parametric_policy(const Eigen::VectorXd& obs, const Eigen::VectorXd& weights,
                                const PolicySpec& spec);

}  // namespace qfc
