#include "qfc/controllers.hpp"

#include <cmath>

namespace qfc {

ComplexMatrix damping_feedback(const DensityMatrix& rho_e, const ComplexMatrix& x_op,
                               const ComplexMatrix& p_op) {
    const double mean_x = expectation(x_op, rho_e).real();
    return -mean_x * p_op;
}

const char* to_string(HysteresisRegion r) {
    switch (r) {
        case HysteresisRegion::above_gamma: return "above_gamma";
        case HysteresisRegion::in_band_from_above: return "in_band_from_above";
        case HysteresisRegion::in_band_from_below: return "in_band_from_below";
        case HysteresisRegion::below_half_gamma: return "below_half_gamma";
    }
    return "?";
}

DensityMatrix two_qubit_target_state(TwoQubitTarget target) {
    // |up down> = index 1, |down up> = index 2 in the {|00>,|01>,|10>,|11>}
    // product ordering.
    ComplexVector psi = ComplexVector::Zero(4);
    psi(1) = 1.0;
    psi(2) = (target == TwoQubitTarget::symmetric) ? 1.0 : -1.0;
    return DensityMatrix::pure(psi);
}

TwoQubitLaw::TwoQubitLaw(TwoQubitTarget target, double gamma)
    : target_(target),
      gamma_(gamma),
      u2_base_(target == TwoQubitTarget::antisymmetric ? 1.0 : -1.0),
      target_state_(two_qubit_target_state(target)) {
    if (gamma <= 0.0 || gamma >= 1.0) throw ValidationError("TwoQubitLaw: need 0 < gamma < 1");
    const HilbertSpace space({2, 2});
    sy1_ = space.embed(pauli_y(), 0);
    sy2_ = space.embed(pauli_y(), 1);
}

double TwoQubitLaw::overlap(const DensityMatrix& rho_e) const {
    return (rho_e.mat * target_state_.mat).trace().real();
}

std::pair<ControlSignal, HysteresisState> TwoQubitLaw::controls(
    const DensityMatrix& rho_e, const HysteresisState& hstate) const {
    const double ov = overlap(rho_e);

    HysteresisState next = hstate;
    if (ov >= gamma_) {
        next.last_region = HysteresisRegion::above_gamma;
    } else if (ov <= gamma_ / 2.0) {
        next.last_region = HysteresisRegion::below_half_gamma;
    } else {
        switch (hstate.last_region) {
            case HysteresisRegion::above_gamma:
                next.last_region = HysteresisRegion::in_band_from_above;
                break;
            case HysteresisRegion::below_half_gamma:
                next.last_region = HysteresisRegion::in_band_from_below;
                break;
            default:
                break;  // already in the band: keep the entry side
        }
    }

    const bool use_gradient_form =
        next.last_region == HysteresisRegion::above_gamma ||
        next.last_region == HysteresisRegion::in_band_from_above;

    ControlSignal u;
    if (use_gradient_form) {
        const Complex i1(0, 1);
        const double t1 =
            (i1 * commutator(sy1_, rho_e.mat) * target_state_.mat).trace().real();
        const double t2 =
            (i1 * commutator(sy2_, rho_e.mat) * target_state_.mat).trace().real();
        u.values = {1.0 - t1, u2_base_ - t2};
    } else {
        u.values = {1.0, 0.0};
    }
    return {u, next};
}

std::tuple<double, double, HysteresisState> two_qubit_controls(const DensityMatrix& rho_e,
                                                               TwoQubitTarget target,
                                                               double gamma,
                                                               const HysteresisState& hstate) {
    TwoQubitLaw law(target, gamma);
    auto [u, next] = law.controls(rho_e, hstate);
    return {u.values[0], u.values[1], next};
}

std::optional<ComplexMatrix> reset_controller(const DensityMatrix& rho_e,
                                              const ComplexMatrix& sigma_z_full,
                                              const ComplexMatrix& pulse_op,
                                              double trigger) {
    const double mean_sz = expectation(sigma_z_full, rho_e).real();
    if (mean_sz < trigger) return pulse_op;
    return std::nullopt;
}

ControlSignal parametric_policy(const Eigen::VectorXd& obs, const Eigen::VectorXd& weights,
                                const PolicySpec& spec) {
    if (obs.size() != spec.n_obs)
        throw DimensionError("parametric_policy: observation length mismatch");
    if (weights.size() != spec.n_weights())
        throw DimensionError("parametric_policy: weight length mismatch");
    ControlSignal out;
    out.values.resize(spec.n_controls());
    const int stride = spec.n_obs + 1;
    for (int i = 0; i < spec.n_controls(); ++i) {
        const double lin =
            weights.segment(i * stride, spec.n_obs).dot(obs) + weights(i * stride + spec.n_obs);
        out.values[i] = spec.bounds[i] * std::tanh(lin);
    }
    return out;
}

}  // namespace qfc
