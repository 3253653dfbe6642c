#include "qfc/loop.hpp"

#include <cmath>
#include <deque>
#include <iostream>
#include <limits>

namespace qfc {

namespace {

constexpr double kBlank = std::numeric_limits<double>::quiet_NaN();

ControlSignal clamp_signal(ControlSignal u, const std::vector<double>& bounds) {
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        if (!std::isfinite(u.values[i])) throw ValidationError("control signal not finite");
        if (i < bounds.size()) u.values[i] = std::clamp(u.values[i], -bounds[i], bounds[i]);
    }
    return u;
}

// Extracts the ket of a pure target so per-step fidelity is a quadratic form.
ComplexVector target_ket(const DensityMatrix& target) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(target.mat);
    return es.eigenvectors().col(target.dim() - 1);
}

}  // namespace

LoopResult run_closed_loop(const ScenarioSpec& scenario, const LoopOptions& opt) {
    const SmeConfig& cfg = scenario.cfg;
    SmeStepper stepper(scenario.a, cfg);
    WienerStream noise(cfg.seed, opt.trajectory_index, cfg.dt);

    if (opt.law.delay_steps < 0) throw ValidationError("delay_steps must be >= 0");
    const bool controlled_run = opt.law.variant != FeedbackVariant::none &&
                                opt.stage != Stage::estimate_only;
    if (opt.truth_only &&
        (opt.est_init != EstimatorInit::matched && opt.est_init != EstimatorInit::scenario_default))
        throw ValidationError("truth_only requires matched initialization");
    if (opt.truth_only && opt.mismatch.lambda_scale != 1.0)
        throw ValidationError("truth_only is exact only without model mismatch");

    ComplexMatrix rho = (opt.rho0 ? *opt.rho0 : scenario.initial_true).mat;
    ComplexMatrix rho_e;
    switch (opt.est_init) {
        case EstimatorInit::matched: rho_e = rho; break;
        case EstimatorInit::mixed:
            rho_e = DensityMatrix::maximally_mixed(scenario.space.dim()).mat;
            break;
        case EstimatorInit::random: {
            std::mt19937_64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ull + opt.trajectory_index));
            rho_e = random_density_matrix(scenario.space.dim(), rng).mat;
            break;
        }
        case EstimatorInit::scenario_default:
            rho_e = opt.truth_only ? rho : scenario.estimator_init.mat;
            break;
    }
    const ComplexMatrix h_est_base = opt.mismatch.lambda_scale * scenario.h0;

    std::optional<TwoQubitLaw> tq_law;
    HysteresisState hstate;
    if (opt.law.variant == FeedbackVariant::two_qubit_sym ||
        opt.law.variant == FeedbackVariant::two_qubit_asym) {
        tq_law.emplace(opt.law.variant == FeedbackVariant::two_qubit_sym
                           ? TwoQubitTarget::symmetric
                           : TwoQubitTarget::antisymmetric,
                       opt.law.gamma);
        const double ov = tq_law->overlap(DensityMatrix::unchecked(rho_e));
        hstate.last_region = ov >= opt.law.gamma ? HysteresisRegion::above_gamma
                             : ov <= opt.law.gamma / 2.0
                                 ? HysteresisRegion::below_half_gamma
                                 : HysteresisRegion::in_band_from_below;
    }

    PolicySpec pspec;
    if (opt.law.variant == FeedbackVariant::parametric_policy) {
        pspec.n_obs = scenario.observation_dim;
        pspec.bounds = scenario.control_bounds;
        if (opt.law.policy_weights.size() != pspec.n_weights())
            throw DimensionError("run_closed_loop: policy weight length mismatch");
    }

    // Target used for the two-qubit law is the law's own projector; otherwise
    // the scenario target (pure in every scenario here).
    std::optional<ComplexVector> tket;
    if (tq_law)
        tket = target_ket(tq_law->target_state());
    else if (scenario.target)
        tket = target_ket(*scenario.target);

    const int n_controls = scenario.n_controls();
    LoopResult out;
    out.control_names = scenario.control_names;
    out.controls.resize(n_controls);
    for (const auto& [name, op] : opt.extra_observables) out.extra_names.push_back(name);
    out.extra.resize(opt.extra_observables.size());
    out.report.threshold = opt.threshold;
    out.report.window = opt.window;
    if (opt.keep_record) {
        out.record.kappa = cfg.kappa;
        out.record.eta = cfg.eta;
        out.record.dt = cfg.dt;
    }

    // Observation delay: ring of past filter states; with the state pushed at
    // the start of each step and capacity N_M + 1, the front is the state from
    // N_M steps ago (or the oldest available early on).
    std::deque<ComplexMatrix> delay_ring;
    auto delayed_est = [&]() -> const ComplexMatrix& {
        if (opt.law.delay_steps > 0 && !delay_ring.empty()) return delay_ring.front();
        return opt.truth_only ? rho : rho_e;
    };

    const int est_budget = opt.stage == Stage::closed_loop_from_t0 ? 0 : opt.est_steps;
    int run_of_good = 0;
    double run_start_t = 0.0;
    bool tf_fired = false;

    ControlSignal u_now;
    u_now.values.assign(static_cast<std::size_t>(n_controls), 0.0);

    double t = 0.0;
    double fid_target_acc = 0.0;
    int fid_target_count = 0;
    bool in_control_stage = opt.stage == Stage::closed_loop_from_t0;
    out.est_end_step = 0;

    auto fid_target_fast = [&](const ComplexMatrix& r) -> double {
        if (!tket) return kBlank;
        const double f = (tket->adjoint() * r * (*tket))(0).real();
        return std::clamp(f, 0.0, 1.0 + 1e-9);
    };

    auto sample = [&](double cur) {
        stepper.spectral_clean(rho);
        if (!opt.truth_only) stepper.spectral_clean(rho_e);
        const DensityMatrix dtruth = DensityMatrix::unchecked(rho);
        out.t.push_back(t);
        out.current.push_back(cur);
        out.exp_a_true.push_back(stepper.expect_a(rho));
        out.purity_true.push_back(purity(dtruth));
        out.fid_target_true.push_back(fid_target_fast(rho));
        if (opt.truth_only) {
            out.exp_a_est.push_back(out.exp_a_true.back());
            out.purity_est.push_back(out.purity_true.back());
            out.fid_truth_est.push_back(1.0);
        } else {
            const DensityMatrix dest = DensityMatrix::unchecked(rho_e);
            out.exp_a_est.push_back(stepper.expect_a(rho_e));
            out.purity_est.push_back(purity(dest));
            out.fid_truth_est.push_back(fidelity(dtruth, dest));
        }
        for (int c = 0; c < n_controls; ++c) out.controls[c].push_back(u_now.values[c]);
        for (std::size_t k = 0; k < opt.extra_observables.size(); ++k)
            out.extra[k].push_back(
                (opt.extra_observables[k].second.transpose().cwiseProduct(rho)).sum().real());
        out.max_top_two_population =
            std::max(out.max_top_two_population, top_two_population(dtruth));
    };

    const int total_steps =
        opt.stage == Stage::estimate_only
            ? opt.est_steps
            : (opt.stage == Stage::closed_loop_from_t0 ? 0 : opt.est_steps) + opt.control_steps;

    sample(kBlank);
    int step = 0;
    try {
        for (; step < total_steps; ++step) {
            if (opt.law.delay_steps > 0) {
                delay_ring.push_back(opt.truth_only ? rho : rho_e);
                if (static_cast<int>(delay_ring.size()) > opt.law.delay_steps + 1)
                    delay_ring.pop_front();
            }

            // Stage boundary: estimation ends at min(t_f, budget).
            if (!in_control_stage && opt.stage != Stage::estimate_only) {
                const bool budget_done = step >= est_budget;
                const bool tf_done = opt.end_estimation_at_tf && tf_fired;
                if (budget_done || tf_done) {
                    in_control_stage = true;
                    out.est_end_step = step;
                    out.est_end_t = t;
                    if (!tf_fired && opt.est_steps > 0)
                        std::cerr << "warning: estimation budget exhausted before convergence; "
                                     "starting control stage anyway\n";
                }
            }

            // Single-shot reset: once the estimation stage is over, flip the
            // qubit the first time the filter crosses the trigger.
            if (in_control_stage && !out.pulse_step &&
                opt.law.variant == FeedbackVariant::qubit_reset) {
                const DensityMatrix din = DensityMatrix::unchecked(delayed_est());
                auto pulse = reset_controller(din, scenario.ops.at("sz"),
                                              scenario.ops.at("pulse"), opt.law.trigger);
                if (pulse) {
                    rho = (*pulse * rho * pulse->adjoint()).eval();
                    if (!opt.truth_only) rho_e = (*pulse * rho_e * pulse->adjoint()).eval();
                    out.pulse_step = step;
                }
            }

            // Control evaluation (piecewise-constant over the step).
            ComplexMatrix h_feedback;
            bool have_feedback = false;
            if (controlled_run && in_control_stage &&
                opt.law.variant != FeedbackVariant::qubit_reset) {
                const ComplexMatrix& est_in = delayed_est();
                const DensityMatrix din = DensityMatrix::unchecked(est_in);
                switch (opt.law.variant) {
                    case FeedbackVariant::damping: {
                        const double mean_x = (scenario.ops.at("x").transpose()
                                                   .cwiseProduct(est_in)).sum().real();
                        u_now.values = {-mean_x};
                        break;
                    }
                    case FeedbackVariant::two_qubit_sym:
                    case FeedbackVariant::two_qubit_asym: {
                        const HysteresisRegion before = hstate.last_region;
                        auto [u, next] = tq_law->controls(din, hstate);
                        if (next.last_region != before)
                            out.transitions.push_back(
                                {step, t, before, next.last_region, tq_law->overlap(din)});
                        hstate = next;
                        u_now = u;
                        break;
                    }
                    case FeedbackVariant::parametric_policy: {
                        u_now = parametric_policy(scenario.observation(din),
                                                  opt.law.policy_weights, pspec);
                        break;
                    }
                    default:
                        break;
                }
                u_now = clamp_signal(u_now, scenario.control_bounds);
                if (scenario.control_hamiltonian) {
                    h_feedback = scenario.control_hamiltonian(u_now);
                    have_feedback = true;
                }
            }

            const double dw = noise.next();
            const double cur = sample_current(DensityMatrix::unchecked(rho), scenario.a, cfg, dw);
            if (opt.keep_record) {
                out.record.times.push_back(t);
                out.record.currents.push_back(cur);
            }

            const ComplexMatrix h_true = have_feedback ? (scenario.h0 + h_feedback).eval()
                                                       : scenario.h0;
            stepper.step(rho, h_true, dw);
            if (!opt.truth_only) {
                const ComplexMatrix h_est =
                    have_feedback ? (h_est_base + h_feedback).eval() : h_est_base;
                stepper.filter_step(rho_e, h_est, cur);
            }
            if ((step + 1) % kSpectralCadence == 0) {
                stepper.spectral_clean(rho);
                if (!opt.truth_only) stepper.spectral_clean(rho_e);
            }
            t = (step + 1) * cfg.dt;

            // Convergence detector runs during the estimation stage only.
            if (!in_control_stage && (step + 1) % opt.fid_stride == 0) {
                const double f = opt.truth_only
                                     ? 1.0
                                     : fidelity(DensityMatrix::unchecked(rho),
                                                DensityMatrix::unchecked(rho_e));
                out.report.fidelity_series.emplace_back(t, f);
                if (!tf_fired) {
                    if (f >= opt.threshold) {
                        if (run_of_good == 0) run_start_t = t;
                        if (++run_of_good >= opt.window) {
                            tf_fired = true;
                            out.report.t_f = run_start_t;
                        }
                    } else {
                        run_of_good = 0;
                    }
                }
            }

            if (in_control_stage && tket) {
                fid_target_acc += fid_target_fast(rho);
                ++fid_target_count;
            }

            if ((step + 1) % opt.stride == 0 || step + 1 == total_steps) sample(cur);
        }
    } catch (const PositivityError&) {
        out.aborted = true;
    }

    if (!in_control_stage) {
        out.est_end_step = step;
        out.est_end_t = t;
    }
    out.tf_reached = tf_fired;
    out.final_truth = DensityMatrix::unchecked(std::move(rho));
    out.final_est = opt.truth_only ? out.final_truth : DensityMatrix::unchecked(std::move(rho_e));
    out.mean_fid_target = fid_target_count ? fid_target_acc / fid_target_count : kBlank;
    out.final_fid_target = tket ? fid_target_fast(out.final_truth.mat) : kBlank;
    return out;
}

}  // namespace qfc
