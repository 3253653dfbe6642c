#include "qfc/sme.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "qfc/parallel.hpp"

namespace qfc {

namespace {

// Trajectory-level parallelism owns the cores; BLAS must not oversubscribe.
struct BlasSingleThreadGuard {
    BlasSingleThreadGuard() {
        setenv("OPENBLAS_NUM_THREADS", "1", 0);
        setenv("OMP_NUM_THREADS", "1", 0);
    }
} blas_guard;

}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("QFC_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) hw = static_cast<unsigned>(v);
    }
    if (hw == 0) hw = 1;
    const std::size_t n_workers = std::min<std::size_t>(hw, n);
    if (n_workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

void SmeConfig::validate() const {
    if (kappa <= 0) throw ValidationError("SmeConfig: kappa must be > 0");
    if (eta <= 0 || eta > 1) throw ValidationError("SmeConfig: eta must be in (0, 1]");
    if (dt <= 0) throw ValidationError("SmeConfig: dt must be > 0");
    for (const auto& d : extra_dissipators) {
        if (d.rate < 0) throw ValidationError("SmeConfig: dissipator rate must be >= 0");
        if (d.op.rows() != d.op.cols()) throw ValidationError("SmeConfig: dissipator not square");
    }
    if (dt * kappa > stability_guard)
        std::cerr << "warning: dt*kappa = " << dt * kappa << " exceeds stability guard "
                  << stability_guard << "\n";
}

double SmeConfig::clip_tolerance() const {
    return psd_clip_tol > 0 ? psd_clip_tol : std::max(1e-3, 10.0 * kappa * dt);
}

WienerStream::WienerStream(std::uint64_t master_seed, std::uint64_t trajectory_index, double dt,
                           bool negate)
    : sqrt_dt_(std::sqrt(dt)), sign_(negate ? -1.0 : 1.0) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(trajectory_index),
                      static_cast<std::uint32_t>(trajectory_index >> 32)};
    rng_.seed(seq);
}

double WienerStream::next() {
    return sign_ * sqrt_dt_ * gauss_(rng_);
}

namespace {

void require_match(const ComplexMatrix& a, const DensityMatrix& rho, const char* who) {
    if (a.rows() != a.cols() || a.rows() != rho.mat.rows())
        throw DimensionError(std::string(who) + ": operator/state dimension mismatch");
}

}  // namespace

ComplexMatrix dissipator(const ComplexMatrix& a, const DensityMatrix& rho) {
    require_match(a, rho, "dissipator");
    const ComplexMatrix adag_a = a.adjoint() * a;
    return a * rho.mat * a.adjoint() - 0.5 * (adag_a * rho.mat + rho.mat * adag_a);
}

ComplexMatrix innovation_superop(const ComplexMatrix& a, const DensityMatrix& rho) {
    require_match(a, rho, "innovation_superop");
    ComplexMatrix out = a * rho.mat + rho.mat * a.adjoint();
    out -= out.trace() * rho.mat;
    return out;
}

double sample_current(const DensityMatrix& rho, const ComplexMatrix& a, const SmeConfig& cfg,
                      double dw) {
    require_match(a, rho, "sample_current");
    const double mean = expectation(a, rho).real();
    return mean + dw / (cfg.dt * std::sqrt(4.0 * cfg.kappa * cfg.eta));
}

SmeStepper::SmeStepper(ComplexMatrix a, const SmeConfig& cfg)
    : a_(std::move(a)),
      cfg_(cfg),
      noise_gain_(std::sqrt(cfg.kappa * cfg.eta)),
      clip_tol_(cfg.clip_tolerance()) {
    cfg_.validate();
    if (a_.rows() != a_.cols()) throw DimensionError("SmeStepper: A must be square");
    if (!is_hermitian(a_, 1e-9))
        throw ValidationError("SmeStepper: measurement operator must be Hermitian");
    adag_a_ = a_.adjoint() * a_;
    for (const auto& d : cfg_.extra_dissipators) {
        if (d.op.rows() != a_.rows())
            throw DimensionError("SmeStepper: dissipator dimension mismatch");
        lindblad_ops_.emplace_back(d.op, d.rate * (d.op.adjoint() * d.op).eval());
    }
}

double SmeStepper::expect_a(const ComplexMatrix& rho) const {
    return (a_.transpose().cwiseProduct(rho)).sum().real();
}

// Shared Euler increment. Exploits Hermiticity of H, A and rho: every
// right-product is the adjoint of a computed left-product. `meas_coeff`
// multiplies H[A]rho (noise for the truth, innovation gain for the filter;
// zero for the unconditional equation).
ComplexMatrix SmeStepper::drift(const ComplexMatrix& rho, const ComplexMatrix& h_total) const {
    const Complex mi(0, -1);
    const ComplexMatrix h_rho = h_total * rho;
    const ComplexMatrix a_rho = a_ * rho;
    const ComplexMatrix aa_rho = a_ * a_rho;
    ComplexMatrix out = mi * (h_rho - h_rho.adjoint());
    out.noalias() += cfg_.kappa * (a_rho * a_);
    out -= (0.5 * cfg_.kappa) * (aa_rho + aa_rho.adjoint());
    for (std::size_t j = 0; j < lindblad_ops_.size(); ++j) {
        const auto& [l, rate_ldag_l] = lindblad_ops_[j];
        const ComplexMatrix l_rho = l * rho;
        const ComplexMatrix ll_rho = rate_ldag_l * rho;
        out.noalias() += cfg_.extra_dissipators[j].rate * (l_rho * l.adjoint());
        out -= 0.5 * (ll_rho + ll_rho.adjoint());
    }
    return out;
}

void SmeStepper::apply_euler(ComplexMatrix& rho, const ComplexMatrix& h_total,
                             double meas_coeff) const {
    const Complex mi(0, -1);
    const ComplexMatrix h_rho = h_total * rho;
    const ComplexMatrix a_rho = a_ * rho;
    const ComplexMatrix aa_rho = a_ * a_rho;
    ComplexMatrix delta = (mi * cfg_.dt) * (h_rho - h_rho.adjoint());
    delta.noalias() += (cfg_.kappa * cfg_.dt) * (a_rho * a_);
    delta -= (0.5 * cfg_.kappa * cfg_.dt) * (aa_rho + aa_rho.adjoint());
    for (std::size_t j = 0; j < lindblad_ops_.size(); ++j) {
        const auto& [l, rate_ldag_l] = lindblad_ops_[j];
        const ComplexMatrix l_rho = l * rho;
        const ComplexMatrix ll_rho = rate_ldag_l * rho;
        delta.noalias() += (cfg_.extra_dissipators[j].rate * cfg_.dt) * (l_rho * l.adjoint());
        delta -= (0.5 * cfg_.dt) * (ll_rho + ll_rho.adjoint());
    }
    if (meas_coeff != 0.0) {
        ComplexMatrix diff = a_rho + a_rho.adjoint();
        diff -= diff.trace() * rho;
        delta += meas_coeff * diff;
    }
    rho += delta;
    repair_state(rho);
}

void SmeStepper::step(ComplexMatrix& rho, const ComplexMatrix& h_total, double dw) const {
    apply_euler(rho, h_total, noise_gain_ * dw);
}

void SmeStepper::filter_step(ComplexMatrix& rho, const ComplexMatrix& h_total,
                             double current) const {
    const double gain = 2.0 * cfg_.kappa * cfg_.eta * (current - expect_a(rho)) * cfg_.dt;
    apply_euler(rho, h_total, gain);
}

void SmeStepper::lindblad_step(ComplexMatrix& rho, const ComplexMatrix& h_total) const {
    rho += drift(rho, h_total) * cfg_.dt;
    rho = hermitize(rho);
    rho /= rho.trace().real();
}

TrajectoryState sme_step(const TrajectoryState& state, const ComplexMatrix& h_total,
                         const ComplexMatrix& a, const SmeConfig& cfg, double dw) {
    SmeStepper stepper(a, cfg);
    TrajectoryState out;
    out.rho = state.rho;
    stepper.step(out.rho.mat, h_total, dw);
    stepper.spectral_clean(out.rho.mat);
    out.t = state.t + cfg.dt;
    out.record_so_far = state.record_so_far;
    return out;
}

TrajectoryResult run_trajectory(const HamiltonianFn& h_fn, const ComplexMatrix& a,
                                const DensityMatrix& rho0, const SmeConfig& cfg, int n_steps,
                                std::uint64_t trajectory_index, int stride) {
    if (n_steps < 1) throw ValidationError("run_trajectory: n_steps must be >= 1");
    if (stride < 1) stride = 1;
    SmeStepper stepper(a, cfg);
    WienerStream noise(cfg.seed, trajectory_index, cfg.dt);

    TrajectoryResult out;
    out.record.kappa = cfg.kappa;
    out.record.eta = cfg.eta;
    out.record.dt = cfg.dt;
    out.record.times.reserve(n_steps);
    out.record.currents.reserve(n_steps);
    out.history.reserve(static_cast<std::size_t>(n_steps / stride) + 2);

    DensityMatrix rho = rho0;
    double t = 0.0;
    out.history.push_back({rho, t, {}});
    for (int k = 0; k < n_steps; ++k) {
        const ComplexMatrix h = h_fn(t, rho);
        const double dw = noise.next();
        out.record.times.push_back(t);
        out.record.currents.push_back(sample_current(rho, a, cfg, dw));
        stepper.step(rho.mat, h, dw);
        if ((k + 1) % kSpectralCadence == 0) stepper.spectral_clean(rho.mat);
        t = (k + 1) * cfg.dt;
        if ((k + 1) % stride == 0 || k + 1 == n_steps)
            out.history.push_back({rho, t, {}});
    }
    out.history.back().record_so_far = out.record;
    return out;
}

TrajectoryResult run_trajectory(const ComplexMatrix& h0, const ComplexMatrix& a,
                                const DensityMatrix& rho0, const SmeConfig& cfg, int n_steps,
                                std::uint64_t trajectory_index, int stride) {
    return run_trajectory([&h0](double, const DensityMatrix&) { return h0; }, a, rho0, cfg,
                          n_steps, trajectory_index, stride);
}

LindbladResult run_lindblad(const ComplexMatrix& h0, const ComplexMatrix& a,
                            const DensityMatrix& rho0, const SmeConfig& cfg, int n_steps,
                            int stride) {
    if (stride < 1) stride = 1;
    SmeStepper stepper(a, cfg);
    LindbladResult out;
    DensityMatrix rho = rho0;
    double t = 0.0;
    out.history.push_back({rho, t, {}});
    for (int k = 0; k < n_steps; ++k) {
        stepper.lindblad_step(rho.mat, h0);
        t = (k + 1) * cfg.dt;
        if ((k + 1) % stride == 0 || k + 1 == n_steps)
            out.history.push_back({rho, t, {}});
    }
    return out;
}

std::vector<double> ensemble_mean_expectation(const ComplexMatrix& h0, const ComplexMatrix& a,
                                              const DensityMatrix& rho0, const SmeConfig& cfg,
                                              int n_steps, int n_trajectories, int stride,
                                              bool antithetic) {
    if (stride < 1) stride = 1;
    const std::size_t n_samples = static_cast<std::size_t>(n_steps / stride) + 1;
    std::vector<std::vector<double>> per_traj(n_trajectories);

    parallel_for(static_cast<std::size_t>(n_trajectories), [&](std::size_t i) {
        SmeStepper stepper(a, cfg);
        const std::uint64_t stream_index = antithetic ? i / 2 : i;
        const bool negate = antithetic && (i % 2 == 1);
        WienerStream noise(cfg.seed, stream_index, cfg.dt, negate);
        ComplexMatrix rho = rho0.mat;
        std::vector<double> series;
        series.reserve(n_samples);
        series.push_back(stepper.expect_a(rho));
        for (int k = 0; k < n_steps; ++k) {
            stepper.step(rho, h0, noise.next());
            if ((k + 1) % kSpectralCadence == 0) stepper.spectral_clean(rho);
            if ((k + 1) % stride == 0) series.push_back(stepper.expect_a(rho));
        }
        per_traj[i] = std::move(series);
    });

    std::vector<double> mean(per_traj[0].size(), 0.0);
    for (const auto& series : per_traj)
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += series[k];
    for (double& v : mean) v /= n_trajectories;
    return mean;
}

SseResult run_sse_trajectory(const ComplexMatrix& h0, const ComplexMatrix& x,
                             const ComplexVector& psi0, const SmeConfig& cfg, int n_steps,
                             std::uint64_t trajectory_index, int stride) {
    cfg.validate();
    if (stride < 1) stride = 1;
    if (!cfg.extra_dissipators.empty())
        throw ValidationError("run_sse_trajectory: no extra dissipators allowed");
    if (std::abs(cfg.eta - 1.0) > 1e-12)
        throw ValidationError("run_sse_trajectory: requires eta = 1");
    const double k_meas = cfg.kappa / 2.0;
    const Complex mi(0, -1);
    WienerStream noise(cfg.seed, trajectory_index, cfg.dt);

    SseResult out;
    ComplexVector psi = psi0 / psi0.norm();
    out.times.push_back(0.0);
    out.states.push_back(psi);
    for (int n = 0; n < n_steps; ++n) {
        const double dw = noise.next();
        const double mean_x = (psi.adjoint() * x * psi)(0).real();
        const ComplexVector shifted = x * psi - mean_x * psi;  // (X - <X>)|psi>
        const ComplexVector shifted2 = x * shifted - mean_x * shifted;
        psi += mi * cfg.dt * (h0 * psi) - k_meas * cfg.dt * shifted2 +
               std::sqrt(2.0 * k_meas) * dw * shifted;
        psi /= psi.norm();
        if ((n + 1) % stride == 0 || n + 1 == n_steps) {
            out.times.push_back((n + 1) * cfg.dt);
            out.states.push_back(psi);
        }
    }
    return out;
}

}  // namespace qfc
