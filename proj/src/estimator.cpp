#include "qfc/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qfc/parallel.hpp"

namespace qfc {

namespace {

constexpr double kBlank = std::numeric_limits<double>::quiet_NaN();

// Rolling detector for "F >= threshold held over `window` consecutive
// samples"; t_f is the time of the first sample of the qualifying run.
class ConvergenceDetector {
  public:
    ConvergenceDetector(double threshold, int window) : threshold_(threshold), window_(window) {}

    void feed(double t, double fid) {
        if (done()) return;
        if (fid >= threshold_) {
            if (run_ == 0) run_start_t_ = t;
            if (++run_ >= window_) t_f_ = run_start_t_;
        } else {
            run_ = 0;
        }
    }

    bool done() const { return t_f_.has_value(); }
    std::optional<double> t_f() const { return t_f_; }

  private:
    double threshold_;
    int window_;
    int run_ = 0;
    double run_start_t_ = 0.0;
    std::optional<double> t_f_;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return kBlank;
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

EstimatorState estimator_step(const EstimatorState& est, const ComplexMatrix& h_total_est,
                              const ComplexMatrix& a, const SmeConfig& cfg, double current) {
    SmeStepper stepper(a, cfg);
    EstimatorState out;
    out.rho_e = est.rho_e;
    stepper.filter_step(out.rho_e.mat, h_total_est, current);
    stepper.spectral_clean(out.rho_e.mat);
    out.t = est.t + cfg.dt;
    return out;
}

EstimationResult run_estimation(const MeasurementRecord& record, const ScenarioSpec& model,
                                const DensityMatrix& rho_e0, const MismatchSpec& mismatch,
                                double threshold, int window,
                                const std::vector<TrajectoryState>* truth_history, int stride) {
    if (record.size() == 0) throw ValidationError("run_estimation: empty record");
    if (rho_e0.dim() != model.space.dim())
        throw DimensionError("run_estimation: initial state does not match model dim");
    if (mismatch.lambda_scale <= 0)
        throw ValidationError("run_estimation: lambda_scale must be > 0");
    if (stride < 1) stride = 1;

    SmeConfig cfg = model.cfg;
    cfg.dt = record.dt > 0 ? record.dt : cfg.dt;
    if (record.kappa > 0) cfg.kappa = record.kappa;
    if (record.eta > 0) cfg.eta = record.eta;
    SmeStepper stepper(model.a, cfg);
    const ComplexMatrix h_est = mismatch.lambda_scale * model.h0;

    const int n_steps = static_cast<int>(record.size());
    EstimationResult out;
    out.report.threshold = threshold;
    out.report.window = window;
    ConvergenceDetector detector(threshold, window);

    ComplexMatrix rho_e = rho_e0.mat;
    double t = 0.0;
    auto sample = [&](int k) {
        stepper.spectral_clean(rho_e);
        const DensityMatrix cur = DensityMatrix::unchecked(rho_e);
        out.history.push_back({cur, t});
        out.series.t.push_back(t);
        out.series.exp_a_est.push_back(stepper.expect_a(rho_e));
        out.series.purity_est.push_back(purity(cur));
        if (truth_history && static_cast<std::size_t>(k) < truth_history->size()) {
            const auto& truth = (*truth_history)[k];
            const double f = fidelity(truth.rho, cur);
            out.series.fidelity.push_back(f);
            out.series.exp_a_true.push_back(stepper.expect_a(truth.rho.mat));
            out.series.purity_true.push_back(purity(truth.rho));
            out.report.fidelity_series.emplace_back(t, f);
            detector.feed(t, f);
        } else {
            out.series.fidelity.push_back(kBlank);
            out.series.exp_a_true.push_back(kBlank);
            out.series.purity_true.push_back(kBlank);
        }
    };

    sample(0);
    for (int k = 0; k < n_steps; ++k) {
        stepper.filter_step(rho_e, h_est, record.currents[k]);
        if ((k + 1) % kSpectralCadence == 0) stepper.spectral_clean(rho_e);
        t = (k + 1) * cfg.dt;
        if ((k + 1) % stride == 0 || k + 1 == n_steps) sample(k + 1);
    }
    out.report.t_f = detector.t_f();
    out.final_state = DensityMatrix::unchecked(rho_e);
    return out;
}

SimEstimateResult run_sim_and_estimate(const ScenarioSpec& model, const SimEstimateOptions& opt) {
    SmeConfig cfg = model.cfg;
    SmeStepper stepper(model.a, cfg);
    WienerStream noise(cfg.seed, opt.trajectory_index, cfg.dt);
    const ComplexMatrix h_est = opt.mismatch.lambda_scale * model.h0;

    ComplexMatrix rho = (opt.rho0 ? *opt.rho0 : model.initial_true).mat;
    ComplexMatrix rho_e = (opt.rho_e0 ? *opt.rho_e0 : model.estimator_init).mat;

    SimEstimateResult out;
    out.report.threshold = opt.threshold;
    out.report.window = opt.window;
    if (opt.keep_record) {
        out.record.kappa = cfg.kappa;
        out.record.eta = cfg.eta;
        out.record.dt = cfg.dt;
    }
    ConvergenceDetector detector(opt.threshold, opt.window);

    double t = 0.0;
    auto sample = [&] {
        stepper.spectral_clean(rho);
        stepper.spectral_clean(rho_e);
        const DensityMatrix dtruth = DensityMatrix::unchecked(rho);
        const DensityMatrix dest = DensityMatrix::unchecked(rho_e);
        const double f = fidelity(dtruth, dest);
        out.series.t.push_back(t);
        out.series.fidelity.push_back(f);
        out.series.exp_a_true.push_back(stepper.expect_a(rho));
        out.series.exp_a_est.push_back(stepper.expect_a(rho_e));
        out.series.purity_true.push_back(purity(dtruth));
        out.series.purity_est.push_back(purity(dest));
        out.report.fidelity_series.emplace_back(t, f);
        detector.feed(t, f);
        out.max_top_two_population =
            std::max(out.max_top_two_population, top_two_population(dtruth));
    };

    sample();
    for (int k = 0; k < opt.n_steps; ++k) {
        const double dw = noise.next();
        const double current =
            sample_current(DensityMatrix::unchecked(rho), model.a, cfg, dw);
        if (opt.keep_record) {
            out.record.times.push_back(t);
            out.record.currents.push_back(current);
        }
        stepper.step(rho, model.h0, dw);
        stepper.filter_step(rho_e, h_est, current);
        if ((k + 1) % kSpectralCadence == 0) {
            stepper.spectral_clean(rho);
            stepper.spectral_clean(rho_e);
        }
        t = (k + 1) * cfg.dt;
        if ((k + 1) % opt.stride == 0 || k + 1 == opt.n_steps) sample();
    }
    out.report.t_f = detector.t_f();
    out.final_truth = DensityMatrix::unchecked(std::move(rho));
    out.final_est = DensityMatrix::unchecked(std::move(rho_e));
    return out;
}

std::vector<SweepRow> sweep_tf(SweepAxis axis, const std::vector<double>& values, int n_seeds,
                               const ScenarioSpec& model, int horizon_steps, double threshold,
                               int window, int stride) {
    for (double v : values)
        if (v <= 0 || (axis == SweepAxis::eta && v > 1))
            throw ValidationError("sweep_tf: axis values out of range");

    std::vector<SweepRow> rows(values.size());
    const std::size_t total = values.size() * static_cast<std::size_t>(n_seeds);
    std::vector<std::optional<double>> tf(total);
    std::vector<double> horizon_time(values.size());

    std::vector<ScenarioSpec> specs;
    specs.reserve(values.size());
    for (double v : values) {
        ScenarioSpec s = model;
        if (axis == SweepAxis::eta)
            s.cfg.eta = v;
        else
            s.cfg.kappa = v;
        specs.push_back(std::move(s));
    }
    for (std::size_t vi = 0; vi < values.size(); ++vi)
        horizon_time[vi] = horizon_steps * specs[vi].cfg.dt;

    parallel_for(total, [&](std::size_t idx) {
        const std::size_t vi = idx / n_seeds;
        const std::uint64_t seed_index = idx % n_seeds;
        SimEstimateOptions opt;
        opt.n_steps = horizon_steps;
        opt.trajectory_index = seed_index;
        opt.threshold = threshold;
        opt.window = window;
        opt.stride = stride;
        tf[idx] = run_sim_and_estimate(specs[vi], opt).report.t_f;
    });

    for (std::size_t vi = 0; vi < values.size(); ++vi) {
        SweepRow& row = rows[vi];
        row.value = values[vi];
        std::vector<double> samples;
        for (int s = 0; s < n_seeds; ++s) {
            const auto& v = tf[vi * n_seeds + s];
            if (v) {
                samples.push_back(*v);
                ++row.n_converged;
            } else {
                samples.push_back(horizon_time[vi]);
                ++row.n_censored;
            }
        }
        row.median_tf = median(std::move(samples));
    }
    return rows;
}

std::vector<PlateauRow> sweep_lambda_plateau(const std::vector<double>& lambda_values,
                                             int n_seeds, const ScenarioSpec& model,
                                             int horizon_steps, double plateau_fraction,
                                             int stride) {
    for (double v : lambda_values)
        if (v <= 0) throw ValidationError("sweep_lambda_plateau: lambda_scale must be > 0");

    const std::size_t total = lambda_values.size() * static_cast<std::size_t>(n_seeds);
    std::vector<double> plateau(total);
    parallel_for(total, [&](std::size_t idx) {
        const std::size_t vi = idx / n_seeds;
        SimEstimateOptions opt;
        opt.n_steps = horizon_steps;
        opt.trajectory_index = idx % n_seeds;
        opt.stride = stride;
        opt.mismatch.lambda_scale = lambda_values[vi];
        const auto res = run_sim_and_estimate(model, opt);
        const std::size_t n = res.series.fidelity.size();
        const std::size_t tail = std::max<std::size_t>(1, static_cast<std::size_t>(n * plateau_fraction));
        double acc = 0.0;
        for (std::size_t k = n - tail; k < n; ++k) acc += res.series.fidelity[k];
        plateau[idx] = acc / tail;
    });

    std::vector<PlateauRow> rows(lambda_values.size());
    for (std::size_t vi = 0; vi < lambda_values.size(); ++vi) {
        rows[vi].value = lambda_values[vi];
        std::vector<double> vals(plateau.begin() + vi * n_seeds,
                                 plateau.begin() + (vi + 1) * n_seeds);
        rows[vi].median_plateau = median(std::move(vals));
    }
    return rows;
}

double overlap_growth_check(const DensityMatrix& rho, const DensityMatrix& rho_e,
                            const ComplexMatrix& a) {
    const double mean_a = expectation(a, rho).real();
    const ComplexMatrix shifted = a + mean_a * ComplexMatrix::Identity(a.rows(), a.cols());
    const ComplexMatrix s = psd_sqrt(rho.mat);
    return (s * shifted * rho_e.mat * shifted * s).trace().real();
}

}  // namespace qfc
