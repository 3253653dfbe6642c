#include "qfc/cli_commands.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "qfc/estimator.hpp"
#include "qfc/io.hpp"
#include "qfc/loop.hpp"
#include "qfc/parallel.hpp"
#include "qfc/policy_search.hpp"
#include "qfc/svg.hpp"

namespace qfc::cli {

namespace {

namespace fs = std::filesystem;
constexpr double kBlank = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

ScenarioSpec scenario_from(const Settings& s) {
    const std::string name = s.get_str("scenario.name", "qubit");
    ScenarioSpec scen = build_scenario(name, s.scenario_overrides());
    scen.cfg.seed = s.get_u64("run.seed", 0);
    return scen;
}

FeedbackVariant law_from(const Settings& s, const ScenarioSpec& scen) {
    const std::string law = s.get_str("control.law", "auto");
    if (law == "none") return FeedbackVariant::none;
    if (law == "damping") return FeedbackVariant::damping;
    if (law == "two_qubit_sym") return FeedbackVariant::two_qubit_sym;
    if (law == "two_qubit_asym") return FeedbackVariant::two_qubit_asym;
    if (law == "qubit_reset") return FeedbackVariant::qubit_reset;
    if (law == "parametric_policy") return FeedbackVariant::parametric_policy;
    if (law == "auto") {
        if (scen.name == "qho" || scen.name == "quartic") return FeedbackVariant::damping;
        if (scen.name == "two_qubit") return FeedbackVariant::two_qubit_asym;
        if (scen.name == "cqed") return FeedbackVariant::qubit_reset;
        if (scen.name == "double_well") return FeedbackVariant::parametric_policy;
        return FeedbackVariant::none;
    }
    throw ValidationError("unknown control.law '" + law + "'");
}

EstimatorInit estimator_init_from(const Settings& s) {
    const std::string v = s.get_str("estimator.init", "default");
    if (v == "default") return EstimatorInit::scenario_default;
    if (v == "matched") return EstimatorInit::matched;
    if (v == "mixed") return EstimatorInit::mixed;
    if (v == "random") return EstimatorInit::random;
    throw ValidationError("unknown estimator.init '" + v + "'");
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create output directory: " + dir);
}

void plot_from_csv(const std::string& csv_path, const std::string& svg_path,
                   const std::string& title, const std::string& xcol,
                   const std::vector<std::string>& ycols, const std::string& ylabel) {
    const io::Table table = io::read_table_csv(csv_path);
    std::vector<svg::Series> series;
    for (const auto& yc : ycols) {
        svg::Series s;
        s.name = yc;
        s.x = table.col(xcol);
        s.y = table.col(yc);
        series.push_back(std::move(s));
    }
    svg::write_line_chart(svg_path, title, xcol, ylabel, series);
}

io::Table loop_result_table(const LoopResult& res) {
    io::Table t;
    t.columns = {"t",
                 "current",
                 "expA_true",
                 "expA_est",
                 "fidelity_to_truth",
                 "fidelity_to_target",
                 "purity_true",
                 "purity_est"};
    t.data = {res.t,          res.current,        res.exp_a_true,  res.exp_a_est,
              res.fid_truth_est, res.fid_target_true, res.purity_true, res.purity_est};
    for (std::size_t c = 0; c < res.controls.size(); ++c) {
        t.columns.push_back(res.control_names[c]);
        t.data.push_back(res.controls[c]);
    }
    for (std::size_t c = 0; c < res.extra.size(); ++c) {
        t.columns.push_back(res.extra_names[c]);
        t.data.push_back(res.extra[c]);
    }
    return t;
}

int fail(const std::string& what) {
    std::cerr << "error: " << what << "\n";
    return 1;
}

}  // namespace

std::string Settings::get_str(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double Settings::get_num(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const std::string& s = it->second;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ValidationError("setting '" + key + "': bad number '" + s + "'");
    return v;
}

int Settings::get_int(const std::string& key, int fallback) const {
    return static_cast<int>(std::llround(get_num(key, fallback)));
}

std::uint64_t Settings::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::uint64_t v = 0;
    const std::string& s = it->second;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ValidationError("setting '" + key + "': bad unsigned integer '" + s + "'");
    return v;
}

std::vector<double> Settings::get_list(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return {};
    std::vector<double> out;
    std::istringstream ss(it->second);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell = trim(cell);
        if (cell.empty()) continue;
        double v = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc{})
            throw ValidationError("setting '" + key + "': bad list entry '" + cell + "'");
        out.push_back(v);
    }
    return out;
}

std::map<std::string, double> Settings::scenario_overrides() const {
    std::map<std::string, double> out;
    for (const auto& [key, value] : kv_) {
        if (!key.starts_with("scenario.") || key == "scenario.name") continue;
        out[key.substr(9)] = get_num(key, 0.0);
    }
    return out;
}

Settings load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open config file: " + path);
    Settings s;
    std::string line, section;
    while (std::getline(f, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config: expected key = value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ValidationError("config: empty key");
        s.set(section.empty() ? key : section + "." + key, value);
    }
    return s;
}

void apply_set_pairs(Settings& s, const std::vector<std::string>& pairs) {
    for (const auto& pair : pairs) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos)
            throw ValidationError("--set expects key=value, got '" + pair + "'");
        s.set(trim(pair.substr(0, eq)), trim(pair.substr(eq + 1)));
    }
}

int cmd_simulate(const Settings& s, const std::string& out_dir) {
    try {
        ensure_dir(out_dir);
        const ScenarioSpec scen = scenario_from(s);
        if (scen.multichannel())
            throw ValidationError(
                "scenario '" + scen.name +
                "' is multi-channel; the single-record CLI pipeline does not apply");
        const int n_steps = s.get_int("run.steps", scen.default_est_steps);
        const int stride = s.get_int("run.stride", 1);
        const int ensemble = s.get_int("run.ensemble", 1);
        const std::uint64_t traj = s.get_u64("run.trajectory_index", 0);

        const TrajectoryResult res =
            run_trajectory(scen.h0, scen.a, scen.initial_true, scen.cfg, n_steps, traj, stride);
        io::write_record_csv(out_dir + "/record.csv", res.record);

        io::Table truth;
        truth.columns = {"t", "expA_true", "purity_true"};
        truth.data.assign(3, {});
        for (const auto& st : res.history) {
            truth.data[0].push_back(st.t);
            truth.data[1].push_back(expectation(scen.a, st.rho).real());
            truth.data[2].push_back(purity(st.rho));
        }
        io::write_table_csv(out_dir + "/truth.csv", truth);

        std::vector<std::pair<std::string, std::string>> summary = {
            {"scenario", scen.name},
            {"steps", std::to_string(n_steps)},
            {"seed", std::to_string(scen.cfg.seed)},
            {"final_expA_true", io::format_double(truth.data[1].back())},
            {"final_purity_true", io::format_double(truth.data[2].back())},
        };

        if (ensemble > 1) {
            const int mean_stride = s.get_int("run.mean_stride", std::max(1, n_steps / 50));
            const bool antithetic = s.get_int("run.antithetic", 1) != 0;
            const std::vector<double> mean = ensemble_mean_expectation(
                scen.h0, scen.a, scen.initial_true, scen.cfg, n_steps, ensemble, mean_stride,
                antithetic);
            const LindbladResult oracle =
                run_lindblad(scen.h0, scen.a, scen.initial_true, scen.cfg, n_steps, mean_stride);
            io::Table tab;
            tab.columns = {"t", "mean_expA", "lindblad_expA", "abs_dev"};
            tab.data.assign(4, {});
            double max_dev = 0.0;
            for (std::size_t k = 0; k < mean.size(); ++k) {
                const double ora = expectation(scen.a, oracle.history[k].rho).real();
                const double dev = std::abs(mean[k] - ora);
                max_dev = std::max(max_dev, dev);
                tab.data[0].push_back(oracle.history[k].t);
                tab.data[1].push_back(mean[k]);
                tab.data[2].push_back(ora);
                tab.data[3].push_back(dev);
            }
            io::write_table_csv(out_dir + "/ensemble_mean.csv", tab);
            summary.emplace_back("ensemble", std::to_string(ensemble));
            summary.emplace_back("max_abs_dev_vs_lindblad", io::format_double(max_dev));
            plot_from_csv(out_dir + "/ensemble_mean.csv", out_dir + "/ensemble_mean.svg",
                          "Conditioned ensemble mean vs unconditional solution", "t",
                          {"mean_expA", "lindblad_expA"}, "<A>");
        }
        io::write_summary(out_dir + "/summary.txt", summary);
        plot_from_csv(out_dir + "/truth.csv", out_dir + "/truth.svg",
                      "Measured-system trajectory (" + scen.name + ")", "t",
                      {"expA_true", "purity_true"}, "value");
        return 0;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

int cmd_estimate(const Settings& s, const std::string& record_path, const std::string& out_dir) {
    try {
        ensure_dir(out_dir);
        const ScenarioSpec scen = scenario_from(s);
        if (scen.multichannel())
            throw ValidationError("multi-channel scenarios are not supported by `estimate`");
        const MeasurementRecord record = io::read_record_csv(record_path);
        if (record.size() == 0) throw ValidationError("record is empty: " + record_path);

        SmeConfig cfg = scen.cfg;
        if (record.dt > 0) cfg.dt = record.dt;
        if (record.kappa > 0) cfg.kappa = record.kappa;
        if (record.eta > 0) cfg.eta = record.eta;

        MismatchSpec mismatch;
        mismatch.lambda_scale = s.get_num("estimator.lambda_scale", 1.0);
        const double threshold = s.get_num("estimator.threshold", 0.99);
        const int window = s.get_int("estimator.window", 50);
        const int stride = s.get_int("run.stride", 1);
        const EstimatorInit init = estimator_init_from(s);
        const bool with_truth = s.get_int("estimator.with_truth", init == EstimatorInit::matched) != 0;

        DensityMatrix rho_e0 = scen.estimator_init;
        if (init == EstimatorInit::mixed) rho_e0 = DensityMatrix::maximally_mixed(scen.space.dim());
        if (init == EstimatorInit::matched) rho_e0 = scen.initial_true;
        if (init == EstimatorInit::random) {
            std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
            rho_e0 = random_density_matrix(scen.space.dim(), rng);
        }

        // Simulation mode: regenerate the measured system from (scenario,
        // seed) alongside the replay so fidelity against the truth and the
        // matched-initialization deviation can be reported.
        const std::uint64_t traj = s.get_u64("run.trajectory_index", 0);
        SmeStepper stepper(scen.a, cfg);
        std::optional<WienerStream> truth_noise;
        ComplexMatrix rho_truth;
        if (with_truth) {
            truth_noise.emplace(cfg.seed, traj, cfg.dt);
            rho_truth = scen.initial_true.mat;
        }

        const ComplexMatrix h_est = mismatch.lambda_scale * scen.h0;
        ComplexMatrix rho_e = rho_e0.mat;
        const int n_steps = static_cast<int>(record.size());

        io::Table tab;
        tab.columns = {"t", "fidelity", "expA_true", "expA_est", "purity_est"};
        tab.data.assign(5, {});
        double max_abs_dev = 0.0;
        std::optional<double> t_f;
        int run_good = 0;
        double run_start = 0.0;
        double t = 0.0;

        auto sample = [&] {
            double fid = kBlank, exp_true = kBlank;
            if (with_truth) {
                fid = fidelity(DensityMatrix::unchecked(rho_truth),
                               DensityMatrix::unchecked(rho_e));
                exp_true = stepper.expect_a(rho_truth);
            }
            tab.data[0].push_back(t);
            tab.data[1].push_back(fid);
            tab.data[2].push_back(exp_true);
            tab.data[3].push_back(stepper.expect_a(rho_e));
            tab.data[4].push_back(purity(DensityMatrix::unchecked(rho_e)));
        };

        sample();
        for (int k = 0; k < n_steps; ++k) {
            stepper.filter_step(rho_e, h_est, record.currents[k]);
            if (with_truth) {
                stepper.step(rho_truth, scen.h0, truth_noise->next());
                const double dev = (rho_truth - rho_e).cwiseAbs().maxCoeff();
                max_abs_dev = std::max(max_abs_dev, dev);
                const double fid = fidelity(DensityMatrix::unchecked(rho_truth),
                                            DensityMatrix::unchecked(rho_e));
                if (!t_f) {
                    if (fid >= threshold) {
                        if (run_good == 0) run_start = (k + 1) * cfg.dt;
                        if (++run_good >= window) t_f = run_start;
                    } else {
                        run_good = 0;
                    }
                }
            }
            t = (k + 1) * cfg.dt;
            if ((k + 1) % stride == 0 || k + 1 == n_steps) sample();
        }

        io::write_table_csv(out_dir + "/estimate.csv", tab);
        std::vector<std::pair<std::string, std::string>> summary = {
            {"scenario", scen.name},
            {"record_rows", std::to_string(n_steps)},
            {"lambda_scale", io::format_double(mismatch.lambda_scale)},
            {"t_f", t_f ? io::format_double(*t_f) : "none"},
            {"final_purity_est", io::format_double(tab.data[4].back())},
        };
        if (with_truth) {
            summary.emplace_back("final_fidelity", io::format_double(tab.data[1].back()));
            if (init == EstimatorInit::matched)
                summary.emplace_back("max_abs_dev", io::format_double(max_abs_dev));
        }
        io::write_summary(out_dir + "/summary.txt", summary);
        plot_from_csv(out_dir + "/estimate.csv", out_dir + "/estimate.svg",
                      "Record-driven state estimation (" + scen.name + ")", "t",
                      with_truth ? std::vector<std::string>{"fidelity", "expA_true", "expA_est"}
                                 : std::vector<std::string>{"expA_est", "purity_est"},
                      "value");
        return 0;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

int cmd_control(const Settings& s, const std::string& out_dir) {
    try {
        ensure_dir(out_dir);
        const ScenarioSpec scen = scenario_from(s);
        if (scen.multichannel())
            throw ValidationError("multi-channel scenarios are not supported by `control`");

        LoopOptions opt;
        const std::string stage = s.get_str("run.stages", "estimate_then_control");
        if (stage == "estimate_only") opt.stage = Stage::estimate_only;
        else if (stage == "estimate_then_control") opt.stage = Stage::estimate_then_control;
        else if (stage == "closed_loop_from_t0") opt.stage = Stage::closed_loop_from_t0;
        else throw ValidationError("unknown run.stages '" + stage + "'");

        opt.law.variant = law_from(s, scen);
        opt.law.gamma = s.get_num("control.gamma", 0.2);
        opt.law.trigger = s.get_num("control.trigger", -0.9);
        opt.law.delay_steps = s.get_int("control.delay_steps", 0);
        if (opt.law.variant == FeedbackVariant::parametric_policy) {
            const std::string wfile = s.get_str("control.weights_file", "");
            if (wfile.empty())
                throw ValidationError("control.law=parametric_policy needs control.weights_file");
            opt.law.policy_weights = io::read_weights(wfile);
        }
        opt.est_steps = s.get_int("run.est_steps", scen.default_est_steps);
        opt.control_steps = s.get_int("run.control_steps", scen.default_control_steps);
        opt.threshold = s.get_num("estimator.threshold", 0.99);
        opt.window = s.get_int("estimator.window", 50);
        opt.stride = s.get_int("run.stride", 1);
        opt.trajectory_index = s.get_u64("run.trajectory_index", 0);
        opt.mismatch.lambda_scale = s.get_num("estimator.lambda_scale", 1.0);
        opt.est_init = estimator_init_from(s);
        opt.end_estimation_at_tf = s.get_int("run.end_estimation_at_tf", 1) != 0;
        opt.keep_record = true;
        if (scen.ops.count("num")) opt.extra_observables.emplace_back("num", scen.ops.at("num"));

        const LoopResult res = run_closed_loop(scen, opt);
        io::write_record_csv(out_dir + "/record.csv", res.record);
        io::write_table_csv(out_dir + "/run.csv", loop_result_table(res));

        std::vector<std::pair<std::string, std::string>> summary = {
            {"scenario", scen.name},
            {"stage", stage},
            {"law", s.get_str("control.law", "auto")},
            {"t_f", res.report.t_f ? io::format_double(*res.report.t_f) : "none"},
            {"est_end_t", io::format_double(res.est_end_t)},
            {"mean_fidelity_to_target", io::format_double(res.mean_fid_target)},
            {"final_fidelity_to_target", io::format_double(res.final_fid_target)},
            {"aborted", res.aborted ? "1" : "0"},
            {"max_top_two_population", io::format_double(res.max_top_two_population)},
        };
        if (res.pulse_step) summary.emplace_back("pulse_step", std::to_string(*res.pulse_step));

        if (!res.transitions.empty() || opt.law.variant == FeedbackVariant::two_qubit_sym ||
            opt.law.variant == FeedbackVariant::two_qubit_asym) {
            std::ofstream tf(out_dir + "/transitions.csv");
            tf << io::kFileHeader << "\nstep,t,from,to,overlap\n";
            for (const auto& tr : res.transitions)
                tf << tr.step << ',' << io::format_double(tr.t) << ',' << to_string(tr.from) << ','
                   << to_string(tr.to) << ',' << io::format_double(tr.overlap) << "\n";
            summary.emplace_back("hysteresis_transitions", std::to_string(res.transitions.size()));
        }
        io::write_summary(out_dir + "/summary.txt", summary);

        plot_from_csv(out_dir + "/run.csv", out_dir + "/fidelity.svg",
                      "Fidelity (" + scen.name + ")", "t",
                      {"fidelity_to_truth", "fidelity_to_target"}, "fidelity");
        plot_from_csv(out_dir + "/run.csv", out_dir + "/expA.svg",
                      "Measured observable (" + scen.name + ")", "t", {"expA_true", "expA_est"},
                      "<A>");
        if (!res.control_names.empty())
            plot_from_csv(out_dir + "/run.csv", out_dir + "/controls.svg",
                          "Control signals (" + scen.name + ")", "t", res.control_names,
                          "control");
        return res.aborted ? 1 : 0;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

int cmd_sweep(const Settings& s, const std::string& out_dir) {
    try {
        ensure_dir(out_dir);
        const ScenarioSpec scen = scenario_from(s);
        const std::string axis = s.get_str("sweep.axis", "eta");
        std::vector<double> values = s.get_list("sweep.values");
        const int n_seeds = s.get_int("sweep.seeds", 10);
        const double threshold = s.get_num("estimator.threshold", 0.99);
        const int window = s.get_int("estimator.window", 50);
        const int stride = s.get_int("run.stride", 1);

        io::Table tab;
        if (axis == "eta" || axis == "kappa") {
            if (values.empty()) values = axis == "eta" ? std::vector<double>{0.25, 0.5, 0.75, 1.0}
                                                       : std::vector<double>{0.5, 1.0, 2.0, 4.0};
            const int horizon = s.get_int("sweep.horizon_steps", 4 * scen.default_est_steps);
            const auto rows = sweep_tf(axis == "eta" ? SweepAxis::eta : SweepAxis::kappa, values,
                                       n_seeds, scen, horizon, threshold, window, stride);
            tab.columns = {"value", "median_tf", "converged", "censored", "seeds"};
            tab.data.assign(5, {});
            for (const auto& r : rows) {
                tab.data[0].push_back(r.value);
                tab.data[1].push_back(r.median_tf);
                tab.data[2].push_back(r.n_converged);
                tab.data[3].push_back(r.n_censored);
                tab.data[4].push_back(n_seeds);
            }
            io::write_table_csv(out_dir + "/sweep.csv", tab);
            plot_from_csv(out_dir + "/sweep.csv", out_dir + "/sweep.svg",
                          "Convergence time vs " + axis, "value", {"median_tf"}, "median t_f");
        } else if (axis == "lambda_scale") {
            if (values.empty()) values = {1.0, 1.02, 1.05, 1.1};
            const int horizon = s.get_int("sweep.horizon_steps", 2 * scen.default_est_steps);
            const auto rows = sweep_lambda_plateau(values, n_seeds, scen, horizon,
                                                   s.get_num("sweep.plateau_fraction", 0.25),
                                                   stride);
            tab.columns = {"value", "median_plateau_fidelity", "seeds"};
            tab.data.assign(3, {});
            for (const auto& r : rows) {
                tab.data[0].push_back(r.value);
                tab.data[1].push_back(r.median_plateau);
                tab.data[2].push_back(n_seeds);
            }
            io::write_table_csv(out_dir + "/sweep.csv", tab);
            plot_from_csv(out_dir + "/sweep.csv", out_dir + "/sweep.svg",
                          "Plateau fidelity vs model mismatch", "value",
                          {"median_plateau_fidelity"}, "fidelity");
        } else if (axis == "delay_steps") {
            if (values.empty()) values = {0, 5, 20};
            const std::string wfile = s.get_str("control.weights_file", "");
            if (wfile.empty())
                throw ValidationError("sweep.axis=delay_steps needs control.weights_file");
            const Eigen::VectorXd weights = io::read_weights(wfile);
            const int episode_steps = s.get_int("cem.episode_steps", scen.default_control_steps);
            tab.columns = {"value", "median_fidelity", "seeds"};
            tab.data.assign(3, {});
            std::vector<double> medians(values.size());
            for (std::size_t vi = 0; vi < values.size(); ++vi) {
                std::vector<double> fids(n_seeds);
                parallel_for(static_cast<std::size_t>(n_seeds), [&](std::size_t i) {
                    fids[i] = evaluate_policy(weights, scen, episode_steps,
                                              scen.cfg.seed + 1000 + i,
                                              static_cast<int>(values[vi]))
                                  .mean_fidelity;
                });
                std::sort(fids.begin(), fids.end());
                medians[vi] = n_seeds % 2 ? fids[n_seeds / 2]
                                          : 0.5 * (fids[n_seeds / 2 - 1] + fids[n_seeds / 2]);
            }
            for (std::size_t vi = 0; vi < values.size(); ++vi) {
                tab.data[0].push_back(values[vi]);
                tab.data[1].push_back(medians[vi]);
                tab.data[2].push_back(n_seeds);
            }
            io::write_table_csv(out_dir + "/sweep.csv", tab);
            plot_from_csv(out_dir + "/sweep.csv", out_dir + "/sweep.svg",
                          "Evaluation fidelity vs feedback delay", "value", {"median_fidelity"},
                          "fidelity");
        } else {
            throw ValidationError("unknown sweep.axis '" + axis + "'");
        }
        io::write_summary(out_dir + "/summary.txt",
                          {{"scenario", scen.name}, {"axis", axis},
                           {"seeds", std::to_string(n_seeds)}});
        return 0;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

int cmd_train(const Settings& s, const std::string& out_dir) {
    try {
        ensure_dir(out_dir);
        const ScenarioSpec scen = scenario_from(s);
        CemConfig cem;
        cem.population = s.get_int("cem.population", 16);
        cem.elite_fraction = s.get_num("cem.elite_fraction", 0.25);
        cem.generations = s.get_int("cem.generations", 20);
        cem.init_std = s.get_num("cem.init_std", 0.5);
        cem.seed = s.get_u64("run.seed", 0);
        cem.episode_steps = s.get_int("cem.episode_steps", scen.default_control_steps);
        cem.delay_steps = s.get_int("control.delay_steps", 0);

        const TrainResult train = cem_train(scen, cem);
        io::Table curve;
        curve.columns = {"generation", "mean_fidelity", "best_fidelity"};
        curve.data.assign(3, {});
        for (const auto& row : train.curve) {
            curve.data[0].push_back(row.generation);
            curve.data[1].push_back(row.mean_fidelity);
            curve.data[2].push_back(row.best_fidelity);
        }
        io::write_table_csv(out_dir + "/curve.csv", curve);
        io::write_weights(out_dir + "/weights.txt", train.best_weights);
        if (!train.curve.empty())
            plot_from_csv(out_dir + "/curve.csv", out_dir + "/curve.svg",
                          "Policy-search learning curve (" + scen.name + ")", "generation",
                          {"mean_fidelity", "best_fidelity"}, "fidelity");

        // Evaluation run with the frozen weights, full paired filter.
        LoopOptions opt;
        opt.stage = Stage::closed_loop_from_t0;
        opt.law.variant = FeedbackVariant::parametric_policy;
        opt.law.policy_weights = train.best_weights;
        opt.law.delay_steps = cem.delay_steps;
        opt.control_steps = cem.episode_steps;
        opt.est_init = EstimatorInit::matched;
        opt.stride = s.get_int("run.stride", 1);
        opt.trajectory_index = s.get_u64("run.trajectory_index", 12345);
        opt.keep_record = true;
        const LoopResult eval = run_closed_loop(scen, opt);
        io::write_table_csv(out_dir + "/eval.csv", loop_result_table(eval));
        plot_from_csv(out_dir + "/eval.csv", out_dir + "/eval.svg",
                      "Frozen-policy evaluation (" + scen.name + ")", "t",
                      {"fidelity_to_target"}, "fidelity");

        io::write_summary(
            out_dir + "/summary.txt",
            {{"scenario", scen.name},
             {"generations", std::to_string(cem.generations)},
             {"population", std::to_string(cem.population)},
             {"best_fidelity", io::format_double(train.best_fidelity)},
             {"eval_mean_fidelity", io::format_double(eval.mean_fid_target)},
             {"eval_final_fidelity", io::format_double(eval.final_fid_target)}});
        return 0;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

}  // namespace qfc::cli
