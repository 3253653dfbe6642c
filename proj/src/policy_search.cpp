#include "qfc/policy_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qfc/parallel.hpp"

namespace qfc {

namespace {

constexpr double kStdFloor = 1e-3;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

void CemConfig::validate() const {
    if (population < 8) throw ValidationError("CemConfig: population must be >= 8");
    const int elites = static_cast<int>(population * elite_fraction);
    if (elite_fraction <= 0 || elite_fraction > 1 || elites < 2)
        throw ValidationError("CemConfig: elite count must be >= 2");
    if (generations < 0) throw ValidationError("CemConfig: generations must be >= 0");
    if (init_std <= 0) throw ValidationError("CemConfig: init_std must be > 0");
    if (episode_steps < 1) throw ValidationError("CemConfig: episode_steps must be >= 1");
}

EpisodeResult evaluate_policy(const Eigen::VectorXd& weights, const ScenarioSpec& scenario,
                              int episode_steps, std::uint64_t episode_seed, int delay_steps) {
    if (!scenario.target || !scenario.observation)
        throw ValidationError("evaluate_policy: scenario lacks target or observation assembler");

    ScenarioSpec scen = scenario;
    scen.cfg.seed = episode_seed;

    LoopOptions opt;
    opt.stage = Stage::closed_loop_from_t0;
    opt.law.variant = FeedbackVariant::parametric_policy;
    opt.law.policy_weights = weights;
    opt.law.delay_steps = delay_steps;
    opt.control_steps = episode_steps;
    opt.est_init = EstimatorInit::matched;
    opt.truth_only = true;

    EpisodeResult out;
    out.weights = weights;
    out.seed = episode_seed;
    const LoopResult res = run_closed_loop(scen, opt);
    out.aborted = res.aborted;
    out.mean_fidelity = res.aborted ? 0.0 : res.mean_fid_target;
    out.final_fidelity = res.aborted ? 0.0 : res.final_fid_target;
    return out;
}

TrainResult cem_train(const ScenarioSpec& scenario, const CemConfig& cem) {
    cem.validate();
    PolicySpec pspec;
    pspec.n_obs = scenario.observation_dim;
    pspec.bounds = scenario.control_bounds;
    const int n_weights = pspec.n_weights();
    if (n_weights == 0) throw ValidationError("cem_train: scenario has no controls");

    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n_weights);
    Eigen::VectorXd sigma = Eigen::VectorXd::Constant(n_weights, cem.init_std);

    TrainResult out;
    out.best_weights = mu;
    out.best_fidelity = std::numeric_limits<double>::quiet_NaN();

    const int n_elites = static_cast<int>(cem.population * cem.elite_fraction);
    std::mt19937_64 rng(cem.seed);
    std::normal_distribution<double> gauss;

    double best = -1.0;
    for (int gen = 0; gen < cem.generations; ++gen) {
        out.sigma_history.push_back(sigma);
        std::vector<Eigen::VectorXd> members(cem.population);
        for (int m = 0; m < cem.population; ++m) {
            Eigen::VectorXd w(n_weights);
            for (int k = 0; k < n_weights; ++k) w(k) = mu(k) + sigma(k) * gauss(rng);
            members[m] = std::move(w);
        }

        // Common random numbers: one episode seed per generation.
        const std::uint64_t episode_seed = splitmix64(cem.seed ^ (0x5851f42d4c957f2dull * (gen + 1)));
        std::vector<double> reward(cem.population);
        parallel_for(static_cast<std::size_t>(cem.population), [&](std::size_t m) {
            reward[m] = evaluate_policy(members[m], scenario, cem.episode_steps, episode_seed,
                                        cem.delay_steps)
                            .mean_fidelity;
        });

        std::vector<int> order(cem.population);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return reward[a] > reward[b]; });

        if (reward[order[0]] > best) {
            best = reward[order[0]];
            out.best_weights = members[order[0]];
        }
        out.best_fidelity = best;

        Eigen::VectorXd new_mu = Eigen::VectorXd::Zero(n_weights);
        for (int e = 0; e < n_elites; ++e) new_mu += members[order[e]];
        new_mu /= n_elites;
        Eigen::VectorXd var = Eigen::VectorXd::Zero(n_weights);
        for (int e = 0; e < n_elites; ++e)
            var += (members[order[e]] - new_mu).cwiseAbs2();
        var /= n_elites;
        mu = new_mu;
        sigma = var.cwiseSqrt().cwiseMax(kStdFloor);

        const double pop_mean =
            std::accumulate(reward.begin(), reward.end(), 0.0) / cem.population;
        out.curve.push_back({gen, pop_mean, best});
    }
    return out;
}

}  // namespace qfc
