// Derivative-free search over the bounded affine policy: cross-entropy
// refitting of a diagonal Gaussian over policy weights against the episodic
// fidelity reward produced by the closed-loop simulator.
#pragma once

#include "qfc/loop.hpp"

namespace qfc {

struct CemConfig {
    int population = 16;
    double elite_fraction = 0.25;  // elite count = floor(population * fraction), >= 2
    int generations = 20;
    double init_std = 0.5;
    std::uint64_t seed = 0;
    int episode_steps = 2000;
    int delay_steps = 0;

    void validate() const;
};

struct EpisodeResult {
    Eigen::VectorXd weights;
    double mean_fidelity = 0.0;   // time-mean fidelity to the scenario target
    double final_fidelity = 0.0;
    std::uint64_t seed = 0;
    bool aborted = false;  // integrator abort; reward reported as 0
};

// One closed-loop episode with matched filter initialization and fresh noise
// from `episode_seed`. Deterministic per (weights, seed).
EpisodeResult evaluate_policy(const Eigen::VectorXd& weights, const ScenarioSpec& scenario,
                              int episode_steps, std::uint64_t episode_seed,
                              int delay_steps = 0);

struct GenerationRow {
    int generation = 0;
    double mean_fidelity = 0.0;  // population mean this generation
    double best_fidelity = 0.0;  // best ever, non-decreasing
};

struct TrainResult {
    Eigen::VectorXd best_weights;
    double best_fidelity = 0.0;
    std::vector<GenerationRow> curve;
    std::vector<Eigen::VectorXd> sigma_history;  // sampling stds per generation
};

// Population members within one generation share an episode seed (common
// random numbers); the refit keeps a 1e-3 std floor. With zero generations
// the initial mean weights come back untouched and the curve is empty.
TrainResult cem_train(const ScenarioSpec& scenario, const CemConfig& cem);

}  // namespace qfc
