#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qfc/cli_commands.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> set_pairs;
    std::string out_dir = "out";
    std::string seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Config file ([section] key = value)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", args.set_pairs, "Override a setting, e.g. --set scenario.kappa=0.5");
    cmd->add_option("--out", args.out_dir, "Output directory");
    cmd->add_option("--seed", args.seed, "Master seed (unsigned 64-bit)");
}

qfc::cli::Settings resolve(const CommonArgs& args) {
    qfc::cli::Settings s;
    if (!args.config_path.empty()) s = qfc::cli::load_config_file(args.config_path);
    qfc::cli::apply_set_pairs(s, args.set_pairs);
    if (!args.seed.empty()) s.set("run.seed", args.seed);
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qfc-lab: conditional state tomography and feedback control simulator"};
    app.require_subcommand(1);

    CommonArgs sim_args, est_args, ctl_args, swp_args, trn_args;
    std::string record_path;

    CLI::App* sim = app.add_subcommand("simulate", "Run the measured system, write record + truth");
    add_common(sim, sim_args);

    CLI::App* est = app.add_subcommand("estimate", "Replay a record through the estimator filter");
    add_common(est, est_args);
    est->add_option("--record", record_path, "Measurement record CSV")
        ->required()
        ->check(CLI::ExistingFile);

    CLI::App* ctl = app.add_subcommand("control", "Two-stage estimation + feedback control run");
    add_common(ctl, ctl_args);

    CLI::App* swp = app.add_subcommand("sweep", "Parameter sweeps (eta, kappa, lambda_scale, delay)");
    add_common(swp, swp_args);

    CLI::App* trn = app.add_subcommand("train", "Cross-entropy policy search, then evaluation");
    add_common(trn, trn_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return qfc::cli::cmd_simulate(resolve(sim_args), sim_args.out_dir);
        if (est->parsed())
            return qfc::cli::cmd_estimate(resolve(est_args), record_path, est_args.out_dir);
        if (ctl->parsed()) return qfc::cli::cmd_control(resolve(ctl_args), ctl_args.out_dir);
        if (swp->parsed()) return qfc::cli::cmd_sweep(resolve(swp_args), swp_args.out_dir);
        if (trn->parsed()) return qfc::cli::cmd_train(resolve(trn_args), trn_args.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
