#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dgflow/dgflow.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string output;
    long seed = -1;
    bool quiet = false;

    std::vector<std::string> overrides() const {
        std::vector<std::string> ov = sets;
        if (!output.empty()) ov.push_back("output=" + output);
        if (seed >= 0) ov.push_back("experiment.seed=" + std::to_string(seed));
        if (quiet) ov.push_back("log_level=quiet");
        return ov;
    }
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("config", args.config_path, "config file")->required();
    cmd->add_option("--set", args.sets, "override a config key, as key=value")->take_all();
    cmd->add_option("--output", args.output, "output directory");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_flag("--quiet", args.quiet, "suppress informational output");
}

int run_with(const CommonArgs& args, const char* forced_kind) {
    std::vector<std::string> ov = args.overrides();
    if (forced_kind) ov.push_back(std::string("experiment.kind=") + forced_kind);
    dgflow::RunConfig cfg = dgflow::parse_config(args.config_path, ov);
    return dgflow::run_experiment(cfg, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dgflow: dual gradient flow regularization for nonlinear ill-posed problems"};
    app.require_subcommand(1);

    CommonArgs run_args, sweep_args, order_args;
    CLI::App* cmd_run = app.add_subcommand("run", "single regularized solve");
    add_common(cmd_run, run_args);
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "noise-level sweep with convergence-rate fit");
    add_common(cmd_sweep, sweep_args);
    CLI::App* cmd_order = app.add_subcommand("order", "Runge-Kutta order study against the closed-form oracle");
    add_common(cmd_order, order_args);

    std::string tableau_path;
    CLI::App* cmd_validate = app.add_subcommand("validate-tableau", "check a Butcher tableau file");
    cmd_validate->add_option("path", tableau_path, "tableau file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_validate->parsed()) {
            const dgflow::ButcherTableau tab = dgflow::ButcherTableau::from_file(tableau_path);
            const dgflow::TableauReport report = dgflow::validate_tableau(tab);
            std::cout << report.describe() << "\n";
            return report.consistent ? 0 : 1;
        }
        if (cmd_run->parsed()) return run_with(run_args, nullptr);
        if (cmd_sweep->parsed()) return run_with(sweep_args, "rate_sweep");
        if (cmd_order->parsed()) return run_with(order_args, "order_study");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
