#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "toeproot/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Radial symbols of p-th roots of quasihomogeneous Toeplitz operators"};
    app.require_subcommand(1);

    toeproot::RunConfig cfg;
    std::string pairing = "optimized";
    std::string mode = "closed";

    auto add_common = [&](CLI::App* cmd, bool needs_input) {
        auto* in = cmd->add_option("--input", cfg.input, "problem JSON file");
        if (needs_input) in->required();
        cmd->add_option("--out", cfg.out_prefix, "output path prefix (no files when omitted)");
        cmd->add_option("--p", cfg.p_override, "operator degree override")->check(CLI::PositiveNumber);
        cmd->add_option("--tol", cfg.tol, "check tolerance")->check(CLI::PositiveNumber);
        cmd->add_option("--grid", cfg.grid_n, "grid size")->check(CLI::PositiveNumber);
        cmd->add_option("--k-max", cfg.k_max, "largest identity index checked")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--pairing", pairing, "Gamma-quotient pairing")
            ->check(CLI::IsMember({"optimized", "canonical"}));
        cmd->add_option("--branch", cfg.branch, "which p-th root of the calibrated constant")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--mode", mode, "Mellin evaluation mode")
            ->check(CLI::IsMember({"closed", "numeric"}));
    };

    add_common(app.add_subcommand("root", "construct the root symbol psi"), true);
    auto* verify = app.add_subcommand("verify", "check a stored root against its symbol");
    add_common(verify, true);
    verify->add_option("--psi", cfg.psi_path, "stored root JSON")->required();
    auto* mellin = app.add_subcommand("mellin", "evaluate the symbol transform both ways");
    add_common(mellin, true);
    mellin->add_option("--z", cfg.z_points, "evaluation points (default 3 5 7 11)");
    add_common(app.add_subcommand("convolve", "n-fold Mellin convolution of Beta factors"), true);
    add_common(app.add_subcommand("lemma-a", "envelope-ratio profile and refinement drift"),
               true);
    add_common(app.add_subcommand("lemma-b", "derivative envelope ratios (k = 1, 2)"), true);

    CLI11_PARSE(app, argc, argv);

    cfg.command = app.get_subcommands().front()->get_name();
    cfg.pairing = pairing == "canonical" ? toeproot::PairingMode::canonical
                                         : toeproot::PairingMode::optimized;
    cfg.mode = mode == "numeric" ? toeproot::MellinMode::numeric : toeproot::MellinMode::closed;
    return toeproot::run(cfg, std::cout);
}
