#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dopinv/cli/commands.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"dopinv: doping-profile identification from linearized drift-diffusion measurements"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir;
    const std::pair<const char*, const char*> commands[] = {
        {"phantom", "Write the phantom doping, its equilibrium gamma, and the N-region indicator"},
        {"forward", "Simulate voltage-current measurements for the phantom"},
        {"invert", "Reconstruct the junction by level-set iteration"},
        {"gradcheck", "Compare adjoint and finite-difference gradients on a small grid"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "Run configuration (key = value lines)")->required();
        sub->add_option("--out", out_dir, "Output directory, overrides the config's 'out'");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : dopinv::cli::kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    std::optional<std::filesystem::path> out;
    if (!out_dir.empty()) out = out_dir;
    return dopinv::cli::run_command(command, config, out, std::cout, std::cerr);
}
