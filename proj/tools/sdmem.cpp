// sdmem <command> --model FILE [--set section.key=value ...] [--out DIR] [--seed N] [--force]

#include <sdmem/cli.hpp>

#include <CLI11.hpp>

int main(int argc, char** argv) {
    CLI::App app{"Delay differential equations with distributed memory: simulation, certificates, stability analysis"};
    app.require_subcommand(1, 1);

    sdmem::RunConfig cfg;
    const std::vector<std::pair<sdmem::Command, const char*>> commands{
        {sdmem::Command::simulate, "integrate the model and write trajectory.csv"},
        {sdmem::Command::analyze, "equilibria, linearization, cubic, roots, Routh-Hurwitz verdict"},
        {sdmem::Command::hopf, "closed-form and numeric Hopf thresholds"},
        {sdmem::Command::sweep, "stability over a (beta, alpha) grid"},
        {sdmem::Command::certify, "contraction constant L and existence time T0"},
        {sdmem::Command::verify, "Picard iteration against Runge-Kutta"},
        {sdmem::Command::audit, "cross-check the published benchmark formulas"},
    };
    for (const auto& [cmd, help] : commands) {
        CLI::App* sub = app.add_subcommand(sdmem::to_string(cmd), help);
        sub->add_option("--model", cfg.model_path, "model file")->required();
        sub->add_option("--set", cfg.overrides, "override section.key=value (repeatable)");
        sub->add_option("--out", cfg.output_dir, "output directory")->capture_default_str();
        sub->add_option("--seed", cfg.seed, "seed for randomized validation probes")->capture_default_str();
        sub->add_flag("--force", cfg.force, "continue when validation fails");
        sub->callback([&cfg, cmd = cmd] { cfg.command = cmd; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : sdmem::exit_code::validation;
    }
    return sdmem::run(cfg);
}
