#include "guidance_lab/commands.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>

namespace gl = guidance_lab;

namespace {

void add_common(CLI::App* sub, gl::CommandOptions& opts) {
    sub->add_option("--config", opts.config_path, "Experiment config (YAML)")->required();
    sub->add_option("--set", opts.sets, "Override a config key, e.g. guidance.omega=3 (repeatable, last wins)");
    sub->add_option("--seed-count", opts.seed_count, "Number of seeds, starting at run.first_seed");
    sub->add_option("--out", opts.out, "Output directory (run.output_dir)");
    sub->add_option("--strategy", opts.strategy, "Guidance strategy");
    sub->add_option("--omega", opts.omega, "Guidance weight");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Guidance lab: exact-score diffusion guidance experiments on Gaussian mixtures"};
    app.require_subcommand(1);

    gl::CommandOptions opts;
    gl::PlotOptions plot;
    std::function<int()> action;

    const std::vector<std::pair<const char*, std::pair<const char*, int (*)(const gl::CommandOptions&, std::ostream&, std::ostream&)>>>
        commands{
            {"sample", {"Sample trajectories and write trajectory/summary CSVs", gl::cmd_sample}},
            {"verify", {"Run the certifier suite; exit 1 if any probe fails", gl::cmd_verify}},
            {"probe-c1", {"Estimate the anomalous-diffusion radius C1", gl::cmd_probe_c1}},
            {"probe-norm", {"Check CFG norm amplification along the surface normal", gl::cmd_probe_norm}},
            {"sweep", {"Mean final-sample norm per strategy and guidance weight", gl::cmd_sweep}},
            {"scatter", {"Per-class samples and centroid drift across guidance weights", gl::cmd_scatter}},
            {"flow-sample", {"Flow-matching Euler sampling with the ADG rotation", gl::cmd_flow_sample}},
        };
    for (const auto& [name, entry] : commands) {
        auto* sub = app.add_subcommand(name, entry.first);
        add_common(sub, opts);
        auto fn = entry.second;
        sub->callback([&action, &opts, fn] { action = [&opts, fn] { return fn(opts, std::cout, std::cerr); }; });
    }

    auto* plot_cmd = app.add_subcommand("plot", "Render a scatter or sweep CSV as SVG");
    plot_cmd->add_option("--csv", plot.csv_path, "Input CSV")->required();
    plot_cmd->add_option("--kind", plot.kind, "scatter or sweep")->required();
    plot_cmd->add_option("--out", plot.out, "Output directory (defaults to the CSV's directory)");
    plot_cmd->callback([&] { action = [&] { return gl::cmd_plot(plot, std::cout, std::cerr); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? gl::kExitOk : gl::kExitInputError;
    }
    return action ? action() : gl::kExitInputError;
}
