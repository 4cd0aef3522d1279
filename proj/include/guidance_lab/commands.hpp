#pragma once

// Subcommand bodies behind the guidance-lab executable. Each returns the
// process exit status: 0 success, 1 probe or runtime failure, 2 input error.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace guidance_lab {

enum ExitCode : int { kExitOk = 0, kExitProbeFailure = 1, kExitInputError = 2 };

struct CommandOptions {
    std::string config_path;
    std::vector<std::string> sets;  // key=value, applied in order
    std::optional<std::size_t> seed_count;
    std::optional<std::string> out;
    std::optional<std::string> strategy;
    std::optional<double> omega;
};

int cmd_sample(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_verify(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_probe_c1(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_probe_norm(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_scatter(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_flow_sample(const CommandOptions& opts, std::ostream& out, std::ostream& err);

struct PlotOptions {
    std::string csv_path;
    std::string kind;  // scatter | sweep
    // Output directory; defaults to the CSV's directory.
    std::optional<std::string> out;
};

int cmd_plot(const PlotOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace guidance_lab
