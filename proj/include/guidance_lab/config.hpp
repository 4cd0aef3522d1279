#pragma once

// Experiment configuration: a YAML document with fixed blocks. Unknown keys
// are rejected with line/column diagnostics.

#include "guidance_lab/guidance.hpp"
#include "guidance_lab/mixture.hpp"
#include "guidance_lab/samplers.hpp"
#include "guidance_lab/schedule.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace guidance_lab {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GridConfig {
    std::size_t steps = 200;
    double t_end = 1.0;
    double t_start = 0.0;

    bool operator==(const GridConfig&) const = default;
};

struct RunConfig {
    // Explicit seeds win over seed_count.
    std::vector<std::uint64_t> seeds;
    std::size_t seed_count = 16;
    std::uint64_t first_seed = 0;
    std::size_t condition = 0;
    std::string output_dir = "out";
    SamplerKind sampler = SamplerKind::ddim;
    // Strategies run by `sample`; empty means guidance.strategy alone.
    std::vector<Strategy> strategies;

    bool operator==(const RunConfig&) const = default;
};

struct C1Config {
    // Noise level given directly, or through the schedule at time t.
    std::optional<double> alpha_bar;
    double t = 0.5;
    std::vector<double> omegas{2.0, 3.0, 5.0};
    double k_max = 4.0;
    double bisection_tol = 1e-8;

    bool operator==(const C1Config&) const = default;
};

struct NormConfig {
    std::vector<double> omegas{3.0, 5.0};
    std::size_t seed_count = 64;

    bool operator==(const NormConfig&) const = default;
};

struct SweepConfig {
    std::vector<Strategy> strategies{Strategy::cfg, Strategy::adg};
    std::vector<double> omegas{1.0, 2.0, 4.0, 6.0, 8.0};
    std::size_t seed_count = 64;
    double adg_factor = 1.5;

    bool operator==(const SweepConfig&) const = default;
};

struct ScatterConfig {
    std::vector<double> omegas{1.0, 3.0, 5.0};
    std::size_t seeds_per_class = 100;
    Strategy strategy = Strategy::cfg;

    bool operator==(const ScatterConfig&) const = default;
};

struct FlowConfig {
    double sigma_min = 0.01;
    std::size_t steps = 100;

    bool operator==(const FlowConfig&) const = default;
};

struct Prop1Config {
    std::size_t trials = 20000;
    std::vector<std::size_t> dims{2, 8, 64};
    double norm_min = 0.1;
    double norm_max = 10.0;
    std::uint64_t seed = 7;

    bool operator==(const Prop1Config&) const = default;
};

struct ExperimentConfig {
    explicit ExperimentConfig(GaussianMixture mixture) : gmm(std::move(mixture)) {}

    GaussianMixture gmm;
    NoiseSchedule schedule;
    GridConfig grid;
    GuidanceConfig guidance;
    RunConfig run;
    C1Config c1;
    NormConfig norm;
    SweepConfig sweep;
    ScatterConfig scatter;
    FlowConfig flow;
    Prop1Config prop1;

    // Cross-block checks (condition index, grid inside the horizon, ...).
    void validate() const;

    std::vector<std::uint64_t> seeds() const;
    TimeGrid time_grid() const;
    std::vector<Strategy> sample_strategies() const;
    double c1_alpha_bar() const;

    bool operator==(const ExperimentConfig&) const = default;
};

// `key=value` with a dotted key; the value is parsed as YAML.
using Override = std::pair<std::string, std::string>;
Override parse_override(const std::string& text);

ExperimentConfig load_config(const std::string& path, const std::vector<Override>& overrides = {});
ExperimentConfig parse_config(const std::string& text, const std::vector<Override>& overrides = {},
                              const std::string& source = "<string>");
std::string dump_config(const ExperimentConfig& config);

}  // namespace guidance_lab
