#pragma once

// Variance-preserving noise schedule, discrete sampler grids, and the
// flow-matching Gaussian path.

#include <cstddef>
#include <string>
#include <vector>

namespace guidance_lab {

enum class ScheduleShape { linear };

/// beta(t) = beta_min + (beta_max - beta_min) t / T on [0, T].
struct NoiseSchedule {
    double beta_min = 0.1;
    double beta_max = 20.0;
    double horizon = 1.0;
    ScheduleShape shape = ScheduleShape::linear;

    // Throws std::invalid_argument on beta_min <= 0, beta_max < beta_min or T <= 0.
    void validate() const;

    // Constant beta, as used by the closed-form derivations (abar_t = exp(-beta t)).
    static NoiseSchedule constant(double beta, double horizon = 1.0);

    double beta(double t) const;
    double beta_integral(double t) const;
    double beta_bar(double t) const { return 1.0 - alpha_bar_at(t); }
    double alpha_bar_at(double t) const;

    // Time at which alpha_bar reaches the given value.
    double time_for_alpha_bar(double alpha_bar) const;

    bool operator==(const NoiseSchedule&) const = default;
};

double alpha_bar(const NoiseSchedule& schedule, double t);

/// Sampler grid ordered from the start of the reverse process (t_end, noisiest)
/// down to t_start. times.size() == steps + 1.
struct TimeGrid {
    std::vector<double> times;
    std::vector<double> alpha_bars;

    std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
};

// Uniform grid in t. Requires N >= 1 and T >= t_end > t_start >= 0.
TimeGrid make_grid(const NoiseSchedule& schedule, std::size_t steps, double t_end, double t_start);

struct FlowPath {
    double sigma_min = 0.0;

    void validate() const;
};

struct FlowStats {
    double mean_coeff;
    double std;
};

// Path x_t | x1 ~ N(t x1, (1 - (1 - sigma_min) t)^2 I).
FlowStats flow_stats(const FlowPath& path, double t);

std::string to_string(ScheduleShape shape);
ScheduleShape schedule_shape_from_string(const std::string& name);

}  // namespace guidance_lab
