#include "guidance_lab/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace guidance_lab {

void NoiseSchedule::validate() const {
    if (!(beta_min > 0.0)) throw std::invalid_argument("schedule beta_min must be positive");
    if (!(beta_max >= beta_min)) throw std::invalid_argument("schedule beta_max must be >= beta_min");
    if (!(horizon > 0.0)) throw std::invalid_argument("schedule horizon T must be positive");
}

NoiseSchedule NoiseSchedule::constant(double beta, double horizon) {
    NoiseSchedule s{beta, beta, horizon, ScheduleShape::linear};
    s.validate();
    return s;
}

double NoiseSchedule::beta(double t) const {
    return beta_min + (beta_max - beta_min) * t / horizon;
}

double NoiseSchedule::beta_integral(double t) const {
    if (!(t >= 0.0 && t <= horizon)) {
        throw std::out_of_range("time " + std::to_string(t) + " outside [0, " + std::to_string(horizon) + "]");
    }
    return beta_min * t + (beta_max - beta_min) * t * t / (2.0 * horizon);
}

double NoiseSchedule::alpha_bar_at(double t) const { return std::exp(-beta_integral(t)); }

double NoiseSchedule::time_for_alpha_bar(double target) const {
    if (!(target > 0.0 && target <= 1.0)) throw std::invalid_argument("alpha_bar must lie in (0,1]");
    // Solve a t^2 + b t = -log(target) for the positive root.
    const double rhs = -std::log(target);
    const double a = (beta_max - beta_min) / (2.0 * horizon);
    const double b = beta_min;
    const double t = a == 0.0 ? rhs / b : 2.0 * rhs / (b + std::sqrt(b * b + 4.0 * a * rhs));
    if (t > horizon) throw std::out_of_range("alpha_bar not reached within the schedule horizon");
    return t;
}

double alpha_bar(const NoiseSchedule& schedule, double t) { return schedule.alpha_bar_at(t); }

TimeGrid make_grid(const NoiseSchedule& schedule, std::size_t steps, double t_end, double t_start) {
    schedule.validate();
    if (steps == 0) throw std::invalid_argument("grid needs at least one step");
    if (!(t_end <= schedule.horizon && t_end > t_start && t_start >= 0.0)) {
        throw std::invalid_argument("grid bounds must satisfy T >= t_end > t_start >= 0");
    }
    TimeGrid grid;
    grid.times.resize(steps + 1);
    grid.alpha_bars.resize(steps + 1);
    const double n = static_cast<double>(steps);
    for (std::size_t i = 0; i <= steps; ++i) {
        // Endpoints are assigned exactly.
        const double frac = static_cast<double>(i) / n;
        const double t = i == 0 ? t_end : (i == steps ? t_start : t_end + (t_start - t_end) * frac);
        grid.times[i] = t;
        grid.alpha_bars[i] = schedule.alpha_bar_at(t);
    }
    return grid;
}

void FlowPath::validate() const {
    if (!(sigma_min >= 0.0 && sigma_min < 1.0)) throw std::invalid_argument("sigma_min must lie in [0,1)");
}

FlowStats flow_stats(const FlowPath& path, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::out_of_range("flow time must lie in [0,1]");
    return {t, 1.0 - (1.0 - path.sigma_min) * t};
}

std::string to_string(ScheduleShape shape) {
    switch (shape) {
        case ScheduleShape::linear: return "linear";
    }
    return "linear";
}

ScheduleShape schedule_shape_from_string(const std::string& name) {
    if (name == "linear") return ScheduleShape::linear;
    throw std::invalid_argument("unknown schedule shape '" + name + "' (expected: linear)");
}

}  // namespace guidance_lab
