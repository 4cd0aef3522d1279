#pragma once

// First-order reverse-time integrators driven by exact mixture posterior means
// (standing in for a trained noise predictor), plus the flow-matching Euler
// integrator.

#include "guidance_lab/guidance.hpp"
#include "guidance_lab/mixture.hpp"
#include "guidance_lab/schedule.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace guidance_lab {

enum class SamplerKind { ddim, ddpm };

std::string to_string(SamplerKind k);
SamplerKind sampler_kind_from_string(const std::string& name);

struct StepRecord {
    double t = 0.0;
    double alpha_bar = 0.0;  // NaN for flow-matching trajectories
    Vector x_t;
    Vector x0_cond;
    Vector x0_uncond;
    Vector x0_guided;
    double gamma = 0.0;
    double gamma_omega = 0.0;
    double guided_norm = 0.0;
    // CFG++ only: max-abs gap between the CFG++ update and the CFG update with
    // the equivalent time-varying weight. NaN elsewhere.
    double cfgpp_residual = std::numeric_limits<double>::quiet_NaN();
};

struct TrajectoryRecord {
    std::uint64_t seed = 0;
    std::vector<StepRecord> steps;
    Vector x_final;
};

struct TrajectoryBatch {
    GaussianMixture gmm;
    NoiseSchedule schedule;
    TimeGrid grid;
    GuidanceConfig guidance;
    std::size_t condition = 0;
    std::vector<TrajectoryRecord> records;
};

/// Raised when a step fails; carries the index of the failing step.
class SamplingError : public std::runtime_error {
public:
    SamplingError(std::size_t step, const std::string& what);
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

// sqrt(abar_prev) x0 + sqrt(1 - abar_prev) (x_t - c x0) / sqrt(1 - abar_t),
// with c = sqrt(abar_t) (standard) or abar_t (paper_literal).
// Requires 0 < abar_t < abar_prev <= 1.
Vector ddim_step(const Vector& x_t, const Vector& x0_hat, double alpha_bar_t, double alpha_bar_prev,
                 RenoiseMode mode = RenoiseMode::standard);

// Ancestral step: sqrt(abar_prev/abar_t) x_t + (1 - abar_t/abar_prev) score
//                 + sqrt(1 - abar_t/abar_prev) noise.
// Requires 0 < abar_t <= abar_prev <= 1.
Vector ddpm_step(const Vector& x_t, const Vector& score, double alpha_bar_t, double alpha_bar_prev,
                 const Vector& noise);

// Initial state x_T ~ N(0, I) for a seed.
Vector initial_state(std::uint64_t seed, std::size_t dim);

TrajectoryRecord sample_trajectory(const GaussianMixture& gmm, const TimeGrid& grid, const GuidanceConfig& config,
                                   std::size_t condition, std::uint64_t seed,
                                   SamplerKind kind = SamplerKind::ddim);

// Runs sample_trajectory for every seed on the worker pool; records keep seed order.
TrajectoryBatch sample_batch(const GaussianMixture& gmm, const NoiseSchedule& schedule, const TimeGrid& grid,
                             const GuidanceConfig& config, std::size_t condition,
                             const std::vector<std::uint64_t>& seeds, SamplerKind kind = SamplerKind::ddim);

double pcg_kappa(double alpha_bar_t, double alpha_bar_prev);

// One Langevin sharpening step at a fixed noise level using the CFG-weighted
// noise prediction.
Vector pcg_corrector_step(const GaussianMixture& gmm, const Vector& x, double alpha_bar, double kappa,
                          double omega, std::size_t condition, LangevinMode mode, const Vector& noise);

// Conditional DDIM predictor followed by inner_steps corrector steps per outer
// step. The corrector is skipped on a step that lands on abar = 1.
TrajectoryRecord pcg_sample(const GaussianMixture& gmm, const TimeGrid& grid, double omega,
                            std::size_t inner_steps, std::size_t condition, std::uint64_t seed,
                            LangevinMode mode = LangevinMode::paper_literal);

// Time-varying CFG weight equivalent to CFG++ with the given lambda; nullopt
// when the denominator magnitude is below 1e-14.
std::optional<double> cfgpp_equivalent_weight(double lambda, double alpha_bar_t, double alpha_bar_prev);

struct CfgppAudit {
    double omega_t = 0.0;
    Vector cfgpp_next;
    Vector cfg_next;
    double residual = 0.0;  // max-abs difference
};

std::optional<CfgppAudit> cfgpp_equivalence(const Vector& x_t, const Vector& eps_cond, const Vector& eps_uncond,
                                            double lambda, double alpha_bar_t, double alpha_bar_prev);

// x + dt (x1_hat - (1 - sigma_min) x) / (1 - (1 - sigma_min) t)
Vector flow_euler_step(const Vector& x_t, const Vector& x1_hat, double t, double dt, double sigma_min);

// E[x1 | x_t = x] along the Gaussian path for a mixture target.
Vector flow_posterior_mean(const GaussianMixture& gmm, const Vector& x, double t, double sigma_min,
                           Condition condition = std::nullopt);

// Integrates t: 0 -> 1 in `steps` Euler steps with the ADG rotation applied to
// the (conditional, unconditional) endpoint predictions.
TrajectoryRecord flow_sample_adg(const GaussianMixture& gmm, const FlowPath& path, std::size_t steps, double omega,
                                 double angle_cap, std::size_t condition, std::uint64_t seed);

}  // namespace guidance_lab
