#pragma once

// Guidance strategies. Each takes the conditional and unconditional clean-sample
// predictions at (x_t, t) and returns the guided prediction that the sampler
// substitutes into its update.

#include "guidance_lab/types.hpp"

#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace guidance_lab {

inline constexpr double kDefaultAngleCap = std::numbers::pi / 3.0;

struct PredictionPair {
    Vector x0_cond;
    Vector x0_uncond;
    Vector x_t;
    double alpha_bar_t = 0.5;

    // Throws on length mismatch or alpha_bar_t outside (0,1).
    void validate() const;
};

enum class Strategy {
    conditional,     // no guidance, conditional prediction only
    cfg,
    adg,
    adg_no_cap,
    adg_normalized,
    adg_simplified,
    cfgpp,
    apg,
    recfg,
    pcg,
};

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);
const std::vector<Strategy>& all_strategies();

// Adaptive projected guidance parameters. The defaults are arbitrary
// placeholders and are echoed into every report that uses them.
struct ApgParams {
    double eta = 0.0;
    double beta = -0.5;
    double r = 2.5;

    bool operator==(const ApgParams&) const = default;
};

// DDIM re-noising coefficient on x0: sqrt(abar_t) (standard) or abar_t as
// printed in the original algorithm listing.
enum class RenoiseMode { standard, paper_literal };

// Corrector epsilon scaling: eps / beta_bar (as printed) or eps / sqrt(beta_bar).
enum class LangevinMode { paper_literal, score_consistent };

std::string to_string(RenoiseMode m);
std::string to_string(LangevinMode m);
RenoiseMode renoise_mode_from_string(const std::string& name);
LangevinMode langevin_mode_from_string(const std::string& name);

struct GuidanceConfig {
    Strategy strategy = Strategy::adg;
    double omega = 1.0;
    double angle_cap = kDefaultAngleCap;
    double cfgpp_lambda = 1.0;
    ApgParams apg;
    double recfg_lambda = 1.0;
    // Optional per-condition override of recfg_lambda, indexed by component.
    std::vector<double> recfg_table;
    std::size_t pcg_inner_steps = 0;
    LangevinMode pcg_mode = LangevinMode::paper_literal;
    RenoiseMode renoise = RenoiseMode::standard;

    void validate() const;
    double recfg_lambda_for(std::size_t condition) const;

    bool operator==(const GuidanceConfig&) const = default;
};

struct ApgState {
    Vector momentum;  // empty until the first update

    void reset() { momentum.resize(0); }
};

// x0 = (x_t - sqrt(1 - abar) eps) / sqrt(abar)
Vector x0_from_eps(const Vector& x_t, const Vector& eps, double alpha_bar);
// eps = (x_t - sqrt(abar) x0) / sqrt(1 - abar)
Vector eps_from_x0(const Vector& x_t, const Vector& x0, double alpha_bar);

// Angle in [0, pi]; nullopt when either norm is below kNormFloor.
std::optional<double> angle_between(const Vector& u, const Vector& v);

double cap_angle(double raw, double cap);

/// Rotated prediction together with the angles that produced it.
struct Rotation {
    Vector x0;
    double gamma = 0.0;        // angle between the two predictions
    double gamma_omega = 0.0;  // applied rotation angle
    bool degenerate = false;   // fallback to the conditional prediction was taken
};

// Rotate x0_cond away from x0_uncond by min((omega - 1) gamma, cap) inside
// their common plane. Pass cap = +inf to disable the cap.
Rotation adg_rotation(const PredictionPair& pair, double omega, double angle_cap);

Vector adg_rotate(const PredictionPair& pair, double omega, double angle_cap = kDefaultAngleCap);
Vector adg_no_cap(const PredictionPair& pair, double omega);
Vector adg_normalized(const PredictionPair& pair, double omega, double angle_cap = kDefaultAngleCap);
Vector adg_simplified(const PredictionPair& pair, double omega);

// x0_cond + (omega - 1)(x0_cond - x0_uncond)
Vector cfg_combine(const PredictionPair& pair, double omega);

Vector apg_update(const PredictionPair& pair, double omega, const ApgParams& params, ApgState& state);

// lambda (1 - omega) eps_uncond + omega eps_cond
Vector recfg_combine(const Vector& eps_cond, const Vector& eps_uncond, double omega, double lambda);

struct CfgppPredictions {
    Vector x0_denoise;
    Vector eps_renoise;
};

CfgppPredictions cfgpp_predictions(const Vector& eps_cond, const Vector& eps_uncond, double lambda,
                                   const Vector& x_t, double alpha_bar);

}  // namespace guidance_lab
