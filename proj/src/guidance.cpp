#include "guidance_lab/guidance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace guidance_lab {

namespace {

// Rotations below this angle are treated as no-ops.
constexpr double kAngleFloor = 1e-7;

void require_open_unit(double alpha_bar) {
    if (!(alpha_bar > 0.0 && alpha_bar < 1.0)) {
        throw std::invalid_argument("alpha_bar must lie in (0,1), got " + std::to_string(alpha_bar));
    }
}

void require_same_length(const Vector& a, const Vector& b, const char* what) {
    if (a.size() != b.size()) {
        throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
    }
}

void require_omega(double omega) {
    if (!(omega >= 1.0)) throw std::invalid_argument("guidance weight omega must be >= 1");
}

constexpr std::array<std::pair<Strategy, const char*>, 10> kStrategyNames{{
    {Strategy::conditional, "conditional"},
    {Strategy::cfg, "cfg"},
    {Strategy::adg, "adg"},
    {Strategy::adg_no_cap, "adg_no_cap"},
    {Strategy::adg_normalized, "adg_normalized"},
    {Strategy::adg_simplified, "adg_simplified"},
    {Strategy::cfgpp, "cfgpp"},
    {Strategy::apg, "apg"},
    {Strategy::recfg, "recfg"},
    {Strategy::pcg, "pcg"},
}};

}  // namespace

void PredictionPair::validate() const {
    require_same_length(x0_cond, x0_uncond, "prediction pair");
    require_same_length(x0_cond, x_t, "prediction pair");
    require_open_unit(alpha_bar_t);
}

std::string to_string(Strategy s) {
    for (const auto& [value, name] : kStrategyNames) {
        if (value == s) return name;
    }
    return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
    for (const auto& [value, n] : kStrategyNames) {
        if (name == n) return value;
    }
    std::string known;
    for (const auto& [value, n] : kStrategyNames) known += (known.empty() ? "" : ", ") + std::string(n);
    throw std::invalid_argument("unknown strategy '" + name + "' (expected one of: " + known + ")");
}

const std::vector<Strategy>& all_strategies() {
    static const std::vector<Strategy> all = [] {
        std::vector<Strategy> v;
        for (const auto& [value, name] : kStrategyNames) v.push_back(value);
        return v;
    }();
    return all;
}

std::string to_string(RenoiseMode m) { return m == RenoiseMode::standard ? "standard" : "paper_literal"; }
std::string to_string(LangevinMode m) {
    return m == LangevinMode::paper_literal ? "paper_literal" : "score_consistent";
}

RenoiseMode renoise_mode_from_string(const std::string& name) {
    if (name == "standard") return RenoiseMode::standard;
    if (name == "paper_literal") return RenoiseMode::paper_literal;
    throw std::invalid_argument("unknown renoise mode '" + name + "' (expected standard or paper_literal)");
}

LangevinMode langevin_mode_from_string(const std::string& name) {
    if (name == "paper_literal") return LangevinMode::paper_literal;
    if (name == "score_consistent") return LangevinMode::score_consistent;
    throw std::invalid_argument("unknown langevin mode '" + name +
                                "' (expected paper_literal or score_consistent)");
}

void GuidanceConfig::validate() const {
    require_omega(omega);
    if (!(angle_cap > 0.0 && angle_cap <= std::numbers::pi)) {
        throw std::invalid_argument("angle_cap must lie in (0, pi]");
    }
    if (!(cfgpp_lambda > 0.0 && cfgpp_lambda <= 1.0)) throw std::invalid_argument("cfgpp lambda must lie in (0,1]");
    // eta = 1, beta = 0 is admitted: it is the reduction to plain CFG.
    if (!(apg.eta >= 0.0 && apg.eta <= 1.0)) throw std::invalid_argument("apg eta must lie in [0,1]");
    if (!(apg.beta <= 0.0)) throw std::invalid_argument("apg beta must be non-positive");
    if (!(apg.r > 0.0)) throw std::invalid_argument("apg r must be positive");
    if (!std::isfinite(recfg_lambda)) throw std::invalid_argument("recfg lambda must be finite");
}

double GuidanceConfig::recfg_lambda_for(std::size_t condition) const {
    if (condition < recfg_table.size()) return recfg_table[condition];
    return recfg_lambda;
}

Vector x0_from_eps(const Vector& x_t, const Vector& eps, double alpha_bar) {
    require_open_unit(alpha_bar);
    require_same_length(x_t, eps, "x0_from_eps");
    return (x_t - std::sqrt(1.0 - alpha_bar) * eps) / std::sqrt(alpha_bar);
}

Vector eps_from_x0(const Vector& x_t, const Vector& x0, double alpha_bar) {
    require_open_unit(alpha_bar);
    require_same_length(x_t, x0, "eps_from_x0");
    return (x_t - std::sqrt(alpha_bar) * x0) / std::sqrt(1.0 - alpha_bar);
}

std::optional<double> angle_between(const Vector& u, const Vector& v) {
    require_same_length(u, v, "angle_between");
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu < kNormFloor || nv < kNormFloor) return std::nullopt;
    const double cosine = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
    return std::acos(cosine);
}

double cap_angle(double raw, double cap) {
    if (!(raw >= 0.0)) throw std::invalid_argument("raw angle must be non-negative");
    if (!(cap > 0.0)) throw std::invalid_argument("angle cap must be positive");
    return std::min(raw, cap);
}

Rotation adg_rotation(const PredictionPair& pair, double omega, double angle_cap) {
    require_same_length(pair.x0_cond, pair.x0_uncond, "adg_rotation");
    require_omega(omega);
    Rotation out;
    out.x0 = pair.x0_cond;

    const auto gamma = angle_between(pair.x0_uncond, pair.x0_cond);
    if (!gamma) {
        out.degenerate = true;
        return out;
    }
    out.gamma = *gamma;
    if (out.gamma < kAngleFloor) {
        out.degenerate = true;
        return out;
    }
    out.gamma_omega = cap_angle((omega - 1.0) * out.gamma, angle_cap);
    if (out.gamma_omega == 0.0) return out;

    // Component of x0_cond orthogonal to x0_uncond, rescaled to |x0_cond|.
    // |perp| = |x0_cond| sin(gamma), so this is perp / sin(gamma).
    const Vector& c = pair.x0_cond;
    const Vector& u = pair.x0_uncond;
    const Vector perp = c - (u.dot(c) / u.squaredNorm()) * u;
    const double perp_norm = perp.norm();
    if (perp_norm == 0.0) {
        out.degenerate = true;
        out.gamma_omega = 0.0;
        return out;
    }
    const Vector assist = perp * (c.norm() / perp_norm);
    out.x0 = std::cos(out.gamma_omega) * c + std::sin(out.gamma_omega) * assist;
    return out;
}

Vector adg_rotate(const PredictionPair& pair, double omega, double angle_cap) {
    return adg_rotation(pair, omega, angle_cap).x0;
}

Vector adg_no_cap(const PredictionPair& pair, double omega) {
    return adg_rotation(pair, omega, std::numeric_limits<double>::infinity()).x0;
}

Vector adg_normalized(const PredictionPair& pair, double omega, double angle_cap) {
    const Rotation rot = adg_rotation(pair, omega, angle_cap);
    const double n = rot.x0.norm();
    if (n < kNormFloor) return pair.x0_cond;
    return rot.x0 * (pair.x0_cond.norm() / n);
}

Vector adg_simplified(const PredictionPair& pair, double omega) {
    const Vector cfg = cfg_combine(pair, omega);
    const double n = cfg.norm();
    if (n < kNormFloor) return pair.x0_cond;
    return cfg * (pair.x0_cond.norm() / n);
}

Vector cfg_combine(const PredictionPair& pair, double omega) {
    require_same_length(pair.x0_cond, pair.x0_uncond, "cfg_combine");
    return pair.x0_cond + (omega - 1.0) * (pair.x0_cond - pair.x0_uncond);
}

Vector apg_update(const PredictionPair& pair, double omega, const ApgParams& params, ApgState& state) {
    require_same_length(pair.x0_cond, pair.x0_uncond, "apg_update");
    const Vector& c = pair.x0_cond;
    Vector delta = c - pair.x0_uncond;

    const double c_sq = c.squaredNorm();
    Vector parallel = Vector::Zero(c.size());
    if (std::sqrt(c_sq) >= kNormFloor) parallel = (delta.dot(c) / c_sq) * c;
    const Vector orthogonal = delta - parallel;
    delta = params.eta * parallel + orthogonal;

    const double n = delta.norm();
    if (n > 0.0) delta *= std::min(1.0, params.r / n);

    if (state.momentum.size() != delta.size()) state.momentum = Vector::Zero(delta.size());
    state.momentum = delta - params.beta * state.momentum;
    return c + (omega - 1.0) * state.momentum;
}

Vector recfg_combine(const Vector& eps_cond, const Vector& eps_uncond, double omega, double lambda) {
    require_same_length(eps_cond, eps_uncond, "recfg_combine");
    return lambda * (1.0 - omega) * eps_uncond + omega * eps_cond;
}

CfgppPredictions cfgpp_predictions(const Vector& eps_cond, const Vector& eps_uncond, double lambda,
                                   const Vector& x_t, double alpha_bar) {
    require_same_length(eps_cond, eps_uncond, "cfgpp_predictions");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("cfgpp lambda must lie in (0,1]");
    const Vector mixed = (1.0 - lambda) * eps_uncond + lambda * eps_cond;
    return {x0_from_eps(x_t, mixed, alpha_bar), eps_uncond};
}

}  // namespace guidance_lab
