#include "guidance_lab/samplers.hpp"

#include "guidance_lab/noise.hpp"
#include "guidance_lab/parallel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace guidance_lab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kInitSubstream = 0;
constexpr double kFlowStdFloor = 1e-9;

void require_order(double alpha_bar_t, double alpha_bar_prev, bool strict) {
    const bool ordered = strict ? alpha_bar_t < alpha_bar_prev : alpha_bar_t <= alpha_bar_prev;
    if (!(alpha_bar_t > 0.0) || !ordered || !(alpha_bar_prev <= 1.0)) {
        throw std::invalid_argument("alpha_bar ordering violated: need 0 < abar_t " +
                                    std::string(strict ? "<" : "<=") + " abar_prev <= 1 (got " +
                                    std::to_string(alpha_bar_t) + ", " + std::to_string(alpha_bar_prev) + ")");
    }
}

void require_grid(const TimeGrid& grid) {
    if (grid.steps() == 0 || grid.alpha_bars.size() != grid.times.size()) {
        throw std::invalid_argument("time grid must hold at least one step with matching alpha_bar entries");
    }
}

void require_finite(const Vector& v) {
    if (!v.allFinite()) throw std::runtime_error("state became non-finite");
}

double angle_or_nan(const Vector& u, const Vector& v) { return angle_between(u, v).value_or(kNaN); }

}  // namespace

SamplingError::SamplingError(std::size_t step, const std::string& what)
    : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}

std::string to_string(SamplerKind k) { return k == SamplerKind::ddim ? "ddim" : "ddpm"; }

SamplerKind sampler_kind_from_string(const std::string& name) {
    if (name == "ddim") return SamplerKind::ddim;
    if (name == "ddpm") return SamplerKind::ddpm;
    throw std::invalid_argument("unknown sampler '" + name + "' (expected ddim or ddpm)");
}

Vector ddim_step(const Vector& x_t, const Vector& x0_hat, double alpha_bar_t, double alpha_bar_prev,
                 RenoiseMode mode) {
    require_order(alpha_bar_t, alpha_bar_prev, true);
    if (x_t.size() != x0_hat.size()) throw DimensionError("ddim_step: length mismatch");
    if (alpha_bar_prev == 1.0) return x0_hat;
    const double renoise = mode == RenoiseMode::standard ? std::sqrt(alpha_bar_t) : alpha_bar_t;
    return std::sqrt(alpha_bar_prev) * x0_hat +
           std::sqrt(1.0 - alpha_bar_prev) * (x_t - renoise * x0_hat) / std::sqrt(1.0 - alpha_bar_t);
}

Vector ddpm_step(const Vector& x_t, const Vector& score, double alpha_bar_t, double alpha_bar_prev,
                 const Vector& noise) {
    require_order(alpha_bar_t, alpha_bar_prev, false);
    if (x_t.size() != score.size() || x_t.size() != noise.size()) throw DimensionError("ddpm_step: length mismatch");
    const double ratio = alpha_bar_t / alpha_bar_prev;
    return std::sqrt(alpha_bar_prev / alpha_bar_t) * x_t + (1.0 - ratio) * score + std::sqrt(1.0 - ratio) * noise;
}

Vector initial_state(std::uint64_t seed, std::size_t dim) {
    return NoiseStream(seed).normal(0, kInitSubstream, dim);
}

namespace {

struct StepOutcome {
    Vector next;
    StepRecord record;
};

StepOutcome guided_step(const GaussianMixture& gmm, const GuidanceConfig& config, std::size_t condition,
                        SamplerKind kind, const NoiseStream& noise, std::size_t step, double t, double ab,
                        double ab_prev, const Vector& x, ApgState& apg_state) {
    StepRecord rec;
    rec.t = t;
    rec.alpha_bar = ab;
    rec.x_t = x;
    rec.x0_cond = posterior_mean_x0(gmm, x, ab, condition);
    rec.x0_uncond = config.strategy == Strategy::conditional ? rec.x0_cond : posterior_mean_x0(gmm, x, ab);
    rec.gamma = angle_or_nan(rec.x0_uncond, rec.x0_cond);
    const PredictionPair pair{rec.x0_cond, rec.x0_uncond, x, ab};

    std::optional<Vector> renoise_eps;
    switch (config.strategy) {
        case Strategy::conditional: rec.x0_guided = rec.x0_cond; break;
        case Strategy::cfg: rec.x0_guided = cfg_combine(pair, config.omega); break;
        case Strategy::adg:
        case Strategy::adg_no_cap: {
            const double cap = config.strategy == Strategy::adg ? config.angle_cap
                                                                : std::numeric_limits<double>::infinity();
            Rotation rot = adg_rotation(pair, config.omega, cap);
            rec.gamma_omega = rot.gamma_omega;
            rec.x0_guided = std::move(rot.x0);
            break;
        }
        case Strategy::adg_normalized: {
            rec.gamma_omega = adg_rotation(pair, config.omega, config.angle_cap).gamma_omega;
            rec.x0_guided = adg_normalized(pair, config.omega, config.angle_cap);
            break;
        }
        case Strategy::adg_simplified: rec.x0_guided = adg_simplified(pair, config.omega); break;
        case Strategy::apg: rec.x0_guided = apg_update(pair, config.omega, config.apg, apg_state); break;
        case Strategy::recfg: {
            const Vector eps_c = eps_from_x0(x, rec.x0_cond, ab);
            const Vector eps_u = eps_from_x0(x, rec.x0_uncond, ab);
            const Vector eps = recfg_combine(eps_c, eps_u, config.omega, config.recfg_lambda_for(condition));
            rec.x0_guided = x0_from_eps(x, eps, ab);
            break;
        }
        case Strategy::cfgpp: {
            const Vector eps_c = eps_from_x0(x, rec.x0_cond, ab);
            const Vector eps_u = eps_from_x0(x, rec.x0_uncond, ab);
            auto preds = cfgpp_predictions(eps_c, eps_u, config.cfgpp_lambda, x, ab);
            rec.x0_guided = std::move(preds.x0_denoise);
            renoise_eps = std::move(preds.eps_renoise);
            if (auto audit = cfgpp_equivalence(x, eps_c, eps_u, config.cfgpp_lambda, ab, ab_prev)) {
                rec.cfgpp_residual = audit->residual;
            }
            break;
        }
        case Strategy::pcg: throw std::invalid_argument("pcg is driven by pcg_sample");
    }
    rec.guided_norm = rec.x0_guided.norm();

    Vector next;
    if (kind == SamplerKind::ddpm) {
        // Guided prediction turned back into a score via the posterior-mean identity.
        const Vector score = (std::sqrt(ab) * rec.x0_guided - x) / (1.0 - ab);
        next = ddpm_step(x, score, ab, ab_prev, noise.normal(step + 1, 1, x.size()));
    } else if (renoise_eps) {
        require_order(ab, ab_prev, true);
        next = std::sqrt(ab_prev) * rec.x0_guided + std::sqrt(1.0 - ab_prev) * *renoise_eps;
    } else {
        next = ddim_step(x, rec.x0_guided, ab, ab_prev, config.renoise);
    }
    require_finite(next);
    return {std::move(next), std::move(rec)};
}

}  // namespace

TrajectoryRecord sample_trajectory(const GaussianMixture& gmm, const TimeGrid& grid, const GuidanceConfig& config,
                                   std::size_t condition, std::uint64_t seed, SamplerKind kind) {
    if (config.strategy == Strategy::pcg) {
        return pcg_sample(gmm, grid, config.omega, config.pcg_inner_steps, condition, seed, config.pcg_mode);
    }
    require_grid(grid);
    if (condition >= gmm.size()) throw std::out_of_range("condition index out of range");

    const NoiseStream noise(seed);
    TrajectoryRecord out;
    out.seed = seed;
    out.steps.reserve(grid.steps());
    Vector x = initial_state(seed, gmm.dim());
    ApgState apg_state;

    for (std::size_t i = 0; i < grid.steps(); ++i) {
        try {
            auto [next, rec] = guided_step(gmm, config, condition, kind, noise, i, grid.times[i], grid.alpha_bars[i],
                                           grid.alpha_bars[i + 1], x, apg_state);
            out.steps.push_back(std::move(rec));
            x = std::move(next);
        } catch (const std::exception& e) {
            throw SamplingError(i, e.what());
        }
    }
    out.x_final = std::move(x);
    return out;
}

TrajectoryBatch sample_batch(const GaussianMixture& gmm, const NoiseSchedule& schedule, const TimeGrid& grid,
                             const GuidanceConfig& config, std::size_t condition,
                             const std::vector<std::uint64_t>& seeds, SamplerKind kind) {
    TrajectoryBatch batch{gmm, schedule, grid, config, condition, {}};
    batch.records.resize(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
        batch.records[i] = sample_trajectory(gmm, grid, config, condition, seeds[i], kind);
    });
    return batch;
}

double pcg_kappa(double alpha_bar_t, double alpha_bar_prev) {
    require_order(alpha_bar_t, alpha_bar_prev, false);
    return 1.0 - alpha_bar_t / alpha_bar_prev;
}

Vector pcg_corrector_step(const GaussianMixture& gmm, const Vector& x, double alpha_bar, double kappa, double omega,
                          std::size_t condition, LangevinMode mode, const Vector& noise) {
    if (!(kappa >= 0.0)) throw std::invalid_argument("corrector step size must be non-negative");
    const Vector eps_c = eps_from_x0(x, posterior_mean_x0(gmm, x, alpha_bar, condition), alpha_bar);
    const Vector eps_u = eps_from_x0(x, posterior_mean_x0(gmm, x, alpha_bar), alpha_bar);
    const Vector eps = (1.0 - omega) * eps_u + omega * eps_c;
    const double beta_bar = 1.0 - alpha_bar;
    const double scale = mode == LangevinMode::paper_literal ? beta_bar : std::sqrt(beta_bar);
    return x - (0.5 * kappa / scale) * eps + std::sqrt(kappa) * noise;
}

TrajectoryRecord pcg_sample(const GaussianMixture& gmm, const TimeGrid& grid, double omega, std::size_t inner_steps,
                            std::size_t condition, std::uint64_t seed, LangevinMode mode) {
    require_grid(grid);
    if (!(omega >= 1.0)) throw std::invalid_argument("guidance weight omega must be >= 1");
    if (condition >= gmm.size()) throw std::out_of_range("condition index out of range");

    const NoiseStream noise(seed);
    TrajectoryRecord out;
    out.seed = seed;
    Vector x = initial_state(seed, gmm.dim());

    for (std::size_t i = 0; i < grid.steps(); ++i) {
        try {
            const double ab = grid.alpha_bars[i];
            const double ab_prev = grid.alpha_bars[i + 1];
            StepRecord rec;
            rec.t = grid.times[i];
            rec.alpha_bar = ab;
            rec.x_t = x;
            rec.x0_cond = posterior_mean_x0(gmm, x, ab, condition);
            rec.x0_uncond = posterior_mean_x0(gmm, x, ab);
            rec.gamma = angle_or_nan(rec.x0_uncond, rec.x0_cond);
            rec.x0_guided = rec.x0_cond;
            rec.guided_norm = rec.x0_guided.norm();

            Vector next = ddim_step(x, rec.x0_cond, ab, ab_prev);
            if (ab_prev < 1.0) {
                const double kappa = pcg_kappa(ab, ab_prev);
                for (std::size_t k = 0; k < inner_steps; ++k) {
                    next = pcg_corrector_step(gmm, next, ab_prev, kappa, omega, condition, mode,
                                              noise.normal(i + 1, k + 1, gmm.dim()));
                }
            }
            require_finite(next);
            out.steps.push_back(std::move(rec));
            x = std::move(next);
        } catch (const std::exception& e) {
            throw SamplingError(i, e.what());
        }
    }
    out.x_final = std::move(x);
    return out;
}

std::optional<double> cfgpp_equivalent_weight(double lambda, double alpha_bar_t, double alpha_bar_prev) {
    const double num = std::sqrt((1.0 - alpha_bar_t) * alpha_bar_prev);
    const double den = num - std::sqrt((1.0 - alpha_bar_prev) * alpha_bar_t);
    if (std::abs(den) < 1e-14) return std::nullopt;
    return lambda * num / den;
}

std::optional<CfgppAudit> cfgpp_equivalence(const Vector& x_t, const Vector& eps_cond, const Vector& eps_uncond,
                                            double lambda, double alpha_bar_t, double alpha_bar_prev) {
    require_order(alpha_bar_t, alpha_bar_prev, true);
    const auto omega_t = cfgpp_equivalent_weight(lambda, alpha_bar_t, alpha_bar_prev);
    if (!omega_t) return std::nullopt;

    CfgppAudit audit;
    audit.omega_t = *omega_t;
    const auto preds = cfgpp_predictions(eps_cond, eps_uncond, lambda, x_t, alpha_bar_t);
    audit.cfgpp_next = std::sqrt(alpha_bar_prev) * preds.x0_denoise + std::sqrt(1.0 - alpha_bar_prev) * preds.eps_renoise;

    const Vector eps_cfg = eps_uncond + audit.omega_t * (eps_cond - eps_uncond);
    audit.cfg_next = ddim_step(x_t, x0_from_eps(x_t, eps_cfg, alpha_bar_t), alpha_bar_t, alpha_bar_prev);
    audit.residual = (audit.cfgpp_next - audit.cfg_next).lpNorm<Eigen::Infinity>();
    return audit;
}

Vector flow_euler_step(const Vector& x_t, const Vector& x1_hat, double t, double dt, double sigma_min) {
    if (x_t.size() != x1_hat.size()) throw DimensionError("flow_euler_step: length mismatch");
    const double std_t = 1.0 - (1.0 - sigma_min) * t;
    if (!(std_t > kFlowStdFloor)) throw std::domain_error("flow path std underflow near t = 1");
    const Vector velocity = (x1_hat - (1.0 - sigma_min) * x_t) / std_t;
    return x_t + dt * velocity;
}

Vector flow_posterior_mean(const GaussianMixture& gmm, const Vector& x, double t, double sigma_min,
                           Condition condition) {
    require_dim(x, gmm.dim(), "x");
    const FlowStats stats = flow_stats(FlowPath{sigma_min}, t);
    const double var = stats.std * stats.std;
    if (!(var > 0.0)) throw std::domain_error("flow path std is zero");
    const double precision = 1.0 + t * t / var;
    auto component_mean = [&](std::size_t c) -> Vector {
        return (gmm.means()[c] + (t / var) * x) / precision;
    };
    if (condition) {
        if (*condition >= gmm.size()) throw std::out_of_range("condition index out of range");
        return component_mean(*condition);
    }
    // Component responsibilities under x_t | c ~ N(t mu_c, (t^2 + var) I).
    const double marginal_var = t * t + var;
    std::vector<double> logw(gmm.size());
    double max_logw = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < gmm.size(); ++c) {
        logw[c] = std::log(gmm.weights()[c]) - (x - t * gmm.means()[c]).squaredNorm() / (2.0 * marginal_var);
        max_logw = std::max(max_logw, logw[c]);
    }
    double total = 0.0;
    for (double& w : logw) {
        w = std::exp(w - max_logw);
        total += w;
    }
    Vector acc = Vector::Zero(x.size());
    for (std::size_t c = 0; c < gmm.size(); ++c) acc += (logw[c] / total) * component_mean(c);
    return acc;
}

TrajectoryRecord flow_sample_adg(const GaussianMixture& gmm, const FlowPath& path, std::size_t steps, double omega,
                                 double angle_cap, std::size_t condition, std::uint64_t seed) {
    path.validate();
    if (steps == 0) throw std::invalid_argument("flow sampling needs at least one step");
    if (condition >= gmm.size()) throw std::out_of_range("condition index out of range");

    TrajectoryRecord out;
    out.seed = seed;
    out.steps.reserve(steps);
    Vector x = initial_state(seed, gmm.dim());
    const double dt = 1.0 / static_cast<double>(steps);

    for (std::size_t i = 0; i < steps; ++i) {
        try {
            const double t = static_cast<double>(i) * dt;
            StepRecord rec;
            rec.t = t;
            rec.alpha_bar = kNaN;
            rec.x_t = x;
            rec.x0_cond = flow_posterior_mean(gmm, x, t, path.sigma_min, condition);
            rec.x0_uncond = flow_posterior_mean(gmm, x, t, path.sigma_min);
            Rotation rot = adg_rotation(PredictionPair{rec.x0_cond, rec.x0_uncond, x, 0.5}, omega, angle_cap);
            rec.gamma = angle_or_nan(rec.x0_uncond, rec.x0_cond);
            rec.gamma_omega = rot.gamma_omega;
            rec.x0_guided = std::move(rot.x0);
            rec.guided_norm = rec.x0_guided.norm();
            Vector next = flow_euler_step(x, rec.x0_guided, t, dt, path.sigma_min);
            require_finite(next);
            out.steps.push_back(std::move(rec));
            x = std::move(next);
        } catch (const std::exception& e) {
            throw SamplingError(i, e.what());
        }
    }
    out.x_final = std::move(x);
    return out;
}

}  // namespace guidance_lab
