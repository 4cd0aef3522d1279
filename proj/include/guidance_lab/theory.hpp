#pragma once

// Numeric certifiers for the guidance theory: the anomalous-diffusion set M_t
// and its radius C1, CFG norm amplification along a surface normal, the ADG
// norm bound, and the desk-scale norm-sweep and scatter experiments.

#include "guidance_lab/guidance.hpp"
#include "guidance_lab/mixture.hpp"
#include "guidance_lab/samplers.hpp"
#include "guidance_lab/schedule.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace guidance_lab {

enum class Verdict { pass, fail, not_applicable };

std::string to_string(Verdict v);

struct ProbeReport {
    std::string name;
    std::map<std::string, std::string> parameters;
    Verdict verdict = Verdict::pass;
    std::map<std::string, double> measured;
    double tolerance = 0.0;
    std::vector<std::string> notes;

    // Raw measurements, one row per probed item.
    std::vector<std::string> csv_header;
    std::vector<std::vector<double>> csv_rows;

    // N/A counts as passing for suite exit codes.
    bool passed() const { return verdict != Verdict::fail; }
};

std::string report_to_json(const ProbeReport& report);
std::string reports_to_json(const std::vector<ProbeReport>& reports);

struct Membership {
    bool member = false;
    double dot = 0.0;  // s_cfg^T grad log p_t(x | c*)
};

// Sign test of the CFG score against the conditional score of the certified
// class, at noise level alpha_bar.
Membership mt_membership(const GaussianMixture& gmm, const SurfaceCertificate& cert, const Vector& x,
                         double alpha_bar, double omega);

// Point sqrt(abar) mu_{c*} + k w.
Vector outward_point(const GaussianMixture& gmm, const SurfaceCertificate& cert, double alpha_bar, double k);

inline constexpr std::size_t kC1GridPoints = 64;
inline constexpr double kC1GridStart = 1e-6;

// Largest k <= k_max with every probed k' in (0, k] inside M_t: a geometric
// grid finds the first failure, bisection refines it to bisection_tol.
// Returns 0 when the smallest grid point already fails.
double estimate_c1(const GaussianMixture& gmm, const SurfaceCertificate& cert, double alpha_bar, double omega,
                   double k_max = 4.0, double bisection_tol = 1e-8);

// C1 over several weights; passes when each C1 is positive, strictly
// increasing by more than bisection_tol, and k = 1.01 C1 is outside M_t.
ProbeReport c1_probe(const GaussianMixture& gmm, std::size_t condition, double alpha_bar,
                     const std::vector<double>& omegas, double k_max = 4.0, double bisection_tol = 1e-8);

inline constexpr double kMarginFloor = 1e-9;

struct AmplificationMargins {
    std::vector<std::uint64_t> seeds;
    std::vector<double> margins;  // w^T x0(cfg) - w^T x0(cond), per seed
};

// Integrates conditional and CFG DDIM trajectories from the same x_T.
AmplificationMargins amplification_margins(const GaussianMixture& gmm, const SurfaceCertificate& cert,
                                           const TimeGrid& grid, double omega,
                                           const std::vector<std::uint64_t>& seeds);

// Not applicable at omega == 1 (the trajectories coincide).
ProbeReport norm_amplification_check(const GaussianMixture& gmm, const SurfaceCertificate& cert,
                                     const TimeGrid& grid, double omega, const std::vector<std::uint64_t>& seeds,
                                     double margin_floor = kMarginFloor);

struct Prop1Sample {
    double ratio = 1.0;           // |adg| / |x0c|
    double predicted_ratio = 1.0; // sqrt(1 + sin(2 gamma_w) <assist, x0c> / |x0c|^2)
    double gamma = 0.0;
    double gamma_omega = 0.0;
};

// Ratio and its closed form for one pair; the assist direction is rebuilt
// here independently of the rotation routine.
Prop1Sample prop1_measure(const Vector& x0_cond, const Vector& x0_uncond, double omega,
                          double angle_cap = kDefaultAngleCap);

ProbeReport prop1_stress(std::size_t trials, const std::vector<std::size_t>& dims,
                         std::pair<double, double> norm_range, std::uint64_t seed,
                         double angle_cap = kDefaultAngleCap);

struct SweepRow {
    Strategy strategy = Strategy::cfg;
    double omega = 1.0;
    double mean_norm = 0.0;
    double std_norm = 0.0;
    std::size_t count = 0;
};

// Mean and standard deviation of |x0| per (strategy, omega); other guidance
// fields come from `base`.
std::vector<SweepRow> norm_sweep(const GaussianMixture& gmm, const NoiseSchedule& schedule, const TimeGrid& grid, const GuidanceConfig& base,
                                 const std::vector<Strategy>& strategies, const std::vector<double>& omegas,
                                 std::size_t condition, const std::vector<std::uint64_t>& seeds);

// CFG strictly increasing in omega; ADG at the largest omega within
// adg_factor of its omega = 1 value; omega = 1 rows agree across strategies.
ProbeReport sweep_report(const std::vector<SweepRow>& rows, double adg_factor = 1.5);

struct ScatterComponent {
    std::size_t component = 0;
    std::vector<Vector> samples;
    Vector centroid;
    double drift = 0.0;        // |centroid - mu_c|
    Vector centroid_se;        // per-coordinate standard error
    bool surface = false;
};

struct ScatterSet {
    double omega = 1.0;
    std::vector<ScatterComponent> components;
};

std::vector<ScatterSet> scatter_experiment(const GaussianMixture& gmm, const NoiseSchedule& schedule, const TimeGrid& grid,
                                           const GuidanceConfig& base, const std::vector<double>& omegas,
                                           std::size_t seeds_per_class, std::uint64_t first_seed = 0);

// omega = 1 centroids within 3 SE of the means; surface drift increasing in
// omega; interior components show no significant displacement along any
// surface normal.
ProbeReport scatter_report(const GaussianMixture& gmm, const std::vector<ScatterSet>& sets);

// Seeds first, first+1, ..., first+count-1.
std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count);

}  // namespace guidance_lab
