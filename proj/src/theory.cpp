#include "guidance_lab/theory.hpp"

#include "guidance_lab/parallel.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace guidance_lab {

namespace {

std::string fmt_list(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt::format("{}", v[i]);
    return out + "]";
}

std::string fmt_seeds(const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) return "[]";
    return fmt::format("{} seeds [{}..{}]", seeds.size(), seeds.front(), seeds.back());
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
    MeanStd out;
    if (v.empty()) return out;
    out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - out.mean) * (x - out.mean);
        out.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return out;
}

void require_surface(const GaussianMixture& gmm, const SurfaceCertificate& cert) {
    if (cert.component_index >= gmm.size() || !certificate_holds(gmm, cert)) {
        throw std::invalid_argument("certificate does not certify a surface class of this mixture");
    }
}

GuidanceConfig with(GuidanceConfig base, Strategy strategy, double omega) {
    base.strategy = strategy;
    base.omega = omega;
    return base;
}

}  // namespace

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::not_applicable: return "not_applicable";
    }
    return "unknown";
}

namespace {

nlohmann::ordered_json report_json(const ProbeReport& r) {
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["verdict"] = to_string(r.verdict);
    j["tolerance"] = r.tolerance;
    j["parameters"] = r.parameters;
    nlohmann::ordered_json measured = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.measured) {
        if (std::isfinite(v)) {
            measured[k] = v;
        } else {
            measured[k] = nullptr;
        }
    }
    j["measured"] = measured;
    j["notes"] = r.notes;
    return j;
}

}  // namespace

std::string report_to_json(const ProbeReport& report) { return report_json(report).dump(2) + "\n"; }

std::string reports_to_json(const std::vector<ProbeReport>& reports) {
    nlohmann::ordered_json j;
    bool ok = true;
    j["probes"] = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        ok = ok && r.passed();
        j["probes"].push_back(report_json(r));
    }
    j["passed"] = ok;
    return j.dump(2) + "\n";
}

Vector outward_point(const GaussianMixture& gmm, const SurfaceCertificate& cert, double alpha_bar, double k) {
    return std::sqrt(alpha_bar) * gmm.mean(cert.component_index) + k * cert.normal;
}

Membership mt_membership(const GaussianMixture& gmm, const SurfaceCertificate& cert, const Vector& x,
                         double alpha_bar, double omega) {
    const Vector s_c = score_conditional(gmm, x, alpha_bar, cert.component_index);
    const Vector s_u = score_unconditional(gmm, x, alpha_bar);
    const Vector s_cfg = omega * s_c + (1.0 - omega) * s_u;
    const double dot = s_cfg.dot(s_c);
    return {dot <= 0.0, dot};
}

double estimate_c1(const GaussianMixture& gmm, const SurfaceCertificate& cert, double alpha_bar, double omega,
                   double k_max, double bisection_tol) {
    require_surface(gmm, cert);
    if (!(omega > 1.0)) throw std::invalid_argument("C1 estimation needs omega > 1");
    if (!(k_max > kC1GridStart)) throw std::invalid_argument("k_max must exceed the grid start");
    if (!(bisection_tol > 0.0)) throw std::invalid_argument("bisection tolerance must be positive");
    auto member = [&](double k) { return mt_membership(gmm, cert, outward_point(gmm, cert, alpha_bar, k), alpha_bar, omega).member; };

    const double ratio = std::pow(k_max / kC1GridStart, 1.0 / static_cast<double>(kC1GridPoints - 1));
    double lo = 0.0;
    double hi = -1.0;
    for (std::size_t i = 0; i < kC1GridPoints; ++i) {
        const double k = i + 1 == kC1GridPoints ? k_max : kC1GridStart * std::pow(ratio, static_cast<double>(i));
        if (!member(k)) {
            hi = k;
            break;
        }
        lo = k;
    }
    if (hi < 0.0) return k_max;
    if (lo == 0.0) return 0.0;
    while (hi - lo > bisection_tol) {
        const double mid = 0.5 * (lo + hi);
        (member(mid) ? lo : hi) = mid;
    }
    return lo;
}

ProbeReport c1_probe(const GaussianMixture& gmm, std::size_t condition, double alpha_bar,
                     const std::vector<double>& omegas, double k_max, double bisection_tol) {
    ProbeReport r;
    r.name = "anomalous_diffusion_c1";
    r.tolerance = bisection_tol;
    r.parameters = {{"condition", std::to_string(condition)},
                    {"alpha_bar", fmt::format("{}", alpha_bar)},
                    {"omegas", fmt_list(omegas)},
                    {"k_max", fmt::format("{}", k_max)},
                    {"grid", fmt::format("{} geometric points from {}", kC1GridPoints, kC1GridStart)}};
    r.csv_header = {"omega", "c1", "dot_at_c1", "dot_above_c1"};

    const SurfaceQuery q = surface_certificate(gmm, condition);
    if (!q.is_surface()) {
        r.verdict = Verdict::fail;
        r.notes.push_back("condition " + std::to_string(condition) + " is not a surface class (" + q.status + ")");
        r.measured["hull_distance"] = q.hull_distance;
        return r;
    }
    const SurfaceCertificate& cert = *q.certificate;

    std::vector<double> sorted = omegas;
    std::sort(sorted.begin(), sorted.end());
    bool ok = true;
    double prev = -1.0;
    for (double omega : sorted) {
        const double c1 = estimate_c1(gmm, cert, alpha_bar, omega, k_max, bisection_tol);
        const auto at = mt_membership(gmm, cert, outward_point(gmm, cert, alpha_bar, c1), alpha_bar, omega);
        const auto above = mt_membership(gmm, cert, outward_point(gmm, cert, alpha_bar, 1.01 * c1), alpha_bar, omega);
        r.csv_rows.push_back({omega, c1, at.dot, above.dot});
        r.measured[fmt::format("c1[omega={}]", omega)] = c1;
        if (!(c1 > 0.0)) {
            ok = false;
            r.notes.push_back(fmt::format("omega={}: C1 is not positive", omega));
        }
        if (c1 >= k_max) r.notes.push_back(fmt::format("omega={}: membership holds up to k_max", omega));
        if (above.member) {
            ok = false;
            r.notes.push_back(fmt::format("omega={}: k = 1.01 C1 is still inside M_t", omega));
        }
        if (prev >= 0.0 && !(c1 - prev > bisection_tol)) {
            ok = false;
            r.notes.push_back(fmt::format("omega={}: C1 does not exceed the previous weight's by the tolerance", omega));
        }
        prev = c1;
    }
    r.verdict = ok ? Verdict::pass : Verdict::fail;
    return r;
}

AmplificationMargins amplification_margins(const GaussianMixture& gmm, const SurfaceCertificate& cert,
                                           const TimeGrid& grid, double omega,
                                           const std::vector<std::uint64_t>& seeds) {
    require_surface(gmm, cert);
    GuidanceConfig cond_cfg;
    cond_cfg.strategy = Strategy::conditional;
    GuidanceConfig cfg_cfg;
    cfg_cfg.strategy = Strategy::cfg;
    cfg_cfg.omega = omega;
    cfg_cfg.validate();

    AmplificationMargins out;
    out.seeds = seeds;
    out.margins.resize(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
        const auto cond = sample_trajectory(gmm, grid, cond_cfg, cert.component_index, seeds[i]);
        const auto cfg = sample_trajectory(gmm, grid, cfg_cfg, cert.component_index, seeds[i]);
        out.margins[i] = cert.normal.dot(cfg.x_final) - cert.normal.dot(cond.x_final);
    });
    return out;
}

ProbeReport norm_amplification_check(const GaussianMixture& gmm, const SurfaceCertificate& cert,
                                     const TimeGrid& grid, double omega, const std::vector<std::uint64_t>& seeds,
                                     double margin_floor) {
    ProbeReport r;
    r.name = "norm_amplification";
    r.tolerance = margin_floor;
    r.parameters = {{"condition", std::to_string(cert.component_index)},
                    {"omega", fmt::format("{}", omega)},
                    {"steps", std::to_string(grid.steps())},
                    {"seeds", fmt_seeds(seeds)}};
    r.csv_header = {"seed", "margin"};

    const auto m = amplification_margins(gmm, cert, grid, omega, seeds);
    std::size_t failures = 0;
    for (std::size_t i = 0; i < m.seeds.size(); ++i) {
        r.csv_rows.push_back({static_cast<double>(m.seeds[i]), m.margins[i]});
        if (!(m.margins[i] > margin_floor)) {
            ++failures;
            if (omega > 1.0) r.notes.push_back(fmt::format("seed {}: margin {:.3e}", m.seeds[i], m.margins[i]));
        }
    }
    const auto stats = mean_std(m.margins);
    r.measured["mean_margin"] = stats.mean;
    r.measured["min_margin"] = m.margins.empty() ? 0.0 : *std::min_element(m.margins.begin(), m.margins.end());
    r.measured["failures"] = static_cast<double>(failures);

    if (omega == 1.0) {
        r.verdict = Verdict::not_applicable;
        r.notes.push_back("omega = 1: the guided and conditional trajectories coincide");
    } else {
        r.verdict = failures == 0 && !seeds.empty() ? Verdict::pass : Verdict::fail;
    }
    return r;
}

Prop1Sample prop1_measure(const Vector& x0_cond, const Vector& x0_uncond, double omega, double angle_cap) {
    const PredictionPair pair{x0_cond, x0_uncond, x0_cond, 0.5};
    const Rotation rot = adg_rotation(pair, omega, angle_cap);
    Prop1Sample s;
    const double nc = x0_cond.norm();
    s.ratio = rot.x0.norm() / nc;
    s.gamma = rot.gamma;
    s.gamma_omega = rot.gamma_omega;
    if (rot.degenerate || rot.gamma_omega == 0.0) return s;

    // Gram-Schmidt of x0_cond against x0_uncond, then scaled to |x0_cond|.
    const Vector u_hat = x0_uncond.normalized();
    const Vector perp = x0_cond - u_hat.dot(x0_cond) * u_hat;
    const Vector assist = perp.normalized() * nc;
    s.predicted_ratio = std::sqrt(1.0 + std::sin(2.0 * rot.gamma_omega) * assist.dot(x0_cond) / (nc * nc));
    return s;
}

ProbeReport prop1_stress(std::size_t trials, const std::vector<std::size_t>& dims,
                         std::pair<double, double> norm_range, std::uint64_t seed, double angle_cap) {
    if (dims.empty()) throw std::invalid_argument("prop1_stress needs at least one dimension");
    if (!(norm_range.first > 0.0 && norm_range.second >= norm_range.first)) {
        throw std::invalid_argument("norm range must satisfy 0 < lo <= hi");
    }
    ProbeReport r;
    r.name = "adg_norm_bound";
    r.tolerance = 1e-12;
    r.parameters = {{"trials", std::to_string(trials)},
                    {"norm_range", fmt::format("[{}, {}]", norm_range.first, norm_range.second)},
                    {"seed", std::to_string(seed)},
                    {"angle_cap", fmt::format("{}", angle_cap)}};
    std::string dim_list;
    for (auto d : dims) dim_list += (dim_list.empty() ? "" : ",") + std::to_string(d);
    r.parameters["dims"] = "[" + dim_list + "]";
    r.csv_header = {"dim", "gamma", "gamma_omega", "ratio", "predicted_ratio"};

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> norm_dist(norm_range.first, norm_range.second);
    std::uniform_real_distribution<double> omega_dist(1.0, 10.0);
    std::bernoulli_distribution near_parallel(0.1);

    const double bound = std::sqrt(2.0) * (1.0 + r.tolerance);
    double max_ratio = 0.0;
    double max_identity_gap = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
        const std::size_t d = dims[i % dims.size()];
        Vector c(static_cast<Eigen::Index>(d));
        Vector u(static_cast<Eigen::Index>(d));
        for (Eigen::Index j = 0; j < c.size(); ++j) c[j] = normal(rng);
        for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = normal(rng);
        // Some pairs nearly aligned, to exercise small angles.
        if (near_parallel(rng)) u = c + 1e-3 * u;
        c *= norm_dist(rng) / c.norm();
        u *= norm_dist(rng) / u.norm();
        const Prop1Sample s = prop1_measure(c, u, omega_dist(rng), angle_cap);
        max_ratio = std::max(max_ratio, s.ratio);
        max_identity_gap = std::max(max_identity_gap, std::abs(s.ratio - s.predicted_ratio));
        if (i < 1000) r.csv_rows.push_back({static_cast<double>(d), s.gamma, s.gamma_omega, s.ratio, s.predicted_ratio});
    }

    // Tightness witness: orthogonal pair rotated by exactly pi/4.
    Vector wc = Vector::Zero(2);
    Vector wu = Vector::Zero(2);
    wc[0] = 1.0;
    wu[1] = 1.0;
    const double witness = prop1_measure(wc, wu, 1.5, angle_cap).ratio;

    r.measured["max_ratio"] = max_ratio;
    r.measured["max_closed_form_gap"] = max_identity_gap;
    r.measured["witness_ratio"] = witness;
    bool ok = true;
    if (!(max_ratio <= bound)) {
        ok = false;
        r.notes.push_back(fmt::format("ratio {:.17g} exceeds sqrt(2)(1+1e-12)", max_ratio));
    }
    if (!(max_identity_gap <= 1e-9)) {
        ok = false;
        r.notes.push_back(fmt::format("closed-form norm identity off by {:.3e}", max_identity_gap));
    }
    if (!(std::abs(witness - std::sqrt(2.0)) <= 1e-12)) {
        ok = false;
        r.notes.push_back(fmt::format("tightness witness ratio {:.17g} differs from sqrt(2)", witness));
    }
    r.verdict = ok ? Verdict::pass : Verdict::fail;
    return r;
}

std::vector<SweepRow> norm_sweep(const GaussianMixture& gmm, const NoiseSchedule& schedule, const TimeGrid& grid, const GuidanceConfig& base,
                                 const std::vector<Strategy>& strategies, const std::vector<double>& omegas,
                                 std::size_t condition, const std::vector<std::uint64_t>& seeds) {
    std::vector<SweepRow> rows;
    for (Strategy s : strategies) {
        for (double omega : omegas) {
            const GuidanceConfig cfg = with(base, s, omega);
            cfg.validate();
            const auto batch = sample_batch(gmm, schedule, grid, cfg, condition, seeds);
            std::vector<double> norms;
            norms.reserve(batch.records.size());
            for (const auto& rec : batch.records) norms.push_back(rec.x_final.norm());
            const auto stats = mean_std(norms);
            rows.push_back({s, omega, stats.mean, stats.std, norms.size()});
        }
    }
    return rows;
}

ProbeReport sweep_report(const std::vector<SweepRow>& rows, double adg_factor) {
    ProbeReport r;
    r.name = "norm_sweep";
    r.tolerance = adg_factor;
    r.csv_header = {"strategy", "omega", "mean_norm", "std_norm", "count"};
    std::map<Strategy, std::vector<const SweepRow*>> by;
    for (const auto& row : rows) {
        by[row.strategy].push_back(&row);
        r.csv_rows.push_back({static_cast<double>(row.strategy), row.omega, row.mean_norm, row.std_norm,
                              static_cast<double>(row.count)});
        r.measured[fmt::format("{}[omega={}]", to_string(row.strategy), row.omega)] = row.mean_norm;
    }
    bool ok = true;
    for (auto& [s, list] : by) {
        std::sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->omega < b->omega; });
    }
    if (auto it = by.find(Strategy::cfg); it != by.end()) {
        for (std::size_t i = 1; i < it->second.size(); ++i) {
            if (!(it->second[i]->mean_norm > it->second[i - 1]->mean_norm)) {
                ok = false;
                r.notes.push_back(fmt::format("cfg mean norm not increasing at omega={}", it->second[i]->omega));
            }
        }
    }
    if (auto it = by.find(Strategy::adg); it != by.end() && !it->second.empty()) {
        const SweepRow* first = it->second.front();
        const SweepRow* last = it->second.back();
        if (first->omega == 1.0) {
            const double factor = last->mean_norm / first->mean_norm;
            r.measured["adg_growth_factor"] = factor;
            if (!(factor <= adg_factor && factor >= 1.0 / adg_factor)) {
                ok = false;
                r.notes.push_back(fmt::format("adg mean norm changes by factor {:.4f} between omega=1 and omega={}",
                                              factor, last->omega));
            }
        }
    }
    // Guidance-off rows agree for every strategy whose omega = 1 is the conditional sampler.
    const std::vector<Strategy> off = {Strategy::conditional, Strategy::cfg,   Strategy::adg,
                                       Strategy::adg_no_cap,  Strategy::adg_normalized, Strategy::adg_simplified,
                                       Strategy::apg,         Strategy::recfg};
    std::optional<double> reference;
    for (const auto& row : rows) {
        if (row.omega != 1.0 || std::find(off.begin(), off.end(), row.strategy) == off.end()) continue;
        if (!reference) {
            reference = row.mean_norm;
        } else if (std::abs(row.mean_norm - *reference) > 1e-9 * std::max(1.0, std::abs(*reference))) {
            ok = false;
            r.notes.push_back(fmt::format("{} at omega=1 differs from the guidance-off baseline", to_string(row.strategy)));
        }
    }
    r.verdict = ok ? Verdict::pass : Verdict::fail;
    return r;
}

std::vector<ScatterSet> scatter_experiment(const GaussianMixture& gmm, const NoiseSchedule& schedule, const TimeGrid& grid,
                                           const GuidanceConfig& base, const std::vector<double>& omegas,
                                           std::size_t seeds_per_class, std::uint64_t first_seed) {
    std::vector<ScatterSet> sets;
    std::vector<bool> surface(gmm.size());
    for (std::size_t c = 0; c < gmm.size(); ++c) surface[c] = gmm.size() >= 2 && surface_certificate(gmm, c).is_surface();

    for (double omega : omegas) {
        ScatterSet set;
        set.omega = omega;
        const GuidanceConfig cfg = with(base, base.strategy, omega);
        cfg.validate();
        for (std::size_t c = 0; c < gmm.size(); ++c) {
            const auto seeds = seed_range(first_seed + c * seeds_per_class, seeds_per_class);
            const auto batch = sample_batch(gmm, schedule, grid, cfg, c, seeds);
            ScatterComponent comp;
            comp.component = c;
            comp.surface = surface[c];
            comp.centroid = Vector::Zero(static_cast<Eigen::Index>(gmm.dim()));
            for (const auto& rec : batch.records) {
                comp.samples.push_back(rec.x_final);
                comp.centroid += rec.x_final;
            }
            const double n = static_cast<double>(comp.samples.size());
            if (n > 0) comp.centroid /= n;
            comp.centroid_se = Vector::Zero(comp.centroid.size());
            if (n > 1) {
                for (const auto& x : comp.samples) comp.centroid_se += (x - comp.centroid).cwiseAbs2();
                comp.centroid_se = (comp.centroid_se / (n - 1.0) / n).cwiseSqrt();
            }
            comp.drift = (comp.centroid - gmm.mean(c)).norm();
            set.components.push_back(std::move(comp));
        }
        sets.push_back(std::move(set));
    }
    return sets;
}

ProbeReport scatter_report(const GaussianMixture& gmm, const std::vector<ScatterSet>& sets) {
    ProbeReport r;
    r.name = "scatter_drift";
    r.tolerance = 3.0;  // standard errors
    r.csv_header = {"omega", "component", "surface", "drift"};

    std::vector<const ScatterSet*> sorted;
    for (const auto& s : sets) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->omega < b->omega; });

    std::vector<SurfaceCertificate> normals;
    for (std::size_t c = 0; c < gmm.size() && gmm.size() >= 2; ++c) {
        if (auto q = surface_certificate(gmm, c); q.is_surface()) normals.push_back(*q.certificate);
    }

    bool ok = true;
    for (const auto* set : sorted) {
        for (const auto& comp : set->components) {
            r.csv_rows.push_back({set->omega, static_cast<double>(comp.component), comp.surface ? 1.0 : 0.0, comp.drift});
            r.measured[fmt::format("drift[omega={},c={}]", set->omega, comp.component)] = comp.drift;
            const Vector& mu = gmm.mean(comp.component);
            const double n = static_cast<double>(comp.samples.size());
            if (set->omega == 1.0) {
                for (Eigen::Index d = 0; d < mu.size(); ++d) {
                    if (std::abs(comp.centroid[d] - mu[d]) > 3.0 * comp.centroid_se[d]) {
                        ok = false;
                        r.notes.push_back(fmt::format("omega=1 component {} centroid off its mean beyond 3 SE", comp.component));
                        break;
                    }
                }
            }
            if (!comp.surface && n > 1) {
                for (const auto& cert : normals) {
                    std::vector<double> proj;
                    for (const auto& x : comp.samples) proj.push_back(cert.normal.dot(x - mu));
                    const auto stats = mean_std(proj);
                    const double se = stats.std / std::sqrt(n);
                    if (std::abs(stats.mean) > 3.0 * se) {
                        ok = false;
                        r.notes.push_back(fmt::format("omega={} interior component {} displaced along the normal of {}",
                                                      set->omega, comp.component, cert.component_index));
                    }
                }
            }
        }
    }
    for (std::size_t c = 0; c < gmm.size(); ++c) {
        for (std::size_t i = 1; i < sorted.size(); ++i) {
            const auto& prev = sorted[i - 1]->components.at(c);
            const auto& cur = sorted[i]->components.at(c);
            if (cur.surface && !(cur.drift > prev.drift)) {
                ok = false;
                r.notes.push_back(fmt::format("surface component {} drift not increasing at omega={}", c, sorted[i]->omega));
            }
        }
    }
    r.verdict = ok ? Verdict::pass : Verdict::fail;
    return r;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
    std::vector<std::uint64_t> out(count);
    std::iota(out.begin(), out.end(), first);
    return out;
}

}  // namespace guidance_lab
