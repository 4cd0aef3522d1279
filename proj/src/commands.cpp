#include "guidance_lab/commands.hpp"

#include "guidance_lab/config.hpp"
#include "guidance_lab/csv.hpp"
#include "guidance_lab/parallel.hpp"
#include "guidance_lab/svg.hpp"
#include "guidance_lab/theory.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <yaml-cpp/exceptions.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <random>

namespace guidance_lab {

namespace {

namespace fs = std::filesystem;

ExperimentConfig load(const CommandOptions& opts) {
    if (opts.config_path.empty()) throw ConfigError("--config is required");
    std::vector<Override> overrides;
    for (const auto& s : opts.sets) overrides.push_back(parse_override(s));
    if (opts.seed_count) {
        overrides.emplace_back("run.seeds", "[]");
        overrides.emplace_back("run.seed_count", std::to_string(*opts.seed_count));
    }
    if (opts.out) overrides.emplace_back("run.output_dir", "\"" + *opts.out + "\"");
    if (opts.strategy) {
        overrides.emplace_back("guidance.strategy", *opts.strategy);
        overrides.emplace_back("run.strategies", "[" + *opts.strategy + "]");
    }
    if (opts.omega) overrides.emplace_back("guidance.omega", format_double(*opts.omega));
    return load_config(opts.config_path, overrides);
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    return (fs::path(cfg.run.output_dir) / name).string();
}

void write_csv(const ExperimentConfig& cfg, const std::string& name, const CsvTable& t) {
    write_text(out_path(cfg, name), to_csv(t));
}

std::string omega_tag(double omega) { return fmt::format("omega={}", omega); }

// Runs a command body, mapping exceptions onto the exit-code contract.
int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        fmt::print(err, "input error: {}\n", e.what());
        return kExitInputError;
    } catch (const CsvError& e) {
        fmt::print(err, "input error: {}\n", e.what());
        return kExitInputError;
    } catch (const YAML::Exception& e) {
        fmt::print(err, "input error: {}\n", e.what());
        return kExitInputError;
    } catch (const std::invalid_argument& e) {
        fmt::print(err, "input error: {}\n", e.what());
        return kExitInputError;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitProbeFailure;
    }
}

std::optional<SurfaceCertificate> certificate_for(const GaussianMixture& gmm, std::size_t condition) {
    if (gmm.size() < 2) return std::nullopt;
    return surface_certificate(gmm, condition).certificate;
}

void print_report(std::ostream& out, const ProbeReport& r) {
    fmt::print(out, "[{}] {}", to_string(r.verdict), r.name);
    for (const auto& [k, v] : r.measured) fmt::print(out, " {}={:.6g}", k, v);
    fmt::print(out, "\n");
    for (const auto& n : r.notes) fmt::print(out, "    {}\n", n);
}

int finish_reports(const ExperimentConfig& cfg, const std::string& json_name, const std::vector<ProbeReport>& reports,
                   std::ostream& out) {
    bool ok = true;
    for (const auto& r : reports) {
        print_report(out, r);
        ok = ok && r.passed();
    }
    write_text(out_path(cfg, json_name), reports_to_json(reports));
    return ok ? kExitOk : kExitProbeFailure;
}

ProbeReport mixture_invariants(const ExperimentConfig& cfg) {
    ProbeReport r;
    r.name = "mixture_invariants";
    r.tolerance = 1e-5;
    r.csv_header = {"case", "alpha_bar", "fd_error", "identity_error"};
    const auto& gmm = cfg.gmm;
    std::mt19937_64 rng(cfg.prop1.seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> ab_dist(0.05, 0.95);
    double fd_max = 0.0;
    double id_max = 0.0;
    for (std::size_t i = 0; i < 64; ++i) {
        Vector x(static_cast<Eigen::Index>(gmm.dim()));
        for (Eigen::Index d = 0; d < x.size(); ++d) x[d] = 1.5 * normal(rng);
        const double ab = ab_dist(rng);
        double fd = 0.0;
        double id = 0.0;
        for (std::size_t c = 0; c <= gmm.size(); ++c) {
            const Condition cond = c < gmm.size() ? Condition(c) : std::nullopt;
            const Vector s = score(gmm, x, ab, cond);
            fd = std::max(fd, (s - finite_diff_score(gmm, x, ab, cond, 1e-4)).lpNorm<Eigen::Infinity>());
            const Vector via_mean = (std::sqrt(ab) * posterior_mean_x0(gmm, x, ab, cond) - x) / (1.0 - ab);
            id = std::max(id, (s - via_mean).lpNorm<Eigen::Infinity>());
        }
        fd_max = std::max(fd_max, fd);
        id_max = std::max(id_max, id);
        r.csv_rows.push_back({static_cast<double>(i), ab, fd, id});
    }
    r.measured["max_finite_difference_error"] = fd_max;
    r.measured["max_posterior_mean_identity_error"] = id_max;
    r.verdict = fd_max <= 1e-5 && id_max <= 1e-10 ? Verdict::pass : Verdict::fail;
    if (gmm.size() >= 2) {
        const auto q = surface_certificate(gmm, cfg.run.condition);
        r.measured["condition_hull_distance"] = q.hull_distance;
        r.notes.push_back(fmt::format("condition {}: {}", cfg.run.condition, q.status));
        if (q.is_surface() && !certificate_holds(gmm, *q.certificate)) {
            r.verdict = Verdict::fail;
            r.notes.push_back("surface certificate failed its own check");
        }
    }
    return r;
}

std::vector<ProbeReport> norm_probes(const ExperimentConfig& cfg) {
    std::vector<ProbeReport> reports;
    const auto cert = certificate_for(cfg.gmm, cfg.run.condition);
    if (!cert) {
        ProbeReport r;
        r.name = "norm_amplification";
        r.verdict = Verdict::fail;
        r.tolerance = kMarginFloor;
        r.notes.push_back(fmt::format("condition {} is not a surface class; no outward normal exists", cfg.run.condition));
        reports.push_back(std::move(r));
        return reports;
    }
    const TimeGrid grid = cfg.time_grid();
    const auto seeds = seed_range(cfg.run.first_seed, cfg.norm.seed_count);
    std::vector<std::pair<double, double>> means;
    for (double omega : cfg.norm.omegas) {
        ProbeReport r = norm_amplification_check(cfg.gmm, *cert, grid, omega, seeds);
        r.name += "[" + omega_tag(omega) + "]";
        if (omega > 1.0) means.emplace_back(omega, r.measured["mean_margin"]);
        reports.push_back(std::move(r));
    }
    ProbeReport mono;
    mono.name = "norm_amplification_monotone";
    std::sort(means.begin(), means.end());
    if (means.size() < 2) {
        mono.verdict = Verdict::not_applicable;
        mono.notes.push_back("needs at least two weights above 1");
    } else {
        mono.verdict = Verdict::pass;
        for (std::size_t i = 1; i < means.size(); ++i) {
            mono.measured["mean_margin[" + omega_tag(means[i].first) + "]"] = means[i].second;
            if (!(means[i].second > means[i - 1].second)) {
                mono.verdict = Verdict::fail;
                mono.notes.push_back("mean margin not increasing at " + omega_tag(means[i].first));
            }
        }
        mono.measured["mean_margin[" + omega_tag(means[0].first) + "]"] = means[0].second;
    }
    reports.push_back(std::move(mono));
    return reports;
}

double max_step_gap(const TrajectoryRecord& a, const TrajectoryRecord& b) {
    if (a.steps.size() != b.steps.size()) return std::numeric_limits<double>::infinity();
    double gap = (a.x_final - b.x_final).lpNorm<Eigen::Infinity>();
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        gap = std::max(gap, (a.steps[i].x_t - b.steps[i].x_t).lpNorm<Eigen::Infinity>());
        gap = std::max(gap, (a.steps[i].x0_guided - b.steps[i].x0_guided).lpNorm<Eigen::Infinity>());
    }
    return gap;
}

ProbeReport guidance_off_equivalence(const ExperimentConfig& cfg) {
    ProbeReport r;
    r.name = "guidance_off_equivalence";
    r.tolerance = 1e-12;
    const TimeGrid grid = cfg.time_grid();
    auto seeds = cfg.seeds();
    seeds.resize(std::min<std::size_t>(seeds.size(), 8));
    GuidanceConfig base = cfg.guidance;
    base.omega = 1.0;
    base.strategy = Strategy::conditional;

    std::vector<std::pair<std::string, GuidanceConfig>> variants;
    for (Strategy s : {Strategy::cfg, Strategy::adg, Strategy::adg_simplified}) {
        GuidanceConfig g = base;
        g.strategy = s;
        variants.emplace_back(to_string(s), g);
    }
    GuidanceConfig apg = base;
    apg.strategy = Strategy::apg;
    apg.apg = {1.0, 0.0, std::numeric_limits<double>::infinity()};
    variants.emplace_back("apg(eta=1,beta=0,r=inf)", apg);

    bool ok = true;
    for (const auto& [name, g] : variants) {
        double worst = 0.0;
        for (auto seed : seeds) {
            const auto ref = sample_trajectory(cfg.gmm, grid, base, cfg.run.condition, seed);
            const auto got = sample_trajectory(cfg.gmm, grid, g, cfg.run.condition, seed);
            worst = std::max(worst, max_step_gap(ref, got));
        }
        r.measured["max_gap[" + name + "]"] = worst;
        if (!(worst <= r.tolerance)) ok = false;
    }
    r.verdict = ok ? Verdict::pass : Verdict::fail;
    return r;
}

ProbeReport cfgpp_audit(const ExperimentConfig& cfg) {
    ProbeReport r;
    r.name = "cfgpp_equivalence";
    r.tolerance = 1e-8;
    r.parameters["lambda"] = format_double(cfg.guidance.cfgpp_lambda);
    r.csv_header = {"alpha_bar_t", "alpha_bar_prev", "omega_t", "residual"};
    const TimeGrid grid = cfg.time_grid();
    std::mt19937_64 rng(cfg.prop1.seed + 1);
    std::uniform_int_distribution<std::size_t> step_dist(0, grid.steps() - 1);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    std::size_t undefined = 0;
    for (std::size_t i = 0; i < 32; ++i) {
        const std::size_t k = step_dist(rng);
        const double ab = grid.alpha_bars[k];
        const double ab_prev = grid.alpha_bars[k + 1];
        Vector x(static_cast<Eigen::Index>(cfg.gmm.dim()));
        for (Eigen::Index d = 0; d < x.size(); ++d) x[d] = normal(rng);
        const Vector eps_c = eps_from_x0(x, posterior_mean_x0(cfg.gmm, x, ab, cfg.run.condition), ab);
        const Vector eps_u = eps_from_x0(x, posterior_mean_x0(cfg.gmm, x, ab), ab);
        const auto audit = cfgpp_equivalence(x, eps_c, eps_u, cfg.guidance.cfgpp_lambda, ab, ab_prev);
        if (!audit) {
            ++undefined;
            continue;
        }
        worst = std::max(worst, audit->residual);
        r.csv_rows.push_back({ab, ab_prev, audit->omega_t, audit->residual});
    }
    r.measured["max_residual"] = worst;
    r.measured["undefined_steps"] = static_cast<double>(undefined);
    r.verdict = worst <= r.tolerance ? Verdict::pass : Verdict::fail;
    return r;
}

bool same_record(const TrajectoryRecord& a, const TrajectoryRecord& b) {
    auto same = [](const Vector& u, const Vector& v) {
        return u.size() == v.size() && std::equal(u.data(), u.data() + u.size(), v.data(), [](double p, double q) {
                   return std::bit_cast<std::uint64_t>(p) == std::bit_cast<std::uint64_t>(q);
               });
    };
    if (a.seed != b.seed || a.steps.size() != b.steps.size() || !same(a.x_final, b.x_final)) return false;
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        const auto &p = a.steps[i], &q = b.steps[i];
        if (!same(p.x_t, q.x_t) || !same(p.x0_cond, q.x0_cond) || !same(p.x0_uncond, q.x0_uncond) ||
            !same(p.x0_guided, q.x0_guided)) {
            return false;
        }
    }
    return true;
}

ProbeReport determinism(const ExperimentConfig& cfg) {
    ProbeReport r;
    r.name = "determinism";
    const TimeGrid grid = cfg.time_grid();
    const auto seeds = cfg.seeds();
    bool ok = true;
    for (Strategy s : cfg.sample_strategies()) {
        GuidanceConfig g = cfg.guidance;
        g.strategy = s;
        const auto a = sample_trajectory(cfg.gmm, grid, g, cfg.run.condition, seeds.front(), cfg.run.sampler);
        const auto b = sample_trajectory(cfg.gmm, grid, g, cfg.run.condition, seeds.front(), cfg.run.sampler);
        if (!same_record(a, b)) {
            ok = false;
            r.notes.push_back(to_string(s) + ": repeated run differs");
        }
    }
    r.verdict = ok ? Verdict::pass : Verdict::fail;
    return r;
}

void write_report_csvs(const ExperimentConfig& cfg, const std::vector<ProbeReport>& reports) {
    for (const auto& r : reports) {
        if (r.csv_header.empty()) continue;
        std::string name = r.name;
        // norm_amplification[omega=3] -> norm_amplification_omega_3
        std::erase(name, ']');
        std::replace_if(name.begin(), name.end(), [](char c) { return c == '[' || c == '='; }, '_');
        write_csv(cfg, name + ".csv", report_table(r));
    }
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
    return norm_sweep(cfg.gmm, cfg.schedule, cfg.time_grid(), cfg.guidance, cfg.sweep.strategies, cfg.sweep.omegas,
                      cfg.run.condition, seed_range(cfg.run.first_seed, cfg.sweep.seed_count));
}

std::vector<ScatterSet> run_scatter(const ExperimentConfig& cfg) {
    GuidanceConfig g = cfg.guidance;
    g.strategy = cfg.scatter.strategy;
    return scatter_experiment(cfg.gmm, cfg.schedule, cfg.time_grid(), g, cfg.scatter.omegas, cfg.scatter.seeds_per_class,
                              cfg.run.first_seed);
}

std::string sweep_svg(const std::vector<Series>& series) {
    return svg_lines(series, {"mean |x0| against guidance weight", "omega", "mean |x0|"});
}

std::vector<Series> sweep_series(const std::vector<SweepRow>& rows) {
    std::vector<Series> out;
    for (const auto& row : rows) {
        const std::string label = to_string(row.strategy);
        auto it = std::find_if(out.begin(), out.end(), [&](const Series& s) { return s.label == label; });
        if (it == out.end()) {
            out.push_back({label, {}});
            it = out.end() - 1;
        }
        it->points.emplace_back(row.omega, row.mean_norm);
    }
    return out;
}

std::string scatter_svg(const ScatterSet& set) {
    std::vector<Series> series;
    for (const auto& comp : set.components) {
        Series s{fmt::format("class {}{}", comp.component, comp.surface ? "" : " (interior)"), {}};
        for (const auto& x : comp.samples) s.points.emplace_back(x[0], x.size() > 1 ? x[1] : 0.0);
        series.push_back(std::move(s));
    }
    return svg_scatter(series, {fmt::format("final samples, omega = {}", set.omega), "x[0]", "x[1]"});
}

}  // namespace

int cmd_sample(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ExperimentConfig cfg = load(opts);
        const TimeGrid grid = cfg.time_grid();
        const auto seeds = cfg.seeds();
        const auto cert = certificate_for(cfg.gmm, cfg.run.condition);
        const std::optional<Vector> normal = cert ? std::optional<Vector>(cert->normal) : std::nullopt;
        write_text(out_path(cfg, "config_used.yaml"), dump_config(cfg));

        for (Strategy s : cfg.sample_strategies()) {
            GuidanceConfig g = cfg.guidance;
            g.strategy = s;
            const auto batch = sample_batch(cfg.gmm, cfg.schedule, grid, g, cfg.run.condition, seeds, cfg.run.sampler);
            write_csv(cfg, "trajectories_" + to_string(s) + ".csv", trajectory_table(batch));
            write_csv(cfg, "summary_" + to_string(s) + ".csv", summary_table(batch, normal));

            double norm_sum = 0.0;
            double dot_sum = 0.0;
            for (const auto& rec : batch.records) {
                norm_sum += rec.x_final.norm();
                if (normal) dot_sum += normal->dot(rec.x_final);
            }
            const double n = static_cast<double>(batch.records.size());
            fmt::print(out, "{:<16} omega={} seeds={} mean_norm={:.6f}", to_string(s), g.omega, batch.records.size(),
                       norm_sum / n);
            if (normal) fmt::print(out, " mean_w_dot={:.6f}", dot_sum / n);
            fmt::print(out, "\n");
        }
        return kExitOk;
    });
}

int cmd_verify(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ExperimentConfig cfg = load(opts);
        std::vector<ProbeReport> reports;
        reports.push_back(mixture_invariants(cfg));
        reports.push_back(prop1_stress(cfg.prop1.trials, cfg.prop1.dims, {cfg.prop1.norm_min, cfg.prop1.norm_max},
                                       cfg.prop1.seed, cfg.guidance.angle_cap));
        if (cfg.gmm.size() >= 2) {
            reports.push_back(c1_probe(cfg.gmm, cfg.run.condition, cfg.c1_alpha_bar(), cfg.c1.omegas, cfg.c1.k_max,
                                       cfg.c1.bisection_tol));
        }
        for (auto& r : norm_probes(cfg)) reports.push_back(std::move(r));
        reports.push_back(guidance_off_equivalence(cfg));
        reports.push_back(cfgpp_audit(cfg));
        reports.push_back(determinism(cfg));
        reports.push_back(sweep_report(run_sweep(cfg), cfg.sweep.adg_factor));
        if (cfg.gmm.dim() >= 2 && cfg.gmm.size() >= 2) reports.push_back(scatter_report(cfg.gmm, run_scatter(cfg)));
        write_report_csvs(cfg, reports);
        return finish_reports(cfg, "verify_report.json", reports, out);
    });
}

int cmd_probe_c1(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ExperimentConfig cfg = load(opts);
        if (cfg.gmm.size() < 2) throw ConfigError("C1 estimation needs at least two mixture components");
        const auto r = c1_probe(cfg.gmm, cfg.run.condition, cfg.c1_alpha_bar(), cfg.c1.omegas, cfg.c1.k_max,
                                cfg.c1.bisection_tol);
        write_csv(cfg, "c1.csv", report_table(r));
        return finish_reports(cfg, "c1_report.json", {r}, out);
    });
}

int cmd_probe_norm(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ExperimentConfig cfg = load(opts);
        const auto reports = norm_probes(cfg);
        write_report_csvs(cfg, reports);
        return finish_reports(cfg, "norm_report.json", reports, out);
    });
}

int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ExperimentConfig cfg = load(opts);
        const auto rows = run_sweep(cfg);
        write_csv(cfg, "sweep.csv", sweep_table(rows));
        write_text(out_path(cfg, "sweep.svg"), sweep_svg(sweep_series(rows)));
        for (const auto& row : rows) {
            fmt::print(out, "{:<16} omega={:<6} mean_norm={:.6f} std={:.6f}\n", to_string(row.strategy), row.omega,
                       row.mean_norm, row.std_norm);
        }
        return finish_reports(cfg, "sweep_report.json", {sweep_report(rows, cfg.sweep.adg_factor)}, out);
    });
}

int cmd_scatter(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ExperimentConfig cfg = load(opts);
        if (cfg.gmm.dim() < 2) throw ConfigError("scatter needs a mixture of dimension >= 2");
        const auto sets = run_scatter(cfg);
        write_csv(cfg, "scatter.csv", scatter_table(sets));
        for (const auto& set : sets) {
            write_text(out_path(cfg, "scatter_" + omega_tag(set.omega) + ".svg"), scatter_svg(set));
        }
        return finish_reports(cfg, "scatter_report.json", {scatter_report(cfg.gmm, sets)}, out);
    });
}

int cmd_flow_sample(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ExperimentConfig cfg = load(opts);
        const auto seeds = cfg.seeds();
        TrajectoryBatch batch{cfg.gmm, cfg.schedule, TimeGrid{}, cfg.guidance, cfg.run.condition, {}};
        batch.records.resize(seeds.size());
        parallel_for(seeds.size(), [&](std::size_t i) {
            batch.records[i] = flow_sample_adg(cfg.gmm, FlowPath{cfg.flow.sigma_min}, cfg.flow.steps, cfg.guidance.omega,
                                               cfg.guidance.angle_cap, cfg.run.condition, seeds[i]);
        });
        const auto cert = certificate_for(cfg.gmm, cfg.run.condition);
        write_csv(cfg, "flow_trajectories.csv", trajectory_table(batch));
        write_csv(cfg, "flow_summary.csv",
                  summary_table(batch, cert ? std::optional<Vector>(cert->normal) : std::nullopt));
        double norm_sum = 0.0;
        for (const auto& rec : batch.records) norm_sum += rec.x_final.norm();
        fmt::print(out, "flow adg omega={} seeds={} mean_norm={:.6f}\n", cfg.guidance.omega, seeds.size(),
                   norm_sum / static_cast<double>(seeds.size()));
        return kExitOk;
    });
}

int cmd_plot(const PlotOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opts.kind != "scatter" && opts.kind != "sweep") {
            throw std::invalid_argument("plot kind must be scatter or sweep, got '" + opts.kind + "'");
        }
        const CsvTable t = read_csv(opts.csv_path);
        std::string svg;
        if (opts.kind == "sweep") {
            const auto cs = t.column("strategy");
            const auto co = t.column("omega");
            const auto cm = t.column("mean_norm");
            if (!cs || !co || !cm) throw CsvError(opts.csv_path + ": sweep CSV needs strategy, omega and mean_norm columns");
            std::vector<Series> series;
            for (std::size_t i = 0; i < t.rows.size(); ++i) {
                const std::string& label = t.rows[i][*cs];
                auto it = std::find_if(series.begin(), series.end(), [&](const Series& s) { return s.label == label; });
                if (it == series.end()) {
                    series.push_back({label, {}});
                    it = series.end() - 1;
                }
                it->points.emplace_back(t.number(i, *co), t.number(i, *cm));
            }
            svg = sweep_svg(series);
        } else {
            const auto cx = t.column("x_0");
            const auto cy = t.column("x_1");
            const auto cc = t.column("component");
            if (!cx || !cy) throw CsvError(opts.csv_path + ": scatter CSV needs x_0 and x_1 columns");
            std::map<std::string, Series> by;
            for (std::size_t i = 0; i < t.rows.size(); ++i) {
                const std::string key = cc ? t.rows[i][*cc] : "samples";
                auto& s = by[key];
                s.label = cc ? "class " + key : key;
                s.points.emplace_back(t.number(i, *cx), t.number(i, *cy));
            }
            std::vector<Series> series;
            for (auto& [k, s] : by) series.push_back(std::move(s));
            svg = svg_scatter(series, {"final samples", "x[0]", "x[1]"});
        }
        const fs::path csv(opts.csv_path);
        const fs::path dir = opts.out ? fs::path(*opts.out) : csv.parent_path();
        const std::string target = (dir / (csv.stem().string() + ".svg")).string();
        write_text(target, svg);
        fmt::print(out, "wrote {}\n", target);
        return kExitOk;
    });
}

}  // namespace guidance_lab
