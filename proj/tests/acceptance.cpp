// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when
// any criterion fails.

#include "guidance_lab/commands.hpp"
#include "guidance_lab/csv.hpp"
#include "guidance_lab/mixture.hpp"
#include "guidance_lab/samplers.hpp"
#include "guidance_lab/theory.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace guidance_lab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

GaussianMixture square() { return GaussianMixture::uniform({vec({1, 1}), vec({1, -1}), vec({-1, 1}), vec({-1, -1})}); }

struct RandomCase {
    GaussianMixture gmm;
    Vector x;
    double alpha_bar;
};

// Same generator for criteria 1 and 2.
std::vector<RandomCase> random_cases(std::size_t n) {
    std::mt19937_64 rng(20240601);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<RandomCase> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t dim = 1 + i % 8;
        const std::size_t comps = 1 + (i / 8) % 6;
        std::vector<Vector> means;
        std::vector<double> weights;
        for (std::size_t c = 0; c < comps; ++c) {
            Vector m(static_cast<Eigen::Index>(dim));
            for (Eigen::Index j = 0; j < m.size(); ++j) m[j] = 2.0 * normal(rng);
            means.push_back(m);
            weights.push_back(0.05 + unit(rng));
        }
        double total = 0.0;
        for (double w : weights) total += w;
        double head = 0.0;
        for (std::size_t c = 0; c + 1 < comps; ++c) head += weights[c] /= total;
        weights.back() = 1.0 - head;
        Vector x(static_cast<Eigen::Index>(dim));
        for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = 2.0 * normal(rng);
        out.push_back({GaussianMixture(dim, std::move(means), std::move(weights)), x, 0.02 + 0.96 * unit(rng)});
    }
    return out;
}

Outcome criterion1() {
    const auto cases = random_cases(1000);
    const auto start = Clock::now();
    double worst = 0.0;
    for (const auto& rc : cases) {
        for (std::size_t c = 0; c <= rc.gmm.size(); ++c) {
            const Condition cond = c < rc.gmm.size() ? Condition(c) : std::nullopt;
            const Vector diff = score(rc.gmm, rc.x, rc.alpha_bar, cond) - finite_diff_score(rc.gmm, rc.x, rc.alpha_bar, cond, 1e-4);
            worst = std::max(worst, diff.lpNorm<Eigen::Infinity>());
        }
    }
    const double t = seconds_since(start);
    return {worst <= 1e-5 && t < 5.0, fmt::format("max |score - fd| = {:.3e} (tol 1e-5), {:.2f} s", worst, t)};
}

Outcome criterion2() {
    const auto cases = random_cases(1000);
    double worst = 0.0;
    for (const auto& rc : cases) {
        for (std::size_t c = 0; c <= rc.gmm.size(); ++c) {
            const Condition cond = c < rc.gmm.size() ? Condition(c) : std::nullopt;
            const Vector x0 = posterior_mean_x0(rc.gmm, rc.x, rc.alpha_bar, cond);
            const Vector lhs = (std::sqrt(rc.alpha_bar) * x0 - rc.x) / (1.0 - rc.alpha_bar);
            worst = std::max(worst, (lhs - score(rc.gmm, rc.x, rc.alpha_bar, cond)).lpNorm<Eigen::Infinity>());
        }
    }
    return {worst <= 1e-10, fmt::format("max identity gap = {:.3e} (tol 1e-10)", worst)};
}

Outcome criterion3() {
    const auto start = Clock::now();
    const auto r = prop1_stress(100000, {2, 8, 64}, {0.1, 10.0}, 7);
    const double t = seconds_since(start);
    const double max_ratio = r.measured.at("max_ratio");
    const double witness = r.measured.at("witness_ratio");
    const bool ok = max_ratio <= std::sqrt(2.0) * (1.0 + 1e-12) && std::abs(witness - std::sqrt(2.0)) <= 1e-12 && t < 10.0;
    return {ok, fmt::format("max ratio = {:.15f}, witness = {:.15f}, sqrt2 = {:.15f}, {:.2f} s", max_ratio, witness,
                            std::sqrt(2.0), t)};
}

Outcome criterion4() {
    const auto start = Clock::now();
    const auto gmm = square();
    const auto cert = *surface_certificate(gmm, 0).certificate;
    const auto grid = make_grid(NoiseSchedule{}, 400, 1.0, 0.0);
    const auto seeds = seed_range(0, 256);
    const auto r5 = norm_amplification_check(gmm, cert, grid, 5.0, seeds);
    const auto r3 = norm_amplification_check(gmm, cert, grid, 3.0, seeds);
    const double t = seconds_since(start);
    const double m5 = r5.measured.at("mean_margin"), m3 = r3.measured.at("mean_margin");
    const bool ok = r5.verdict == Verdict::pass && m5 > m3 && t < 60.0;
    return {ok, fmt::format("omega=5 min margin = {:.4f}, failures = {}, mean margin omega=5 {:.4f} > omega=3 {:.4f}, {:.2f} s",
                            r5.measured.at("min_margin"), r5.measured.at("failures"), m5, m3, t)};
}

Outcome criterion5() {
    const auto start = Clock::now();
    const auto gmm = GaussianMixture::uniform({vec({-1}), vec({1})});
    const auto sched = NoiseSchedule::constant(std::log(2.0));
    const double ab = sched.alpha_bar_at(1.0);
    const auto cert = *surface_certificate(gmm, 1).certificate;
    std::vector<double> c1;
    bool outside = true;
    for (double omega : {2.0, 3.0, 5.0}) {
        c1.push_back(estimate_c1(gmm, cert, ab, omega, 4.0, 1e-8));
        outside = outside && !mt_membership(gmm, cert, outward_point(gmm, cert, ab, 1.01 * c1.back()), ab, omega).member;
    }
    const double t = seconds_since(start);
    const bool ok = c1[0] > 0.0 && c1[1] - c1[0] > 1e-8 && c1[2] - c1[1] > 1e-8 && outside && t < 5.0;
    return {ok, fmt::format("abar = {:.15f}, C1(2,3,5) = {:.8f}, {:.8f}, {:.8f}, 1.01*C1 outside: {}, {:.2f} s", ab,
                            c1[0], c1[1], c1[2], outside ? "yes" : "no", t)};
}

Outcome criterion6() {
    const auto gmm = square();
    const auto grid = make_grid(NoiseSchedule{}, 400, 1.0, 0.0);
    GuidanceConfig cond;
    cond.strategy = Strategy::conditional;
    std::vector<GuidanceConfig> variants;
    for (Strategy s : {Strategy::adg, Strategy::cfg, Strategy::apg, Strategy::adg_simplified}) {
        GuidanceConfig g;
        g.strategy = s;
        g.omega = 1.0;
        g.apg = {1.0, 0.0, std::numeric_limits<double>::infinity()};
        variants.push_back(g);
    }
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 32; ++seed) {
        const auto ref = sample_trajectory(gmm, grid, cond, 0, seed);
        for (const auto& g : variants) {
            const auto got = sample_trajectory(gmm, grid, g, 0, seed);
            for (std::size_t i = 0; i < ref.steps.size(); ++i) {
                worst = std::max(worst, (got.steps[i].x_t - ref.steps[i].x_t).lpNorm<Eigen::Infinity>());
            }
            worst = std::max(worst, (got.x_final - ref.x_final).lpNorm<Eigen::Infinity>());
        }
    }
    return {worst <= 1e-12, fmt::format("max per-step gap over adg, cfg, apg(1,0,inf), adg_simplified = {:.3e}", worst)};
}

Outcome criterion7() {
    const auto gmm = square();
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    std::size_t audited = 0;
    std::string table;
    while (audited < 32) {
        double a = 0.01 + 0.98 * unit(rng), b = 0.01 + 0.98 * unit(rng);
        if (a > b) std::swap(a, b);
        if (b - a < 1e-3) continue;
        Vector x(2);
        x << 2.0 * normal(rng), 2.0 * normal(rng);
        const double lambda = 0.1 + 0.9 * unit(rng);
        const Vector ec = eps_from_x0(x, posterior_mean_x0(gmm, x, a, 0), a);
        const Vector eu = eps_from_x0(x, posterior_mean_x0(gmm, x, a), a);
        const auto audit = cfgpp_equivalence(x, ec, eu, lambda, a, b);
        if (!audit) continue;
        worst = std::max(worst, audit->residual);
        if (audited < 4) table += fmt::format(" [abar {:.3f}->{:.3f} w_t {:.3f} res {:.1e}]", a, b, audit->omega_t, audit->residual);
        ++audited;
    }
    return {worst <= 1e-8, fmt::format("max residual over 32 steps = {:.3e} (tol 1e-8);{}", worst, table)};
}

Outcome criterion8() {
    const auto start = Clock::now();
    const auto gmm = GaussianMixture::uniform({vec({1.5, -0.5})});
    const NoiseSchedule sched;
    const auto grid = make_grid(sched, 1000, 1.0, 0.0);
    GuidanceConfig cond;
    cond.strategy = Strategy::conditional;
    const auto seeds = seed_range(0, 10000);
    const double n = static_cast<double>(seeds.size());
    bool ok = true;
    std::string detail;
    for (SamplerKind kind : {SamplerKind::ddpm, SamplerKind::ddim}) {
        const auto batch = sample_batch(gmm, sched, grid, cond, 0, seeds, kind);
        Vector mean = Vector::Zero(2);
        for (const auto& r : batch.records) mean += r.x_final;
        mean /= n;
        Vector var = Vector::Zero(2);
        for (const auto& r : batch.records) var += (r.x_final - mean).cwiseAbs2();
        var /= n - 1.0;
        double z = 0.0;
        for (Eigen::Index j = 0; j < 2; ++j) z = std::max(z, std::abs(mean[j] - gmm.mean(0)[j]) / std::sqrt(var[j] / n));
        const double var_err = (var.array() - 1.0).abs().maxCoeff();
        ok = ok && z <= 3.0;
        if (kind == SamplerKind::ddpm) ok = ok && var_err <= 0.05;
        detail += fmt::format("{}: mean ({:.4f}, {:.4f}) max |z| {:.2f}, var ({:.4f}, {:.4f}); ", to_string(kind), mean[0],
                              mean[1], z, var[0], var[1]);
    }
    const double t = seconds_since(start);
    ok = ok && t < 60.0;
    return {ok, detail + fmt::format("{:.2f} s", t)};
}

Outcome criterion9() {
    const auto gmm = square();
    const NoiseSchedule sched;
    const auto grid = make_grid(sched, 400, 1.0, 0.0);
    const auto rows = norm_sweep(gmm, sched, grid, GuidanceConfig{}, {Strategy::cfg, Strategy::adg}, {1, 2, 4, 6, 8}, 0,
                                 seed_range(0, 64));
    std::string cfg_list, adg_list;
    double adg1 = 0.0, adg8 = 0.0;
    for (const auto& r : rows) {
        auto& list = r.strategy == Strategy::cfg ? cfg_list : adg_list;
        list += fmt::format("{}{:.3f}", list.empty() ? "" : " ", r.mean_norm);
        if (r.strategy == Strategy::adg && r.omega == 1.0) adg1 = r.mean_norm;
        if (r.strategy == Strategy::adg && r.omega == 8.0) adg8 = r.mean_norm;
    }
    const auto report = sweep_report(rows, 1.5);
    return {report.verdict == Verdict::pass,
            fmt::format("cfg [{}], adg [{}], adg omega=8/omega=1 = {:.3f}", cfg_list, adg_list, adg8 / adg1)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome criterion10() {
    namespace fs = std::filesystem;
    const fs::path root = fs::current_path() / "acceptance_out";
    fs::remove_all(root);
    const std::string fixtures = FIXTURE_DIR;
    std::ostringstream sink;

    CommandOptions a;
    a.config_path = fixtures + "/pass.yaml";
    a.out = (root / "run_a").string();
    CommandOptions b = a;
    b.out = (root / "run_b").string();
    const int ca = cmd_sample(a, sink, sink);
    const int cb = cmd_sample(b, sink, sink);

    std::size_t compared = 0;
    bool identical = ca == 0 && cb == 0;
    if (identical) {
        for (const auto& entry : fs::directory_iterator(root / "run_a")) {
            if (entry.path().extension() != ".csv") continue;
            ++compared;
            const fs::path other = root / "run_b" / entry.path().filename();
            identical = identical && fs::exists(other) && slurp(entry.path()) == slurp(other);
        }
    }
    identical = identical && compared > 0;

    std::vector<int> codes;
    for (const char* name : {"pass.yaml", "fail.yaml", "corrupt.yaml"}) {
        CommandOptions v;
        v.config_path = fixtures + "/" + name;
        v.out = (root / (std::string("verify_") + name)).string();
        codes.push_back(cmd_verify(v, sink, sink));
    }
    const bool ok = identical && codes == std::vector<int>{0, 1, 2};
    return {ok, fmt::format("{} CSV files byte-identical: {}; verify exit codes pass/fail/corrupt = {}/{}/{}", compared,
                            identical ? "yes" : "no", codes[0], codes[1], codes[2])};
}

}  // namespace

int main() {
    const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                         criterion6, criterion7, criterion8, criterion9, criterion10};
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        fmt::print("criterion {}: {} {}\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
