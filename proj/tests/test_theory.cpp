#include "support.hpp"

#include "guidance_lab/theory.hpp"

#include <boost/math/tools/roots.hpp>
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace guidance_lab;
using testing_support::square_mixture;
using testing_support::vec;

namespace {

// Boundary of the membership set for the symmetric pair {-1, +1} conditioned
// on +1: at x = a + k the CFG score is -k + (w-1) a (1 - tanh(a x)), and the
// point is a member while that stays non-negative.
double c1_oracle(double alpha_bar, double omega) {
    const double a = std::sqrt(alpha_bar);
    auto f = [&](double k) { return (omega - 1.0) * a * (1.0 - std::tanh(a * (a + k))) - k; };
    boost::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, 0.0, 10.0, boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (r.first + r.second);
}

GaussianMixture pair_1d() { return GaussianMixture::uniform({vec({-1}), vec({1})}); }

}  // namespace

TEST_CASE("C1 on the 1-D pair matches an independent root-finder") {
    const auto gmm = pair_1d();
    const auto cert = *surface_certificate(gmm, 1).certificate;
    CHECK(cert.normal[0] == doctest::Approx(1.0));
    for (double ab : {0.2, 0.5, 0.9}) {
        for (double omega : {1.5, 2.0, 3.0, 5.0, 8.0}) {
            const double want = c1_oracle(ab, omega);
            CHECK(std::abs(estimate_c1(gmm, cert, ab, omega) - want) < 2e-8);
        }
    }
    CHECK(estimate_c1(gmm, cert, 0.5, 2.0) == doctest::Approx(0.2805).epsilon(1e-3));
}

TEST_CASE("C1 grows with the guidance weight") {
    const auto gmm = square_mixture();
    const auto cert = *surface_certificate(gmm, 0).certificate;
    double prev = 0.0;
    for (double omega : {1.5, 2.0, 3.0, 5.0, 8.0}) {
        const double c1 = estimate_c1(gmm, cert, 0.4, omega);
        CHECK(c1 > prev + 1e-8);
        CHECK_FALSE(mt_membership(gmm, cert, outward_point(gmm, cert, 0.4, 1.01 * c1), 0.4, omega).member);
        prev = c1;
    }
    CHECK_THROWS_AS(estimate_c1(gmm, cert, 0.4, 1.0), std::invalid_argument);
}

TEST_CASE("membership basics") {
    const auto gmm = square_mixture();
    const auto cert = *surface_certificate(gmm, 0).certificate;
    // At the scaled mean the conditional score vanishes.
    const auto at_mean = mt_membership(gmm, cert, outward_point(gmm, cert, 0.3, 0.0), 0.3, 4.0);
    CHECK(at_mean.member);
    CHECK(at_mean.dot == 0.0);
    // omega = 1 is just |s_c|^2 >= 0: no outward point is a member.
    for (double k : {0.01, 0.5, 3.0}) {
        const auto m = mt_membership(gmm, cert, outward_point(gmm, cert, 0.3, k), 0.3, 1.0);
        CHECK(m.dot > 0.0);
        CHECK_FALSE(m.member);
    }
}

TEST_CASE("c1 probe verdicts") {
    const auto gmm = pair_1d();
    const auto ok = c1_probe(gmm, 1, 0.5, {2, 3, 5});
    CHECK(ok.verdict == Verdict::pass);
    CHECK(ok.csv_rows.size() == 3);
    CHECK(ok.measured.at("c1[omega=2]") == doctest::Approx(0.2805).epsilon(1e-3));

    const auto centre = GaussianMixture::uniform({vec({1, 1}), vec({1, -1}), vec({-1, 1}), vec({-1, -1}), vec({0, 0})});
    CHECK(c1_probe(centre, 4, 0.5, {2, 3}).verdict == Verdict::fail);
    // Repeated weights cannot be strictly increasing.
    CHECK(c1_probe(gmm, 1, 0.5, {2, 2}).verdict == Verdict::fail);
}

TEST_CASE("norm amplification on the square") {
    const auto gmm = square_mixture();
    const auto cert = *surface_certificate(gmm, 0).certificate;
    const auto seeds = seed_range(0, 24);
    const auto coarse = amplification_margins(gmm, cert, make_grid(NoiseSchedule{}, 200, 1.0, 0.0), 4.0, seeds);
    const auto fine = amplification_margins(gmm, cert, make_grid(NoiseSchedule{}, 400, 1.0, 0.0), 4.0, seeds);
    double mc = 0.0, mf = 0.0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        CHECK(coarse.margins[i] > kMarginFloor);
        CHECK(fine.margins[i] > kMarginFloor);
        mc += coarse.margins[i];
        mf += fine.margins[i];
    }
    // The margin is a property of the ODE, not of the step count.
    CHECK(std::abs(mc - mf) < 0.05 * std::abs(mf));

    const auto grid = make_grid(NoiseSchedule{}, 100, 1.0, 0.0);
    const auto one = norm_amplification_check(gmm, cert, grid, 1.0, seed_range(0, 4));
    CHECK(one.verdict == Verdict::not_applicable);
    CHECK(one.passed());
    for (const auto& row : one.csv_rows) CHECK(row[1] == 0.0);
    CHECK(norm_amplification_check(gmm, cert, grid, 3.0, seed_range(0, 4)).verdict == Verdict::pass);
}

TEST_CASE("prop1 measurements") {
    const auto orth = prop1_measure(vec({1, 0}), vec({0, 1}), 1.5, std::numeric_limits<double>::infinity());
    CHECK(orth.ratio == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    const auto small = prop1_measure(vec({1, 0}), vec({0, 1}), 1.1, std::numeric_limits<double>::infinity());
    // sqrt(1 + sin(2 * 0.05 pi))
    CHECK(small.ratio == doctest::Approx(std::sqrt(1.0 + std::sin(0.1 * std::numbers::pi))).epsilon(1e-14));
    const auto par = prop1_measure(vec({1, 1}), vec({2, 2}), 5.0);
    CHECK(par.ratio == 1.0);

    const auto r = prop1_stress(3000, {2, 8, 64}, {0.1, 10.0}, 7);
    CHECK(r.verdict == Verdict::pass);
    CHECK(r.measured.at("max_ratio") <= std::sqrt(2.0) * (1 + 1e-12));
    CHECK(std::abs(r.measured.at("witness_ratio") - std::sqrt(2.0)) < 1e-12);
}

TEST_CASE("sweep report rules") {
    std::vector<SweepRow> rows{{Strategy::cfg, 1, 1.0, 0.1, 8},  {Strategy::cfg, 2, 1.5, 0.1, 8},
                               {Strategy::cfg, 4, 2.5, 0.1, 8},  {Strategy::adg, 1, 1.0, 0.1, 8},
                               {Strategy::adg, 2, 1.1, 0.1, 8},  {Strategy::adg, 4, 1.2, 0.1, 8}};
    CHECK(sweep_report(rows).verdict == Verdict::pass);

    auto dip = rows;
    dip[1].mean_norm = 0.9;
    CHECK(sweep_report(dip).verdict == Verdict::fail);

    auto blown = rows;
    blown[5].mean_norm = 1.6;
    CHECK(sweep_report(blown).verdict == Verdict::fail);
    CHECK(sweep_report(blown, 2.0).verdict == Verdict::pass);

    auto split = rows;
    split[3].mean_norm = 1.01;
    CHECK(sweep_report(split).verdict == Verdict::fail);
}

TEST_CASE("scatter report on the square with an interior class") {
    const auto gmm = GaussianMixture::uniform({vec({2, 2}), vec({2, -2}), vec({-2, 2}), vec({-2, -2}), vec({0, 0})});
    const NoiseSchedule sched;
    const auto grid = make_grid(sched, 100, 1.0, 0.0);
    GuidanceConfig base;
    base.strategy = Strategy::cfg;
    const auto sets = scatter_experiment(gmm, sched, grid, base, {1.0, 3.0, 5.0}, 60);
    REQUIRE(sets.size() == 3);
    CHECK(sets[0].components.size() == 5);
    CHECK(sets[0].components[0].surface);
    CHECK_FALSE(sets[0].components[4].surface);
    CHECK(sets[2].components[0].drift > sets[0].components[0].drift);
    const auto r = scatter_report(gmm, sets);
    CHECK(r.verdict == Verdict::pass);
}

TEST_CASE("reports are deterministic and serialise NaN as null") {
    const auto gmm = pair_1d();
    CHECK(report_to_json(c1_probe(gmm, 1, 0.5, {2, 3})) == report_to_json(c1_probe(gmm, 1, 0.5, {2, 3})));
    ProbeReport r;
    r.name = "x";
    r.measured["gap"] = std::numeric_limits<double>::quiet_NaN();
    const std::string j = report_to_json(r);
    CHECK(j.find("\"gap\": null") != std::string::npos);
    CHECK(reports_to_json({r}).find("\"passed\": true") != std::string::npos);
    r.verdict = Verdict::fail;
    CHECK(reports_to_json({r}).find("\"passed\": false") != std::string::npos);
}
