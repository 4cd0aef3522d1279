#include "support.hpp"

#include "guidance_lab/guidance.hpp"
#include "guidance_lab/theory.hpp"

#include <Eigen/QR>
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace guidance_lab;
using testing_support::random_vector;
using testing_support::vec;

namespace {

PredictionPair pair_of(const Vector& c, const Vector& u) { return {c, u, Vector::Zero(c.size()), 0.5}; }

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("strategy names round-trip") {
    for (Strategy s : all_strategies()) CHECK(strategy_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(strategy_from_string("cfg2"), std::invalid_argument);
    CHECK(renoise_mode_from_string("paper_literal") == RenoiseMode::paper_literal);
    CHECK(langevin_mode_from_string("score_consistent") == LangevinMode::score_consistent);
}

TEST_CASE("cfg combine") {
    const auto p = pair_of(vec({1, 2}), vec({0, 1}));
    const Vector g = cfg_combine(p, 3.0);
    CHECK(g[0] == 3.0);
    CHECK(g[1] == 4.0);
    CHECK(cfg_combine(p, 1.0) == p.x0_cond);
}

TEST_CASE("adg at omega one returns the conditional prediction") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        const auto p = pair_of(random_vector(rng, 5), random_vector(rng, 5));
        CHECK(adg_rotate(p, 1.0) == p.x0_cond);
        CHECK(adg_no_cap(p, 1.0) == p.x0_cond);
        CHECK((adg_simplified(p, 1.0) - p.x0_cond).norm() < 1e-14);
    }
}

TEST_CASE("adg on an orthogonal pair attains the sqrt 2 norm ratio") {
    const auto p = pair_of(vec({1, 0}), vec({0, 1}));
    const Rotation r = adg_rotation(p, 1.5, kInf);
    CHECK(r.gamma == doctest::Approx(std::numbers::pi / 2));
    CHECK(r.gamma_omega == doctest::Approx(std::numbers::pi / 4));
    // The assist vector coincides with x0_cond here, so the update is
    // (cos + sin) x0_cond.
    CHECK(r.x0[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(std::abs(r.x0[1]) < 1e-15);

    const Prop1Sample s = prop1_measure(vec({1, 0}), vec({0, 1}), 1.5, kInf);
    CHECK(std::abs(s.ratio - std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(s.ratio - s.predicted_ratio) < 1e-12);
}

TEST_CASE("adg at a known angle") {
    // gamma = pi/4, omega = 2 -> gamma_omega = pi/4, assist = |c| (0, 1).
    const auto p = pair_of(vec({1, 1}), vec({1, 0}));
    const Vector r = adg_rotate(p, 2.0, kInf);
    const double h = std::sqrt(0.5);
    CHECK(r[0] == doctest::Approx(h).epsilon(1e-14));
    CHECK(r[1] == doctest::Approx(h + h * std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("adg angle cap") {
    const auto p = pair_of(vec({1, 0}), vec({0, 1}));
    const Rotation capped = adg_rotation(p, 5.0, std::numbers::pi / 3);
    CHECK(capped.gamma_omega == doctest::Approx(std::numbers::pi / 3));
    const Rotation free = adg_rotation(p, 5.0, kInf);
    CHECK(free.gamma_omega == doctest::Approx(2 * std::numbers::pi));
    CHECK(cap_angle(0.3, 0.5) == 0.3);
    CHECK(cap_angle(0.7, 0.5) == 0.5);
    CHECK_THROWS_AS(cap_angle(-0.1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(cap_angle(0.1, 0.0), std::invalid_argument);
}

TEST_CASE("adg degenerate inputs fall back to the conditional prediction") {
    const auto parallel = pair_of(vec({1, 1}), vec({2, 2}));
    const Rotation r = adg_rotation(parallel, 4.0, kDefaultAngleCap);
    CHECK(r.degenerate);
    CHECK(r.x0 == parallel.x0_cond);
    const auto zero_u = pair_of(vec({1, 1}), vec({0, 0}));
    CHECK(adg_rotation(zero_u, 4.0, kDefaultAngleCap).degenerate);
    CHECK_THROWS_AS(adg_rotate(parallel, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(adg_rotate(pair_of(vec({1}), vec({1, 2})), 2.0), DimensionError);
}

TEST_CASE("adg stays in the prediction plane and turns away from the unconditional prediction") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 500; ++i) {
        const Vector c = random_vector(rng, 6, 2.0);
        const Vector u = random_vector(rng, 6, 2.0);
        const auto p = pair_of(c, u);
        const double omega = 1.0 + 9.0 * (i % 100) / 100.0;
        const Vector r = adg_rotate(p, omega);
        const Vector n = adg_normalized(p, omega);
        CHECK(n.norm() == doctest::Approx(c.norm()).epsilon(1e-12));
        CHECK((n / n.norm() - r / r.norm()).norm() < 1e-12);
        Eigen::MatrixXd basis(6, 2);
        basis << c, u;
        const Vector coeffs = basis.colPivHouseholderQr().solve(r);
        CHECK((basis * coeffs - r).norm() < 1e-10 * c.norm());
        const double before = *angle_between(u, c);
        const double after = *angle_between(u, r);
        if (omega > 1.0 && before > 1e-3 && before < std::numbers::pi / 2) CHECK(after > before);
    }
}

TEST_CASE("adg simplified has the conditional norm and the cfg direction") {
    const auto p = pair_of(vec({3, 4}), vec({1, 0}));
    const Vector s = adg_simplified(p, 2.0);
    CHECK(s.norm() == doctest::Approx(5.0));
    const Vector cfg = cfg_combine(p, 2.0);
    CHECK(std::abs(s.dot(cfg) / (s.norm() * cfg.norm()) - 1.0) < 1e-15);
}

TEST_CASE("apg reduces to cfg with eta 1, beta 0 and no clamp") {
    std::mt19937_64 rng(8);
    const ApgParams plain{1.0, 0.0, kInf};
    ApgState state;
    for (int i = 0; i < 50; ++i) {
        const auto p = pair_of(random_vector(rng, 4), random_vector(rng, 4));
        CHECK((apg_update(p, 3.5, plain, state) - cfg_combine(p, 3.5)).norm() < 1e-14);
    }
}

TEST_CASE("apg projection, clamp and momentum") {
    const auto p = pair_of(vec({2, 0}), vec({1, -1}));  // delta = (1, 1)
    ApgState s0;
    // eta = 0 drops the component along x0_cond.
    const Vector g0 = apg_update(p, 2.0, ApgParams{0.0, 0.0, kInf}, s0);
    CHECK(g0[0] == doctest::Approx(2.0));
    CHECK(g0[1] == doctest::Approx(1.0));

    ApgState s1;
    const Vector g1 = apg_update(p, 2.0, ApgParams{1.0, 0.0, 0.5}, s1);
    CHECK((g1 - p.x0_cond).norm() == doctest::Approx(0.5));

    ApgState s2;
    const ApgParams mom{1.0, -0.5, kInf};
    apg_update(p, 2.0, mom, s2);
    const Vector second = apg_update(p, 2.0, mom, s2);
    // m1 = delta, m2 = delta + 0.5 m1.
    CHECK(second[0] == doctest::Approx(2.0 + 1.5));
    CHECK(second[1] == doctest::Approx(1.5));
    s2.reset();
    CHECK(s2.momentum.size() == 0);
}

TEST_CASE("recfg and eps conversions") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 50; ++i) {
        const Vector x = random_vector(rng, 3);
        const Vector x0 = random_vector(rng, 3);
        const double ab = 0.05 + 0.9 * i / 50.0;
        CHECK((x0_from_eps(x, eps_from_x0(x, x0, ab), ab) - x0).norm() < 1e-11);

        const Vector ec = random_vector(rng, 3), eu = random_vector(rng, 3);
        const Vector cfg_eps = eu + 2.5 * (ec - eu);
        CHECK((recfg_combine(ec, eu, 2.5, 1.0) - cfg_eps).norm() < 1e-14);
        CHECK((recfg_combine(ec, eu, 2.5, 0.0) - 2.5 * ec).norm() < 1e-15);
    }
    CHECK_THROWS_AS(x0_from_eps(vec({1}), vec({1}), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(eps_from_x0(vec({1}), vec({1, 2}), 0.5), DimensionError);
}

TEST_CASE("cfgpp predictions") {
    const Vector x = vec({0.3, -0.2});
    const Vector ec = vec({1, 0}), eu = vec({0, 1});
    const auto full = cfgpp_predictions(ec, eu, 1.0, x, 0.4);
    CHECK((full.x0_denoise - x0_from_eps(x, ec, 0.4)).norm() < 1e-15);
    CHECK(full.eps_renoise == eu);
    const auto half = cfgpp_predictions(ec, eu, 0.5, x, 0.4);
    CHECK((half.x0_denoise - x0_from_eps(x, vec({0.5, 0.5}), 0.4)).norm() < 1e-15);
    CHECK_THROWS_AS(cfgpp_predictions(ec, eu, 0.0, x, 0.4), std::invalid_argument);
    CHECK_THROWS_AS(cfgpp_predictions(ec, eu, 1.5, x, 0.4), std::invalid_argument);
}

TEST_CASE("guidance config validation") {
    GuidanceConfig ok;
    CHECK_NOTHROW(ok.validate());
    auto bad = ok;
    bad.omega = 0.9;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.angle_cap = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.cfgpp_lambda = 1.2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.apg.eta = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.apg.beta = 0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.apg.r = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    GuidanceConfig table;
    table.recfg_lambda = 0.7;
    table.recfg_table = {0.1, 0.2};
    CHECK(table.recfg_lambda_for(1) == 0.2);
    CHECK(table.recfg_lambda_for(5) == 0.7);
}

TEST_CASE("uncapped adg norm ratio never exceeds sqrt 2") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> w(1.0, 10.0);
    double worst = 0.0;
    for (int i = 0; i < 5000; ++i) {
        const std::size_t dim = 2 + i % 7;
        const Vector c = random_vector(rng, dim, 3.0);
        const Vector u = random_vector(rng, dim, 3.0);
        const auto s = prop1_measure(c, u, w(rng), kInf);
        worst = std::max(worst, s.ratio);
        CHECK(std::abs(s.ratio - s.predicted_ratio) < 1e-9);
    }
    CHECK(worst <= std::sqrt(2.0) * (1.0 + 1e-12));
}
