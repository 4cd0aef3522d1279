#include "guidance_lab/config.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace guidance_lab;

namespace {

const std::string kSquare = "gmm:\n  means: [[1, 1], [1, -1], [-1, 1], [-1, -1]]\n";

std::string error_of(const std::string& text, const std::vector<Override>& ov = {}) {
    try {
        parse_config(text, ov, "cfg.yaml");
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("defaults from a minimal document") {
    const auto cfg = parse_config(kSquare);
    CHECK(cfg.gmm.size() == 4);
    CHECK(cfg.gmm.weights()[2] == 0.25);
    CHECK(cfg.schedule == NoiseSchedule{});
    CHECK(cfg.grid.steps == 200);
    CHECK(cfg.guidance.angle_cap == kDefaultAngleCap);
    CHECK(cfg.seeds().size() == cfg.run.seed_count);
    CHECK(cfg.time_grid().steps() == 200);
}

TEST_CASE("shipped configs load and survive a dump/load round trip") {
    for (const char* name : {"default.yaml", "bimodal_1d.yaml"}) {
        const auto cfg = load_config(std::string(CONFIG_DIR) + "/" + name);
        const auto again = parse_config(dump_config(cfg));
        CHECK(again == cfg);
        CHECK(dump_config(again) == dump_config(cfg));
    }
    const auto fixtures = {"pass.yaml", "fail.yaml", "omega_one.yaml"};
    for (const char* name : fixtures) {
        const auto cfg = load_config(std::string(FIXTURE_DIR) + "/" + name);
        CHECK(parse_config(dump_config(cfg)) == cfg);
    }
}

TEST_CASE("round trip keeps awkward doubles exactly") {
    const auto cfg = parse_config(kSquare + "guidance:\n  omega: 3.1000000000000001\n  angle_cap: 0.1\n"
                                            "schedule:\n  beta_min: 0.30000000000000004\n");
    const auto again = parse_config(dump_config(cfg));
    CHECK(again.guidance.angle_cap == 0.1);
    CHECK(again.schedule.beta_min == 0.30000000000000004);
    CHECK(again == cfg);
}

TEST_CASE("unknown keys are reported with their position") {
    const std::string msg = error_of("gmm:\n  means: [[1], [-1]]\nguidance:\n  omgea: 3\n");
    CHECK(msg.find("cfg.yaml:4:3") != std::string::npos);
    CHECK(msg.find("omgea") != std::string::npos);
    CHECK(msg.find("omega") != std::string::npos);
    CHECK_THROWS_AS(load_config(std::string(FIXTURE_DIR) + "/unknown_key.yaml"), ConfigError);
    CHECK_THROWS_AS(parse_config("guidance:\n  omega: 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("gmm: [1, 2\n"), ConfigError);
}

TEST_CASE("invalid values are rejected") {
    CHECK_THROWS(load_config(std::string(FIXTURE_DIR) + "/corrupt.yaml"));
    CHECK_THROWS(parse_config(kSquare + "guidance:\n  omega: 0.5\n"));
    CHECK_THROWS(parse_config(kSquare + "guidance:\n  strategy: magic\n"));
    CHECK_THROWS(parse_config(kSquare + "run:\n  condition: 4\n"));
    CHECK_THROWS(parse_config(kSquare + "grid:\n  t_end: 2\n"));
    CHECK_THROWS(parse_config(kSquare + "run:\n  seeds: [1, 1]\n"));
    CHECK_THROWS(parse_config("gmm:\n  dim: 3\n  means: [[1, 1]]\n"));
}

TEST_CASE("overrides apply in order and the last one wins") {
    const auto cfg = parse_config(kSquare, {parse_override("guidance.omega=3"), parse_override("guidance.omega=7"),
                                            parse_override("run.strategies=[cfg, apg]"),
                                            parse_override("guidance.apg.eta=0.5")});
    CHECK(cfg.guidance.omega == 7.0);
    REQUIRE(cfg.run.strategies.size() == 2);
    CHECK(cfg.run.strategies[1] == Strategy::apg);
    CHECK(cfg.guidance.apg.eta == 0.5);

    // New blocks may be created by an override.
    const auto c = parse_config(kSquare, {parse_override("c1.alpha_bar=0.5")});
    CHECK(c.c1_alpha_bar() == 0.5);

    CHECK_THROWS_AS(parse_override("novalue"), ConfigError);
    CHECK_THROWS_AS(parse_config(kSquare, {parse_override("guidance.omgea=2")}), ConfigError);
}

TEST_CASE("recfg lambda accepts a scalar or a per-condition list") {
    const auto s = parse_config(kSquare + "guidance:\n  recfg_lambda: 0.8\n");
    CHECK(s.guidance.recfg_lambda == 0.8);
    CHECK(s.guidance.recfg_table.empty());
    const auto l = parse_config(kSquare + "guidance:\n  recfg_lambda: [0.1, 0.2, 0.3, 0.4]\n");
    CHECK(l.guidance.recfg_lambda_for(2) == 0.3);
    CHECK(parse_config(dump_config(l)) == l);
}

TEST_CASE("c1 noise level from t or alpha_bar") {
    const auto cfg = parse_config("gmm:\n  means: [[-1], [1]]\nschedule:\n  beta_min: 0.6931471805599453\n"
                                  "  beta_max: 0.6931471805599453\nc1:\n  t: 1\n");
    CHECK(cfg.c1_alpha_bar() == doctest::Approx(0.5).epsilon(1e-15));
}
