#include "spinboson/config.hpp"
#include "spinboson/error.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>

using namespace spinboson;
using nlohmann::json;

namespace {

json minimal() {
    return json::parse(R"({"model": {"omegas": [1.0, 0.92], "couplings": [0.7, 0.78], "delta": 0.68}})");
}

std::string failing_key(const json& j) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<accepted>";
}

} // namespace

TEST_CASE("a minimal config takes the defaults") {
    const auto cfg = parse_config(minimal());
    CHECK(cfg.model.omegas == std::vector<double>{1.0, 0.92});
    CHECK(cfg.model.kind == ModelKind::LinearSpinBoson);
    CHECK(cfg.scan.x_min == -0.1);
    CHECK(cfg.scan.x_max == 3.1);
    CHECK(cfg.scan.grid_per_gap == 64);
    CHECK_FALSE(cfg.scan.pole_margin.has_value());
    CHECK(cfg.oracle.cutoff == 60);
    CHECK(cfg.oracle.match_tol == 5e-4);
    CHECK(cfg.landscape.g1.steps == 21);
    CHECK(cfg.landscape.g2.at(20) == doctest::Approx(0.4));
    CHECK(cfg.gcurve.sectors.size() == 2);
    CHECK(cfg.verify.cutoff == 20);
    CHECK(cfg.output.wants("csv"));
}

TEST_CASE("unknown keys are rejected with their path") {
    auto j = minimal();
    j["extra"] = 1;
    CHECK(failing_key(j) == "extra");

    j = minimal();
    j["scan"] = {{"grid_size", 64}};
    CHECK(failing_key(j) == "scan.grid_size");

    j = minimal();
    j["model"]["omega"] = 1.0;
    CHECK(failing_key(j) == "model.omega");

    j = minimal();
    j["landscape"] = {{"g1", {{"min", 0}, {"max", 0.4}, {"step", 21}}}};
    CHECK(failing_key(j) == "landscape.g1.step");
}

TEST_CASE("wrong types, missing sections and bad values") {
    auto j = minimal();
    j["scan"] = {{"grid_per_gap", "many"}};
    CHECK(failing_key(j) == "scan.grid_per_gap");

    CHECK(failing_key(json::object()) == "model");

    j = minimal();
    j["model"].erase("delta");
    CHECK(failing_key(j) == "model.delta");

    j = minimal();
    j["model"]["kind"] = "three_photon";
    CHECK(failing_key(j) == "model.kind");

    j = minimal();
    j["scan"] = {{"tie_rule", "whatever"}};
    CHECK(failing_key(j) == "scan.tie_rule");

    j = minimal();
    j["gcurve"] = {{"sector", "up"}};
    CHECK(failing_key(j) == "gcurve.sector");

    j = minimal();
    j["output"] = {{"formats", {"csv", "xml"}}};
    CHECK(failing_key(j) == "output.formats");

    j = minimal();
    j["oracle"] = {{"cutoff", 1}};
    CHECK(failing_key(j) == "oracle.cutoff");
}

TEST_CASE("invalid model values surface as config errors on the mode") {
    auto j = minimal();
    j["model"]["omegas"][1] = -0.5;
    const auto cfg = parse_config(j);
    try {
        model_params(cfg);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "model[1]");
    }
}

TEST_CASE("serialisation round-trips") {
    auto j = minimal();
    j["scan"] = {{"grid_per_gap", 128}, {"pole_margin", 1e-5}, {"max_zeros", 4},
                 {"tie_rule", "all_groups"}, {"force_convergence_gate", true}};
    j["oracle"] = {{"cutoff", 30}, {"k", 10}};
    j["gcurve"] = {{"sector", "minus"}, {"step", 0.01}};
    j["landscape"] = {{"g1", {{"min", 0.1}, {"max", 0.3}, {"steps", 3}}}, {"x_min", -2.0}};
    j["model"]["kind"] = "two_photon";
    const auto cfg = parse_config(j);
    CHECK(cfg.model.kind == ModelKind::TwoPhotonSpinBoson);
    CHECK(cfg.scan.g_options.tie_rule == TieRule::AllGroups);
    CHECK(cfg.scan.g_options.force_convergence_gate);
    CHECK(cfg.scan.pole_margin == 1e-5);
    const json once = to_json(cfg);
    const json twice = to_json(parse_config(once));
    CHECK(once == twice);
    CHECK(parse_config(json{{"config_snapshot", once}, {"command", "spectrum"}}).oracle.k == 10);
}

TEST_CASE("loading from disk") {
    const auto dir = std::filesystem::temp_directory_path() / "spinboson_config_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "good.json") << minimal().dump();
        std::ofstream(dir / "broken.json") << "{\"model\": ";
    }
    CHECK(load_config(dir / "good.json").model.delta == 0.68);
    CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
    CHECK_THROWS_AS(load_config(dir / "absent.json"), ConfigError);
    std::filesystem::remove_all(dir);
}
