// config.hpp: run configuration (strict JSON)

#pragma once

#include "spinboson/model.hpp"
#include "spinboson/rootfind.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spinboson {

struct GridRange {
    double min = 0.0;
    double max = 0.4;
    int steps = 21; // points, endpoints included

    double at(int i) const { return steps == 1 ? min : min + (max - min) * i / (steps - 1); }
};

struct OracleConfig {
    int cutoff = 60;
    std::size_t k = 0; // per parity block; 0 = whole block
    double match_tol = 5e-4;
    std::size_t dense_threshold = 5000;
};

struct LandscapeConfig {
    GridRange g1;
    GridRange g2;
    double x_min = -1.0;
    double x_max = 3.1;
};

struct GCurveConfig {
    double x_min = -0.1;
    double x_max = 3.1;
    double step = 0.002;
    std::vector<ParitySector> sectors{ParitySector::Plus, ParitySector::Minus};
};

struct VerifyConfig {
    int cutoff = 20;
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats{"csv", "json"};

    bool wants(std::string_view fmt) const;
};

struct RunConfig {
    RawParams model;
    ScanConfig scan;
    OracleConfig oracle;
    LandscapeConfig landscape;
    GCurveConfig gcurve;
    VerifyConfig verify;
    OutputConfig output;
};

// Throws ConfigError naming the offending key path (for example "scan.grid_size").
// A result record is accepted too: its "config_snapshot" is parsed.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

// validate(cfg.model), with the failure rethrown as ConfigError under "model".
ModelParams model_params(const RunConfig& cfg);

} // namespace spinboson
