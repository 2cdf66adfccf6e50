#include "spinboson/config.hpp"

#include "spinboson/error.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace spinboson {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects whatever was not asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object", path_);
    }

    std::string key_path(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <class T>
    void read(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("wrong type for " + key_path(key), key_path(key));
        }
    }

    template <class T>
    void require(const std::string& key, T& out) {
        if (!j_.contains(key)) throw ConfigError("missing key " + key_path(key), key_path(key));
        read(key, out);
    }

    Section sub(const std::string& key) {
        seen_.insert(key);
        return Section(j_.at(key), key_path(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ConfigError("unknown key " + key_path(it.key()), key_path(it.key()));
            }
        }
    }

private:
    std::string where() const { return path_.empty() ? "config" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void parse_model(Section s, RawParams& m) {
    s.require("omegas", m.omegas);
    s.require("couplings", m.couplings);
    s.require("delta", m.delta);
    std::string kind = std::string(to_string(m.kind));
    s.read("kind", kind);
    const auto k = parse_model_kind(kind);
    if (!k) throw ConfigError("unknown model kind '" + kind + "'", s.key_path("kind"));
    m.kind = *k;
    s.finish();
}

void parse_scan(Section s, ScanConfig& c) {
    s.read("x_min", c.x_min);
    s.read("x_max", c.x_max);
    s.read("grid_per_gap", c.grid_per_gap);
    double margin = 0.0;
    const bool has_margin = s.has("pole_margin");
    s.read("pole_margin", margin);
    if (has_margin) c.pole_margin = margin;
    s.read("refine_tol", c.refine_tol);
    s.read("g_tol", c.g_tol);
    s.read("max_zeros", c.max_zeros);
    s.read("tangential_threshold", c.tangential_threshold);
    s.read("pole_guard", c.g_options.pole_guard);
    s.read("level_cap", c.g_options.level_cap);
    s.read("force_convergence_gate", c.g_options.force_convergence_gate);
    std::string rule = c.g_options.tie_rule == TieRule::AllGroups ? "all_groups" : "rank_completing";
    s.read("tie_rule", rule);
    if (rule == "rank_completing") {
        c.g_options.tie_rule = TieRule::RankCompleting;
    } else if (rule == "all_groups") {
        c.g_options.tie_rule = TieRule::AllGroups;
    } else {
        throw ConfigError("unknown tie_rule '" + rule + "'", s.key_path("tie_rule"));
    }
    s.finish();
}

void parse_range(Section s, GridRange& r) {
    s.read("min", r.min);
    s.read("max", r.max);
    s.read("steps", r.steps);
    s.finish();
    if (r.steps < 1 || !(r.min <= r.max)) {
        throw ConfigError("range needs min <= max and steps >= 1", s.key_path("steps"));
    }
}

std::vector<ParitySector> parse_sectors(const std::string& text, const std::string& key) {
    if (text == "both") return {ParitySector::Plus, ParitySector::Minus};
    if (const auto s = parse_sector(text)) return {*s};
    throw ConfigError("sector must be plus, minus or both", key);
}

RunConfig parse_root(const json& j) {
    RunConfig cfg;
    Section root(j, "");
    if (!j.contains("model")) throw ConfigError("missing section model", "model");
    parse_model(root.sub("model"), cfg.model);
    if (j.contains("scan")) parse_scan(root.sub("scan"), cfg.scan);
    if (j.contains("oracle")) {
        Section s = root.sub("oracle");
        s.read("cutoff", cfg.oracle.cutoff);
        s.read("k", cfg.oracle.k);
        s.read("match_tol", cfg.oracle.match_tol);
        s.read("dense_threshold", cfg.oracle.dense_threshold);
        s.finish();
        if (cfg.oracle.cutoff < 2) throw ConfigError("oracle.cutoff must be >= 2", "oracle.cutoff");
    }
    if (j.contains("landscape")) {
        Section s = root.sub("landscape");
        if (s.has("g1")) parse_range(s.sub("g1"), cfg.landscape.g1);
        if (s.has("g2")) parse_range(s.sub("g2"), cfg.landscape.g2);
        s.read("x_min", cfg.landscape.x_min);
        s.read("x_max", cfg.landscape.x_max);
        s.finish();
    }
    if (j.contains("gcurve")) {
        Section s = root.sub("gcurve");
        s.read("x_min", cfg.gcurve.x_min);
        s.read("x_max", cfg.gcurve.x_max);
        s.read("step", cfg.gcurve.step);
        std::string sector = "both";
        s.read("sector", sector);
        cfg.gcurve.sectors = parse_sectors(sector, s.key_path("sector"));
        s.finish();
        if (!(cfg.gcurve.step > 0.0) || !(cfg.gcurve.x_min < cfg.gcurve.x_max)) {
            throw ConfigError("gcurve needs step > 0 and x_min < x_max", "gcurve.step");
        }
    }
    if (j.contains("verify")) {
        Section s = root.sub("verify");
        s.read("cutoff", cfg.verify.cutoff);
        s.finish();
    }
    if (j.contains("output")) {
        Section s = root.sub("output");
        s.read("directory", cfg.output.directory);
        s.read("formats", cfg.output.formats);
        s.finish();
        for (const auto& f : cfg.output.formats) {
            if (f != "csv" && f != "json") {
                throw ConfigError("unknown output format '" + f + "'", "output.formats");
            }
        }
    }
    root.finish();
    return cfg;
}

json range_json(const GridRange& r) { return {{"min", r.min}, {"max", r.max}, {"steps", r.steps}}; }

} // namespace

bool OutputConfig::wants(std::string_view fmt) const {
    return std::find(formats.begin(), formats.end(), fmt) != formats.end();
}

RunConfig parse_config(const json& j) {
    if (j.is_object() && j.contains("config_snapshot")) return parse_root(j.at("config_snapshot"));
    return parse_root(j);
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string(), "");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what(), "");
    }
    return parse_config(j);
}

json to_json(const RunConfig& cfg) {
    json scan = {
        {"x_min", cfg.scan.x_min},
        {"x_max", cfg.scan.x_max},
        {"grid_per_gap", cfg.scan.grid_per_gap},
        {"refine_tol", cfg.scan.refine_tol},
        {"g_tol", cfg.scan.g_tol},
        {"max_zeros", cfg.scan.max_zeros},
        {"tangential_threshold", cfg.scan.tangential_threshold},
        {"pole_guard", cfg.scan.g_options.pole_guard},
        {"level_cap", cfg.scan.g_options.level_cap},
        {"force_convergence_gate", cfg.scan.g_options.force_convergence_gate},
        {"tie_rule",
         cfg.scan.g_options.tie_rule == TieRule::AllGroups ? "all_groups" : "rank_completing"},
    };
    if (cfg.scan.pole_margin) scan["pole_margin"] = *cfg.scan.pole_margin;

    std::string sector = "both";
    if (cfg.gcurve.sectors.size() == 1) sector = std::string(to_string(cfg.gcurve.sectors[0]));

    return {
        {"model",
         {{"omegas", cfg.model.omegas},
          {"couplings", cfg.model.couplings},
          {"delta", cfg.model.delta},
          {"kind", std::string(to_string(cfg.model.kind))}}},
        {"scan", scan},
        {"oracle",
         {{"cutoff", cfg.oracle.cutoff},
          {"k", cfg.oracle.k},
          {"match_tol", cfg.oracle.match_tol},
          {"dense_threshold", cfg.oracle.dense_threshold}}},
        {"landscape",
         {{"g1", range_json(cfg.landscape.g1)},
          {"g2", range_json(cfg.landscape.g2)},
          {"x_min", cfg.landscape.x_min},
          {"x_max", cfg.landscape.x_max}}},
        {"gcurve",
         {{"x_min", cfg.gcurve.x_min},
          {"x_max", cfg.gcurve.x_max},
          {"step", cfg.gcurve.step},
          {"sector", sector}}},
        {"verify", {{"cutoff", cfg.verify.cutoff}}},
        {"output", {{"directory", cfg.output.directory}, {"formats", cfg.output.formats}}},
    };
}

ModelParams model_params(const RunConfig& cfg) {
    try {
        return validate(cfg.model);
    } catch (const ValidationError& e) {
        std::string key = "model";
        if (e.index() >= 0) key += "[" + std::to_string(e.index()) + "]";
        throw ConfigError(e.what(), key);
    }
}

} // namespace spinboson
