#include "spinboson/commands.hpp"

#include "spinboson/error.hpp"
#include "spinboson/fock.hpp"
#include "spinboson/gfunction.hpp"
#include "spinboson/parallel.hpp"
#include "spinboson/symmetry.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace spinboson {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Serialises every file write of a command through one place.
class Writer {
public:
    Writer(const RunConfig& cfg, const CommandOptions& opts)
        : dir_(opts.out_dir ? *opts.out_dir : fs::path(cfg.output.directory)),
          enabled_(opts.write_files), output_(cfg.output) {}

    void csv(const std::string& name, const std::string& body) {
        if (output_.wants("csv")) write(name, body);
    }

    void record(const std::string& name, const json& rec) {
        if (output_.wants("json")) write(name, rec.dump(2) + "\n");
    }

    const std::vector<fs::path>& files() const { return files_; }

private:
    void write(const std::string& name, const std::string& body) {
        if (!enabled_) return;
        fs::create_directories(dir_);
        const fs::path p = dir_ / name;
        std::ofstream out(p, std::ios::binary);
        if (!out) throw Error("cannot write " + p.string());
        out << body;
        files_.push_back(p);
    }

    fs::path dir_;
    bool enabled_;
    OutputConfig output_;
    std::vector<fs::path> files_;
};

std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

json level_json(const SpectrumLevel& l) {
    return {{"sector", std::string(to_string(l.sector))},
            {"x_zero", l.x_zero},
            {"energy", l.energy},
            {"bracket", {l.bracket.first, l.bracket.second}},
            {"source", std::string(to_string(l.source))},
            {"g_at_zero", l.g_at_zero},
            {"max_level", l.max_level}};
}

const std::vector<ParitySector> kSectors{ParitySector::Plus, ParitySector::Minus};

} // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::optional<std::size_t>> greedy_pairing(const std::vector<double>& zeros,
                                                       const std::vector<double>& oracle) {
    struct Candidate {
        double dist;
        std::size_t z, o;
    };
    std::vector<Candidate> all;
    all.reserve(zeros.size() * oracle.size());
    for (std::size_t z = 0; z < zeros.size(); ++z) {
        for (std::size_t o = 0; o < oracle.size(); ++o) {
            all.push_back({std::abs(zeros[z] - oracle[o]), z, o});
        }
    }
    std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
        return a.dist < b.dist || (a.dist == b.dist && (a.z < b.z || (a.z == b.z && a.o < b.o)));
    });
    std::vector<std::optional<std::size_t>> out(zeros.size());
    std::vector<bool> taken(oracle.size(), false);
    for (const auto& c : all) {
        if (out[c.z] || taken[c.o]) continue;
        out[c.z] = c.o;
        taken[c.o] = true;
    }
    return out;
}

std::vector<double> oracle_sector_energies(const ModelParams& params, ParitySector sector,
                                           int cutoff, std::size_t k,
                                           std::size_t dense_threshold) {
    const FockOperator h = build_hamiltonian(params, OperatorKind::H_M, cutoff);
    auto dec = parity_blocks(h, SymmetryGenerator::Z2_Pi);
    const double want = sign_of(sector);
    for (const auto& b : dec.blocks) {
        if (b.eigenvalue.real() != want) continue;
        const auto n = static_cast<std::size_t>(b.matrix.rows());
        EigenOptions eo;
        eo.dense_threshold = dense_threshold;
        return hermitian_eigenvalues(b.matrix, k == 0 ? n : std::min(k, n), eo);
    }
    return {};
}

// --- spectrum ---------------------------------------------------------------------

CommandResult cmd_spectrum(const RunConfig& cfg, const CommandOptions& opts) {
    const auto t0 = Clock::now();
    const ModelParams params = model_params(cfg);
    check_scan_config(cfg.scan, params);
    const double shift = x_shift(params);
    const double e_lo = cfg.scan.x_min - shift;
    const double e_hi = cfg.scan.x_max - shift;

    json rec;
    rec["command"] = "spectrum";
    rec["config_snapshot"] = to_json(cfg);
    rec["x_shift"] = shift;

    std::vector<PairedLevel> rows;
    json unmatched_oracle = json::array();
    json unmatched_zeros = json::array();
    int deepest = 0;
    std::vector<double> task_s(4, 0.0);
    std::vector<std::vector<double>> oracle_by_sector(2);
    std::vector<Spectrum> spectra(2);

    // the two sectors and their oracles are independent
    parallel_for(4, opts.threads, [&](std::size_t task) {
        const std::size_t s = task / 2;
        const auto t = Clock::now();
        if (task % 2 == 0) {
            spectra[s] = scan_zeros(params, kSectors[s], cfg.scan);
        } else {
            oracle_by_sector[s] = oracle_sector_energies(params, kSectors[s], cfg.oracle.cutoff,
                                                         cfg.oracle.k, cfg.oracle.dense_threshold);
        }
        task_s[task] = seconds_since(t);
    });

    double max_diff = 0.0;
    std::size_t within = 0;
    for (std::size_t s = 0; s < 2; ++s) {
        const ParitySector sector = kSectors[s];
        const Spectrum& sp = spectra[s];
        std::vector<double> window;
        for (double e : oracle_by_sector[s]) {
            if (e >= e_lo && e <= e_hi) window.push_back(e);
        }
        std::vector<double> zero_e;
        for (const auto& l : sp.levels) {
            zero_e.push_back(l.energy);
            deepest = std::max(deepest, l.max_level);
        }
        const auto pairs = greedy_pairing(zero_e, window);
        std::vector<bool> used(window.size(), false);
        for (std::size_t i = 0; i < sp.levels.size(); ++i) {
            PairedLevel row;
            row.sector = sector;
            row.zero = sp.levels[i];
            if (pairs[i]) {
                used[*pairs[i]] = true;
                row.oracle_energy = window[*pairs[i]];
                row.abs_diff = std::abs(*row.oracle_energy - row.zero.energy);
                max_diff = std::max(max_diff, *row.abs_diff);
                if (*row.abs_diff <= cfg.oracle.match_tol) ++within;
            } else {
                unmatched_zeros.push_back(level_json(row.zero));
            }
            rows.push_back(row);
        }
        for (std::size_t j = 0; j < window.size(); ++j) {
            if (!used[j]) {
                unmatched_oracle.push_back({{"sector", std::string(to_string(sector))},
                                            {"energy", window[j]},
                                            {"cutoff", cfg.oracle.cutoff}});
            }
        }

        json gf = json::array();
        for (const auto& l : sp.levels) gf.push_back(level_json(l));
        json orc = json::array();
        for (double e : window) {
            orc.push_back({{"energy", e}, {"source", "oracle"}, {"cutoff", cfg.oracle.cutoff}});
        }
        rec["spectra"][std::string(to_string(sector))] = {
            {"gfunction", gf}, {"oracle", orc}, {"warnings", sp.warnings}, {"notes", sp.notes}};
    }

    std::ostringstream csv;
    csv << "sector,x_zero,energy,oracle_energy,abs_diff,bracket_lo,bracket_hi\n";
    for (const auto& r : rows) {
        csv << to_string(r.sector) << ',' << format_double(r.zero.x_zero) << ','
            << format_double(r.zero.energy) << ',' << opt_cell(r.oracle_energy) << ','
            << opt_cell(r.abs_diff) << ',' << format_double(r.zero.bracket.first) << ','
            << format_double(r.zero.bracket.second) << '\n';
    }

    rec["unmatched_oracle"] = unmatched_oracle;
    rec["unmatched_zeros"] = unmatched_zeros;
    rec["summary"] = {{"zeros", rows.size()},
                      {"within_match_tol", within},
                      {"match_tol", cfg.oracle.match_tol},
                      {"max_abs_diff", max_diff},
                      {"unmatched_oracle", unmatched_oracle.size()},
                      {"unmatched_zeros", unmatched_zeros.size()}};
    rec["diagnostics"] = {{"max_level", deepest},
                          {"oracle_cutoff", cfg.oracle.cutoff},
                          {"oracle_dimension", fock_dimension(params.n_modes(), cfg.oracle.cutoff)}};
    rec["timings"] = {{"scan_s", task_s[0] + task_s[2]},
                       {"oracle_s", task_s[1] + task_s[3]}, {"total_s", seconds_since(t0)}};

    Writer w(cfg, opts);
    w.csv("spectrum.csv", csv.str());
    w.record("spectrum.json", rec);
    return {rec, 0, w.files()};
}

// --- gcurve -------------------------------------------------------------------------

CommandResult cmd_gcurve(const RunConfig& cfg, const CommandOptions& opts) {
    const auto t0 = Clock::now();
    const ModelParams params = model_params(cfg);
    check_convergence_gate(params, cfg.scan.g_options);
    const double margin = effective_pole_margin(cfg.scan, params);
    const auto& gc = cfg.gcurve;
    const std::size_t count =
        static_cast<std::size_t>(std::floor((gc.x_max - gc.x_min) / gc.step + 1e-9)) + 1;

    const PoleList plist = poles(params, gc.x_max + gc.step);
    std::vector<double> px;
    for (const auto& e : plist.entries) px.push_back(e.x_pole);
    auto nearest = [&](double x) {
        const auto it = std::lower_bound(px.begin(), px.end(), x);
        double best = px.front();
        if (it != px.end()) best = *it;
        if (it != px.begin() && std::abs(*(it - 1) - x) < std::abs(best - x)) best = *(it - 1);
        return best;
    };

    struct Row {
        double x = 0.0;
        std::optional<double> g;
        bool converged = false;
        double pole = 0.0;
        bool collar = false;
    };

    json rec;
    rec["command"] = "gcurve";
    rec["config_snapshot"] = to_json(cfg);
    rec["pole_margin"] = margin;
    Writer w(cfg, opts);

    for (ParitySector sector : gc.sectors) {
        std::vector<Row> rows(count);
        parallel_for(count, opts.threads, [&](std::size_t i) {
            Row& r = rows[i];
            r.x = gc.x_min + gc.step * static_cast<double>(i);
            r.pole = nearest(r.x);
            r.collar = std::abs(r.x - r.pole) <= margin;
            if (r.collar) return;
            try {
                const auto ev = evaluate_G(params, sector, r.x, cfg.scan.g_tol, cfg.scan.g_options);
                r.g = ev.value;
                r.converged = ev.converged;
            } catch (const PoleProximity&) {
                r.collar = true;
            }
        });

        std::ostringstream csv;
        csv << "x,g_value,converged,nearest_pole,in_pole_collar\n";
        json brackets = json::array();
        std::size_t unconverged = 0;
        for (std::size_t i = 0; i < count; ++i) {
            const Row& r = rows[i];
            csv << format_double(r.x) << ',' << opt_cell(r.g) << ','
                << (r.converged ? "true" : "false") << ',' << format_double(r.pole) << ','
                << (r.collar ? "true" : "false") << '\n';
            if (!r.collar && !r.converged) ++unconverged;
            if (i + 1 < count && r.g && rows[i + 1].g &&
                std::signbit(*r.g) != std::signbit(*rows[i + 1].g)) {
                // a sign flip across a pole is not a zero
                const bool pole_between = std::any_of(px.begin(), px.end(), [&](double p) {
                    return p > r.x && p < rows[i + 1].x;
                });
                if (!pole_between) brackets.push_back({r.x, rows[i + 1].x});
            }
        }
        const std::string name = std::string(to_string(sector));
        w.csv("gcurve_" + name + ".csv", csv.str());
        rec["sectors"][name] = {{"points", count},
                                {"unconverged", unconverged},
                                {"sign_change_brackets", brackets}};
    }

    std::ostringstream side;
    side << "x_pole,n_indices\n";
    json plj = json::array();
    for (const auto& e : plist.entries) {
        if (e.x_pole > gc.x_max) break;
        std::string labels;
        json idx = json::array();
        for (const auto& n : e.indices) {
            if (!labels.empty()) labels += ';';
            labels += format(n);
            idx.push_back(n.entries());
        }
        side << format_double(e.x_pole) << ',' << csv_quote(labels) << '\n';
        plj.push_back({{"x_pole", e.x_pole}, {"indices", idx}});
    }
    w.csv("poles.csv", side.str());
    rec["poles"] = plj;
    rec["timings"] = {{"total_s", seconds_since(t0)}};
    w.record("gcurve.json", rec);
    return {rec, 0, w.files()};
}

// --- landscape ------------------------------------------------------------------------

CommandResult cmd_landscape(const RunConfig& cfg, const CommandOptions& opts) {
    const auto t0 = Clock::now();
    const ModelParams base = model_params(cfg);
    if (base.n_modes() != 2) {
        throw ConfigError("landscape needs exactly two modes", "model.omegas");
    }
    const auto& ls = cfg.landscape;
    ScanConfig sc = cfg.scan;
    sc.x_min = ls.x_min;
    sc.x_max = ls.x_max;
    sc.max_zeros = 1;
    check_scan_config(sc, base);

    struct Point {
        double g1 = 0.0, g2 = 0.0;
        ParitySector sector = ParitySector::Plus;
        std::optional<double> x, energy;
        bool converged = false;
        std::string failure;
    };
    const std::size_t n1 = static_cast<std::size_t>(ls.g1.steps);
    const std::size_t n2 = static_cast<std::size_t>(ls.g2.steps);
    std::vector<Point> pts(n1 * n2 * 2);

    parallel_for(pts.size(), opts.threads, [&](std::size_t k) {
        Point& p = pts[k];
        const std::size_t i = k / (2 * n2);
        const std::size_t j = (k / 2) % n2;
        p.sector = kSectors[k % 2];
        p.g1 = ls.g1.at(static_cast<int>(i));
        p.g2 = ls.g2.at(static_cast<int>(j));
        try {
            RawParams raw = cfg.model;
            raw.couplings = {p.g1, p.g2};
            const ModelParams params = validate(raw);
            const Spectrum sp = scan_zeros(params, p.sector, sc);
            if (sp.levels.empty()) {
                p.failure = "no zero in the scan window";
                return;
            }
            p.x = sp.levels.front().x_zero;
            p.energy = sp.levels.front().energy;
            p.converged = true;
        } catch (const Error& e) {
            p.failure = e.what();
        }
    });

    std::ostringstream csv;
    csv << "g1,g2,sector,x_zero,energy,converged\n";
    json failures = json::array();
    json points = json::array();
    for (const auto& p : pts) {
        points.push_back({{"g1", p.g1},
                          {"g2", p.g2},
                          {"sector", std::string(to_string(p.sector))},
                          {"x_zero", p.x ? json(*p.x) : json(nullptr)},
                          {"energy", p.energy ? json(*p.energy) : json(nullptr)},
                          {"converged", p.converged}});
        csv << format_double(p.g1) << ',' << format_double(p.g2) << ',' << to_string(p.sector)
            << ',' << opt_cell(p.x) << ',' << opt_cell(p.energy) << ','
            << (p.converged ? "true" : "false") << '\n';
        if (!p.converged) {
            failures.push_back({{"g1", p.g1},
                                {"g2", p.g2},
                                {"sector", std::string(to_string(p.sector))},
                                {"reason", p.failure}});
        }
    }

    json rec;
    rec["command"] = "landscape";
    rec["config_snapshot"] = to_json(cfg);
    rec["summary"] = {{"points", pts.size()},
                      {"converged", pts.size() - failures.size()},
                      {"failed", failures.size()}};
    rec["failures"] = failures;
    rec["points"] = points;
    rec["timings"] = {{"total_s", seconds_since(t0)}, {"threads", opts.threads}};

    Writer w(cfg, opts);
    w.csv("landscape.csv", csv.str());
    w.record("landscape.json", rec);
    return {rec, 0, w.files()};
}

// --- verify / symcheck ---------------------------------------------------------------

CommandResult cmd_verify(const RunConfig& cfg, const CommandOptions& opts,
                         const std::optional<VerifyFault>& fault) {
    const auto t0 = Clock::now();
    const ModelParams params = model_params(cfg);
    auto reports = identity_suite(params, cfg.verify.cutoff);
    if (fault) {
        auto r = verify_transformation(params, validate(fault->target), fault->pair,
                                       cfg.verify.cutoff);
        for (auto& rep : reports) {
            if (rep.name == r.name) rep = r;
        }
    }

    json rec;
    rec["command"] = "verify";
    rec["config_snapshot"] = to_json(cfg);
    rec["cutoff"] = cfg.verify.cutoff;
    bool ok = true;
    json ids = json::array();
    for (const auto& r : reports) {
        ids.push_back({{"identity", r.name},
                       {"deviation", r.deviation},
                       {"max_abs_h", r.scale},
                       {"threshold", r.threshold},
                       {"passed", r.passed}});
        ok = ok && r.passed;
    }
    rec["identities"] = ids;
    rec["passed"] = ok;
    rec["timings"] = {{"total_s", seconds_since(t0)}};
    Writer w(cfg, opts);
    w.record("verify.json", rec);
    return {rec, ok ? 0 : 1, w.files()};
}

CommandResult cmd_symcheck(const RunConfig& cfg, const CommandOptions& opts) {
    const auto t0 = Clock::now();
    const ModelParams params = model_params(cfg);
    const auto reports = symmetry_suite(params, cfg.verify.cutoff);

    json rec;
    rec["command"] = "symcheck";
    rec["config_snapshot"] = to_json(cfg);
    rec["cutoff"] = cfg.verify.cutoff;
    bool ok = true;
    json checks = json::array();
    for (const auto& r : reports) {
        checks.push_back({{"check", r.name},
                          {"blocks", r.block_labels},
                          {"deviation", r.deviation},
                          {"max_abs_h", r.scale},
                          {"threshold", r.threshold},
                          {"passed", r.passed}});
        ok = ok && r.passed;
    }
    rec["checks"] = checks;
    rec["passed"] = ok;
    rec["timings"] = {{"total_s", seconds_since(t0)}};
    Writer w(cfg, opts);
    w.record("symcheck.json", rec);
    return {rec, ok ? 0 : 1, w.files()};
}

json error_json(const std::exception& e) {
    json err{{"message", e.what()}};
    if (const auto* c = dynamic_cast<const ConfigError*>(&e)) {
        err["type"] = "ConfigError";
        err["key"] = c->key();
    } else if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
        err["type"] = "ValidationError";
        err["index"] = v->index();
    } else if (const auto* g = dynamic_cast<const ConvergenceGateError*>(&e)) {
        err["type"] = "ConvergenceGateError";
        err["max_ratio"] = g->max_ratio();
    } else if (const auto* n = dynamic_cast<const NotConverged*>(&e)) {
        err["type"] = "NotConverged";
        err["x"] = n->x();
        err["max_level"] = n->max_level();
        err["tail"] = n->tail();
    } else if (const auto* p = dynamic_cast<const PoleProximity*>(&e)) {
        err["type"] = "PoleProximity";
        err["x"] = p->x();
        err["pole"] = p->pole();
    } else if (const auto* r = dynamic_cast<const RankDeficient*>(&e)) {
        err["type"] = "RankDeficient";
        err["level"] = r->level();
    } else if (const auto* rr = dynamic_cast<const ResidualTooLarge*>(&e)) {
        err["type"] = "ResidualTooLarge";
        err["level"] = rr->level();
        err["residual"] = rr->residual();
    } else if (const auto* d = dynamic_cast<const DimensionTooLarge*>(&e)) {
        err["type"] = "DimensionTooLarge";
        err["dimension"] = d->dimension();
    } else if (const auto* ec = dynamic_cast<const EigenConvergenceError*>(&e)) {
        err["type"] = "EigenConvergenceError";
        err["residual"] = ec->residual();
    } else if (dynamic_cast<const BracketInvalid*>(&e)) {
        err["type"] = "BracketInvalid";
    } else {
        err["type"] = "Error";
    }
    return {{"error", err}};
}

} // namespace spinboson
