#include "spinboson/rootfind.hpp"

#include "spinboson/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace spinboson {

namespace {

struct GSampler {
    const ModelParams& params;
    ParitySector sector;
    const ScanConfig& cfg;
    int deepest = 0;

    double operator()(double x) {
        const auto ev = evaluate_G(params, sector, x, cfg.g_tol, cfg.g_options);
        if (!ev.converged) throw NotConverged(x, ev.max_level, ev.tail_estimate);
        deepest = std::max(deepest, ev.max_level);
        return ev.value;
    }
};

bool same_sign(double a, double b) { return std::signbit(a) == std::signbit(b); }

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

} // namespace

std::string_view to_string(LevelSource source) noexcept {
    return source == LevelSource::GFunction ? "gfunction" : "oracle";
}

double effective_pole_margin(const ScanConfig& cfg, const ModelParams& params) {
    if (cfg.pole_margin) return *cfg.pole_margin;
    const auto& w = params.omegas();
    return 1e-6 * *std::min_element(w.begin(), w.end());
}

void check_scan_config(const ScanConfig& cfg, const ModelParams& params) {
    if (!std::isfinite(cfg.x_min) || !std::isfinite(cfg.x_max) || !(cfg.x_min < cfg.x_max)) {
        throw ConfigError("scan range must satisfy x_min < x_max", "scan.x_min");
    }
    if (cfg.grid_per_gap < 8) {
        throw ConfigError("grid_per_gap must be at least 8", "scan.grid_per_gap");
    }
    if (!(effective_pole_margin(cfg, params) > cfg.g_options.pole_guard)) {
        throw ConfigError("pole_margin must exceed the G pole guard", "scan.pole_margin");
    }
    if (!(cfg.refine_tol > 0.0)) throw ConfigError("refine_tol must be positive", "scan.refine_tol");
    if (!(cfg.g_tol > 0.0)) throw ConfigError("g_tol must be positive", "scan.g_tol");
}

RefineResult refine_zero_detailed(const ModelParams& params, ParitySector sector,
                                  std::pair<double, double> bracket, const ScanConfig& cfg) {
    GSampler G{params, sector, cfg};
    double a = std::min(bracket.first, bracket.second);
    double b = std::max(bracket.first, bracket.second);
    double ga = G(a), gb = G(b);
    if (ga == 0.0 || gb == 0.0) {
        const double x = ga == 0.0 ? a : b;
        return {x, {x, x}, 0.0, 0, G.deepest};
    }
    if (same_sign(ga, gb)) {
        throw BracketInvalid("G has the same sign at both ends of [" + fmt_double(a) + ", " +
                             fmt_double(b) + "]");
    }

    RefineResult r;
    int last_side = 0;   // -1 left end moved, +1 right end moved
    int repeats = 0;
    while (b - a > cfg.refine_tol && r.iterations < 400) {
        ++r.iterations;
        double s = b - gb * (b - a) / (gb - ga);
        if (repeats >= 2 || !(s > a && s < b)) {
            s = 0.5 * (a + b);
            repeats = 0;
        }
        const double gs = G(s);
        if (gs == 0.0) {
            a = b = s;
            break;
        }
        const int side = same_sign(gs, ga) ? -1 : 1;
        if (side < 0) {
            a = s;
            ga = gs;
        } else {
            b = s;
            gb = gs;
        }
        repeats = side == last_side ? repeats + 1 : 1;
        last_side = side;
    }
    r.x = 0.5 * (a + b);
    r.bracket = {a, b};
    r.g_value = G(r.x);
    r.max_level = G.deepest;
    return r;
}

double refine_zero(const ModelParams& params, ParitySector sector,
                   std::pair<double, double> bracket, const ScanConfig& cfg) {
    return refine_zero_detailed(params, sector, bracket, cfg).x;
}

Spectrum scan_zeros(const ModelParams& params, ParitySector sector, const ScanConfig& cfg) {
    check_scan_config(cfg, params);
    const double shift = x_shift(params);
    Spectrum out;
    if (params.delta() == 0.0) {
        out.notes.push_back(
            "delta = 0: the levels X = n.w coincide with the poles of G; no interior zeros "
            "are reported, use the Fock oracle for the decoupled spectrum");
        return out;
    }
    check_convergence_gate(params, cfg.g_options);

    const double margin = effective_pole_margin(cfg, params);
    std::vector<double> cuts;
    for (const auto& e : poles(params, cfg.x_max + margin).entries) cuts.push_back(e.x_pole);

    // open intervals between consecutive poles, plus the flanks
    std::vector<std::pair<double, double>> segments;
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= cuts.size(); ++i) {
        const double next = i < cuts.size() ? cuts[i] : std::numeric_limits<double>::infinity();
        const double lo = std::max(cfg.x_min, prev + margin);
        const double hi = std::min(cfg.x_max, next - margin);
        if (hi > lo) segments.emplace_back(lo, hi);
        prev = next;
    }

    GSampler G{params, sector, cfg};
    const int m = cfg.grid_per_gap;
    for (const auto& [lo, hi] : segments) {
        std::vector<double> xs(static_cast<std::size_t>(m) + 1), gs(xs.size());
        for (int i = 0; i <= m; ++i) {
            xs[i] = i == m ? hi : lo + (hi - lo) * i / m;
            gs[i] = G(xs[i]);
        }
        for (int i = 0; i < m; ++i) {
            if (out.levels.size() >= cfg.max_zeros && cfg.max_zeros != 0) break;
            if (gs[i] == 0.0) {
                // exact hit on a grid point; the next cell starts from it
                SpectrumLevel lvl;
                lvl.x_zero = xs[i];
                lvl.energy = xs[i] - shift;
                lvl.sector = sector;
                lvl.bracket = {xs[i], xs[i]};
                lvl.max_level = G.deepest;
                out.levels.push_back(lvl);
                continue;
            }
            if (gs[i + 1] == 0.0 || same_sign(gs[i], gs[i + 1])) continue;
            const auto r = refine_zero_detailed(params, sector, {xs[i], xs[i + 1]}, cfg);
            SpectrumLevel lvl;
            lvl.x_zero = r.x;
            lvl.energy = r.x - shift;
            lvl.sector = sector;
            lvl.bracket = {xs[i], xs[i + 1]};
            lvl.source = LevelSource::GFunction;
            lvl.g_at_zero = r.g_value;
            lvl.max_level = r.max_level;
            out.levels.push_back(lvl);
        }
        for (int i = 1; i < m; ++i) {
            const double a = std::abs(gs[i]);
            if (a < cfg.tangential_threshold && a <= std::abs(gs[i - 1]) &&
                a <= std::abs(gs[i + 1]) && same_sign(gs[i - 1], gs[i]) &&
                same_sign(gs[i], gs[i + 1])) {
                out.warnings.push_back("near-tangential minimum |G| = " + fmt_double(a) +
                                       " at X = " + fmt_double(xs[i]) +
                                       " without a sign change; not reported as a level");
            }
        }
        if (cfg.max_zeros != 0 && out.levels.size() >= cfg.max_zeros) break;
        if (gs[m] == 0.0) {
            SpectrumLevel lvl;
            lvl.x_zero = xs[m];
            lvl.energy = xs[m] - shift;
            lvl.sector = sector;
            lvl.bracket = {xs[m], xs[m]};
            out.levels.push_back(lvl);
        }
    }
    std::sort(out.levels.begin(), out.levels.end(),
              [](const auto& a, const auto& b) { return a.energy < b.energy; });
    return out;
}

} // namespace spinboson
