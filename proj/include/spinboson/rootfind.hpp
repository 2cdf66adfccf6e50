// rootfind.hpp: zeros of G_N^{+-}(X) between consecutive poles

#pragma once

#include "spinboson/gfunction.hpp"
#include "spinboson/model.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spinboson {

struct ScanConfig {
    double x_min = -0.1;
    double x_max = 3.1;
    int grid_per_gap = 64;
    // Collar excluded around every pole; defaults to 1e-6 * min frequency.
    std::optional<double> pole_margin;
    double refine_tol = 1e-10;
    double g_tol = 1e-12;
    // Stop after this many zeros, scanning upwards from x_min (0 = no limit).
    std::size_t max_zeros = 0;
    // |G| below this at a grid minimum with no sign change is reported as a warning.
    double tangential_threshold = 1e-6;
    GOptions g_options;
};

// Throws ConfigError on a malformed range or grid.
void check_scan_config(const ScanConfig& cfg, const ModelParams& params);
double effective_pole_margin(const ScanConfig& cfg, const ModelParams& params);

enum class LevelSource { GFunction, Oracle };

std::string_view to_string(LevelSource source) noexcept;

struct SpectrumLevel {
    double x_zero = 0.0;
    double energy = 0.0;
    ParitySector sector = ParitySector::Plus;
    std::pair<double, double> bracket{0.0, 0.0};
    LevelSource source = LevelSource::GFunction;
    double g_at_zero = 0.0;
    int max_level = 0; // deepest G level used during refinement
};

struct Spectrum {
    std::vector<SpectrumLevel> levels; // ascending in energy
    std::vector<std::string> warnings;
    std::vector<std::string> notes;
};

// Zeros of G^{+-} in [x_min, x_max]; each sign change on the per-gap grid is
// refined by refine_zero. Throws NotConverged (with the offending X) when a
// G evaluation hits its level cap.
Spectrum scan_zeros(const ModelParams& params, ParitySector sector, const ScanConfig& cfg);

struct RefineResult {
    double x = 0.0;
    std::pair<double, double> bracket{0.0, 0.0}; // final bracket, width <= refine_tol
    double g_value = 0.0;
    int iterations = 0;
    int max_level = 0;
};

// Bisection with secant steps; a secant iterate outside the current bracket is
// replaced by the midpoint. Throws BracketInvalid when G has equal signs at the ends.
RefineResult refine_zero_detailed(const ModelParams& params, ParitySector sector,
                                  std::pair<double, double> bracket, const ScanConfig& cfg);

double refine_zero(const ModelParams& params, ParitySector sector,
                   std::pair<double, double> bracket, const ScanConfig& cfg);

} // namespace spinboson
