// commands.hpp: the CLI subcommands as library calls

#pragma once

#include "spinboson/config.hpp"
#include "spinboson/symmetry.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spinboson {

struct CommandOptions {
    unsigned threads = 1;
    std::optional<std::filesystem::path> out_dir; // overrides output.directory
    bool write_files = true;
};

struct CommandResult {
    nlohmann::json record;  // the ResultRecord
    int exit_code = 0;      // 0 ok, 1 numerical failure
    std::vector<std::filesystem::path> files;
};

// One G-zero paired with an oracle level of the same parity sector.
struct PairedLevel {
    ParitySector sector = ParitySector::Plus;
    SpectrumLevel zero;
    std::optional<double> oracle_energy;
    std::optional<double> abs_diff;
};

struct SpectrumComparison {
    std::vector<PairedLevel> rows;
    std::vector<std::pair<ParitySector, double>> unmatched_oracle;
};

// Greedy minimum-distance assignment between zeros and oracle energies.
// Returns, for each zero, the index of its oracle partner.
std::vector<std::optional<std::size_t>> greedy_pairing(const std::vector<double>& zeros,
                                                       const std::vector<double>& oracle);

// Oracle energies of H_M in one parity sector, ascending (dense per block).
std::vector<double> oracle_sector_energies(const ModelParams& params, ParitySector sector,
                                           int cutoff, std::size_t k = 0,
                                           std::size_t dense_threshold = 5000);

// Decimal text with 17 significant digits.
std::string format_double(double v);

CommandResult cmd_spectrum(const RunConfig& cfg, const CommandOptions& opts = {});
CommandResult cmd_gcurve(const RunConfig& cfg, const CommandOptions& opts = {});
CommandResult cmd_landscape(const RunConfig& cfg, const CommandOptions& opts = {});
// Test hook: builds the target side of one identity from a different model.
struct VerifyFault {
    TransformPair pair = TransformPair::M_to_Rot;
    RawParams target;
};

CommandResult cmd_verify(const RunConfig& cfg, const CommandOptions& opts = {},
                         const std::optional<VerifyFault>& fault = std::nullopt);
CommandResult cmd_symcheck(const RunConfig& cfg, const CommandOptions& opts = {});

// Machine-readable error body written on failure.
nlohmann::json error_json(const std::exception& e);

} // namespace spinboson
