// spinboson: G-function spectra, Fock-space oracle and symmetry checks
//
//   spinboson --config run.json [--out dir] [--threads n] [--force-convergence-gate] <command>
//
// commands: spectrum, gcurve, landscape, verify, symcheck
// exit codes: 0 success, 1 numerical failure, 2 configuration error

#include "spinboson/commands.hpp"
#include "spinboson/error.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <thread>

namespace {

void report_error(const std::exception& e, const std::optional<std::filesystem::path>& dir) {
    const auto body = spinboson::error_json(e);
    std::cerr << body.dump(2) << '\n';
    if (!dir) return;
    std::error_code ec;
    std::filesystem::create_directories(*dir, ec);
    std::ofstream(*dir / "error.json") << body.dump(2) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spin-boson spectra from the G-function, checked against exact diagonalisation"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    bool force_gate = false;
    app.add_option("--config", config_path, "run configuration (JSON)")->required();
    app.add_option("--out", out_dir, "output directory (overrides output.directory)");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--force-convergence-gate", force_gate,
                 "evaluate G even when max g/omega >= 1");

    auto* spectrum = app.add_subcommand("spectrum", "G-zeros of both sectors paired with the oracle");
    auto* gcurve = app.add_subcommand("gcurve", "G on a uniform X grid plus the pole list");
    auto* landscape = app.add_subcommand("landscape", "lowest level per sector over a (g1, g2) grid");
    auto* verify = app.add_subcommand("verify", "unitary transformation identities");
    auto* symcheck = app.add_subcommand("symcheck", "parity block structure");

    CLI11_PARSE(app, argc, argv);

    std::optional<std::filesystem::path> out;
    if (!out_dir.empty()) out = out_dir;

    spinboson::RunConfig cfg;
    try {
        cfg = spinboson::load_config(config_path);
        if (force_gate) cfg.scan.g_options.force_convergence_gate = true;
    } catch (const spinboson::Error& e) {
        report_error(e, out);
        return 2;
    }
    if (!out) out = std::filesystem::path(cfg.output.directory);

    spinboson::CommandOptions opts;
    opts.threads = threads;
    opts.out_dir = out;

    try {
        spinboson::CommandResult res;
        if (*spectrum) res = spinboson::cmd_spectrum(cfg, opts);
        else if (*gcurve) res = spinboson::cmd_gcurve(cfg, opts);
        else if (*landscape) res = spinboson::cmd_landscape(cfg, opts);
        else if (*verify) res = spinboson::cmd_verify(cfg, opts);
        else if (*symcheck) res = spinboson::cmd_symcheck(cfg, opts);

        if (res.record.contains("summary")) std::cout << res.record["summary"].dump(2) << '\n';
        if (res.record.contains("passed")) {
            std::cout << (res.record["passed"].get<bool>() ? "all checks passed" : "checks FAILED")
                      << '\n';
        }
        for (const auto& f : res.files) std::cout << "wrote " << f.string() << '\n';
        return res.exit_code;
    } catch (const spinboson::ConfigError& e) {
        report_error(e, out);
        return 2;
    } catch (const spinboson::ValidationError& e) {
        report_error(e, out);
        return 2;
    } catch (const std::exception& e) {
        report_error(e, out);
        return 1;
    }
}
