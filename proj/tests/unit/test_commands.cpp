#include "spinboson/commands.hpp"
#include "spinboson/error.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>
#include <sys/wait.h>

using namespace spinboson;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / ("spinboson_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RunConfig rabi_config() {
    return parse_config(json::parse(R"({
        "model": {"omegas": [1.0], "couplings": [0.7], "delta": 0.68},
        "oracle": {"cutoff": 60},
        "gcurve": {"step": 0.01}
    })"));
}

RunConfig two_mode_config() {
    return parse_config(json::parse(R"({
        "model": {"omegas": [1.0, 0.92], "couplings": [0.7, 0.78], "delta": 0.68}
    })"));
}

CommandOptions into(const fs::path& dir) {
    CommandOptions o;
    o.out_dir = dir;
    return o;
}

int run(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("greedy pairing takes the closest pairs first") {
    const auto p = greedy_pairing({1.0, 1.1, 5.0}, {1.08, 0.0});
    CHECK(p[0] == std::optional<std::size_t>(1));
    CHECK(p[1] == std::optional<std::size_t>(0));
    CHECK_FALSE(p[2].has_value());
    CHECK(greedy_pairing({}, {1.0}).empty());
}

TEST_CASE("doubles are written with 17 significant digits") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_double(M_PI)) == M_PI);
}

TEST_CASE("oracle sector energies split the full spectrum") {
    const auto p = validate(RawParams{{1.0, 0.92}, {0.7, 0.78}, 0.68});
    auto plus = oracle_sector_energies(p, ParitySector::Plus, 8);
    const auto minus = oracle_sector_energies(p, ParitySector::Minus, 8);
    CHECK(plus.size() + minus.size() == 90);
    plus.insert(plus.end(), minus.begin(), minus.end());
    std::sort(plus.begin(), plus.end());
    const auto ref = oracle::sorted_eigenvalues(
        oracle::product_space_hamiltonian({1.0, 0.92}, {0.7, 0.78}, 0.68, 8));
    CHECK(oracle::max_sorted_diff(plus, ref) < 1e-10);
    CHECK(oracle_sector_energies(p, ParitySector::Plus, 8, 3).size() == 3);
}

TEST_CASE("single mode spectrum matches its oracle in both sectors") {
    TempDir dir("spectrum_rabi");
    const auto res = cmd_spectrum(rabi_config(), into(dir.path));
    CHECK(res.exit_code == 0);
    const auto& s = res.record["summary"];
    CHECK(s["zeros"].get<int>() > 4);
    CHECK(s["max_abs_diff"].get<double>() <= 5e-4);
    CHECK(s["unmatched_oracle"].get<int>() == 0);
    CHECK(s["unmatched_zeros"].get<int>() == 0);
    CHECK(res.record["x_shift"].get<double>() == doctest::Approx(0.49));

    const auto csv = slurp(dir.path / "spectrum.csv");
    CHECK(csv.rfind("sector,x_zero,energy,oracle_energy,abs_diff,bracket_lo,bracket_hi\n", 0) == 0);
    CHECK(fs::exists(dir.path / "spectrum.json"));
}

TEST_CASE("spectrum output is deterministic and reproducible from its record") {
    TempDir a("spectrum_a"), b("spectrum_b"), c("spectrum_c");
    auto cfg = rabi_config();
    cfg.scan.x_max = 1.5;
    cmd_spectrum(cfg, into(a.path));
    auto opts = into(b.path);
    opts.threads = 3;
    cmd_spectrum(cfg, opts);
    CHECK(slurp(a.path / "spectrum.csv") == slurp(b.path / "spectrum.csv"));

    const auto replay = load_config(a.path / "spectrum.json");
    cmd_spectrum(replay, into(c.path));
    CHECK(slurp(a.path / "spectrum.csv") == slurp(c.path / "spectrum.csv"));
}

TEST_CASE("uncoupled spectrum puts the zero on Delta") {
    auto cfg = two_mode_config();
    cfg.model.couplings = {0.0, 0.0};
    cfg.oracle.cutoff = 6;
    auto opts = into(".");
    opts.write_files = false;
    const auto res = cmd_spectrum(cfg, opts);
    CHECK(res.files.empty());
    const auto& plus = res.record["spectra"]["plus"]["gfunction"];
    REQUIRE(plus.size() == 1);
    CHECK(std::abs(plus[0]["x_zero"].get<double>() - 0.68) < 1e-10);
    CHECK(res.record["spectra"]["minus"]["gfunction"].empty());
}

TEST_CASE("gcurve values, brackets and pole sidecar") {
    TempDir dir("gcurve");
    const auto cfg = rabi_config();
    const auto res = cmd_gcurve(cfg, into(dir.path));
    CHECK(slurp(dir.path / "poles.csv") ==
          "x_pole,n_indices\n0,(0)\n1,(1)\n2,(2)\n3,(3)\n");

    std::istringstream rows(slurp(dir.path / "gcurve_plus.csv"));
    std::string line;
    std::getline(rows, line);
    CHECK(line == "x,g_value,converged,nearest_pole,in_pole_collar");
    int checked = 0;
    while (std::getline(rows, line)) {
        std::istringstream fields(line);
        std::string x, g, conv;
        std::getline(fields, x, ',');
        std::getline(fields, g, ',');
        std::getline(fields, conv, ',');
        if (g.empty()) continue;
        const double ref = oracle::rabi_G(1.0, 0.7, 0.68, std::stod(x), 1);
        CHECK(std::abs(std::stod(g) - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
        CHECK(conv == "true");
        ++checked;
    }
    CHECK(checked > 300);

    // every sign change of the curve holds exactly one zero of the spectrum, and
    // every zero at least one grid step clear of a pole shows up as a sign change
    TempDir sdir("gcurve_spectrum");
    const auto spec = cmd_spectrum(cfg, into(sdir.path));
    for (const char* sector : {"plus", "minus"}) {
        const auto& brackets = res.record["sectors"][sector]["sign_change_brackets"];
        const auto& zeros = spec.record["spectra"][sector]["gfunction"];
        REQUIRE_FALSE(brackets.empty());
        for (const auto& br : brackets) {
            int inside = 0;
            for (const auto& z : zeros) {
                const double x = z["x_zero"].get<double>();
                if (x >= br[0].get<double>() && x <= br[1].get<double>()) ++inside;
            }
            CHECK(inside == 1);
        }
        for (const auto& z : zeros) {
            const double x = z["x_zero"].get<double>();
            if (std::abs(x - std::round(x)) <= cfg.gcurve.step) continue;
            bool seen = false;
            for (const auto& br : brackets) {
                seen = seen || (x >= br[0].get<double>() && x <= br[1].get<double>());
            }
            CHECK(seen);
        }
    }
}

TEST_CASE("landscape with equal frequencies is symmetric under g1 <-> g2") {
    auto cfg = two_mode_config();
    cfg.model.omegas = {1.0, 1.0};
    cfg.landscape.g1 = {0.0, 0.3, 4};
    cfg.landscape.g2 = {0.0, 0.3, 4};
    auto opts = into(".");
    opts.write_files = false;
    opts.threads = 2;
    const auto res = cmd_landscape(cfg, opts);
    CHECK(res.record["summary"]["failed"].get<int>() == 0);
    std::map<std::tuple<double, double, std::string>, double> e;
    for (const auto& p : res.record["points"]) {
        e[{p["g1"].get<double>(), p["g2"].get<double>(), p["sector"].get<std::string>()}] =
            p["energy"].get<double>();
    }
    CHECK(e.size() == 32);
    for (const auto& [key, energy] : e) {
        const auto& [g1, g2, sector] = key;
        CHECK(std::abs(energy - e.at({g2, g1, sector})) <= 1e-8);
    }
}

TEST_CASE("landscape records failures and carries on") {
    auto cfg = two_mode_config();
    cfg.landscape.g1 = {0.0, 0.2, 3};
    cfg.landscape.g2 = {0.0, 0.2, 3};
    auto opts = into(".");
    opts.write_files = false;
    const auto res = cmd_landscape(cfg, opts);
    const auto& sum = res.record["summary"];
    CHECK(sum["points"].get<int>() == 18);
    CHECK(sum["converged"].get<int>() + sum["failed"].get<int>() == 18);
    for (const auto& f : res.record["failures"]) CHECK_FALSE(f["reason"].get<std::string>().empty());
    auto one = cfg;
    one.model.omegas = {1.0};
    one.model.couplings = {0.1};
    CHECK_THROWS_AS(cmd_landscape(one, opts), ConfigError);
}

TEST_CASE("verify passes and a corrupted identity is reported alone") {
    auto opts = into(".");
    opts.write_files = false;
    const auto ok = cmd_verify(two_mode_config(), opts);
    CHECK(ok.exit_code == 0);
    CHECK(ok.record["identities"].size() == 6);

    VerifyFault fault;
    fault.pair = TransformPair::MS_to_MSRot;
    fault.target = two_mode_config().model;
    fault.target.couplings[1] += 1e-3;
    const auto bad = cmd_verify(two_mode_config(), opts, fault);
    CHECK(bad.exit_code == 1);
    CHECK_FALSE(bad.record["passed"].get<bool>());
    int failed = 0;
    for (const auto& id : bad.record["identities"]) {
        if (!id["passed"].get<bool>()) {
            ++failed;
            CHECK(id["identity"].get<std::string>() == std::string(to_string(fault.pair)));
        }
    }
    CHECK(failed == 1);
}

TEST_CASE("symcheck passes") {
    auto opts = into(".");
    opts.write_files = false;
    const auto res = cmd_symcheck(two_mode_config(), opts);
    CHECK(res.exit_code == 0);
    CHECK(res.record["checks"].size() == 3);
}

TEST_CASE("error bodies name the failure") {
    const auto c = error_json(ConfigError("bad", "scan.x_min"));
    CHECK(c["error"]["type"] == "ConfigError");
    CHECK(c["error"]["key"] == "scan.x_min");
    const auto n = error_json(NotConverged(0.25, 300, 1e-3));
    CHECK(n["error"]["x"] == 0.25);
    CHECK(error_json(std::runtime_error("x"))["error"]["type"] == "Error");
}

TEST_CASE("command line exit codes") {
    TempDir dir("cli");
    const std::string cli = SPINBOSON_CLI;
    {
        std::ofstream(dir.path / "good.json")
            << R"({"model": {"omegas": [1.0, 0.92], "couplings": [0.7, 0.78], "delta": 0.68}})";
        std::ofstream(dir.path / "typo.json")
            << R"({"model": {"omegas": [1.0], "couplings": [0.7], "delta": 0.68}, "scan": {"xmin": 0}})";
        std::ofstream(dir.path / "strong.json")
            << R"({"model": {"omegas": [1.0], "couplings": [1.2], "delta": 0.68}})";
    }
    const std::string quiet = " > /dev/null 2>&1";
    const auto out = (dir.path / "out").string();
    CHECK(run(cli + " --config " + (dir.path / "good.json").string() + " --out " + out +
              " verify" + quiet) == 0);
    CHECK(fs::exists(dir.path / "out" / "verify.json"));

    CHECK(run(cli + " --config " + (dir.path / "typo.json").string() + " --out " + out +
              " spectrum" + quiet) == 2);
    const auto err = json::parse(slurp(dir.path / "out" / "error.json"));
    CHECK(err["error"]["key"] == "scan.xmin");

    CHECK(run(cli + " --config " + (dir.path / "strong.json").string() + " --out " + out +
              " gcurve" + quiet) == 1);
    CHECK(json::parse(slurp(dir.path / "out" / "error.json"))["error"]["type"] ==
          "ConvergenceGateError");
}
