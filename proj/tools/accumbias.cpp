// accumbias: reproduce the accumulation-bias tables and run error-control experiments.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <boost/version.hpp>

#include "CLI11.hpp"
#include "json.hpp"

#include "accumbias/accumbias.hpp"

namespace fs = std::filesystem;
using namespace accumbias;

namespace {

struct Flags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> reps;
    std::optional<unsigned> threads;
    std::string out_dir;
    bool quiet = false;
};

// Output directory: --out, then ACCUMBIAS_OUT_DIR, then output.dir from the config.
fs::path resolve_out_dir(const Flags& flags, const RunConfig& cfg) {
    if (!flags.out_dir.empty()) return flags.out_dir;
    if (const char* env = std::getenv("ACCUMBIAS_OUT_DIR"); env && *env) return env;
    return cfg.output.dir;
}

RunConfig build_config(const Flags& flags) {
    RunConfig cfg = flags.config_path.empty() ? RunConfig{} : load_config(flags.config_path);
    if (flags.seed) cfg.sim.seed = *flags.seed;
    if (flags.reps) cfg.sim.replications = *flags.reps;
    if (flags.threads) cfg.sim.threads = *flags.threads;
    cfg.validate();
    return cfg;
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                    const CommandOutput& out, int code) {
    nlohmann::ordered_json m;
    m["tool"] = "accumbias";
    m["version"] = std::string(version);
    m["command"] = command;
    m["config_hash"] = config_hash(cfg);
    m["config"] = serialize_config(cfg);
    m["seed"] = cfg.sim.seed;
    m["replications"] = cfg.sim.replications;
    m["threads"] = resolve_threads(cfg.sim.threads);
    m["compiler"] = __VERSION__;
    m["boost"] = BOOST_LIB_VERSION;
    auto files = nlohmann::json::array();
    for (const auto& t : out.tables) files.push_back(t.file);
    m["files"] = files;
    m["exit_code"] = code;
    const auto path = dir / "run_manifest.json";
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open '" + path.string() + "' for writing");
    f << m.dump(2) << '\n';
    if (!f) throw io_error("failed writing '" + path.string() + "'");
}

int run(const std::string& command, const Flags& flags) {
    RunConfig cfg;
    try {
        cfg = build_config(flags);
    } catch (const config_error& e) {
        std::cerr << "accumbias: invalid config: " << e.what() << '\n';
        return exit_code::invalid_config;
    }
    try {
        const auto out = run_command(command, cfg);
        const int code = out.property_failed ? exit_code::property_fail : exit_code::ok;
        const fs::path dir = resolve_out_dir(flags, cfg);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw io_error("cannot create output directory '" + dir.string() + "': " + ec.message());
        for (const auto& t : out.tables) {
            t.table.write(dir / t.file);
            if (!flags.quiet) std::cerr << "wrote " << (dir / t.file).string() << '\n';
        }
        write_manifest(dir, command, cfg, out, code);
        if (!flags.quiet) {
            for (const auto& line : out.report) std::cout << line << '\n';
        } else if (out.property_failed) {
            for (const auto& line : out.report) {
                if (line.rfind("FAIL", 0) == 0) std::cout << line << '\n';
            }
        }
        return code;
    } catch (const config_error& e) {
        std::cerr << "accumbias: invalid config: " << e.what() << '\n';
        return exit_code::invalid_config;
    } catch (const std::exception& e) {
        std::cerr << "accumbias: " << e.what() << '\n';
        return exit_code::runtime_failure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Accumulation bias in cumulative meta-analysis: tables, figures and error-control checks"};
    app.require_subcommand(1);
    app.fallthrough();

    Flags flags;
    app.add_option("--config", flags.config_path, "INI config file")->check(CLI::ExistingFile);
    app.add_option("--seed", flags.seed, "master seed");
    app.add_option("--reps", flags.reps, "number of replications")->check(CLI::PositiveNumber);
    app.add_option("--threads", flags.threads, "worker threads (0: all cores)");
    app.add_option("--out", flags.out_dir, "output directory");
    app.add_flag("--quiet", flags.quiet, "only report failures");

    const std::pair<const char*, const char*> commands[] = {
        {"table1", "expected z-scores under H0 (closed form and Monte Carlo)"},
        {"table2", "conditional type-I error: bias-only approximation vs simulation"},
        {"figure2", "sampling densities of the cumulative Z under H0"},
        {"bound-suite", "surviving error rates for every policy, z-test vs likelihood ratio"},
        {"simulate", "run the configured policy and decision rule"},
        {"analytic", "print closed-form Gold Rush quantities"},
        {"selftest", "check closed forms against independent evaluations"},
    };
    std::string chosen;
    for (const auto& [name, help] : commands) {
        app.add_subcommand(name, help)->callback([&chosen, n = std::string(name)] { chosen = n; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_code::invalid_config;
    }
    return run(chosen, flags);
}
