// Command-line front end: calibrate, gate-sweep, adder, projection, run-schedule.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cramsim/errors.hpp"
#include "cramsim/experiments.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kCalibration = 3, kCapacity = 4, kInternal = 5 };

struct Flags {
    std::string config;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials;
    std::optional<std::string> out;
    std::optional<int> row_width;
    std::optional<std::string> model;
    std::optional<int> workers;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--preset", f.preset, "fig4, fig5 or fig6");
    cmd->add_option("--seed", f.seed, "RNG seed");
    cmd->add_option("--trials", f.trials, "Monte Carlo trials per input state");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--row-width", f.row_width, "row width limit (7 for the 1x7 demo row, 0 = unlimited)");
    cmd->add_option("--model", f.model, "gate model")->check(CLI::IsMember({"physics", "table"}));
    cmd->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
}

cramsim::ExperimentConfig resolve(const Flags& f) {
    using namespace cramsim;
    ExperimentConfig c;
    if (!f.config.empty() && !f.preset.empty()) throw ConfigError("--config and --preset are exclusive");
    if (!f.config.empty())
        c = load_config(f.config);
    else if (!f.preset.empty())
        c = preset_config(f.preset);
    nlohmann::json doc = c.doc;
    if (f.seed) doc["seed"] = *f.seed;
    if (f.trials) doc["trials"] = *f.trials;
    if (f.out) doc["out"] = *f.out;
    if (f.row_width) doc["row_width"] = *f.row_width;
    if (f.model) doc["model"] = *f.model;
    if (f.workers) doc["workers"] = *f.workers;
    if (!doc.contains("out")) doc["out"] = c.out.string();
    return config_from_json(doc);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CRAM logic-in-memory simulator"};
    app.require_subcommand(1);
    Flags flags;
    using Runner = cramsim::RunResult (*)(const cramsim::ExperimentConfig&);
    Runner runner = nullptr;
    const std::pair<const char*, Runner> commands[] = {
        {"calibrate", cramsim::run_calibrate},   {"gate-sweep", cramsim::run_gate_sweep},
        {"adder", cramsim::run_adder},           {"projection", cramsim::run_projection},
        {"run-schedule", cramsim::run_schedule},
    };
    const char* help[] = {"fit device parameters to divider anchors and a gate error target",
                          "<D_out> and accuracy vs V_logic per gate",
                          "accuracy maps of both full-adder designs",
                          "NAND error vs TMR and NED of arithmetic circuits",
                          "simulate one schedule (generator or JSON file)"};
    for (std::size_t i = 0; i < std::size(commands); ++i) {
        CLI::App* cmd = app.add_subcommand(commands[i].first, help[i]);
        add_common(cmd, flags);
        cmd->callback([&, i] { runner = commands[i].second; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        const cramsim::ExperimentConfig cfg = resolve(flags);
        const cramsim::RunResult r = runner(cfg);
        for (const auto& p : r.files) fmt::print("wrote {}\n", p.string());
        fmt::print("{}\n", r.summary.dump(2));
        return kOk;
    } catch (const cramsim::CalibrationError& e) {
        fmt::print(std::cerr, "calibration failed: {}\n", e.what());
        for (double r : e.residuals()) fmt::print(std::cerr, "  residual {:.6g}\n", r);
        return kCalibration;
    } catch (const cramsim::CapacityError& e) {
        fmt::print(std::cerr, "capacity: {}\n", e.what());
        return kCapacity;
    } catch (const cramsim::ConfigError& e) {
        fmt::print(std::cerr, "usage: {}\n", e.what());
        return kUsage;
    } catch (const cramsim::ParameterError& e) {
        fmt::print(std::cerr, "usage: {}\n", e.what());
        return kUsage;
    } catch (const nlohmann::json::exception& e) {
        fmt::print(std::cerr, "usage: malformed config: {}\n", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return kInternal;
    }
}
