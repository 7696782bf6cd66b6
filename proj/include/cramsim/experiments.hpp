#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cramsim/calibration.hpp"
#include "cramsim/circuit_compiler.hpp"
#include "cramsim/mtj_device.hpp"
#include "cramsim/sim_analysis.hpp"

namespace cramsim {

/// Experiment configuration. Top-level keys mirror the CLI flags; each
/// command reads its own section ("gate_sweep", "adder", "projection",
/// "schedule"). See README for the schema.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::uint64_t trials = 10000;
    int workers = 1;  ///< execution only; never written to outputs
    int row_width = 0;
    std::string model = "physics";
    std::filesystem::path out = "runs/latest";
    nlohmann::json doc = nlohmann::json::object();  ///< full document, sections included

    /// Effective configuration as written to config.json.
    nlohmann::ordered_json snapshot() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Named bundles: fig4 (gate sweeps), fig5 (full adders), fig6 (projections).
ExperimentConfig preset_config(const std::string& name);

/// "params" object, else "params_file", else the anchored defaults.
MtjParams resolve_params(const ExperimentConfig& cfg);

struct RunResult {
    std::vector<std::filesystem::path> files;  ///< data files written, in order
    nlohmann::ordered_json summary;
};

RunResult run_calibrate(const ExperimentConfig& cfg);
RunResult run_gate_sweep(const ExperimentConfig& cfg);
RunResult run_adder(const ExperimentConfig& cfg);
RunResult run_projection(const ExperimentConfig& cfg);
RunResult run_schedule(const ExperimentConfig& cfg);

/// Schedule named by a {"generator": ..., ...} or {"file": ...} object.
Schedule schedule_from_spec(const nlohmann::json& spec);

}  // namespace cramsim
