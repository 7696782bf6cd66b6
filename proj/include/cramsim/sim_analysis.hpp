#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cramsim/cram_array.hpp"
#include "cramsim/prob_gates.hpp"
#include "cramsim/schedule.hpp"
#include "cramsim/vcl_engine.hpp"

namespace cramsim {

/// How steps are given their output probabilities. A step's own table or
/// electrical setting always takes precedence.
struct GateModel {
    enum class Kind { PerKind, PerStep, DevicePhysics };

    Kind kind = Kind::PerKind;
    std::map<GateKind, ProbGate> per_kind;
    std::vector<ProbGate> per_step;
    MtjParams params = MtjParams::anchored_defaults();
    std::map<GateKind, LogicStepConfig> electrical;

    static GateModel ideal();
    static GateModel uniform_nand(double delta);
    static GateModel from_step_tables(std::vector<ProbGate> tables);
    static GateModel physics(const MtjParams& params, std::map<GateKind, LogicStepConfig> electrical);
    /// Physics model with each listed gate at its optimized V_logic.
    static GateModel physics_at_optimum(const MtjParams& params, std::span<const GateKind> kinds,
                                        double pulse_width = 1e-3, Objective objective = Objective::Mean,
                                        const VoltageScan& scan = {});
};

struct SimConfig {
    std::uint64_t trials = 10000;
    std::uint64_t seed = 1;
    GateModel model = GateModel::ideal();
    double write_error_rate = 0.0;
    double read_error_rate = 0.0;
    std::map<std::string, bool> fixed_inputs;
    std::uint64_t sampled_inputs = 10000;
    int max_enumerated_bits = 16;
    int workers = 1;
    int row_width = 0;  ///< 0 = unlimited

    void validate() const;
};

/// A step with its output probabilities resolved for every input state:
/// `p_ok` when the preset write succeeded, `p_bad` when it failed.
struct BoundStep {
    std::vector<int> inputs;
    int output = 0;
    bool preset = false;
    std::vector<double> p_ok;
    std::vector<double> p_bad;
};

std::vector<BoundStep> bind_model(const Schedule& schedule, const GateModel& model);

/// Output-value distribution for one input state.
struct StateDistribution {
    std::vector<std::uint8_t> input_bits;  ///< all input ports, port order
    std::vector<std::pair<std::uint64_t, double>> probability;  ///< sorted by output value
    std::vector<std::pair<std::uint64_t, std::uint64_t>> counts; ///< Monte Carlo only
};

struct DistributionSet {
    std::string schedule_name;
    int output_bits = 0;
    bool exact = false;
    bool sampled = false;  ///< inputs drawn uniformly instead of enumerated
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    std::vector<StateDistribution> states;
};

/// Inputs evaluated under `cfg`: every free-port assignment (free port 0 is
/// the MSB) when there are at most max_enumerated_bits free ports,
/// otherwise `sampled_inputs` uniform draws.
std::vector<std::vector<std::uint8_t>> evaluated_inputs(const Schedule& schedule, const SimConfig& cfg, bool* sampled = nullptr);

/// Trial t of input ordinal i draws from Rng(Rng::derive(seed, i, t)).
DistributionSet monte_carlo(const Schedule& schedule, const SimConfig& cfg);

/// Same draws as monte_carlo, executed on a CramRow one operation at a time.
DistributionSet monte_carlo_reference(const Schedule& schedule, const SimConfig& cfg);

inline constexpr int kMaxExactCells = 24;

/// Exact propagation of the joint cell-state distribution. Cells with no
/// further reads are summed out after each step.
DistributionSet exact_distribution(const Schedule& schedule, const SimConfig& cfg);

/// Deterministic evaluation with ideal gates.
std::vector<std::uint8_t> ideal_outputs(const Schedule& schedule, std::span<const std::uint8_t> input_bits);

struct NedReport {
    double mean_error_distance = 0.0;
    double ned = 0.0;
    double ned_accuracy = 100.0;  ///< percent
    int output_bits = 0;
    std::uint64_t inputs_evaluated = 0;
    bool sampled = false;
    std::vector<double> per_state_error_distance;
};

NedReport ned(const DistributionSet& distributions,
              const std::function<std::uint64_t(std::span<const std::uint8_t>)>& exact_fn, int output_bits);
/// Uses the schedule's reference arithmetic and declared output width.
NedReport ned(const DistributionSet& distributions, const Schedule& schedule);

struct AccuracyMap {
    std::vector<std::string> inputs;  ///< input-state labels, port order
    std::vector<std::string> ports;
    std::vector<std::vector<double>> accuracy;  ///< [input][port]
    std::vector<double> per_state_mean;
    std::vector<double> per_port_mean;
    double overall = 0.0;
};

AccuracyMap accuracy_map(const Schedule& schedule, const DistributionSet& distributions);
AccuracyMap accuracy_map(const Schedule& schedule, const SimConfig& cfg);

// Emitters. CSVs have a header row and use '.' as the decimal separator.
void write_distributions_csv(std::ostream& out, const DistributionSet& d);
void write_accuracy_csv(std::ostream& out, const AccuracyMap& m);
nlohmann::ordered_json to_json(const NedReport& r);
nlohmann::ordered_json to_json(const AccuracyMap& m);

std::string_view to_string(GateModel::Kind k);

}  // namespace cramsim
