#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cramsim/gates.hpp"
#include "cramsim/prob_gates.hpp"
#include "cramsim/vcl_engine.hpp"

namespace cramsim {

/// One row operation: preset `output`, then drive `inputs` through `gate`.
/// `electrical` and `table` optionally pin the step's own physics or
/// probabilistic table; otherwise the simulation model supplies them.
struct LogicStep {
    GateKind gate = GateKind::NAND;
    std::vector<int> inputs;
    int output = 0;
    bool preset = false;
    std::optional<LogicStepConfig> electrical;
    std::optional<ProbGate> table;

    bool operator==(const LogicStep&) const = default;
};

struct Port {
    std::string name;
    int cell = 0;

    bool operator==(const Port&) const = default;
};

struct ConstantCell {
    int cell = 0;
    bool value = false;

    bool operator==(const ConstantCell&) const = default;
};

/// A group of input ports read as an unsigned integer, LSB first.
struct InputWord {
    std::string name;
    std::vector<int> ports;  ///< indices into Schedule::input_ports

    bool operator==(const InputWord&) const = default;
};

/// Compiled circuit. Input port order fixes the input-state numbering
/// (port 0 is the most significant bit); output ports decode as an
/// unsigned integer, LSB first.
struct Schedule {
    static constexpr int kFormatVersion = 1;

    std::string name;
    int cell_count = 0;
    std::vector<Port> input_ports;
    std::vector<Port> output_ports;
    std::vector<ConstantCell> constants;  ///< written after the inputs, before step 1
    std::vector<LogicStep> steps;
    std::vector<InputWord> input_words;
    /// Reference arithmetic: sum over terms of the product of the listed words.
    std::vector<std::vector<int>> arithmetic;

    bool has_arithmetic() const { return !arithmetic.empty(); }
    int output_bits() const { return static_cast<int>(output_ports.size()); }
    int input_bits() const { return static_cast<int>(input_ports.size()); }
    int input_port_index(std::string_view name) const;
    int output_port_index(std::string_view name) const;

    /// Steps per gate kind, in GateKind order, skipping unused kinds.
    std::vector<std::pair<GateKind, int>> gate_counts() const;

    bool operator==(const Schedule&) const = default;
};

struct Violation {
    std::string code;  ///< use-before-def, self-reference, out-of-range, arity-mismatch, unbound-output-port, duplicate-port
    int step = -1;     ///< -1 for port-level findings
    std::string message;
};

std::vector<Violation> validate_schedule(const Schedule& schedule);

/// Throws ScheduleError listing the violations, if any.
void require_valid(const Schedule& schedule);

/// Exact integer result of the schedule's arithmetic for the given input
/// port bits. Throws ConfigError when the schedule has no arithmetic.
std::uint64_t reference_output(const Schedule& schedule, std::span<const std::uint8_t> input_bits);

/// Port bits of input state `index` (port 0 is the MSB).
std::vector<std::uint8_t> input_bits_of(int input_bits, std::uint64_t index);
std::uint64_t decode_output(std::span<const std::uint8_t> output_bits);
std::string bits_label(std::span<const std::uint8_t> bits);

void to_json(nlohmann::ordered_json& j, const LogicStepConfig& c);
void from_json(const nlohmann::json& j, LogicStepConfig& c);

nlohmann::ordered_json schedule_to_json(const Schedule& schedule);
Schedule schedule_from_json(const nlohmann::json& j);

}  // namespace cramsim
