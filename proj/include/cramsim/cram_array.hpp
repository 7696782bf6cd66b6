#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cramsim/mtj_device.hpp"
#include "cramsim/prob_gates.hpp"
#include "cramsim/rng.hpp"
#include "cramsim/schedule.hpp"

namespace cramsim {

struct CramCell {
    MtjParams params;
    MtjState stored = MtjState::P;
};

enum class LogicModel { DevicePhysics, ProbTable };

/// One row of cells sharing logic lines. Every write, step and read takes a
/// fixed number of draws from the caller's stream (write: 1, step: 2, read: 1)
/// whatever the error rates, so runs with different rates stay aligned.
class CramRow {
public:
    CramRow(int width, const MtjParams& params, LogicModel model);

    int width() const { return static_cast<int>(cells_.size()); }
    const CramCell& cell(int index) const;
    CramCell& cell(int index);

    LogicModel model() const { return model_; }

    double write_error_rate() const { return write_error_rate_; }
    void set_write_error_rate(double p);
    double read_error_rate() const { return read_error_rate_; }
    void set_read_error_rate(double p);

    /// Largest schedule this row accepts; unset means unlimited.
    std::optional<int> max_width;

    /// Tables used by ProbTable steps that carry no table of their own.
    std::map<GateKind, ProbGate> tables;
    /// Electrical settings used by DevicePhysics steps that carry none.
    std::map<GateKind, LogicStepConfig> electrical;

private:
    std::vector<CramCell> cells_;
    LogicModel model_;
    double write_error_rate_ = 0.0;
    double read_error_rate_ = 0.0;
};

/// Stores `bit`, or its complement with the row's write error rate.
void mem_write(CramRow& row, int index, bool bit, Rng& rng);

/// Error-free read.
bool mem_read(const CramRow& row, int index);
/// Read subject to the row's read error rate.
bool mem_read(const CramRow& row, int index, Rng& rng);

/// Preset write, then the gate. Input cells are never modified. Throws
/// ScheduleError on index problems and ConfigError when no table or
/// electrical setting covers the step.
void execute_step(CramRow& row, const LogicStep& step, Rng& rng);

/// Writes input ports in port order, then constants, runs the steps and
/// reads the output ports (returned in port order).
std::vector<std::uint8_t> execute_schedule(CramRow& row, const Schedule& schedule,
                                           std::span<const std::uint8_t> input_bits, Rng& rng);
std::vector<std::uint8_t> execute_schedule(CramRow& row, const Schedule& schedule,
                                           const std::map<std::string, bool>& inputs, Rng& rng);

nlohmann::ordered_json snapshot(const CramRow& row);

std::string_view to_string(LogicModel m);

}  // namespace cramsim
