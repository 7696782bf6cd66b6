#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "cramsim/gates.hpp"
#include "cramsim/mtj_device.hpp"

namespace cramsim {

/// Electrical settings of one logic step.
struct LogicStepConfig {
    double v_logic = 0.0;      ///< signed pulse amplitude on the input cells (V)
    double pulse_width = 1e-3; ///< s
    bool output_preset = false;
    int num_inputs = 2;
    double series_resistance = 0.0;  ///< lumped transistor/line resistance (ohm)

    void validate() const;

    /// Preset and polarity taken from the gate mapping; `v_magnitude` >= 0.
    static LogicStepConfig for_gate(GateKind kind, double v_magnitude, double pulse_width);

    bool operator==(const LogicStepConfig&) const = default;
};

/// One physical device taking part in a step.
struct Device {
    MtjParams params;
    MtjState state = MtjState::P;
};

/// Self-consistent bias point of the input-parallel / output-series divider.
/// Voltages are signed like V_logic.
struct OperatingPoint {
    double v_out = 0.0;    ///< across the output cell
    double v_in = 0.0;     ///< across the parallel input group
    double r_in_eq = 0.0;  ///< parallel input resistance at its own bias
    double r_out = 0.0;
    double i_total = 0.0;  ///< A, signed
    std::vector<double> per_input_bias;
    int iterations = 0;
    double residual = 0.0;
};

inline constexpr double kSolverTolerance = 1e-12;  // V
inline constexpr int kSolverMaxIterations = 1000;
inline constexpr double kSolverDamping = 0.5;

OperatingPoint solve_operating_point(std::span<const Device> inputs, const Device& output,
                                     const LogicStepConfig& cfg);
OperatingPoint solve_operating_point(std::span<const MtjState> inputs, MtjState output,
                                     const LogicStepConfig& cfg, const MtjParams& params);

/// Probability that the output cell reads 1 / reads 0 after the step.
struct StepOutcome {
    double p_one = 0.0;
    double p_zero = 1.0;
};

/// The output cell starts in `output.state`, which is normally the preset.
StepOutcome step_outcome(std::span<const Device> inputs, const Device& output, const LogicStepConfig& cfg);

/// <D_out> with the output starting from cfg.output_preset.
double dout_mean(std::span<const MtjState> inputs, const LogicStepConfig& cfg, const MtjParams& params);

/// Per-state response of a gate. Vectors are indexed by input state with
/// input 0 as the most significant bit.
struct GateResponse {
    GateKind kind = GateKind::NAND;
    int arity = 2;
    double v_logic = 0.0;
    double pulse_width = 0.0;
    std::vector<double> per_state_dout;
    std::vector<double> per_state_accuracy;
    std::vector<double> per_state_error;  ///< 1 - accuracy, computed without cancellation
    double mean_accuracy = 0.0;
    double worst_accuracy = 0.0;
    double mean_error = 0.0;
    double worst_error = 0.0;
};

GateResponse gate_accuracy(GateKind kind, const LogicStepConfig& cfg, const MtjParams& params);

enum class Objective { Mean, Worst };

/// Scan of |V_logic|; the sign comes from the gate's polarity.
struct VoltageScan {
    double v_min = 0.0;
    double v_max = 1.0;
    double resolution = 1e-3;

    std::vector<double> grid() const;
};

/// Scan used for min-error tables, where short pulses at high TMR push the
/// optimum beyond 1 V.
inline constexpr VoltageScan kWideScan{0.0, 2.0, 1e-3};

struct GateOptimum {
    double v_star = 0.0;
    GateResponse response;
};

/// Grid search for the V_logic maximizing the objective. Ties go to the
/// smaller |V|.
GateOptimum optimize_vlogic(GateKind kind, const MtjParams& params, double pulse_width, Objective objective,
                            const VoltageScan& scan = {}, double series_resistance = 0.0);

std::vector<GateResponse> sweep_vlogic(GateKind kind, const MtjParams& params, double pulse_width,
                                       const VoltageScan& scan = {}, double series_resistance = 0.0);

struct MinErrorRow {
    double tmr_percent = 0.0;
    double pulse_width = 0.0;
    double v_star = 0.0;
    double min_error = 0.0;
};

std::vector<MinErrorRow> min_error_vs_tmr(GateKind kind, const MtjParams& base_params,
                                          std::span<const double> tmr_percent,
                                          std::span<const double> pulse_widths,
                                          Objective objective = Objective::Worst,
                                          const VoltageScan& scan = kWideScan);

// CSV emitters (header row, '.' decimal separator).
void write_sweep_csv(std::ostream& out, std::span<const GateResponse> sweep);
void write_min_error_csv(std::ostream& out, GateKind kind, Objective objective,
                         std::span<const MinErrorRow> rows);

std::string_view to_string(Objective objective);

}  // namespace cramsim
