#pragma once

#include <vector>

#include "cramsim/mtj_device.hpp"
#include "cramsim/vcl_engine.hpp"

namespace cramsim {

/// A measured (or modeled) divider point: input cell states, the parallel
/// input resistance and the voltage across the preset-0 output cell.
struct Anchor {
    std::vector<MtjState> inputs;
    double r_in_eq = 0.0;
    double v_out = 0.0;
};

struct AnchorSet {
    double v_logic = 0.0;
    std::vector<Anchor> points;
};

/// Gate-level target for the switching model: the optimized NAND
/// worst-state error at a zero-bias TMR ratio and pulse width.
struct GateTarget {
    double tmr = 1.09;
    double pulse_width = 1e-3;
    double min_error = 0.0076;
};

struct CalibrationOptions {
    double tau0 = 1e-9;
    double max_anchor_residual = 0.01;  ///< relative, per anchor quantity
    double max_error_factor = 2.0;      ///< achieved vs target gate error
    int max_iterations = 10000;
    VoltageScan scan = kWideScan;
};

struct CalibrationResult {
    MtjParams params;
    std::vector<double> anchor_residuals;  ///< (r_in_eq, v_out) relative residuals per anchor
    double achieved_error = 0.0;
    int rv_evaluations = 0;
};

/// The three divider points reported at V_logic = 0.620 V for input states
/// 00, 01 and 11.
AnchorSet published_anchors();

/// Anchors computed by the operating-point solver from known parameters.
AnchorSet synthesize_anchors(const MtjParams& params, double v_logic,
                             const std::vector<std::vector<MtjState>>& input_states);

/// Relative residuals (model - anchor) / anchor for r_in_eq and v_out of each point.
std::vector<double> anchor_residuals(const AnchorSet& anchors, const MtjParams& params);

/// Least-squares fit of (r_p0, r_ap0, v_h) to the anchors. Switching
/// parameters of `seed` are carried through unchanged.
MtjParams fit_resistance_model(const AnchorSet& anchors, const MtjParams& seed, int max_evaluations,
                               int* evaluations = nullptr);

/// V_c0 that equalizes the NAND '01' and '11' errors at `v_logic` for the given delta_th.
double pin_critical_voltage(const MtjParams& params, double v_logic, double pulse_width);

/// Full calibration: resistance fit, then a 1-D search along delta_th with
/// V_c0 pinned so the NAND errors balance at the anchor voltage.
CalibrationResult calibrate_from_anchors(const AnchorSet& anchors, const GateTarget& target,
                                         const CalibrationOptions& options = {});

void to_json(nlohmann::json& j, const AnchorSet& a);
void from_json(const nlohmann::json& j, AnchorSet& a);
void to_json(nlohmann::json& j, const GateTarget& t);
void from_json(const nlohmann::json& j, GateTarget& t);

}  // namespace cramsim
