#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

namespace cramsim {

/// Magnetic state of an MTJ. P is logic 0, AP is logic 1.
enum class MtjState : std::uint8_t { P = 0, AP = 1 };

constexpr bool to_bit(MtjState s) { return s == MtjState::AP; }
constexpr MtjState from_bit(bool b) { return b ? MtjState::AP : MtjState::P; }
constexpr MtjState flipped(MtjState s) { return s == MtjState::P ? MtjState::AP : MtjState::P; }

/// Physical parameters of one MTJ.
///
/// Units: resistances in ohms, voltages in volts, tau0 in seconds,
/// delta_th dimensionless. The critical voltage applies to both switching
/// directions unless `v_c0_ap_to_p` overrides the AP->P direction.
struct MtjParams {
    double r_p0 = 0.0;      ///< P resistance (bias independent)
    double r_ap0 = 0.0;     ///< zero-bias AP resistance
    double v_h = 0.0;       ///< AP bias-rolloff voltage
    double delta_th = 0.0;  ///< thermal stability factor
    double v_c0 = 0.0;      ///< critical switching voltage
    double tau0 = 1e-9;     ///< attempt time
    std::optional<double> v_c0_ap_to_p;

    double tmr0() const { return (r_ap0 - r_p0) / r_p0; }
    double critical_voltage(MtjState from) const;

    /// Throws ParameterError unless r_ap0 > r_p0 > 0 and the remaining
    /// parameters are finite and positive.
    void validate() const;

    /// Parameters fitted to the 0.620 V divider anchors (r_p0, r_ap0, v_h)
    /// and to a 0.0076 NAND error at 109% TMR with 1 ms pulses (delta_th, v_c0).
    static MtjParams anchored_defaults();

    bool operator==(const MtjParams&) const = default;
};

/// Device resistance at a bias. P is constant; AP rolls off as
/// r_ap0 / (1 + (v/v_h)^2), even in v.
double resistance(const MtjParams& params, MtjState state, double v_bias);

/// (R_AP(v) - R_P) / R_P.
double tmr_at_bias(const MtjParams& params, double v_bias);

/// Bias magnitude where the AP rolloff meets R_P. Below it R_AP >= R_P.
double ap_crossover_bias(const MtjParams& params);

/// Probabilities of switching and of staying put during one pulse. Both
/// are computed directly so that tiny tails keep full relative precision.
struct SwitchOdds {
    double p_switch = 0.0;
    double p_stay = 1.0;
};

/// Thermal-activation switching: P_sw = 1 - exp(-(t/tau0) exp(-delta (1 - |V|/V_c0))).
/// Positive cell voltage drives P->AP and negative drives AP->P. The other
/// polarity never switches.
SwitchOdds switch_odds(const MtjParams& params, MtjState from, double v_cell, double pulse_width);

double switch_probability(const MtjParams& params, MtjState from, double v_cell, double pulse_width);

/// Returns params with r_ap0 set so that the zero-bias TMR equals `target_tmr`
/// (a ratio, 1.0 == 100%). Everything else is unchanged.
MtjParams scale_tmr(const MtjParams& params, double target_tmr);

void to_json(nlohmann::json& j, const MtjParams& p);
void from_json(const nlohmann::json& j, MtjParams& p);

MtjParams load_params(const std::filesystem::path& path);
void save_params(const std::filesystem::path& path, const MtjParams& params);

}  // namespace cramsim
