#include "cramsim/mtj_device.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "cramsim/errors.hpp"

namespace cramsim {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

// exp() of anything above this overflows; the switching rate is then
// effectively infinite anyway.
constexpr double kMaxLogRate = 700.0;

}  // namespace

double MtjParams::critical_voltage(MtjState from) const {
    if (from == MtjState::AP && v_c0_ap_to_p) return *v_c0_ap_to_p;
    return v_c0;
}

void MtjParams::validate() const {
    if (!positive_finite(r_p0)) throw ParameterError("r_p0 must be positive and finite");
    if (!std::isfinite(r_ap0) || !(r_ap0 > r_p0))
        throw ParameterError("r_ap0 must be finite and larger than r_p0");
    if (!positive_finite(v_h)) throw ParameterError("v_h must be positive");
    if (!positive_finite(delta_th)) throw ParameterError("delta_th must be positive");
    if (!positive_finite(v_c0)) throw ParameterError("v_c0 must be positive");
    if (!positive_finite(tau0)) throw ParameterError("tau0 must be positive");
    if (v_c0_ap_to_p && !positive_finite(*v_c0_ap_to_p))
        throw ParameterError("v_c0_ap_to_p must be positive");
}

MtjParams MtjParams::anchored_defaults() {
    MtjParams p;
    p.r_p0 = 2240.252608;
    p.r_ap0 = 4506.163064;
    p.v_h = 0.9061480823;
    p.delta_th = 57.43932964;
    p.v_c0 = 0.4774981367;
    p.tau0 = 1e-9;
    return p;
}

double resistance(const MtjParams& params, MtjState state, double v_bias) {
    params.validate();
    if (!std::isfinite(v_bias)) throw ParameterError("bias voltage must be finite");
    if (state == MtjState::P) return params.r_p0;
    const double x = v_bias / params.v_h;
    return params.r_ap0 / (1.0 + x * x);
}

double tmr_at_bias(const MtjParams& params, double v_bias) {
    return (resistance(params, MtjState::AP, v_bias) - params.r_p0) / params.r_p0;
}

double ap_crossover_bias(const MtjParams& params) {
    params.validate();
    return params.v_h * std::sqrt(params.tmr0());
}

SwitchOdds switch_odds(const MtjParams& params, MtjState from, double v_cell, double pulse_width) {
    params.validate();
    if (!positive_finite(pulse_width)) throw ParameterError("pulse width must be positive");
    if (!std::isfinite(v_cell)) throw ParameterError("cell voltage must be finite");

    const bool drives = from == MtjState::P ? v_cell > 0.0 : v_cell < 0.0;
    if (!drives) return {};

    const double vc = params.critical_voltage(from);
    const double barrier = params.delta_th * (1.0 - std::abs(v_cell) / vc);
    const double log_rate = std::log(pulse_width / params.tau0) - barrier;
    if (log_rate > kMaxLogRate) return {1.0, 0.0};
    const double rate = std::exp(log_rate);
    return {-std::expm1(-rate), std::exp(-rate)};
}

double switch_probability(const MtjParams& params, MtjState from, double v_cell, double pulse_width) {
    return switch_odds(params, from, v_cell, pulse_width).p_switch;
}

MtjParams scale_tmr(const MtjParams& params, double target_tmr) {
    params.validate();
    if (!positive_finite(target_tmr)) throw ParameterError("target TMR must be positive");
    MtjParams out = params;
    if (target_tmr == params.tmr0()) return out;
    out.r_ap0 = params.r_p0 * (1.0 + target_tmr);
    return out;
}

void to_json(nlohmann::json& j, const MtjParams& p) {
    j = nlohmann::json{{"r_p0", p.r_p0},         {"r_ap0", p.r_ap0}, {"v_h", p.v_h},
                       {"delta_th", p.delta_th}, {"v_c0", p.v_c0},   {"tau0", p.tau0}};
    if (p.v_c0_ap_to_p) j["v_c0_ap_to_p"] = *p.v_c0_ap_to_p;
}

void from_json(const nlohmann::json& j, MtjParams& p) {
    MtjParams d = MtjParams::anchored_defaults();
    p.r_p0 = j.value("r_p0", d.r_p0);
    p.r_ap0 = j.contains("tmr0") ? p.r_p0 * (1.0 + j.at("tmr0").get<double>()) : j.value("r_ap0", d.r_ap0);
    p.v_h = j.value("v_h", d.v_h);
    p.delta_th = j.value("delta_th", d.delta_th);
    p.v_c0 = j.value("v_c0", d.v_c0);
    p.tau0 = j.value("tau0", d.tau0);
    p.v_c0_ap_to_p.reset();
    if (j.contains("v_c0_ap_to_p") && !j.at("v_c0_ap_to_p").is_null())
        p.v_c0_ap_to_p = j.at("v_c0_ap_to_p").get<double>();
    p.validate();
}

MtjParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open params file " + path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.contains("params")) j = j.at("params");
    return j.get<MtjParams>();
}

void save_params(const std::filesystem::path& path, const MtjParams& params) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write params file " + path.string());
    out << nlohmann::json(params).dump(2) << '\n';
}

}  // namespace cramsim
