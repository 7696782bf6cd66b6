#include "cramsim/calibration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include <Eigen/Core>
#include <fmt/format.h>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "cramsim/errors.hpp"

namespace cramsim {

AnchorSet published_anchors() {
    using enum MtjState;
    AnchorSet a;
    a.v_logic = 0.620;
    a.points = {{{P, P}, 1120.0, 0.4133}, {{P, AP}, 1461.0, 0.3753}, {{AP, AP}, 2037.0, 0.3248}};
    return a;
}

AnchorSet synthesize_anchors(const MtjParams& params, double v_logic,
                             const std::vector<std::vector<MtjState>>& input_states) {
    AnchorSet a;
    a.v_logic = v_logic;
    for (const auto& states : input_states) {
        LogicStepConfig cfg;
        cfg.v_logic = v_logic;
        cfg.num_inputs = static_cast<int>(states.size());
        const OperatingPoint op = solve_operating_point(states, MtjState::P, cfg, params);
        a.points.push_back({states, op.r_in_eq, op.v_out});
    }
    return a;
}

std::vector<double> anchor_residuals(const AnchorSet& anchors, const MtjParams& params) {
    std::vector<double> res;
    res.reserve(anchors.points.size() * 2);
    for (const Anchor& a : anchors.points) {
        LogicStepConfig cfg;
        cfg.v_logic = anchors.v_logic;
        cfg.num_inputs = static_cast<int>(a.inputs.size());
        const OperatingPoint op = solve_operating_point(a.inputs, MtjState::P, cfg, params);
        res.push_back((op.r_in_eq - a.r_in_eq) / a.r_in_eq);
        res.push_back((op.v_out - a.v_out) / a.v_out);
    }
    return res;
}

namespace {

void check_anchor_set(const AnchorSet& anchors) {
    if (anchors.points.size() < 3) throw ConfigError("calibration needs at least three anchors");
    if (!(anchors.v_logic != 0.0) || !std::isfinite(anchors.v_logic))
        throw ConfigError("anchor V_logic must be non-zero");
    std::set<std::vector<MtjState>> distinct;
    for (const Anchor& a : anchors.points) {
        if (a.inputs.empty()) throw ConfigError("anchor without input states");
        if (!(a.r_in_eq > 0.0) || !(a.v_out != 0.0)) throw ConfigError("anchor values must be non-zero");
        std::vector<MtjState> sorted = a.inputs;
        std::sort(sorted.begin(), sorted.end());
        distinct.insert(sorted);
    }
    if (distinct.size() < 3) throw ConfigError("anchors must span at least three distinct input states");
}

// Unknowns are log(r_p0), log(r_ap0 - r_p0), log(v_h) so every iterate is valid.
struct RvResidual {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const AnchorSet* anchors;
    MtjParams seed;
    int* counter;

    static constexpr double kInvalidResidual = 1e3;

    int inputs() const { return 3; }
    int values() const { return static_cast<int>(anchors->points.size() * 2); }

    MtjParams unpack(const Eigen::VectorXd& x) const {
        MtjParams p = seed;
        p.r_p0 = std::exp(x[0]);
        p.r_ap0 = p.r_p0 + std::exp(x[1]);
        p.v_h = std::exp(x[2]);
        return p;
    }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
        ++*counter;
        try {
            const std::vector<double> r = anchor_residuals(*anchors, unpack(x));
            for (std::size_t i = 0; i < r.size(); ++i) f[static_cast<Eigen::Index>(i)] = r[i];
        } catch (const ParameterError&) {
            // Step left the representable range (e.g. R_AP collapsed onto R_P).
            f.setConstant(kInvalidResidual);
        }
        return 0;
    }
};

}  // namespace

MtjParams fit_resistance_model(const AnchorSet& anchors, const MtjParams& seed, int max_evaluations,
                               int* evaluations) {
    check_anchor_set(anchors);
    const double v = anchors.v_logic;

    // Initial guess: the output cell is P in every anchor, so each point
    // gives R_P directly from the divider ratio.
    std::vector<double> rp_est;
    for (const Anchor& a : anchors.points) rp_est.push_back(a.v_out * a.r_in_eq / (v - a.v_out));
    std::nth_element(rp_est.begin(), rp_est.begin() + static_cast<long>(rp_est.size() / 2), rp_est.end());
    const double rp0 = std::abs(rp_est[rp_est.size() / 2]);
    double rap0 = 2.0 * rp0;
    for (const Anchor& a : anchors.points) {
        if (std::all_of(a.inputs.begin(), a.inputs.end(), [](MtjState s) { return s == MtjState::AP; }))
            rap0 = std::max(rap0, a.r_in_eq * static_cast<double>(a.inputs.size()) * 1.05);
    }

    int count = 0;
    RvResidual functor{&anchors, seed, &count};
    Eigen::NumericalDiff<RvResidual> numeric(functor);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<RvResidual>> lm(numeric);
    lm.parameters.maxfev = max_evaluations;
    lm.parameters.xtol = 1e-12;
    lm.parameters.ftol = 1e-12;

    Eigen::VectorXd x(3);
    x << std::log(rp0), std::log(rap0 - rp0), std::log(1.0);
    lm.minimize(x);
    if (evaluations) *evaluations = count;
    const MtjParams fitted = functor.unpack(x);
    try {
        fitted.validate();
    } catch (const ParameterError& e) {
        throw CalibrationError(fmt::format("resistance-voltage fit diverged: {}", e.what()),
                               std::vector<double>(anchors.points.size() * 2, RvResidual::kInvalidResidual));
    }
    return fitted;
}

namespace {

// Sign of (error of '01') - (error of '11') for a 2-input NAND step.
double nand_balance(const MtjParams& p, double v_logic, double pulse_width) {
    using enum MtjState;
    const LogicStepConfig cfg = LogicStepConfig::for_gate(GateKind::NAND, v_logic, pulse_width);
    const std::array<MtjState, 2> s01{P, AP};
    const std::array<MtjState, 2> s11{AP, AP};
    const double miss = 1.0 - dout_mean(s01, cfg, p);
    const double false_switch = dout_mean(s11, cfg, p);
    return miss - false_switch;
}

}  // namespace

double pin_critical_voltage(const MtjParams& params, double v_logic, double pulse_width) {
    MtjParams p = params;
    double lo = 1e-3;
    double hi = 10.0;
    p.v_c0 = lo;
    const double f_lo = nand_balance(p, v_logic, pulse_width);
    p.v_c0 = hi;
    double f_hi = nand_balance(p, v_logic, pulse_width);
    while (!(f_hi > 0.0) && hi < 1e3) {
        hi *= 4.0;
        p.v_c0 = hi;
        f_hi = nand_balance(p, v_logic, pulse_width);
    }
    if (!(f_lo < 0.0 && f_hi > 0.0))
        throw CalibrationError("cannot bracket V_c0 for the NAND balance condition", {f_lo, f_hi});
    for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
        p.v_c0 = 0.5 * (lo + hi);
        (nand_balance(p, v_logic, pulse_width) > 0.0 ? hi : lo) = p.v_c0;
    }
    return 0.5 * (lo + hi);
}

CalibrationResult calibrate_from_anchors(const AnchorSet& anchors, const GateTarget& target,
                                         const CalibrationOptions& options) {
    check_anchor_set(anchors);
    if (!(target.min_error > 0.0 && target.min_error < 1.0))
        throw ConfigError("target gate error must lie in (0, 1)");
    if (!(target.tmr > 0.0) || !(target.pulse_width > 0.0)) throw ConfigError("invalid gate target");

    MtjParams seed = MtjParams::anchored_defaults();
    seed.tau0 = options.tau0;
    seed.v_c0_ap_to_p.reset();

    CalibrationResult result;
    MtjParams p = fit_resistance_model(anchors, seed, options.max_iterations, &result.rv_evaluations);
    result.anchor_residuals = anchor_residuals(anchors, p);
    for (double r : result.anchor_residuals) {
        if (!(std::abs(r) <= options.max_anchor_residual))
            throw CalibrationError("resistance-voltage fit leaves anchor residuals above tolerance",
                                   result.anchor_residuals);
    }

    const double v_pin = std::abs(anchors.v_logic);
    auto error_at = [&](double delta) {
        MtjParams q = p;
        q.delta_th = delta;
        q.v_c0 = pin_critical_voltage(q, v_pin, target.pulse_width);
        const MtjParams scaled = scale_tmr(q, target.tmr);
        const GateOptimum opt =
            optimize_vlogic(GateKind::NAND, scaled, target.pulse_width, Objective::Worst, options.scan);
        return std::pair{q, opt.response.worst_error};
    };

    // Larger delta_th means a steeper switching curve and a smaller error.
    // Below ln(t/tau0) the zero-bias rate alone flips the cell within one pulse.
    double lo = std::log(target.pulse_width / options.tau0) + 10.0;
    double hi = 500.0;
    const double e_lo = error_at(lo).second;
    const double e_hi = error_at(hi).second;
    if (!(e_lo > target.min_error && e_hi < target.min_error))
        throw CalibrationError(fmt::format("gate target {:.3g} outside reachable range [{:.3g}, {:.3g}]",
                                           target.min_error, e_hi, e_lo),
                               result.anchor_residuals);
    for (int i = 0; i < options.max_iterations && hi / lo - 1.0 > 1e-7; ++i) {
        const double mid = std::sqrt(lo * hi);
        (error_at(mid).second > target.min_error ? lo : hi) = mid;
    }
    auto [q, err] = error_at(std::sqrt(lo * hi));
    result.params = q;
    result.achieved_error = err;
    const double factor = std::max(err / target.min_error, target.min_error / err);
    if (!(factor <= options.max_error_factor)) {
        std::vector<double> res = result.anchor_residuals;
        res.push_back(err);
        throw CalibrationError("switching-model fit missed the gate error target", res);
    }
    return result;
}

void to_json(nlohmann::json& j, const AnchorSet& a) {
    j = nlohmann::json{{"v_logic", a.v_logic}, {"points", nlohmann::json::array()}};
    for (const Anchor& p : a.points) {
        std::string state;
        for (MtjState s : p.inputs) state += to_bit(s) ? '1' : '0';
        j["points"].push_back({{"state", state}, {"r_in_eq", p.r_in_eq}, {"v_out", p.v_out}});
    }
}

void from_json(const nlohmann::json& j, AnchorSet& a) {
    a.v_logic = j.at("v_logic").get<double>();
    a.points.clear();
    for (const auto& p : j.at("points")) {
        Anchor anchor;
        for (char c : p.at("state").get<std::string>()) {
            if (c != '0' && c != '1') throw ConfigError("anchor state must be a bit string");
            anchor.inputs.push_back(from_bit(c == '1'));
        }
        anchor.r_in_eq = p.at("r_in_eq").get<double>();
        anchor.v_out = p.at("v_out").get<double>();
        a.points.push_back(std::move(anchor));
    }
}

void to_json(nlohmann::json& j, const GateTarget& t) {
    j = nlohmann::json{{"tmr", t.tmr}, {"pulse_width", t.pulse_width}, {"min_error", t.min_error}};
}

void from_json(const nlohmann::json& j, GateTarget& t) {
    t.tmr = j.value("tmr", 1.09);
    t.pulse_width = j.value("pulse_width", 1e-3);
    t.min_error = j.value("min_error", 0.0076);
}

}  // namespace cramsim
