#include "cramsim/vcl_engine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cramsim/errors.hpp"

namespace cramsim {

void LogicStepConfig::validate() const {
    if (!std::isfinite(v_logic)) throw ParameterError("V_logic must be finite");
    if (!(pulse_width > 0.0) || !std::isfinite(pulse_width)) throw ParameterError("pulse width must be positive");
    if (num_inputs < 1) throw ConfigError("a logic step needs at least one input");
    if (!(series_resistance >= 0.0)) throw ParameterError("series resistance must be non-negative");
}

LogicStepConfig LogicStepConfig::for_gate(GateKind kind, double v_magnitude, double pulse_width) {
    LogicStepConfig cfg;
    cfg.v_logic = default_polarity(kind) * std::abs(v_magnitude);
    cfg.pulse_width = pulse_width;
    cfg.output_preset = default_preset(kind);
    cfg.num_inputs = gate_arity(kind);
    return cfg;
}

namespace {

// Resistances are re-evaluated at the current bias guess; the new guess
// is blended with the old one.
template <class InputR, class OutputR>
OperatingPoint solve_divider(std::size_t n_inputs, InputR&& input_r, OutputR&& output_r,
                             const LogicStepConfig& cfg) {
    const double v = cfg.v_logic;
    const double rs = cfg.series_resistance;
    auto parallel = [&](double bias) {
        double g = 0.0;
        for (std::size_t i = 0; i < n_inputs; ++i) g += 1.0 / input_r(i, bias);
        return 1.0 / g;
    };

    OperatingPoint op;
    double r_in = parallel(0.0);
    double r_out = output_r(0.0);
    double i_tot = v / (r_in + rs + r_out);
    double v_in = i_tot * r_in;
    double v_out = i_tot * r_out;

    double residual = 0.0;
    int it = 0;
    if (v != 0.0) {
        for (; it < kSolverMaxIterations; ++it) {
            r_in = parallel(v_in);
            r_out = output_r(v_out);
            const double i_new = v / (r_in + rs + r_out);
            const double v_in_new = i_new * r_in;
            const double v_out_new = i_new * r_out;
            residual = std::max(std::abs(v_in_new - v_in), std::abs(v_out_new - v_out));
            v_in += kSolverDamping * (v_in_new - v_in);
            v_out += kSolverDamping * (v_out_new - v_out);
            if (residual < kSolverTolerance) {
                v_in = v_in_new;
                v_out = v_out_new;
                break;
            }
        }
        if (residual >= kSolverTolerance)
            throw SolverError(fmt::format("operating point did not converge (residual {:.3g} V)", residual),
                              residual);
        r_in = parallel(v_in);
        r_out = output_r(v_out);
    }
    i_tot = v / (r_in + rs + r_out);

    op.v_out = v_out;
    op.v_in = v_in;
    op.r_in_eq = r_in;
    op.r_out = r_out;
    op.i_total = i_tot;
    op.per_input_bias.assign(n_inputs, v_in);
    op.iterations = it;
    op.residual = residual;
    return op;
}

}  // namespace

OperatingPoint solve_operating_point(std::span<const Device> inputs, const Device& output,
                                     const LogicStepConfig& cfg) {
    cfg.validate();
    if (inputs.size() != static_cast<std::size_t>(cfg.num_inputs))
        throw ConfigError(fmt::format("step expects {} inputs, got {}", cfg.num_inputs, inputs.size()));
    for (const Device& d : inputs) d.params.validate();
    output.params.validate();
    return solve_divider(
        inputs.size(), [&](std::size_t i, double b) { return resistance(inputs[i].params, inputs[i].state, b); },
        [&](double b) { return resistance(output.params, output.state, b); }, cfg);
}

OperatingPoint solve_operating_point(std::span<const MtjState> inputs, MtjState output,
                                     const LogicStepConfig& cfg, const MtjParams& params) {
    cfg.validate();
    params.validate();
    if (inputs.size() != static_cast<std::size_t>(cfg.num_inputs))
        throw ConfigError(fmt::format("step expects {} inputs, got {}", cfg.num_inputs, inputs.size()));
    return solve_divider(
        inputs.size(), [&](std::size_t i, double b) { return resistance(params, inputs[i], b); },
        [&](double b) { return resistance(params, output, b); }, cfg);
}

namespace {

StepOutcome outcome_from(const MtjParams& out_params, MtjState start, double v_out, double pulse) {
    const SwitchOdds odds = switch_odds(out_params, start, v_out, pulse);
    if (start == MtjState::P) return {odds.p_switch, odds.p_stay};
    return {odds.p_stay, odds.p_switch};
}

}  // namespace

StepOutcome step_outcome(std::span<const Device> inputs, const Device& output, const LogicStepConfig& cfg) {
    const OperatingPoint op = solve_operating_point(inputs, output, cfg);
    return outcome_from(output.params, output.state, op.v_out, cfg.pulse_width);
}

namespace {

StepOutcome homogeneous_outcome(std::span<const MtjState> inputs, const LogicStepConfig& cfg,
                                const MtjParams& params) {
    const MtjState start = from_bit(cfg.output_preset);
    const OperatingPoint op = solve_operating_point(inputs, start, cfg, params);
    return outcome_from(params, start, op.v_out, cfg.pulse_width);
}

}  // namespace

double dout_mean(std::span<const MtjState> inputs, const LogicStepConfig& cfg, const MtjParams& params) {
    return homogeneous_outcome(inputs, cfg, params).p_one;
}

GateResponse gate_accuracy(GateKind kind, const LogicStepConfig& cfg, const MtjParams& params) {
    const int arity = gate_arity(kind);
    if (cfg.num_inputs != arity)
        throw ConfigError(fmt::format("{} needs {} inputs but the step config has {}", to_string(kind), arity,
                                      cfg.num_inputs));
    GateResponse r;
    r.kind = kind;
    r.arity = arity;
    r.v_logic = cfg.v_logic;
    r.pulse_width = cfg.pulse_width;
    const unsigned n_states = state_count(arity);
    r.per_state_dout.resize(n_states);
    r.per_state_accuracy.resize(n_states);
    r.per_state_error.resize(n_states);

    std::vector<MtjState> states(static_cast<std::size_t>(arity));
    double acc_sum = 0.0;
    double err_sum = 0.0;
    r.worst_accuracy = 1.0;
    r.worst_error = 0.0;
    for (unsigned s = 0; s < n_states; ++s) {
        for (int i = 0; i < arity; ++i) states[static_cast<std::size_t>(i)] = from_bit((s >> (arity - 1 - i)) & 1u);
        const StepOutcome o = homogeneous_outcome(states, cfg, params);
        const bool want_one = ideal_output(kind, s);
        r.per_state_dout[s] = o.p_one;
        r.per_state_accuracy[s] = want_one ? o.p_one : o.p_zero;
        r.per_state_error[s] = want_one ? o.p_zero : o.p_one;
        acc_sum += r.per_state_accuracy[s];
        err_sum += r.per_state_error[s];
        r.worst_accuracy = std::min(r.worst_accuracy, r.per_state_accuracy[s]);
        r.worst_error = std::max(r.worst_error, r.per_state_error[s]);
    }
    r.mean_accuracy = acc_sum / n_states;
    r.mean_error = err_sum / n_states;
    return r;
}

std::vector<double> VoltageScan::grid() const {
    if (!(resolution > 0.0) || !std::isfinite(resolution)) throw ConfigError("scan resolution must be positive");
    if (!(v_min >= 0.0) || !(v_max >= v_min) || !std::isfinite(v_max))
        throw ConfigError("scan range must satisfy 0 <= v_min <= v_max");
    const auto n = static_cast<std::size_t>(std::floor((v_max - v_min) / resolution + 1e-9)) + 1;
    std::vector<double> g(n);
    // Rounded to 1 nV so grid points print as the decimal values they stand for.
    for (std::size_t i = 0; i < n; ++i) g[i] = std::nearbyint((v_min + static_cast<double>(i) * resolution) * 1e9) / 1e9;
    return g;
}

std::vector<GateResponse> sweep_vlogic(GateKind kind, const MtjParams& params, double pulse_width,
                                       const VoltageScan& scan, double series_resistance) {
    std::vector<GateResponse> out;
    for (double v : scan.grid()) {
        LogicStepConfig cfg = LogicStepConfig::for_gate(kind, v, pulse_width);
        cfg.series_resistance = series_resistance;
        out.push_back(gate_accuracy(kind, cfg, params));
    }
    return out;
}

GateOptimum optimize_vlogic(GateKind kind, const MtjParams& params, double pulse_width, Objective objective,
                            const VoltageScan& scan, double series_resistance) {
    const std::vector<double> grid = scan.grid();
    if (grid.empty()) throw ConfigError("empty V_logic grid");
    GateOptimum best;
    bool have = false;
    double best_err = 0.0;
    for (double v : grid) {
        LogicStepConfig cfg = LogicStepConfig::for_gate(kind, v, pulse_width);
        cfg.series_resistance = series_resistance;
        GateResponse r = gate_accuracy(kind, cfg, params);
        const double err = objective == Objective::Mean ? r.mean_error : r.worst_error;
        if (!have || err < best_err) {
            have = true;
            best_err = err;
            best.v_star = cfg.v_logic;
            best.response = std::move(r);
        }
    }
    return best;
}

std::vector<MinErrorRow> min_error_vs_tmr(GateKind kind, const MtjParams& base_params,
                                          std::span<const double> tmr_percent,
                                          std::span<const double> pulse_widths, Objective objective,
                                          const VoltageScan& scan) {
    for (double t : tmr_percent)
        if (!(t > 0.0)) throw ParameterError("TMR values must be positive");
    for (double pw : pulse_widths)
        if (!(pw > 0.0)) throw ParameterError("pulse widths must be positive");
    std::vector<MinErrorRow> rows;
    rows.reserve(tmr_percent.size() * pulse_widths.size());
    for (double pw : pulse_widths) {
        for (double t : tmr_percent) {
            const MtjParams p = scale_tmr(base_params, t / 100.0);
            const GateOptimum opt = optimize_vlogic(kind, p, pw, objective, scan);
            const double err = objective == Objective::Mean ? opt.response.mean_error : opt.response.worst_error;
            rows.push_back({t, pw, opt.v_star, err});
        }
    }
    return rows;
}

std::string_view to_string(Objective objective) { return objective == Objective::Mean ? "mean" : "worst"; }

void write_sweep_csv(std::ostream& out, std::span<const GateResponse> sweep) {
    out << "gate,v_logic,pulse_width,state,dout,accuracy\n";
    for (const GateResponse& r : sweep) {
        const auto gate = to_string(r.kind);
        for (std::size_t s = 0; s < r.per_state_dout.size(); ++s) {
            fmt::print(out, "{},{:.4f},{:.6g},{},{:.12g},{:.12g}\n", gate, r.v_logic, r.pulse_width,
                       state_label(static_cast<unsigned>(s), r.arity), r.per_state_dout[s],
                       r.per_state_accuracy[s]);
        }
        fmt::print(out, "{},{:.4f},{:.6g},mean,,{:.12g}\n", gate, r.v_logic, r.pulse_width, r.mean_accuracy);
        fmt::print(out, "{},{:.4f},{:.6g},worst,,{:.12g}\n", gate, r.v_logic, r.pulse_width, r.worst_accuracy);
    }
}

void write_min_error_csv(std::ostream& out, GateKind kind, Objective objective, std::span<const MinErrorRow> rows) {
    out << "gate,objective,tmr,pulse_width,v_star,min_error\n";
    for (const MinErrorRow& r : rows) {
        fmt::print(out, "{},{},{:.6g},{:.6g},{:.4f},{:.12g}\n", to_string(kind), to_string(objective),
                   r.tmr_percent, r.pulse_width, r.v_star, r.min_error);
    }
}

}  // namespace cramsim
