#include "cramsim/prob_gates.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <fmt/format.h>

#include "cramsim/errors.hpp"

namespace cramsim {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void ProbGate::validate() const {
    if (arity != gate_arity(kind))
        throw ConfigError(fmt::format("{} takes {} inputs, table declares {}", to_string(kind), gate_arity(kind), arity));
    if (p_one.size() != state_count(arity))
        throw ConfigError(fmt::format("{} table needs {} entries, got {}", to_string(kind), state_count(arity),
                                      p_one.size()));
    for (double p : p_one)
        if (!is_probability(p)) throw ParameterError(fmt::format("table entry {} outside [0, 1]", p));
}

double ProbGate::accuracy(unsigned state) const {
    const double p = p_one.at(state);
    return ideal(state) ? p : 1.0 - p;
}

double ProbGate::error(unsigned state) const {
    const double p = p_one.at(state);
    return ideal(state) ? 1.0 - p : p;
}

double ProbGate::mean_accuracy() const {
    double sum = 0.0;
    for (unsigned s = 0; s < p_one.size(); ++s) sum += accuracy(s);
    return sum / static_cast<double>(p_one.size());
}

double ProbGate::worst_error() const {
    double worst = 0.0;
    for (unsigned s = 0; s < p_one.size(); ++s) worst = std::max(worst, error(s));
    return worst;
}

ProbGate ProbGate::ideal_gate(GateKind kind) {
    ProbGate g{kind, gate_arity(kind), {}};
    for (unsigned s = 0; s < state_count(g.arity); ++s) g.p_one.push_back(ideal_output(kind, s) ? 1.0 : 0.0);
    return g;
}

ProbGate nand_from_delta(double delta) {
    if (!is_probability(delta)) throw ParameterError(fmt::format("delta {} outside [0, 1]", delta));
    return ProbGate{GateKind::NAND, 2, {1.0, 1.0 - delta, 1.0 - delta, delta}};
}

double delta_from_accuracies(std::span<const double> acc) {
    if (acc.size() != 4) throw ConfigError("delta_from_accuracies expects four NAND state accuracies");
    for (double a : acc)
        if (!is_probability(a)) throw ParameterError(fmt::format("accuracy {} outside [0, 1]", a));
    const double e = ((1.0 - acc[1]) + (1.0 - acc[2]) + (1.0 - acc[3])) / 3.0;
    return std::clamp(e, 0.0, 1.0);
}

ProbGate gate_from_response(const GateResponse& response, GateKind kind) {
    if (response.kind != kind || response.arity != gate_arity(kind))
        throw ConfigError(fmt::format("response for {} cannot build a {} table", to_string(response.kind),
                                      to_string(kind)));
    if (response.per_state_dout.size() != state_count(response.arity))
        throw ConfigError("response does not cover every input state");
    ProbGate g{kind, response.arity, response.per_state_dout};
    g.validate();
    return g;
}

unsigned input_state(std::span<const std::uint8_t> inputs) {
    unsigned s = 0;
    for (std::uint8_t b : inputs) s = (s << 1) | (b ? 1u : 0u);
    return s;
}

bool sample_output(const ProbGate& gate, unsigned state, Rng& rng) {
    if (state >= gate.p_one.size()) throw ConfigError("input state outside gate table");
    return rng.uniform() < gate.p_one[state];
}

bool sample_output(const ProbGate& gate, std::span<const std::uint8_t> inputs, Rng& rng) {
    if (static_cast<int>(inputs.size()) != gate.arity)
        throw ConfigError(fmt::format("{} expects {} inputs, got {}", to_string(gate.kind), gate.arity, inputs.size()));
    return sample_output(gate, input_state(inputs), rng);
}

void to_json(nlohmann::json& j, const ProbGate& g) {
    j = nlohmann::json{{"kind", std::string(to_string(g.kind))}, {"arity", g.arity}, {"p_one", g.p_one}};
}

void from_json(const nlohmann::json& j, ProbGate& g) {
    const GateKind kind = parse_gate_kind(j.at("kind").get<std::string>());
    if (j.contains("delta")) {
        if (kind != GateKind::NAND) throw ConfigError("delta tables are defined for NAND only");
        g = nand_from_delta(j.at("delta").get<double>());
        return;
    }
    g.kind = kind;
    g.arity = j.value("arity", gate_arity(kind));
    g.p_one = j.at("p_one").get<std::vector<double>>();
    g.validate();
}

}  // namespace cramsim
