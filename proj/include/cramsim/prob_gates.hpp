#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "cramsim/gates.hpp"
#include "cramsim/rng.hpp"
#include "cramsim/vcl_engine.hpp"

namespace cramsim {

/// Probabilistic truth table: p_one[state] is the probability that the
/// output reads 1 for input state `state` (input 0 is the MSB).
struct ProbGate {
    GateKind kind = GateKind::NAND;
    int arity = 2;
    std::vector<double> p_one;

    /// Throws ParameterError on out-of-range entries, ConfigError on shape errors.
    void validate() const;

    bool ideal(unsigned state) const { return ideal_output(kind, state); }
    double accuracy(unsigned state) const;
    double error(unsigned state) const;
    double mean_accuracy() const;
    double worst_error() const;

    static ProbGate ideal_gate(GateKind kind);

    bool operator==(const ProbGate&) const = default;
};

/// [1, 1-delta, 1-delta, delta] over states 00, 01, 10, 11.
ProbGate nand_from_delta(double delta);

/// Collapse four measured NAND accuracies to delta: state 00 is taken as
/// exact and the errors of 01, 10 and 11 are averaged.
double delta_from_accuracies(std::span<const double> per_state_accuracy);

ProbGate gate_from_response(const GateResponse& response, GateKind kind);

/// Packs input bits (input 0 first) into a state index.
unsigned input_state(std::span<const std::uint8_t> inputs);

/// One uniform draw from `rng`.
bool sample_output(const ProbGate& gate, unsigned state, Rng& rng);
bool sample_output(const ProbGate& gate, std::span<const std::uint8_t> inputs, Rng& rng);

void to_json(nlohmann::json& j, const ProbGate& g);
/// Accepts {kind, arity, p_one} or, for NAND, {kind, delta}.
void from_json(const nlohmann::json& j, ProbGate& g);

}  // namespace cramsim
