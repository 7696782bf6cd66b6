#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cramsim {

enum class GateKind : std::uint8_t { NAND, NOR, AND, OR, MAJ3, MAJ5, NOT, BUF };

inline constexpr GateKind kAllGateKinds[] = {GateKind::NAND, GateKind::NOR,  GateKind::AND,
                                             GateKind::OR,   GateKind::MAJ3, GateKind::MAJ5,
                                             GateKind::NOT,  GateKind::BUF};

int gate_arity(GateKind kind);

/// Ideal truth table. Input 0 is the most significant bit of `state`,
/// so state 1 of a 2-input gate is the pattern "01".
bool ideal_output(GateKind kind, unsigned state);

/// Output preset and V_logic polarity that realize a gate with the VCL
/// mechanism. Preset-0 gates run at positive V_logic (P->AP switching),
/// preset-1 gates at negative V_logic (AP->P switching).
bool default_preset(GateKind kind);
int default_polarity(GateKind kind);

std::string_view to_string(GateKind kind);
GateKind parse_gate_kind(std::string_view name);

/// "01"-style label of an input state, input 0 first.
std::string state_label(unsigned state, int arity);

inline unsigned state_count(int arity) { return 1u << arity; }

}  // namespace cramsim
