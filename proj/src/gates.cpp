#include "cramsim/gates.hpp"

#include <bit>

#include "cramsim/errors.hpp"

namespace cramsim {

int gate_arity(GateKind kind) {
    switch (kind) {
        case GateKind::NAND:
        case GateKind::NOR:
        case GateKind::AND:
        case GateKind::OR: return 2;
        case GateKind::MAJ3: return 3;
        case GateKind::MAJ5: return 5;
        case GateKind::NOT:
        case GateKind::BUF: return 1;
    }
    throw ParameterError("unknown gate kind");
}

bool ideal_output(GateKind kind, unsigned state) {
    const int ones = std::popcount(state);
    const int n = gate_arity(kind);
    switch (kind) {
        case GateKind::NAND: return ones != n;
        case GateKind::NOR: return ones == 0;
        case GateKind::AND: return ones == n;
        case GateKind::OR: return ones != 0;
        case GateKind::MAJ3:
        case GateKind::MAJ5: return 2 * ones > n;
        case GateKind::NOT: return ones == 0;
        case GateKind::BUF: return ones == 1;
    }
    return false;
}

bool default_preset(GateKind kind) {
    switch (kind) {
        case GateKind::NAND:
        case GateKind::NOR:
        case GateKind::NOT: return false;
        default: return true;
    }
}

int default_polarity(GateKind kind) { return default_preset(kind) ? -1 : +1; }

std::string_view to_string(GateKind kind) {
    switch (kind) {
        case GateKind::NAND: return "NAND";
        case GateKind::NOR: return "NOR";
        case GateKind::AND: return "AND";
        case GateKind::OR: return "OR";
        case GateKind::MAJ3: return "MAJ3";
        case GateKind::MAJ5: return "MAJ5";
        case GateKind::NOT: return "NOT";
        case GateKind::BUF: return "BUF";
    }
    return "?";
}

GateKind parse_gate_kind(std::string_view name) {
    for (GateKind k : kAllGateKinds) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown gate kind '" + std::string(name) + "'");
}

std::string state_label(unsigned state, int arity) {
    std::string s(static_cast<std::size_t>(arity), '0');
    for (int i = 0; i < arity; ++i) {
        if ((state >> (arity - 1 - i)) & 1u) s[static_cast<std::size_t>(i)] = '1';
    }
    return s;
}

}  // namespace cramsim
