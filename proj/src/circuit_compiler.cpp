#include "cramsim/circuit_compiler.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>

#include "cramsim/errors.hpp"

namespace cramsim {

using Value = ScheduleBuilder::Value;

Value ScheduleBuilder::input(const std::string& port) {
    if (std::find(input_names_.begin(), input_names_.end(), port) != input_names_.end())
        throw ConfigError(fmt::format("input port {} declared twice", port));
    nodes_.push_back({NodeType::Input, GateKind::BUF, {}, false, static_cast<int>(input_names_.size())});
    input_names_.push_back(port);
    return static_cast<Value>(nodes_.size() - 1);
}

Value ScheduleBuilder::constant(bool value) {
    Value& slot = const_[value ? 1 : 0];
    if (slot < 0) {
        nodes_.push_back({NodeType::Constant, GateKind::BUF, {}, value, -1});
        slot = static_cast<Value>(nodes_.size() - 1);
    }
    return slot;
}

Value ScheduleBuilder::gate(GateKind kind, std::vector<Value> args) {
    if (static_cast<int>(args.size()) != gate_arity(kind))
        throw ConfigError(fmt::format("{} needs {} inputs", to_string(kind), gate_arity(kind)));
    for (Value a : args)
        if (a < 0 || a >= static_cast<Value>(nodes_.size())) throw ConfigError("gate argument is not a defined value");
    nodes_.push_back({NodeType::Gate, kind, std::move(args), false, -1});
    return static_cast<Value>(nodes_.size() - 1);
}

void ScheduleBuilder::output(const std::string& port, Value v) {
    if (v < 0 || v >= static_cast<Value>(nodes_.size())) throw ConfigError("output of an undefined value");
    outputs_.emplace_back(port, v);
}

int ScheduleBuilder::word(const std::string& name, const std::vector<Value>& bits) {
    InputWord w{name, {}};
    for (Value v : bits) {
        if (nodes_.at(static_cast<std::size_t>(v)).type != NodeType::Input) throw ConfigError("word bits must be inputs");
        w.ports.push_back(nodes_[static_cast<std::size_t>(v)].port);
    }
    words_.push_back(std::move(w));
    return static_cast<int>(words_.size() - 1);
}

void ScheduleBuilder::arithmetic_term(std::vector<int> words) { arithmetic_.push_back(std::move(words)); }

Value ScheduleBuilder::not_(Value a, NotStyle style) {
    return style == NotStyle::Dedicated ? gate(GateKind::NOT, {a}) : nand(a, a);
}

Value ScheduleBuilder::and_(Value a, Value b, AndStyle style) {
    if (style == AndStyle::Native) return gate(GateKind::AND, {a, b});
    const Value t = nand(a, b);
    return nand(t, t);
}

Schedule ScheduleBuilder::build(Allocation allocation) const {
    const std::size_t n = nodes_.size();

    // Liveness from the outputs backwards.
    std::vector<char> live(n, 0);
    for (const auto& [name, v] : outputs_) live[static_cast<std::size_t>(v)] = 1;
    for (std::size_t i = n; i-- > 0;)
        if (live[i] && nodes_[i].type == NodeType::Gate)
            for (Value a : nodes_[i].args) live[static_cast<std::size_t>(a)] = 1;

    std::vector<std::size_t> gates;
    for (std::size_t i = 0; i < n; ++i)
        if (live[i] && nodes_[i].type == NodeType::Gate) gates.push_back(i);

    constexpr int kForever = std::numeric_limits<int>::max();
    std::vector<int> last_use(n, -1);
    for (std::size_t s = 0; s < gates.size(); ++s)
        for (Value a : nodes_[gates[s]].args) last_use[static_cast<std::size_t>(a)] = static_cast<int>(s);
    for (const auto& [name, v] : outputs_) last_use[static_cast<std::size_t>(v)] = kForever;

    std::vector<int> cell(n, -1);
    int next_cell = 0;
    std::set<int> free_cells;
    auto take = [&]() {
        if (allocation == Allocation::Reuse && !free_cells.empty()) {
            const int c = *free_cells.begin();
            free_cells.erase(free_cells.begin());
            return c;
        }
        return next_cell++;
    };

    Schedule s;
    s.name = name_;
    for (std::size_t i = 0; i < n; ++i) {
        if (nodes_[i].type != NodeType::Input) continue;
        cell[i] = take();
        s.input_ports.push_back({input_names_[static_cast<std::size_t>(nodes_[i].port)], cell[i]});
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (nodes_[i].type != NodeType::Constant || !live[i]) continue;
        cell[i] = take();
        s.constants.push_back({cell[i], nodes_[i].value});
    }
    if (allocation == Allocation::Reuse)
        for (std::size_t i = 0; i < n; ++i)
            if (cell[i] >= 0 && last_use[i] < 0) free_cells.insert(cell[i]);

    for (std::size_t k = 0; k < gates.size(); ++k) {
        const Node& g = nodes_[gates[k]];
        cell[gates[k]] = take();
        LogicStep st;
        st.gate = g.kind;
        st.preset = default_preset(g.kind);
        st.output = cell[gates[k]];
        for (Value a : g.args) st.inputs.push_back(cell[static_cast<std::size_t>(a)]);
        s.steps.push_back(std::move(st));
        if (allocation == Allocation::Reuse)
            for (Value a : g.args)
                if (last_use[static_cast<std::size_t>(a)] == static_cast<int>(k))
                    free_cells.insert(cell[static_cast<std::size_t>(a)]);
    }
    s.cell_count = next_cell;
    for (const auto& [name, v] : outputs_) s.output_ports.push_back({name, cell[static_cast<std::size_t>(v)]});
    s.input_words = words_;
    s.arithmetic = arithmetic_;
    return s;
}

SumCarry emit_half_adder(ScheduleBuilder& b, Value x, Value y) {
    const Value t1 = b.nand(x, y);
    const Value sum = b.nand(b.nand(x, t1), b.nand(y, t1));
    return {sum, b.nand(t1, t1)};
}

SumCarry emit_full_adder(ScheduleBuilder& b, Value x, Value y, Value z, const CompileOptions& options) {
    if (options.adder == AdderDesign::MajNot) {
        const Value cout = b.gate(GateKind::MAJ3, {x, y, z});
        const Value n1 = b.not_(cout, options.not_style);
        const Value n2 = b.not_(cout, options.not_style);
        return {b.gate(GateKind::MAJ5, {x, y, z, n1, n2}), cout};
    }
    const Value t1 = b.nand(x, y);
    const Value t2 = b.nand(x, t1);
    const Value t3 = b.nand(y, t1);
    const Value t4 = b.nand(t2, t3);
    const Value t5 = b.nand(t4, z);
    const Value t6 = b.nand(t4, t5);
    const Value t7 = b.nand(z, t5);
    const Value sum = b.nand(t6, t7);
    return {sum, b.nand(t5, t1)};
}

namespace {

Schedule single_full_adder(const std::string& name, const CompileOptions& options) {
    ScheduleBuilder b(name);
    const Value a = b.input("A");
    const Value bb = b.input("B");
    const Value c = b.input("C");
    const SumCarry r = emit_full_adder(b, a, bb, c, options);
    b.output("S", r.sum);
    b.output("Cout", r.carry);
    b.arithmetic_term({b.word("A", {a})});
    b.arithmetic_term({b.word("B", {bb})});
    b.arithmetic_term({b.word("C", {c})});
    return b.build(options.allocation);
}

std::vector<Value> input_word(ScheduleBuilder& b, const std::string& prefix, int bits) {
    std::vector<Value> v;
    for (int i = 0; i < bits; ++i) v.push_back(b.input(fmt::format("{}{}", prefix, i)));
    return v;
}

// Sum of two words of equal width, carry-out as the top bit.
std::vector<Value> emit_ripple_sum(ScheduleBuilder& b, const std::vector<Value>& x, const std::vector<Value>& y,
                                   const CompileOptions& options) {
    std::vector<Value> out;
    const SumCarry h = emit_half_adder(b, x[0], y[0]);
    out.push_back(h.sum);
    Value carry = h.carry;
    for (std::size_t i = 1; i < x.size(); ++i) {
        const SumCarry f = emit_full_adder(b, x[i], y[i], carry, options);
        out.push_back(f.sum);
        carry = f.carry;
    }
    out.push_back(carry);
    return out;
}

std::vector<Value> emit_multiplier(ScheduleBuilder& b, const std::vector<Value>& a, const std::vector<Value>& x,
                                   const CompileOptions& options) {
    const int n = static_cast<int>(a.size());
    std::vector<Value> product(static_cast<std::size_t>(2 * n), -1);
    // Pending sum and carry bits of the running carry-save state, by weight.
    std::map<int, Value> sums;
    std::map<int, Value> carries;

    auto combine = [&](std::vector<Value> bits, int w, std::map<int, Value>& new_sums,
                       std::map<int, Value>& new_carries) {
        if (bits.size() == 1) {
            new_sums[w] = bits[0];
        } else if (bits.size() == 2) {
            const SumCarry h = emit_half_adder(b, bits[0], bits[1]);
            new_sums[w] = h.sum;
            new_carries[w + 1] = h.carry;
        } else if (bits.size() == 3) {
            const SumCarry f = emit_full_adder(b, bits[0], bits[1], bits[2], options);
            new_sums[w] = f.sum;
            new_carries[w + 1] = f.carry;
        }
    };

    for (int j = 0; j < n; ++j) sums[j] = b.and_(a[static_cast<std::size_t>(j)], x[0], options.and_style);
    product[0] = sums[0];
    for (int i = 1; i < n; ++i) {
        std::map<int, Value> new_sums;
        std::map<int, Value> new_carries;
        for (int j = 0; j < n; ++j) {
            const int w = i + j;
            std::vector<Value> bits{b.and_(a[static_cast<std::size_t>(j)], x[static_cast<std::size_t>(i)], options.and_style)};
            if (auto it = sums.find(w); it != sums.end()) bits.push_back(it->second);
            if (auto it = carries.find(w); it != carries.end()) bits.push_back(it->second);
            combine(bits, w, new_sums, new_carries);
        }
        sums = std::move(new_sums);
        carries = std::move(new_carries);
        product[static_cast<std::size_t>(i)] = sums.at(i);
    }

    // Final ripple row over weights n .. 2n-1.
    Value ripple = -1;
    for (int w = n; w < 2 * n; ++w) {
        std::vector<Value> bits;
        if (auto it = sums.find(w); it != sums.end()) bits.push_back(it->second);
        if (auto it = carries.find(w); it != carries.end()) bits.push_back(it->second);
        if (ripple >= 0) bits.push_back(ripple);
        std::map<int, Value> s1;
        std::map<int, Value> c1;
        if (bits.empty()) bits.push_back(b.constant(false));
        combine(bits, w, s1, c1);
        product[static_cast<std::size_t>(w)] = s1.at(w);
        ripple = c1.count(w + 1) ? c1.at(w + 1) : -1;
    }
    return product;
}

void check_range(const char* what, int value, int lo, int hi) {
    if (value < lo || value > hi) throw ConfigError(fmt::format("{} must be in [{}, {}], got {}", what, lo, hi, value));
}

}  // namespace

Schedule full_adder_maj_not(const CompileOptions& options) {
    CompileOptions o = options;
    o.adder = AdderDesign::MajNot;
    return single_full_adder("full_adder_maj_not", o);
}

Schedule full_adder_all_nand(const CompileOptions& options) {
    CompileOptions o = options;
    o.adder = AdderDesign::AllNand;
    return single_full_adder("full_adder_all_nand", o);
}

Schedule ripple_carry_adder(int n_bits, const CompileOptions& options) {
    check_range("ripple-carry adder width", n_bits, 1, 8);
    ScheduleBuilder b(fmt::format("ripple_carry_adder_{}", n_bits));
    const auto a = input_word(b, "a", n_bits);
    const auto x = input_word(b, "b", n_bits);
    const Value cin = b.input("cin");
    Value carry = cin;
    for (int i = 0; i < n_bits; ++i) {
        const SumCarry f = emit_full_adder(b, a[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(i)], carry, options);
        b.output(fmt::format("s{}", i), f.sum);
        carry = f.carry;
    }
    b.output(fmt::format("s{}", n_bits), carry);
    b.arithmetic_term({b.word("a", a)});
    b.arithmetic_term({b.word("b", x)});
    b.arithmetic_term({b.word("cin", {cin})});
    return b.build(options.allocation);
}

Schedule array_multiplier(int n_bits, const CompileOptions& options) {
    check_range("array multiplier width", n_bits, 1, 6);
    ScheduleBuilder b(fmt::format("array_multiplier_{}", n_bits));
    const auto a = input_word(b, "a", n_bits);
    const auto x = input_word(b, "b", n_bits);
    const auto p = emit_multiplier(b, a, x, options);
    for (std::size_t i = 0; i < p.size(); ++i) b.output(fmt::format("p{}", i), p[i]);
    b.arithmetic_term({b.word("a", a), b.word("b", x)});
    return b.build(options.allocation);
}

Schedule dot_product(int n_bits, int vec_len, const CompileOptions& options) {
    check_range("dot-product operand width", n_bits, 1, 5);
    if (vec_len != 1 && vec_len != 2 && vec_len != 4)
        throw ConfigError(fmt::format("dot-product length must be 1, 2 or 4, got {}", vec_len));
    ScheduleBuilder b(fmt::format("dot_product_{}x{}", n_bits, vec_len));
    std::vector<std::vector<Value>> as;
    std::vector<std::vector<Value>> bs;
    for (int k = 0; k < vec_len; ++k) {
        as.push_back(input_word(b, fmt::format("a{}_", k), n_bits));
        bs.push_back(input_word(b, fmt::format("b{}_", k), n_bits));
    }
    std::vector<std::vector<Value>> level;
    for (int k = 0; k < vec_len; ++k)
        level.push_back(emit_multiplier(b, as[static_cast<std::size_t>(k)], bs[static_cast<std::size_t>(k)], options));
    while (level.size() > 1) {
        std::vector<std::vector<Value>> next;
        for (std::size_t i = 0; i + 1 < level.size(); i += 2) next.push_back(emit_ripple_sum(b, level[i], level[i + 1], options));
        level = std::move(next);
    }
    for (std::size_t i = 0; i < level[0].size(); ++i) b.output(fmt::format("y{}", i), level[0][i]);
    for (int k = 0; k < vec_len; ++k) {
        const int wa = b.word(fmt::format("a{}", k), as[static_cast<std::size_t>(k)]);
        const int wb = b.word(fmt::format("b{}", k), bs[static_cast<std::size_t>(k)]);
        b.arithmetic_term({wa, wb});
    }
    return b.build(options.allocation);
}

std::string_view to_string(Allocation a) { return a == Allocation::Fresh ? "fresh" : "reuse"; }
std::string_view to_string(NotStyle s) { return s == NotStyle::Dedicated ? "dedicated" : "nand"; }
std::string_view to_string(AndStyle s) { return s == AndStyle::Native ? "native" : "nand_only"; }
std::string_view to_string(AdderDesign d) { return d == AdderDesign::AllNand ? "all_nand" : "maj_not"; }

Allocation parse_allocation(std::string_view s) {
    if (s == "fresh") return Allocation::Fresh;
    if (s == "reuse") return Allocation::Reuse;
    throw ConfigError(fmt::format("unknown allocation '{}'", s));
}

NotStyle parse_not_style(std::string_view s) {
    if (s == "dedicated") return NotStyle::Dedicated;
    if (s == "nand") return NotStyle::Nand;
    throw ConfigError(fmt::format("unknown NOT style '{}'", s));
}

AndStyle parse_and_style(std::string_view s) {
    if (s == "native") return AndStyle::Native;
    if (s == "nand_only") return AndStyle::NandOnly;
    throw ConfigError(fmt::format("unknown AND style '{}'", s));
}

AdderDesign parse_adder_design(std::string_view s) {
    if (s == "all_nand") return AdderDesign::AllNand;
    if (s == "maj_not") return AdderDesign::MajNot;
    throw ConfigError(fmt::format("unknown adder design '{}'", s));
}

}  // namespace cramsim
