#include "cramsim/schedule.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "cramsim/errors.hpp"

namespace cramsim {

int Schedule::input_port_index(std::string_view n) const {
    for (std::size_t i = 0; i < input_ports.size(); ++i)
        if (input_ports[i].name == n) return static_cast<int>(i);
    return -1;
}

int Schedule::output_port_index(std::string_view n) const {
    for (std::size_t i = 0; i < output_ports.size(); ++i)
        if (output_ports[i].name == n) return static_cast<int>(i);
    return -1;
}

std::vector<std::pair<GateKind, int>> Schedule::gate_counts() const {
    std::vector<std::pair<GateKind, int>> out;
    for (GateKind k : kAllGateKinds) {
        const auto n = std::count_if(steps.begin(), steps.end(), [k](const LogicStep& s) { return s.gate == k; });
        if (n > 0) out.emplace_back(k, static_cast<int>(n));
    }
    return out;
}

std::vector<Violation> validate_schedule(const Schedule& s) {
    std::vector<Violation> v;
    auto in_range = [&](int c) { return c >= 0 && c < s.cell_count; };
    if (s.cell_count < 1) v.push_back({"out-of-range", -1, "schedule has no cells"});

    std::vector<char> written(static_cast<std::size_t>(std::max(s.cell_count, 0)), 0);
    std::set<std::string> names;
    std::set<int> input_cells;
    for (const Port& p : s.input_ports) {
        if (!names.insert("in:" + p.name).second)
            v.push_back({"duplicate-port", -1, fmt::format("input port {} declared twice", p.name)});
        if (!in_range(p.cell)) {
            v.push_back({"out-of-range", -1, fmt::format("input port {} maps to cell {}", p.name, p.cell)});
            continue;
        }
        if (!input_cells.insert(p.cell).second)
            v.push_back({"duplicate-port", -1, fmt::format("input port {} shares cell {}", p.name, p.cell)});
        written[static_cast<std::size_t>(p.cell)] = 1;
    }
    for (const ConstantCell& c : s.constants) {
        if (!in_range(c.cell)) {
            v.push_back({"out-of-range", -1, fmt::format("constant cell {} out of range", c.cell)});
            continue;
        }
        if (input_cells.count(c.cell))
            v.push_back({"duplicate-port", -1, fmt::format("constant cell {} is also an input", c.cell)});
        written[static_cast<std::size_t>(c.cell)] = 1;
    }

    for (std::size_t i = 0; i < s.steps.size(); ++i) {
        const LogicStep& st = s.steps[i];
        const int idx = static_cast<int>(i);
        if (static_cast<int>(st.inputs.size()) != gate_arity(st.gate))
            v.push_back({"arity-mismatch", idx,
                         fmt::format("{} with {} inputs", to_string(st.gate), st.inputs.size())});
        if (st.table && (st.table->kind != st.gate || st.table->arity != gate_arity(st.gate)))
            v.push_back({"arity-mismatch", idx, "step table does not match the step's gate"});
        if (st.electrical && st.electrical->num_inputs != static_cast<int>(st.inputs.size()))
            v.push_back({"arity-mismatch", idx, "electrical config input count differs from step inputs"});
        bool ok = in_range(st.output);
        if (!ok) v.push_back({"out-of-range", idx, fmt::format("output cell {}", st.output)});
        for (int c : st.inputs) {
            if (!in_range(c)) {
                v.push_back({"out-of-range", idx, fmt::format("input cell {}", c)});
                ok = false;
            } else if (!written[static_cast<std::size_t>(c)]) {
                v.push_back({"use-before-def", idx, fmt::format("cell {} read before any write", c)});
            }
            if (c == st.output) v.push_back({"self-reference", idx, fmt::format("cell {} is input and output", c)});
        }
        if (in_range(st.output)) written[static_cast<std::size_t>(st.output)] = 1;
    }

    for (const Port& p : s.output_ports) {
        if (!names.insert("out:" + p.name).second)
            v.push_back({"duplicate-port", -1, fmt::format("output port {} declared twice", p.name)});
        if (!in_range(p.cell))
            v.push_back({"out-of-range", -1, fmt::format("output port {} maps to cell {}", p.name, p.cell)});
        else if (!written[static_cast<std::size_t>(p.cell)])
            v.push_back({"unbound-output-port", -1, fmt::format("output port {} is never written", p.name)});
    }
    for (const InputWord& w : s.input_words)
        for (int p : w.ports)
            if (p < 0 || p >= s.input_bits())
                v.push_back({"out-of-range", -1, fmt::format("word {} references port {}", w.name, p)});
    for (const auto& term : s.arithmetic)
        for (int w : term)
            if (w < 0 || w >= static_cast<int>(s.input_words.size()))
                v.push_back({"out-of-range", -1, fmt::format("arithmetic term references word {}", w)});
    return v;
}

void require_valid(const Schedule& schedule) {
    const auto v = validate_schedule(schedule);
    if (v.empty()) return;
    std::string msg = fmt::format("schedule '{}' is invalid:", schedule.name);
    for (const Violation& x : v) msg += fmt::format(" [{} step {}: {}]", x.code, x.step, x.message);
    throw ScheduleError(msg);
}

std::uint64_t reference_output(const Schedule& s, std::span<const std::uint8_t> bits) {
    if (!s.has_arithmetic()) throw ConfigError(fmt::format("schedule '{}' has no reference arithmetic", s.name));
    if (static_cast<int>(bits.size()) != s.input_bits()) throw ConfigError("input bit count differs from input ports");
    std::vector<std::uint64_t> words;
    for (const InputWord& w : s.input_words) {
        std::uint64_t x = 0;
        for (std::size_t k = 0; k < w.ports.size(); ++k)
            if (bits[static_cast<std::size_t>(w.ports[k])]) x |= std::uint64_t{1} << k;
        words.push_back(x);
    }
    std::uint64_t total = 0;
    for (const auto& term : s.arithmetic) {
        std::uint64_t prod = 1;
        for (int w : term) prod *= words.at(static_cast<std::size_t>(w));
        total += prod;
    }
    return total;
}

std::vector<std::uint8_t> input_bits_of(int input_bits, std::uint64_t index) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(input_bits));
    for (int k = 0; k < input_bits; ++k) bits[static_cast<std::size_t>(k)] = (index >> (input_bits - 1 - k)) & 1u;
    return bits;
}

std::uint64_t decode_output(std::span<const std::uint8_t> bits) {
    std::uint64_t x = 0;
    for (std::size_t k = 0; k < bits.size(); ++k)
        if (bits[k]) x |= std::uint64_t{1} << k;
    return x;
}

std::string bits_label(std::span<const std::uint8_t> bits) {
    std::string s;
    for (std::uint8_t b : bits) s += b ? '1' : '0';
    return s;
}

void to_json(nlohmann::ordered_json& j, const LogicStepConfig& c) {
    j = nlohmann::ordered_json{{"v_logic", c.v_logic},
                               {"pulse_width", c.pulse_width},
                               {"output_preset", c.output_preset ? 1 : 0},
                               {"num_inputs", c.num_inputs},
                               {"series_resistance", c.series_resistance}};
}

void from_json(const nlohmann::json& j, LogicStepConfig& c) {
    c.v_logic = j.at("v_logic").get<double>();
    c.pulse_width = j.value("pulse_width", 1e-3);
    c.output_preset = j.value("output_preset", 0) != 0;
    c.num_inputs = j.value("num_inputs", 2);
    c.series_resistance = j.value("series_resistance", 0.0);
    c.validate();
}

nlohmann::ordered_json schedule_to_json(const Schedule& s) {
    using oj = nlohmann::ordered_json;
    oj j;
    j["format_version"] = Schedule::kFormatVersion;
    j["name"] = s.name;
    j["cell_count"] = s.cell_count;
    auto ports = [](const std::vector<Port>& ps) {
        oj a = oj::array();
        for (const Port& p : ps) a.push_back(oj{{"name", p.name}, {"cell", p.cell}});
        return a;
    };
    j["input_ports"] = ports(s.input_ports);
    j["output_ports"] = ports(s.output_ports);
    j["constants"] = oj::array();
    for (const ConstantCell& c : s.constants) j["constants"].push_back(oj{{"cell", c.cell}, {"value", c.value ? 1 : 0}});
    j["input_words"] = oj::array();
    for (const InputWord& w : s.input_words) j["input_words"].push_back(oj{{"name", w.name}, {"ports", w.ports}});
    j["arithmetic"] = s.arithmetic;
    oj counts = oj::object();
    for (auto [k, n] : s.gate_counts()) counts[std::string(to_string(k))] = n;
    j["gate_counts"] = counts;
    j["steps"] = oj::array();
    for (const LogicStep& st : s.steps) {
        oj x{{"gate", std::string(to_string(st.gate))}, {"inputs", st.inputs}, {"output", st.output},
             {"preset", st.preset ? 1 : 0}};
        if (st.electrical) x["electrical"] = *st.electrical;
        if (st.table) {
            x["table"] = oj{{"kind", std::string(to_string(st.table->kind))},
                            {"arity", st.table->arity},
                            {"p_one", st.table->p_one}};
        }
        j["steps"].push_back(std::move(x));
    }
    return j;
}

Schedule schedule_from_json(const nlohmann::json& j) {
    const int version = j.value("format_version", Schedule::kFormatVersion);
    if (version != Schedule::kFormatVersion)
        throw ConfigError(fmt::format("unsupported schedule format_version {}", version));
    Schedule s;
    s.name = j.value("name", std::string("schedule"));
    s.cell_count = j.at("cell_count").get<int>();
    auto ports = [](const nlohmann::json& a) {
        std::vector<Port> ps;
        for (const auto& p : a) ps.push_back({p.at("name").get<std::string>(), p.at("cell").get<int>()});
        return ps;
    };
    s.input_ports = ports(j.at("input_ports"));
    s.output_ports = ports(j.at("output_ports"));
    if (j.contains("constants"))
        for (const auto& c : j.at("constants")) s.constants.push_back({c.at("cell").get<int>(), c.at("value").get<int>() != 0});
    if (j.contains("input_words"))
        for (const auto& w : j.at("input_words"))
            s.input_words.push_back({w.at("name").get<std::string>(), w.at("ports").get<std::vector<int>>()});
    if (j.contains("arithmetic")) s.arithmetic = j.at("arithmetic").get<std::vector<std::vector<int>>>();
    for (const auto& x : j.at("steps")) {
        LogicStep st;
        st.gate = parse_gate_kind(x.at("gate").get<std::string>());
        st.inputs = x.at("inputs").get<std::vector<int>>();
        st.output = x.at("output").get<int>();
        st.preset = x.contains("preset") ? x.at("preset").get<int>() != 0 : default_preset(st.gate);
        if (x.contains("electrical")) {
            LogicStepConfig c;
            from_json(x.at("electrical"), c);
            st.electrical = c;
        }
        if (x.contains("table")) st.table = x.at("table").get<ProbGate>();
        s.steps.push_back(std::move(st));
    }
    return s;
}

}  // namespace cramsim
