#include "cramsim/cram_array.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "cramsim/errors.hpp"

namespace cramsim {

namespace {

void check_rate(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError(fmt::format("{} {} outside [0, 1]", what, p));
}

void check_index(const CramRow& row, int index) {
    if (index < 0 || index >= row.width())
        throw ScheduleError(fmt::format("cell index {} outside row of width {}", index, row.width()));
}

}  // namespace

CramRow::CramRow(int width, const MtjParams& params, LogicModel model) : model_(model) {
    if (width < 1) throw ConfigError("row width must be positive");
    params.validate();
    cells_.assign(static_cast<std::size_t>(width), CramCell{params, MtjState::P});
}

const CramCell& CramRow::cell(int index) const {
    check_index(*this, index);
    return cells_[static_cast<std::size_t>(index)];
}

CramCell& CramRow::cell(int index) {
    check_index(*this, index);
    return cells_[static_cast<std::size_t>(index)];
}

void CramRow::set_write_error_rate(double p) {
    check_rate(p, "write error rate");
    write_error_rate_ = p;
}

void CramRow::set_read_error_rate(double p) {
    check_rate(p, "read error rate");
    read_error_rate_ = p;
}

void mem_write(CramRow& row, int index, bool bit, Rng& rng) {
    CramCell& c = row.cell(index);
    const bool flip = rng.uniform() < row.write_error_rate();
    c.stored = from_bit(bit != flip);
}

bool mem_read(const CramRow& row, int index) { return to_bit(row.cell(index).stored); }

bool mem_read(const CramRow& row, int index, Rng& rng) {
    const bool flip = rng.uniform() < row.read_error_rate();
    return mem_read(row, index) != flip;
}

void execute_step(CramRow& row, const LogicStep& step, Rng& rng) {
    check_index(row, step.output);
    if (static_cast<int>(step.inputs.size()) != gate_arity(step.gate))
        throw ScheduleError(fmt::format("{} step with {} inputs", to_string(step.gate), step.inputs.size()));
    for (int c : step.inputs) {
        check_index(row, c);
        if (c == step.output) throw ScheduleError(fmt::format("cell {} is both input and output", c));
    }

    mem_write(row, step.output, step.preset, rng);
    const double u = rng.uniform();

    double p_one = 0.0;
    if (row.model() == LogicModel::ProbTable) {
        const ProbGate* table = step.table ? &*step.table : nullptr;
        if (!table) {
            auto it = row.tables.find(step.gate);
            if (it == row.tables.end()) throw ConfigError(fmt::format("no table bound for {}", to_string(step.gate)));
            table = &it->second;
        }
        if (table->kind != step.gate) throw ConfigError("step table kind differs from the step gate");
        if (row.cell(step.output).stored != from_bit(step.preset)) {
            // The drive polarity only moves a cell out of the preset state.
            p_one = to_bit(row.cell(step.output).stored) ? 1.0 : 0.0;
        } else {
            unsigned state = 0;
            for (int c : step.inputs) state = (state << 1) | (mem_read(row, c) ? 1u : 0u);
            p_one = table->p_one.at(state);
        }
    } else {
        const LogicStepConfig* cfg = step.electrical ? &*step.electrical : nullptr;
        if (!cfg) {
            auto it = row.electrical.find(step.gate);
            if (it == row.electrical.end())
                throw ConfigError(fmt::format("no electrical setting bound for {}", to_string(step.gate)));
            cfg = &it->second;
        }
        std::vector<Device> inputs;
        inputs.reserve(step.inputs.size());
        for (int c : step.inputs) inputs.push_back({row.cell(c).params, row.cell(c).stored});
        const CramCell& out = row.cell(step.output);
        p_one = step_outcome(inputs, Device{out.params, out.stored}, *cfg).p_one;
    }
    row.cell(step.output).stored = from_bit(u < p_one);
}

std::vector<std::uint8_t> execute_schedule(CramRow& row, const Schedule& schedule,
                                           std::span<const std::uint8_t> input_bits, Rng& rng) {
    require_valid(schedule);
    if (row.max_width && schedule.cell_count > *row.max_width)
        throw CapacityError(fmt::format("schedule '{}' needs {} cells, row limit is {}", schedule.name,
                                        schedule.cell_count, *row.max_width));
    if (schedule.cell_count > row.width())
        throw CapacityError(fmt::format("schedule '{}' needs {} cells, row has {}", schedule.name,
                                        schedule.cell_count, row.width()));
    if (static_cast<int>(input_bits.size()) != schedule.input_bits())
        throw ConfigError(fmt::format("schedule '{}' has {} input ports, got {} bits", schedule.name,
                                      schedule.input_bits(), input_bits.size()));

    for (std::size_t i = 0; i < input_bits.size(); ++i)
        mem_write(row, schedule.input_ports[i].cell, input_bits[i] != 0, rng);
    for (const ConstantCell& c : schedule.constants) mem_write(row, c.cell, c.value, rng);
    for (const LogicStep& step : schedule.steps) execute_step(row, step, rng);
    std::vector<std::uint8_t> out;
    out.reserve(schedule.output_ports.size());
    for (const Port& p : schedule.output_ports) out.push_back(mem_read(row, p.cell, rng) ? 1 : 0);
    return out;
}

std::vector<std::uint8_t> execute_schedule(CramRow& row, const Schedule& schedule,
                                           const std::map<std::string, bool>& inputs, Rng& rng) {
    std::vector<std::uint8_t> bits;
    for (const Port& p : schedule.input_ports) {
        auto it = inputs.find(p.name);
        if (it == inputs.end()) throw ConfigError(fmt::format("input port {} is unbound", p.name));
        bits.push_back(it->second ? 1 : 0);
    }
    for (const auto& [name, v] : inputs)
        if (schedule.input_port_index(name) < 0) throw ConfigError(fmt::format("no input port named {}", name));
    return execute_schedule(row, schedule, bits, rng);
}

nlohmann::ordered_json snapshot(const CramRow& row) {
    nlohmann::ordered_json j;
    j["model"] = std::string(to_string(row.model()));
    j["write_error_rate"] = row.write_error_rate();
    j["read_error_rate"] = row.read_error_rate();
    j["cells"] = nlohmann::ordered_json::array();
    for (int i = 0; i < row.width(); ++i) j["cells"].push_back({{"index", i}, {"stored", to_bit(row.cell(i).stored) ? 1 : 0}});
    return j;
}

std::string_view to_string(LogicModel m) { return m == LogicModel::DevicePhysics ? "physics" : "table"; }

}  // namespace cramsim
