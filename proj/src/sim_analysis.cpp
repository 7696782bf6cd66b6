#include "cramsim/sim_analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cramsim/errors.hpp"

namespace cramsim {

GateModel GateModel::ideal() {
    GateModel m;
    for (GateKind k : kAllGateKinds) m.per_kind.emplace(k, ProbGate::ideal_gate(k));
    return m;
}

GateModel GateModel::uniform_nand(double delta) {
    GateModel m;
    m.per_kind.emplace(GateKind::NAND, nand_from_delta(delta));
    return m;
}

GateModel GateModel::from_step_tables(std::vector<ProbGate> tables) {
    GateModel m;
    m.kind = Kind::PerStep;
    m.per_step = std::move(tables);
    return m;
}

GateModel GateModel::physics(const MtjParams& params, std::map<GateKind, LogicStepConfig> electrical) {
    params.validate();
    GateModel m;
    m.kind = Kind::DevicePhysics;
    m.params = params;
    m.electrical = std::move(electrical);
    return m;
}

GateModel GateModel::physics_at_optimum(const MtjParams& params, std::span<const GateKind> kinds, double pulse_width,
                                        Objective objective, const VoltageScan& scan) {
    std::map<GateKind, LogicStepConfig> e;
    for (GateKind k : kinds) {
        const GateOptimum opt = optimize_vlogic(k, params, pulse_width, objective, scan);
        e.emplace(k, LogicStepConfig::for_gate(k, opt.v_star, pulse_width));
    }
    return physics(params, std::move(e));
}

void SimConfig::validate() const {
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (!(write_error_rate >= 0.0 && write_error_rate <= 1.0)) throw ParameterError("write error rate outside [0, 1]");
    if (!(read_error_rate >= 0.0 && read_error_rate <= 1.0)) throw ParameterError("read error rate outside [0, 1]");
    if (sampled_inputs < 1) throw ConfigError("sampled_inputs must be at least 1");
    if (max_enumerated_bits < 0 || max_enumerated_bits > 30) throw ConfigError("max_enumerated_bits must be in [0, 30]");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (row_width < 0) throw ConfigError("row width must be non-negative");
}

namespace {

std::vector<double> physics_table(const MtjParams& params, const LogicStepConfig& cfg, int arity, bool start) {
    std::vector<double> p(state_count(arity));
    std::vector<Device> inputs(static_cast<std::size_t>(arity), Device{params, MtjState::P});
    for (unsigned s = 0; s < p.size(); ++s) {
        for (int k = 0; k < arity; ++k) inputs[static_cast<std::size_t>(k)].state = from_bit((s >> (arity - 1 - k)) & 1u);
        p[s] = step_outcome(inputs, Device{params, from_bit(start)}, cfg).p_one;
    }
    return p;
}

void check_capacity(const Schedule& s, const SimConfig& cfg) {
    if (cfg.row_width > 0 && s.cell_count > cfg.row_width)
        throw CapacityError(fmt::format("schedule '{}' needs {} cells, row width limit is {}", s.name, s.cell_count,
                                        cfg.row_width));
}

template <class F>
void parallel_for(std::size_t n, int workers, F&& fn) {
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), std::max<std::size_t>(n, 1));
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
            (void)t;
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> tally(std::vector<std::uint64_t>& values) {
    std::sort(values.begin(), values.end());
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    for (std::uint64_t v : values) {
        if (!out.empty() && out.back().first == v)
            ++out.back().second;
        else
            out.emplace_back(v, 1);
    }
    return out;
}

StateDistribution from_counts(std::vector<std::uint8_t> bits, std::vector<std::uint64_t>& values) {
    StateDistribution d;
    d.input_bits = std::move(bits);
    d.counts = tally(values);
    const double n = static_cast<double>(values.size());
    for (auto [v, c] : d.counts) d.probability.emplace_back(v, static_cast<double>(c) / n);
    return d;
}

}  // namespace

std::vector<BoundStep> bind_model(const Schedule& s, const GateModel& model) {
    if (model.kind == GateModel::Kind::PerStep && model.per_step.size() != s.steps.size())
        throw ConfigError(fmt::format("per-step model has {} tables for {} steps", model.per_step.size(), s.steps.size()));

    std::map<GateKind, std::pair<std::vector<double>, std::vector<double>>> physics_cache;
    std::vector<BoundStep> out;
    out.reserve(s.steps.size());
    for (std::size_t i = 0; i < s.steps.size(); ++i) {
        const LogicStep& st = s.steps[i];
        const int arity = gate_arity(st.gate);
        BoundStep b{st.inputs, st.output, st.preset, {}, {}};
        if (model.kind == GateModel::Kind::DevicePhysics) {
            if (st.electrical) {
                b.p_ok = physics_table(model.params, *st.electrical, arity, st.preset);
                b.p_bad = physics_table(model.params, *st.electrical, arity, !st.preset);
            } else {
                auto it = physics_cache.find(st.gate);
                if (it == physics_cache.end()) {
                    auto e = model.electrical.find(st.gate);
                    if (e == model.electrical.end())
                        throw ConfigError(fmt::format("physics model has no electrical setting for {}", to_string(st.gate)));
                    if (e->second.num_inputs != arity)
                        throw ConfigError(fmt::format("electrical setting for {} has {} inputs", to_string(st.gate),
                                                      e->second.num_inputs));
                    it = physics_cache
                             .emplace(st.gate, std::pair{physics_table(model.params, e->second, arity, st.preset),
                                                         physics_table(model.params, e->second, arity, !st.preset)})
                             .first;
                }
                b.p_ok = it->second.first;
                b.p_bad = it->second.second;
            }
        } else {
            const ProbGate* table = st.table ? &*st.table : nullptr;
            if (!table && model.kind == GateModel::Kind::PerStep) table = &model.per_step[i];
            if (!table) {
                auto it = model.per_kind.find(st.gate);
                if (it == model.per_kind.end())
                    throw ConfigError(fmt::format("gate model has no table for {}", to_string(st.gate)));
                table = &it->second;
            }
            if (table->kind != st.gate)
                throw ConfigError(fmt::format("step {} is {} but its table is {}", i, to_string(st.gate), to_string(table->kind)));
            table->validate();
            b.p_ok = table->p_one;
            b.p_bad.assign(b.p_ok.size(), st.preset ? 0.0 : 1.0);
        }
        out.push_back(std::move(b));
    }
    return out;
}

std::vector<std::vector<std::uint8_t>> evaluated_inputs(const Schedule& s, const SimConfig& cfg, bool* sampled) {
    std::vector<int> free_ports;
    std::vector<std::uint8_t> base(static_cast<std::size_t>(s.input_bits()), 0);
    for (const auto& [name, v] : cfg.fixed_inputs)
        if (s.input_port_index(name) < 0) throw ConfigError(fmt::format("fixed input {} is not a port of '{}'", name, s.name));
    for (int p = 0; p < s.input_bits(); ++p) {
        auto it = cfg.fixed_inputs.find(s.input_ports[static_cast<std::size_t>(p)].name);
        if (it == cfg.fixed_inputs.end())
            free_ports.push_back(p);
        else
            base[static_cast<std::size_t>(p)] = it->second ? 1 : 0;
    }
    const int nfree = static_cast<int>(free_ports.size());
    std::vector<std::vector<std::uint8_t>> out;
    auto assign = [&](std::uint64_t x) {
        std::vector<std::uint8_t> bits = base;
        for (int k = 0; k < nfree; ++k)
            bits[static_cast<std::size_t>(free_ports[static_cast<std::size_t>(k)])] = (x >> (nfree - 1 - k)) & 1u;
        return bits;
    };
    const bool sample = nfree > cfg.max_enumerated_bits;
    if (sampled) *sampled = sample;
    if (!sample) {
        for (std::uint64_t x = 0; x < (std::uint64_t{1} << nfree); ++x) out.push_back(assign(x));
        return out;
    }
    if (nfree > 64) throw CapacityError("more than 64 free input ports");
    Rng rng(Rng::derive(cfg.seed, std::numeric_limits<std::uint64_t>::max(), 0));
    const std::uint64_t mask = nfree == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << nfree) - 1;
    for (std::uint64_t i = 0; i < cfg.sampled_inputs; ++i) out.push_back(assign(rng.next() & mask));
    return out;
}

DistributionSet monte_carlo(const Schedule& s, const SimConfig& cfg) {
    cfg.validate();
    require_valid(s);
    check_capacity(s, cfg);
    const std::vector<BoundStep> steps = bind_model(s, cfg.model);
    DistributionSet result;
    result.schedule_name = s.name;
    result.output_bits = s.output_bits();
    result.trials = cfg.trials;
    result.seed = cfg.seed;
    const auto inputs = evaluated_inputs(s, cfg, &result.sampled);
    result.states.resize(inputs.size());

    const double w = cfg.write_error_rate;
    const double r = cfg.read_error_rate;
    parallel_for(inputs.size(), cfg.workers, [&](std::size_t i) {
        std::vector<std::uint8_t> cells(static_cast<std::size_t>(s.cell_count), 0);
        std::vector<std::uint64_t> values(cfg.trials);
        const auto& bits = inputs[i];
        for (std::uint64_t t = 0; t < cfg.trials; ++t) {
            Rng rng(Rng::derive(cfg.seed, i, t));
            for (std::size_t p = 0; p < bits.size(); ++p)
                cells[static_cast<std::size_t>(s.input_ports[p].cell)] = bits[p] ^ (rng.uniform() < w ? 1 : 0);
            for (const ConstantCell& c : s.constants)
                cells[static_cast<std::size_t>(c.cell)] = (c.value ? 1 : 0) ^ (rng.uniform() < w ? 1 : 0);
            for (const BoundStep& st : steps) {
                const bool preset_failed = rng.uniform() < w;
                const double u = rng.uniform();
                unsigned state = 0;
                for (int c : st.inputs) state = (state << 1) | cells[static_cast<std::size_t>(c)];
                const double p = preset_failed ? st.p_bad[state] : st.p_ok[state];
                cells[static_cast<std::size_t>(st.output)] = u < p ? 1 : 0;
            }
            std::uint64_t v = 0;
            for (std::size_t k = 0; k < s.output_ports.size(); ++k) {
                const unsigned bit = cells[static_cast<std::size_t>(s.output_ports[k].cell)] ^ (rng.uniform() < r ? 1u : 0u);
                v |= std::uint64_t{bit} << k;
            }
            values[t] = v;
        }
        result.states[i] = from_counts(bits, values);
    });
    return result;
}

DistributionSet monte_carlo_reference(const Schedule& s, const SimConfig& cfg) {
    cfg.validate();
    require_valid(s);
    const GateModel& m = cfg.model;
    Schedule bound = s;
    if (m.kind == GateModel::Kind::PerStep) {
        if (m.per_step.size() != s.steps.size()) throw ConfigError("per-step model does not match the step count");
        for (std::size_t i = 0; i < bound.steps.size(); ++i)
            if (!bound.steps[i].table) bound.steps[i].table = m.per_step[i];
    }
    const LogicModel lm = m.kind == GateModel::Kind::DevicePhysics ? LogicModel::DevicePhysics : LogicModel::ProbTable;

    DistributionSet result;
    result.schedule_name = s.name;
    result.output_bits = s.output_bits();
    result.trials = cfg.trials;
    result.seed = cfg.seed;
    const auto inputs = evaluated_inputs(s, cfg, &result.sampled);
    result.states.resize(inputs.size());
    parallel_for(inputs.size(), cfg.workers, [&](std::size_t i) {
        CramRow row(s.cell_count, m.params, lm);
        if (cfg.row_width > 0) row.max_width = cfg.row_width;
        row.set_write_error_rate(cfg.write_error_rate);
        row.set_read_error_rate(cfg.read_error_rate);
        row.tables = m.per_kind;
        row.electrical = m.electrical;
        std::vector<std::uint64_t> values(cfg.trials);
        for (std::uint64_t t = 0; t < cfg.trials; ++t) {
            Rng rng(Rng::derive(cfg.seed, i, t));
            values[t] = decode_output(execute_schedule(row, bound, inputs[i], rng));
        }
        result.states[i] = from_counts(inputs[i], values);
    });
    return result;
}

DistributionSet exact_distribution(const Schedule& s, const SimConfig& cfg) {
    cfg.validate();
    require_valid(s);
    check_capacity(s, cfg);
    if (s.cell_count > kMaxExactCells)
        throw CapacityError(fmt::format("schedule '{}' has {} cells; the exact oracle handles at most {}", s.name,
                                        s.cell_count, kMaxExactCells));
    const std::vector<BoundStep> steps = bind_model(s, cfg.model);

    // Cells still needed after each step.
    std::uint32_t live = 0;
    for (const Port& p : s.output_ports) live |= 1u << p.cell;
    std::vector<std::uint32_t> live_after(steps.size());
    for (std::size_t k = steps.size(); k-- > 0;) {
        live_after[k] = live;
        live &= ~(1u << steps[k].output);
        for (int c : steps[k].inputs) live |= 1u << c;
    }
    const std::uint32_t live_at_start = live;

    DistributionSet result;
    result.schedule_name = s.name;
    result.output_bits = s.output_bits();
    result.exact = true;
    result.seed = cfg.seed;
    const auto inputs = evaluated_inputs(s, cfg, &result.sampled);
    result.states.resize(inputs.size());
    const double w = cfg.write_error_rate;
    const double r = cfg.read_error_rate;

    using Dist = std::vector<std::pair<std::uint32_t, double>>;
    auto merge = [](Dist& d, std::uint32_t mask) {
        for (auto& e : d) e.first &= mask;
        std::sort(d.begin(), d.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        Dist out;
        for (const auto& e : d) {
            if (!out.empty() && out.back().first == e.first)
                out.back().second += e.second;
            else
                out.push_back(e);
        }
        d.swap(out);
    };
    auto check_mass = [&](const Dist& d) {
        double total = 0.0;
        for (const auto& e : d) total += e.second;
        if (std::abs(total - 1.0) > 1e-12)
            throw Error(fmt::format("exact propagation lost probability mass: total {:.17g}", total));
    };
    auto write = [&](Dist& d, int cell, bool bit) {
        const std::uint32_t m = 1u << cell;
        Dist out;
        for (const auto& [k, p] : d) {
            const std::uint32_t base = k & ~m;
            if (w < 1.0) out.emplace_back(bit ? base | m : base, p * (1.0 - w));
            if (w > 0.0) out.emplace_back(bit ? base : base | m, p * w);
        }
        d.swap(out);
    };

    parallel_for(inputs.size(), cfg.workers, [&](std::size_t i) {
        Dist d{{0u, 1.0}};
        for (std::size_t p = 0; p < inputs[i].size(); ++p) write(d, s.input_ports[p].cell, inputs[i][p] != 0);
        for (const ConstantCell& c : s.constants) write(d, c.cell, c.value);
        merge(d, live_at_start);
        for (std::size_t k = 0; k < steps.size(); ++k) {
            const BoundStep& st = steps[k];
            const std::uint32_t m = 1u << st.output;
            Dist out;
            out.reserve(d.size() * 2);
            for (const auto& [key, p] : d) {
                unsigned state = 0;
                for (int c : st.inputs) state = (state << 1) | ((key >> c) & 1u);
                const double p1 = (1.0 - w) * st.p_ok[state] + w * st.p_bad[state];
                const std::uint32_t base = key & ~m;
                if (p1 > 0.0) out.emplace_back(base | m, p * p1);
                if (p1 < 1.0) out.emplace_back(base, p * (1.0 - p1));
            }
            d.swap(out);
            merge(d, live_after[k]);
            check_mass(d);
        }

        std::vector<std::pair<std::uint64_t, double>> values;
        for (const auto& [key, p] : d) {
            std::uint64_t v = 0;
            for (std::size_t k = 0; k < s.output_ports.size(); ++k)
                if ((key >> s.output_ports[k].cell) & 1u) v |= std::uint64_t{1} << k;
            values.emplace_back(v, p);
        }
        if (r > 0.0) {
            for (std::size_t k = 0; k < s.output_ports.size(); ++k) {
                std::vector<std::pair<std::uint64_t, double>> next;
                for (const auto& [v, p] : values) {
                    if (r < 1.0) next.emplace_back(v, p * (1.0 - r));
                    next.emplace_back(v ^ (std::uint64_t{1} << k), p * r);
                }
                values.swap(next);
            }
        }
        std::sort(values.begin(), values.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        StateDistribution sd;
        sd.input_bits = inputs[i];
        for (const auto& e : values) {
            if (!sd.probability.empty() && sd.probability.back().first == e.first)
                sd.probability.back().second += e.second;
            else
                sd.probability.push_back(e);
        }
        result.states[i] = std::move(sd);
    });
    return result;
}

std::vector<std::uint8_t> ideal_outputs(const Schedule& s, std::span<const std::uint8_t> input_bits) {
    require_valid(s);
    if (static_cast<int>(input_bits.size()) != s.input_bits()) throw ConfigError("input bit count differs from input ports");
    std::vector<std::uint8_t> cells(static_cast<std::size_t>(s.cell_count), 0);
    for (std::size_t p = 0; p < input_bits.size(); ++p) cells[static_cast<std::size_t>(s.input_ports[p].cell)] = input_bits[p] ? 1 : 0;
    for (const ConstantCell& c : s.constants) cells[static_cast<std::size_t>(c.cell)] = c.value ? 1 : 0;
    for (const LogicStep& st : s.steps) {
        unsigned state = 0;
        for (int c : st.inputs) state = (state << 1) | cells[static_cast<std::size_t>(c)];
        cells[static_cast<std::size_t>(st.output)] = ideal_output(st.gate, state) ? 1 : 0;
    }
    std::vector<std::uint8_t> out;
    for (const Port& p : s.output_ports) out.push_back(cells[static_cast<std::size_t>(p.cell)]);
    return out;
}

NedReport ned(const DistributionSet& d, const std::function<std::uint64_t(std::span<const std::uint8_t>)>& exact_fn,
              int output_bits) {
    if (d.states.empty()) throw ConfigError("no distributions to evaluate");
    if (output_bits < 1 || output_bits > 63) throw ConfigError("output width must be in [1, 63]");
    NedReport r;
    r.output_bits = output_bits;
    r.inputs_evaluated = d.states.size();
    r.sampled = d.sampled;
    double total = 0.0;
    for (const StateDistribution& s : d.states) {
        const std::uint64_t exact = exact_fn(s.input_bits);
        double ed = 0.0;
        for (const auto& [v, p] : s.probability)
            ed += p * static_cast<double>(v > exact ? v - exact : exact - v);
        r.per_state_error_distance.push_back(ed);
        total += ed;
    }
    r.mean_error_distance = total / static_cast<double>(d.states.size());
    r.ned = r.mean_error_distance / static_cast<double>((std::uint64_t{1} << output_bits) - 1);
    r.ned_accuracy = (1.0 - r.ned) * 100.0;
    return r;
}

NedReport ned(const DistributionSet& d, const Schedule& schedule) {
    return ned(d, [&](std::span<const std::uint8_t> bits) { return reference_output(schedule, bits); },
               schedule.output_bits());
}

AccuracyMap accuracy_map(const Schedule& s, const DistributionSet& d) {
    if (s.output_ports.empty()) throw ConfigError("schedule has no output ports");
    if (d.states.empty()) throw ConfigError("no distributions to evaluate");
    AccuracyMap m;
    for (const Port& p : s.output_ports) m.ports.push_back(p.name);
    m.per_port_mean.assign(m.ports.size(), 0.0);
    for (const StateDistribution& st : d.states) {
        const auto ideal = ideal_outputs(s, st.input_bits);
        std::vector<double> row(m.ports.size(), 0.0);
        for (const auto& [v, p] : st.probability)
            for (std::size_t k = 0; k < row.size(); ++k)
                if (((v >> k) & 1u) == ideal[k]) row[k] += p;
        double mean = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k) {
            mean += row[k];
            m.per_port_mean[k] += row[k];
        }
        m.inputs.push_back(bits_label(st.input_bits));
        m.per_state_mean.push_back(mean / static_cast<double>(row.size()));
        m.accuracy.push_back(std::move(row));
    }
    double overall = 0.0;
    for (double& x : m.per_port_mean) {
        x /= static_cast<double>(d.states.size());
        overall += x;
    }
    m.overall = overall / static_cast<double>(m.per_port_mean.size());
    return m;
}

AccuracyMap accuracy_map(const Schedule& schedule, const SimConfig& cfg) {
    return accuracy_map(schedule, monte_carlo(schedule, cfg));
}

void write_distributions_csv(std::ostream& out, const DistributionSet& d) {
    out << "input_state,output_value,probability,count\n";
    for (const StateDistribution& s : d.states) {
        const std::string label = bits_label(s.input_bits);
        for (std::size_t k = 0; k < s.probability.size(); ++k) {
            const auto [v, p] = s.probability[k];
            if (d.exact)
                fmt::print(out, "{},{},{:.17g},\n", label, v, p);
            else
                fmt::print(out, "{},{},{:.17g},{}\n", label, v, p, s.counts[k].second);
        }
    }
}

void write_accuracy_csv(std::ostream& out, const AccuracyMap& m) {
    out << "input_state,output_port,accuracy\n";
    for (std::size_t i = 0; i < m.inputs.size(); ++i)
        for (std::size_t k = 0; k < m.ports.size(); ++k)
            fmt::print(out, "{},{},{:.10g}\n", m.inputs[i], m.ports[k], m.accuracy[i][k]);
}

nlohmann::ordered_json to_json(const NedReport& r) {
    return nlohmann::ordered_json{{"mean_error_distance", r.mean_error_distance},
                                  {"ned", r.ned},
                                  {"ned_accuracy", r.ned_accuracy},
                                  {"output_bits", r.output_bits},
                                  {"inputs_evaluated", r.inputs_evaluated},
                                  {"sampled", r.sampled}};
}

nlohmann::ordered_json to_json(const AccuracyMap& m) {
    nlohmann::ordered_json j;
    j["ports"] = m.ports;
    j["overall"] = m.overall;
    j["per_port_mean"] = m.per_port_mean;
    j["states"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < m.inputs.size(); ++i)
        j["states"].push_back({{"input_state", m.inputs[i]}, {"accuracy", m.accuracy[i]}, {"mean", m.per_state_mean[i]}});
    return j;
}

std::string_view to_string(GateModel::Kind k) {
    switch (k) {
        case GateModel::Kind::PerKind: return "per_kind";
        case GateModel::Kind::PerStep: return "per_step";
        case GateModel::Kind::DevicePhysics: return "physics";
    }
    return "?";
}

}  // namespace cramsim
