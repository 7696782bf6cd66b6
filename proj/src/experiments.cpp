#include "cramsim/experiments.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cramsim/errors.hpp"

namespace cramsim {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

const nlohmann::json& section(const ExperimentConfig& cfg, const char* name) {
    static const nlohmann::json empty = nlohmann::json::object();
    return cfg.doc.contains(name) ? cfg.doc.at(name) : empty;
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

std::string iso_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class RunDir {
public:
    RunDir(const ExperimentConfig& cfg, const std::string& command) : dir_(cfg.out) {
        fs::create_directories(dir_);
        ojson meta{{"command", command}, {"timestamp", iso_timestamp()}, {"seed", cfg.seed}, {"trials", cfg.trials},
                   {"model", cfg.model}};
        write_text("metadata.json", meta.dump(2) + "\n", false);
        write_text("config.json", cfg.snapshot().dump(2) + "\n");
    }

    std::ofstream open(const std::string& name) {
        const fs::path p = dir_ / name;
        std::ofstream f(p);
        if (!f) throw ConfigError("cannot write " + p.string());
        result.files.push_back(p);
        return f;
    }

    void write_text(const std::string& name, const std::string& text, bool data = true) {
        const fs::path p = dir_ / name;
        std::ofstream f(p);
        if (!f) throw ConfigError("cannot write " + p.string());
        f << text;
        if (data) result.files.push_back(p);
    }

    void write_json(const std::string& name, const ojson& j) { write_text(name, j.dump(2) + "\n"); }

    RunResult result;

private:
    fs::path dir_;
};

VoltageScan scan_from(const nlohmann::json& j, const VoltageScan& fallback) {
    VoltageScan s{get_or(j, "v_min", fallback.v_min), get_or(j, "v_max", fallback.v_max),
                  get_or(j, "resolution", fallback.resolution)};
    if (!(s.resolution > 0.0) || !(s.v_max > s.v_min) || s.v_min < 0.0)
        throw ConfigError(fmt::format("V_logic grid [{}, {}] step {} is empty or degenerate", s.v_min, s.v_max, s.resolution));
    return s;
}

Objective objective_from(const nlohmann::json& j, Objective fallback) {
    if (!j.contains("objective")) return fallback;
    const auto s = j.at("objective").get<std::string>();
    if (s == "mean") return Objective::Mean;
    if (s == "worst") return Objective::Worst;
    throw ConfigError(fmt::format("unknown objective '{}'", s));
}

std::vector<GateKind> gates_from(const nlohmann::json& j, std::vector<GateKind> fallback) {
    if (!j.contains("gates")) return fallback;
    std::vector<GateKind> out;
    for (const auto& g : j.at("gates")) out.push_back(parse_gate_kind(g.get<std::string>()));
    if (out.empty()) throw ConfigError("gate list is empty");
    return out;
}

SimConfig sim_config(const ExperimentConfig& cfg) {
    SimConfig s;
    s.trials = cfg.trials;
    s.seed = cfg.seed;
    s.workers = cfg.workers;
    s.row_width = cfg.row_width;
    return s;
}

std::string fmt_double(double x) { return fmt::format("{:.17g}", x); }

}  // namespace

ojson ExperimentConfig::snapshot() const {
    ojson j = ojson::parse(doc.dump());
    j["seed"] = seed;
    j["trials"] = trials;
    j["row_width"] = row_width;
    j["model"] = model;
    j["out"] = out.string();
    j.erase("workers");
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    c.doc = j;
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.trials = get_or<std::uint64_t>(j, "trials", c.trials);
    c.workers = get_or(j, "workers", c.workers);
    c.row_width = get_or(j, "row_width", c.row_width);
    c.model = get_or<std::string>(j, "model", c.model);
    c.out = get_or<std::string>(j, "out", c.out.string());
    if (c.model != "physics" && c.model != "table") throw ConfigError(fmt::format("unknown model '{}'", c.model));
    if (c.trials < 1) throw ConfigError("trials must be at least 1");
    if (c.workers < 1) throw ConfigError("workers must be at least 1");
    if (c.row_width < 0) throw ConfigError("row_width must be non-negative");
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("config {}: {}", path.string(), e.what()));
    }
    ExperimentConfig c = config_from_json(j);
    if (c.doc.contains("params_file")) {
        fs::path pf = c.doc.at("params_file").get<std::string>();
        if (pf.is_relative()) pf = path.parent_path() / pf;
        if (!fs::exists(pf)) throw ConfigError("params file not found: " + pf.string());
        c.doc["params_file"] = pf.string();
    }
    return c;
}

ExperimentConfig preset_config(const std::string& name) {
    nlohmann::json j;
    nlohmann::json anchors;
    to_json(anchors, published_anchors());
    if (name == "fig4") {
        j = {{"out", "runs/fig4"},
             {"anchors", anchors},
             {"target", {{"tmr", 1.09}, {"pulse_width", 1e-3}, {"min_error", 0.0076}}},
             {"gate_sweep", {{"gates", {"NAND", "NOR", "MAJ3", "MAJ5", "NOT"}}, {"pulse_width", 1e-3},
                             {"v_min", 0.0}, {"v_max", 1.0}, {"resolution", 1e-3}}}};
    } else if (name == "fig5") {
        j = {{"out", "runs/fig5"},
             {"trials", 10000},
             {"model", "physics"},
             {"adder", {{"objective", "mean"}, {"pulse_width", 1e-3}, {"not_style", "dedicated"}}}};
    } else if (name == "fig6") {
        j = {{"out", "runs/fig6"},
             {"model", "table"},
             {"projection",
              {{"tmr", {50, 75, 100, 109, 125, 150, 175, 200, 250, 300}},
               {"pulse_widths", {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8}},
               {"ned_tmr", {109, 200, 300}},
               {"objective", "worst"},
               {"and_style", "nand_only"},
               {"circuits",
                {{{"kind", "ripple_carry_adder"}, {"bits", 4}},
                 {{"kind", "array_multiplier"}, {"bits", 4}},
                 {{"kind", "dot_product"}, {"bits", 4}, {"len", 4}, {"trials", 100}}}}}}};
    } else {
        throw ConfigError(fmt::format("unknown preset '{}' (fig4, fig5, fig6)", name));
    }
    return config_from_json(j);
}

MtjParams resolve_params(const ExperimentConfig& cfg) {
    if (cfg.doc.contains("params")) return cfg.doc.at("params").get<MtjParams>();
    if (cfg.doc.contains("params_file")) return load_params(cfg.doc.at("params_file").get<std::string>());
    return MtjParams::anchored_defaults();
}

RunResult run_calibrate(const ExperimentConfig& cfg) {
    if (!cfg.doc.contains("anchors")) throw ConfigError("calibrate needs an 'anchors' section");
    const AnchorSet anchors = cfg.doc.at("anchors").get<AnchorSet>();
    const GateTarget target = get_or<GateTarget>(cfg.doc, "target", GateTarget{});
    const CalibrationResult r = calibrate_from_anchors(anchors, target);

    RunDir dir(cfg, "calibrate");
    dir.write_json("params.json", ojson(nlohmann::json(r.params)));
    ojson report;
    report["achieved_error"] = r.achieved_error;
    report["target"] = ojson(nlohmann::json(target));
    report["tmr0"] = r.params.tmr0();
    report["anchors"] = ojson::array();
    for (std::size_t i = 0; i < anchors.points.size(); ++i) {
        std::string state;
        for (MtjState s : anchors.points[i].inputs) state += to_bit(s) ? '1' : '0';
        report["anchors"].push_back({{"state", state},
                                     {"r_in_eq_residual", r.anchor_residuals[2 * i]},
                                     {"v_out_residual", r.anchor_residuals[2 * i + 1]}});
    }
    dir.write_json("calibration.json", report);
    dir.result.summary = report;
    dir.result.summary["params"] = ojson(nlohmann::json(r.params));
    return dir.result;
}

RunResult run_gate_sweep(const ExperimentConfig& cfg) {
    const nlohmann::json& s = section(cfg, "gate_sweep");
    MtjParams params = resolve_params(cfg);
    if (s.contains("tmr")) params = scale_tmr(params, s.at("tmr").get<double>() / 100.0);
    const double pw = get_or(s, "pulse_width", 1e-3);
    const VoltageScan scan = scan_from(s, VoltageScan{});
    const auto gates = gates_from(s, {GateKind::NAND, GateKind::MAJ3, GateKind::MAJ5});

    RunDir dir(cfg, "gate-sweep");
    dir.write_json("params.json", ojson(nlohmann::json(params)));
    ojson summary = ojson::array();
    std::ofstream opt_csv = dir.open("optimum.csv");
    opt_csv << "gate,objective,v_star,mean_accuracy,worst_accuracy\n";
    for (GateKind g : gates) {
        const auto sweep = sweep_vlogic(g, params, pw, scan);
        {
            std::ofstream f = dir.open(fmt::format("sweep_{}.csv", to_string(g)));
            write_sweep_csv(f, sweep);
        }
        for (Objective o : {Objective::Mean, Objective::Worst}) {
            const GateOptimum opt = optimize_vlogic(g, params, pw, o, scan);
            fmt::print(opt_csv, "{},{},{:.6f},{:.12g},{:.12g}\n", to_string(g), to_string(o), opt.v_star,
                       opt.response.mean_accuracy, opt.response.worst_accuracy);
            summary.push_back({{"gate", std::string(to_string(g))},
                               {"objective", std::string(to_string(o))},
                               {"v_star", opt.v_star},
                               {"mean_accuracy", opt.response.mean_accuracy},
                               {"worst_accuracy", opt.response.worst_accuracy}});
        }
    }
    dir.result.summary = summary;
    return dir.result;
}

RunResult run_adder(const ExperimentConfig& cfg) {
    const nlohmann::json& s = section(cfg, "adder");
    const MtjParams params = resolve_params(cfg);
    CompileOptions opts;
    opts.not_style = parse_not_style(get_or<std::string>(s, "not_style", "dedicated"));
    opts.allocation = parse_allocation(get_or<std::string>(s, "allocation", "fresh"));
    const double pw = get_or(s, "pulse_width", 1e-3);
    const Objective objective = objective_from(s, Objective::Mean);

    struct Design {
        std::string key;
        Schedule schedule;
    };
    std::vector<Design> designs{{"all_nand", full_adder_all_nand(opts)}, {"maj_not", full_adder_maj_not(opts)}};

    SimConfig base = sim_config(cfg);
    base.write_error_rate = get_or(s, "write_error_rate", 0.0);
    base.read_error_rate = get_or(s, "read_error_rate", 0.0);

    RunDir dir(cfg, "adder");
    dir.write_json("params.json", ojson(nlohmann::json(params)));
    ojson summary;
    summary["trials"] = cfg.trials;
    summary["model"] = cfg.model;
    for (const Design& d : designs) {
        SimConfig sc = base;
        if (cfg.model == "physics") {
            std::vector<GateKind> kinds;
            for (auto [k, n] : d.schedule.gate_counts()) kinds.push_back(k);
            sc.model = GateModel::physics_at_optimum(params, kinds, pw, objective);
            ojson ops = ojson::object();
            for (const auto& [k, e] : sc.model.electrical) ops[std::string(to_string(k))] = e.v_logic;
            summary[d.key]["v_logic"] = ops;
        } else if (s.contains("step_tables") && s.at("step_tables").contains(d.key)) {
            sc.model = GateModel::from_step_tables(s.at("step_tables").at(d.key).get<std::vector<ProbGate>>());
        } else if (s.contains("tables")) {
            sc.model = GateModel::ideal();
            for (const auto& t : s.at("tables")) {
                const ProbGate g = t.get<ProbGate>();
                sc.model.per_kind[g.kind] = g;
            }
        } else {
            sc.model = GateModel::ideal();
        }
        const AccuracyMap m = accuracy_map(d.schedule, sc);
        {
            std::ofstream f = dir.open(fmt::format("accuracy_{}.csv", d.key));
            write_accuracy_csv(f, m);
        }
        summary[d.key]["steps"] = d.schedule.steps.size();
        summary[d.key]["cells"] = d.schedule.cell_count;
        summary[d.key]["overall"] = m.overall;
        summary[d.key]["per_port_mean"] = m.per_port_mean;
    }
    dir.write_json("adder_summary.json", summary);
    dir.result.summary = summary;
    return dir.result;
}

Schedule schedule_from_spec(const nlohmann::json& spec) {
    if (spec.contains("file")) {
        std::ifstream in(spec.at("file").get<std::string>());
        if (!in) throw ConfigError("cannot open schedule " + spec.at("file").get<std::string>());
        return schedule_from_json(nlohmann::json::parse(in));
    }
    const std::string gen = get_or<std::string>(spec, "generator", get_or<std::string>(spec, "kind", ""));
    CompileOptions o;
    o.allocation = parse_allocation(get_or<std::string>(spec, "allocation", "fresh"));
    o.not_style = parse_not_style(get_or<std::string>(spec, "not_style", "dedicated"));
    o.and_style = parse_and_style(get_or<std::string>(spec, "and_style", "native"));
    o.adder = parse_adder_design(get_or<std::string>(spec, "design", "all_nand"));
    const int bits = get_or(spec, "bits", 4);
    if (gen == "full_adder_all_nand") return full_adder_all_nand(o);
    if (gen == "full_adder_maj_not") return full_adder_maj_not(o);
    if (gen == "ripple_carry_adder") return ripple_carry_adder(bits, o);
    if (gen == "array_multiplier") return array_multiplier(bits, o);
    if (gen == "dot_product") return dot_product(bits, get_or(spec, "len", 4), o);
    throw ConfigError(fmt::format("unknown schedule generator '{}'", gen));
}

RunResult run_projection(const ExperimentConfig& cfg) {
    const nlohmann::json& s = section(cfg, "projection");
    const MtjParams params = resolve_params(cfg);
    const Objective objective = objective_from(s, Objective::Worst);
    const VoltageScan scan = scan_from(s, kWideScan);
    const auto tmr = get_or<std::vector<double>>(s, "tmr", {});
    const auto pws = get_or<std::vector<double>>(s, "pulse_widths", {1e-3});
    const auto ned_tmr = get_or<std::vector<double>>(s, "ned_tmr", {109, 200, 300});
    const double ned_pw = get_or(s, "ned_pulse_width", 1e-3);
    if (!s.contains("circuits") || s.at("circuits").empty()) throw ConfigError("projection needs a non-empty circuit list");
    const std::string and_style = get_or<std::string>(s, "and_style", "nand_only");

    RunDir dir(cfg, "projection");
    dir.write_json("params.json", ojson(nlohmann::json(params)));
    ojson summary;

    if (!tmr.empty()) {
        const auto rows = min_error_vs_tmr(GateKind::NAND, params, tmr, pws, objective, scan);
        std::ofstream f = dir.open("min_error.csv");
        write_min_error_csv(f, GateKind::NAND, objective, rows);
    }

    // delta per projected TMR, either derived from the device model or given.
    std::vector<double> deltas;
    if (s.contains("deltas")) {
        deltas = s.at("deltas").get<std::vector<double>>();
        if (deltas.size() != ned_tmr.size()) throw ConfigError("'deltas' must pair one-to-one with 'ned_tmr'");
    } else {
        for (double t : ned_tmr) {
            const GateOptimum opt = optimize_vlogic(GateKind::NAND, scale_tmr(params, t / 100.0), ned_pw, objective, scan);
            deltas.push_back(objective == Objective::Worst ? opt.response.worst_error : opt.response.mean_error);
        }
    }
    {
        std::ofstream f = dir.open("delta.csv");
        f << "tmr,delta\n";
        for (std::size_t i = 0; i < deltas.size(); ++i) fmt::print(f, "{:.6g},{}\n", ned_tmr[i], fmt_double(deltas[i]));
    }

    std::ofstream ned_csv = dir.open("ned.csv");
    ned_csv << "circuit,gates,tmr,delta,trials,inputs_evaluated,sampled,mean_error_distance,ned,ned_accuracy\n";
    summary["ned"] = ojson::array();
    for (const auto& c : s.at("circuits")) {
        nlohmann::json spec = c;
        if (!spec.contains("and_style")) spec["and_style"] = and_style;
        const Schedule sched = schedule_from_spec(spec);
        SimConfig sc = sim_config(cfg);
        sc.trials = get_or<std::uint64_t>(c, "trials", cfg.trials);
        if (sched.input_port_index("cin") >= 0) sc.fixed_inputs["cin"] = false;
        for (std::size_t i = 0; i < deltas.size(); ++i) {
            sc.model = GateModel::uniform_nand(deltas[i]);
            const NedReport r = ned(monte_carlo(sched, sc), sched);
            fmt::print(ned_csv, "{},{},{:.6g},{},{},{},{},{},{},{}\n", sched.name, sched.steps.size(), ned_tmr[i],
                       fmt_double(deltas[i]), sc.trials, r.inputs_evaluated, r.sampled ? 1 : 0,
                       fmt_double(r.mean_error_distance), fmt_double(r.ned), fmt_double(r.ned_accuracy));
            summary["ned"].push_back({{"circuit", sched.name}, {"tmr", ned_tmr[i]}, {"delta", deltas[i]}, {"ned", r.ned}});
        }
    }
    dir.result.summary = summary;
    return dir.result;
}

RunResult run_schedule(const ExperimentConfig& cfg) {
    const nlohmann::json& s = section(cfg, "schedule");
    if (s.empty()) throw ConfigError("run-schedule needs a 'schedule' section");
    const Schedule sched = schedule_from_spec(s);
    SimConfig sc = sim_config(cfg);
    sc.write_error_rate = get_or(s, "write_error_rate", 0.0);
    sc.read_error_rate = get_or(s, "read_error_rate", 0.0);
    if (s.contains("fixed_inputs"))
        for (const auto& [k, v] : s.at("fixed_inputs").items()) sc.fixed_inputs[k] = v.get<int>() != 0;
    sc.sampled_inputs = get_or<std::uint64_t>(s, "sampled_inputs", sc.sampled_inputs);

    const MtjParams params = resolve_params(cfg);
    if (cfg.model == "physics") {
        std::vector<GateKind> kinds;
        for (auto [k, n] : sched.gate_counts()) kinds.push_back(k);
        sc.model = GateModel::physics_at_optimum(params, kinds, get_or(s, "pulse_width", 1e-3),
                                                 objective_from(s, Objective::Mean));
    } else if (s.contains("delta")) {
        sc.model = GateModel::uniform_nand(s.at("delta").get<double>());
    } else if (s.contains("step_tables")) {
        sc.model = GateModel::from_step_tables(s.at("step_tables").get<std::vector<ProbGate>>());
    } else {
        sc.model = GateModel::ideal();
        if (s.contains("tables"))
            for (const auto& t : s.at("tables")) {
                const ProbGate g = t.get<ProbGate>();
                sc.model.per_kind[g.kind] = g;
            }
    }

    const bool exact = get_or<std::string>(s, "method", "monte_carlo") == "exact";
    const DistributionSet d = exact ? exact_distribution(sched, sc) : monte_carlo(sched, sc);

    RunDir dir(cfg, "run-schedule");
    dir.write_json("schedule.json", schedule_to_json(sched));
    {
        std::ofstream f = dir.open("distributions.csv");
        write_distributions_csv(f, d);
    }
    const AccuracyMap m = accuracy_map(sched, d);
    {
        std::ofstream f = dir.open("accuracy.csv");
        write_accuracy_csv(f, m);
    }
    ojson summary;
    summary["schedule"] = sched.name;
    summary["steps"] = sched.steps.size();
    summary["cells"] = sched.cell_count;
    summary["method"] = exact ? "exact" : "monte_carlo";
    summary["accuracy"] = to_json(m);
    if (sched.has_arithmetic()) summary["ned"] = to_json(ned(d, sched));
    dir.write_json("summary.json", summary);
    dir.result.summary = summary;
    return dir.result;
}

}  // namespace cramsim
