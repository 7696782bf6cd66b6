#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cramsim/errors.hpp"
#include "cramsim/experiments.hpp"

using namespace cramsim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "cramsim_cli_test" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ExperimentConfig config(nlohmann::json j, const fs::path& out) {
    j["out"] = out.string();
    return config_from_json(j);
}

int cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(CRAMSIM_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path write_json(const fs::path& p, const nlohmann::json& j) {
    std::ofstream(p) << j.dump(2);
    return p;
}

struct Snapshot {
    std::vector<std::pair<std::string, std::string>> files;
    nlohmann::json metadata;
};

// Data files and timestamp-free metadata of a finished run.
Snapshot take(const RunResult& r) {
    Snapshot s;
    for (const fs::path& p : r.files) s.files.emplace_back(p.filename().string(), slurp(p));
    s.metadata = nlohmann::json::parse(slurp(r.files.front().parent_path() / "metadata.json"));
    s.metadata.erase("timestamp");
    return s;
}

}  // namespace

TEST_CASE("calibrate from the published anchors") {
    const fs::path out = scratch("cal");
    const RunResult r = run_calibrate(config(preset_config("fig4").doc, out));
    const MtjParams p = load_params(out / "params.json");
    CHECK(p.r_p0 == doctest::Approx(2240.0).epsilon(0.01));
    const auto report = nlohmann::json::parse(slurp(out / "calibration.json"));
    CHECK(report.at("anchors").size() == 3);
    for (const auto& a : report.at("anchors")) {
        CHECK(std::abs(a.at("r_in_eq_residual").get<double>()) < 0.01);
        CHECK(std::abs(a.at("v_out_residual").get<double>()) < 0.01);
    }
    CHECK(fs::exists(out / "metadata.json"));
    CHECK(fs::exists(out / "config.json"));
    CHECK(r.summary.contains("params"));
}

TEST_CASE("calibrate recovers synthetic parameters") {
    MtjParams truth;
    truth.r_p0 = 3000.0;
    truth.r_ap0 = 6300.0;
    truth.v_h = 0.8;
    truth.delta_th = 50.0;
    truth.v_c0 = 0.5;
    truth.tau0 = 1e-9;
    truth.v_c0 = pin_critical_voltage(truth, 0.65, 1e-3);
    const std::vector<std::vector<MtjState>> states{{MtjState::P, MtjState::P},
                                                    {MtjState::P, MtjState::AP},
                                                    {MtjState::AP, MtjState::AP}};
    const AnchorSet anchors = synthesize_anchors(truth, 0.65, states);
    // Error target that the truth itself achieves.
    GateTarget target;
    target.tmr = truth.tmr0();
    target.min_error = optimize_vlogic(GateKind::NAND, truth, 1e-3, Objective::Worst, kWideScan).response.worst_error;
    nlohmann::json doc;
    to_json(doc["anchors"], anchors);
    doc["target"] = target;
    const fs::path out = scratch("cal_synth");
    run_calibrate(config(doc, out));
    const MtjParams p = load_params(out / "params.json");
    CHECK(p.r_p0 == doctest::Approx(truth.r_p0).epsilon(0.01));
    CHECK(p.r_ap0 == doctest::Approx(truth.r_ap0).epsilon(0.01));
    CHECK(p.v_h == doctest::Approx(truth.v_h).epsilon(0.01));
}

TEST_CASE("calibrate without anchors is a usage error") {
    CHECK_THROWS_AS(run_calibrate(config(nlohmann::json::object(), scratch("cal_none"))), ConfigError);
    const fs::path dir = scratch("cli_cal_none");
    const fs::path cfg = write_json(dir / "c.json", {{"out", (dir / "out").string()}});
    CHECK(cli("calibrate --config " + cfg.string(), dir / "log.txt") == 2);
}

TEST_CASE("gate sweep summaries") {
    const fs::path out = scratch("sweep");
    nlohmann::json doc;
    doc["gate_sweep"] = {{"gates", {"NAND", "MAJ3", "MAJ5"}}};
    const RunResult r = run_gate_sweep(config(doc, out));
    auto row = [&](const std::string& gate, const std::string& obj) {
        for (const auto& x : r.summary)
            if (x.at("gate") == gate && x.at("objective") == obj) return x;
        FAIL("missing row");
        return nlohmann::ordered_json{};
    };
    const auto nand = row("NAND", "mean");
    CHECK(nand.at("v_star").get<double>() == doctest::Approx(0.62).epsilon(0.015));
    CHECK(std::abs(nand.at("mean_accuracy").get<double>() - 0.994) <= 0.003);
    const auto maj5 = row("MAJ5", "worst");
    CHECK(std::abs(maj5.at("mean_accuracy").get<double>() - 0.75) <= 0.05);
    CHECK(std::abs(maj5.at("worst_accuracy").get<double>() - 0.56) <= 0.07);

    const std::string csv = slurp(out / "sweep_NAND.csv");
    CHECK(csv.rfind("gate,v_logic,pulse_width,state,dout,accuracy\n", 0) == 0);
    CHECK(slurp(out / "optimum.csv").rfind("gate,objective,v_star,mean_accuracy,worst_accuracy\n", 0) == 0);
}

TEST_CASE("zero-width grid is a usage error") {
    nlohmann::json doc;
    doc["gate_sweep"] = {{"v_min", 0.5}, {"v_max", 0.5}};
    CHECK_THROWS_AS(run_gate_sweep(config(doc, scratch("sweep0"))), ConfigError);
    const fs::path dir = scratch("cli_sweep0");
    const fs::path cfg = write_json(dir / "c.json", {{"out", (dir / "out").string()},
                                                     {"gate_sweep", {{"resolution", 0.0}}}});
    CHECK(cli("gate-sweep --config " + cfg.string(), dir / "log.txt") == 2);
}

TEST_CASE("adder maps") {
    {
        const fs::path out = scratch("adder_ideal");
        nlohmann::json doc{{"model", "table"}, {"trials", 200}};
        const RunResult r = run_adder(config(doc, out));
        CHECK(r.summary.at("all_nand").at("overall") == 1.0);
        CHECK(r.summary.at("maj_not").at("overall") == 1.0);
        std::istringstream csv(slurp(out / "accuracy_maj_not.csv"));
        std::string line;
        std::getline(csv, line);
        CHECK(line == "input_state,output_port,accuracy");
        int rows = 0;
        while (std::getline(csv, line)) {
            CHECK(line.substr(line.rfind(',') + 1) == "1");
            ++rows;
        }
        CHECK(rows == 16);
    }
    {
        const fs::path out = scratch("adder_phys");
        const RunResult r = run_adder(config(preset_config("fig5").doc, out));
        CHECK(r.summary.at("all_nand").at("overall").get<double>() > r.summary.at("maj_not").at("overall").get<double>());
        const auto summary = nlohmann::json::parse(slurp(out / "adder_summary.json"));
        CHECK(summary.at("trials") == 10000);
        CHECK(nlohmann::json::parse(slurp(out / "metadata.json")).at("trials") == 10000);
    }
}

TEST_CASE("projection with explicit deltas") {
    const fs::path out = scratch("proj");
    nlohmann::json doc{{"model", "table"}};
    doc["projection"] = {{"tmr", {109, 200, 300}},
                         {"pulse_widths", {1e-3}},
                         {"ned_tmr", {109, 200, 300}},
                         {"deltas", {0.0076, 2.1e-4, 7.6e-6}},
                         {"circuits", {{{"kind", "ripple_carry_adder"}, {"bits", 4}}}}};
    const RunResult r = run_projection(config(doc, out));
    const double want[] = {2.8e-2, 8.6e-4, 3.3e-5};
    REQUIRE(r.summary.at("ned").size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const double got = r.summary.at("ned")[i].at("ned").get<double>();
        CHECK(got > want[i] / 2.0);
        CHECK(got < want[i] * 2.0);
    }
    CHECK(slurp(out / "min_error.csv").rfind("gate,objective,tmr,pulse_width,v_star,min_error\n", 0) == 0);
    CHECK(slurp(out / "delta.csv").rfind("tmr,delta\n", 0) == 0);
    CHECK(slurp(out / "ned.csv").rfind("circuit,gates,tmr,delta,trials,", 0) == 0);
}

TEST_CASE("projection needs circuits") {
    nlohmann::json doc;
    doc["projection"] = {{"circuits", nlohmann::json::array()}};
    CHECK_THROWS_AS(run_projection(config(doc, scratch("proj_empty"))), ConfigError);
    const fs::path dir = scratch("cli_proj_empty");
    const fs::path cfg = write_json(dir / "c.json", doc);
    CHECK(cli("projection --config " + cfg.string() + " --out " + (dir / "out").string(), dir / "log.txt") == 2);
}

TEST_CASE("run-schedule writes distributions, accuracy and NED") {
    const fs::path out = scratch("sched");
    nlohmann::json doc{{"model", "table"}, {"trials", 2000}};
    doc["schedule"] = {{"generator", "ripple_carry_adder"}, {"bits", 2}, {"delta", 0.01}, {"method", "exact"}};
    const RunResult r = run_schedule(config(doc, out));
    CHECK(r.summary.at("method") == "exact");
    CHECK(r.summary.at("ned").at("ned").get<double>() > 0.0);
    const Schedule back = schedule_from_json(nlohmann::json::parse(slurp(out / "schedule.json")));
    CHECK(back == ripple_carry_adder(2));

    // A schedule file round-trips through the runner.
    const fs::path out2 = scratch("sched_file");
    nlohmann::json doc2{{"model", "table"}, {"trials", 10}};
    doc2["schedule"] = {{"file", (out / "schedule.json").string()}};
    const RunResult r2 = run_schedule(config(doc2, out2));
    CHECK(r2.summary.at("ned").at("ned") == 0.0);
}

TEST_CASE("exit codes") {
    const fs::path dir = scratch("codes");
    CHECK(cli("--help", dir / "help.txt") == 0);
    CHECK(cli("no-such-command", dir / "a.txt") == 2);
    CHECK(cli("adder --model quantum", dir / "b.txt") == 2);
    CHECK(cli("adder --preset fig99", dir / "c.txt") == 2);

    // Anchors no resistance model can fit.
    nlohmann::json bad;
    bad["anchors"] = {{"v_logic", 0.62},
                      {"points", {{{"state", "00"}, {"r_in_eq", 1120.0}, {"v_out", 0.05}},
                                  {{"state", "01"}, {"r_in_eq", 600.0}, {"v_out", 0.5}},
                                  {{"state", "11"}, {"r_in_eq", 9000.0}, {"v_out", 0.45}}}}};
    const fs::path cal = write_json(dir / "cal.json", bad);
    CHECK(cli("calibrate --config " + cal.string() + " --out " + (dir / "cal").string(), dir / "d.txt") == 3);

    nlohmann::json wide{{"model", "table"}, {"trials", 10}};
    wide["schedule"] = {{"generator", "full_adder_all_nand"}};
    const fs::path w = write_json(dir / "wide.json", wide);
    CHECK(cli("run-schedule --config " + w.string() + " --row-width 7 --out " + (dir / "w").string(), dir / "e.txt") == 4);
    wide["schedule"]["allocation"] = "reuse";
    write_json(w, wide);
    CHECK(cli("run-schedule --config " + w.string() + " --row-width 7 --out " + (dir / "w").string(), dir / "f.txt") == 0);

    // A schedule file that reads its own output cell.
    nlohmann::json broken = nlohmann::json::parse(schedule_to_json(full_adder_all_nand()).dump());
    broken["steps"][0]["inputs"][0] = broken["steps"][0]["output"];
    write_json(dir / "broken.json", broken);
    nlohmann::json run{{"model", "table"}, {"trials", 10}};
    run["schedule"] = {{"file", (dir / "broken.json").string()}};
    const fs::path rb = write_json(dir / "run_broken.json", run);
    CHECK(cli("run-schedule --config " + rb.string() + " --out " + (dir / "b").string(), dir / "g.txt") == 5);
}

TEST_CASE("flags override config values") {
    const fs::path dir = scratch("flags");
    nlohmann::json doc{{"model", "table"}, {"trials", 10}, {"seed", 3}};
    doc["schedule"] = {{"generator", "full_adder_all_nand"}, {"delta", 0.1}};
    const fs::path c = write_json(dir / "c.json", doc);
    REQUIRE(cli("run-schedule --config " + c.string() + " --trials 77 --seed 9 --out " + (dir / "o").string(),
                dir / "log.txt") == 0);
    const auto snap = nlohmann::json::parse(slurp(dir / "o" / "config.json"));
    CHECK(snap.at("trials") == 77);
    CHECK(snap.at("seed") == 9);
    CHECK(snap.at("model") == "table");
    CHECK(!snap.contains("workers"));
}

TEST_CASE("every command is reproducible across worker counts") {
    struct Case {
        std::string name;
        RunResult (*run)(const ExperimentConfig&);
        nlohmann::json doc;
    };
    nlohmann::json sweep;
    sweep["gate_sweep"] = {{"gates", {"NAND", "MAJ3"}}, {"v_min", 0.3}, {"v_max", 0.7}, {"resolution", 1e-2}};
    nlohmann::json adder{{"trials", 3000}, {"seed", 4}};
    nlohmann::json proj{{"model", "table"}, {"trials", 500}, {"seed", 5}};
    proj["projection"] = {{"tmr", {100, 200}},
                          {"pulse_widths", {1e-3, 1e-6}},
                          {"ned_tmr", {109, 200}},
                          {"circuits", {{{"kind", "ripple_carry_adder"}, {"bits", 3}},
                                        {{"kind", "array_multiplier"}, {"bits", 2}}}}};
    nlohmann::json sched{{"model", "table"}, {"trials", 2000}, {"seed", 6}};
    sched["schedule"] = {{"generator", "array_multiplier"}, {"bits", 3}, {"and_style", "nand_only"}, {"delta", 0.02}, {"write_error_rate", 1e-3}};
    nlohmann::json cal = preset_config("fig4").doc;
    const std::vector<Case> cases{{"calibrate", run_calibrate, cal},
                                  {"sweep", run_gate_sweep, sweep},
                                  {"adder", run_adder, adder},
                                  {"projection", run_projection, proj},
                                  {"schedule", run_schedule, sched}};
    for (const Case& c : cases) {
        nlohmann::json one = c.doc;
        one["workers"] = 1;
        nlohmann::json many = c.doc;
        many["workers"] = 4;
        // Same output directory, since config.json records it.
        const fs::path out = scratch(c.name + "_det");
        const Snapshot a = take(c.run(config(one, out)));
        fs::remove_all(out);
        const Snapshot b = take(c.run(config(many, out)));
        CHECK(!a.files.empty());
        REQUIRE(a.files.size() == b.files.size());
        for (std::size_t i = 0; i < a.files.size(); ++i) {
            CHECK(a.files[i].first == b.files[i].first);
            CHECK_MESSAGE(a.files[i].second == b.files[i].second, c.name, ": ", a.files[i].first);
        }
        CHECK(a.metadata == b.metadata);
    }
}
