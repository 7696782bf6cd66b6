#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include "cramsim/circuit_compiler.hpp"
#include "cramsim/cram_array.hpp"
#include "cramsim/errors.hpp"

using namespace cramsim;

namespace {

const MtjParams kCal = MtjParams::anchored_defaults();

bool within_3sigma(std::size_t hits, std::size_t n, double p) {
    const double sigma = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
    return std::abs(static_cast<double>(hits) - static_cast<double>(n) * p) <= 3.0 * std::max(sigma, 1.0);
}

CramRow ideal_row(int width) {
    CramRow row(width, kCal, LogicModel::ProbTable);
    for (GateKind k : kAllGateKinds) row.tables[k] = ProbGate::ideal_gate(k);
    return row;
}

LogicStep nand_step(int a, int b, int out) { return LogicStep{GateKind::NAND, {a, b}, out, false, {}, {}}; }

}  // namespace

TEST_CASE("error-free writes and reads") {
    CramRow row = ideal_row(4);
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        mem_write(row, 0, true, rng);
        CHECK(row.cell(0).stored == MtjState::AP);
        CHECK(mem_read(row, 0));
        CHECK(mem_read(row, 0));
        mem_write(row, 1, false, rng);
        CHECK(!mem_read(row, 1));
        CHECK(!mem_read(row, 1, rng));
    }
    CHECK_THROWS_AS(mem_write(row, 4, true, rng), ScheduleError);
    CHECK_THROWS_AS(mem_read(row, -1), ScheduleError);
}

TEST_CASE("write error rate matches a binomial bound") {
    CramRow row = ideal_row(1);
    row.set_write_error_rate(1.5e-4);
    Rng rng(2024);
    std::size_t flips = 0;
    const std::size_t n = 1000000;
    for (std::size_t i = 0; i < n; ++i) {
        mem_write(row, 0, false, rng);
        flips += mem_read(row, 0);
    }
    CHECK(within_3sigma(flips, n, 1.5e-4));
    CHECK(rng.position() == n);
}

TEST_CASE("read error rate is opt-in") {
    CramRow row = ideal_row(1);
    Rng rng(3);
    mem_write(row, 0, true, rng);
    row.set_read_error_rate(0.2);
    std::size_t wrong = 0;
    const std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i) wrong += !mem_read(row, 0, rng);
    CHECK(within_3sigma(wrong, n, 0.2));
    CHECK(mem_read(row, 0));
    CHECK_THROWS_AS(row.set_read_error_rate(1.5), ParameterError);
    CHECK_THROWS_AS(row.set_write_error_rate(-0.1), ParameterError);
}

TEST_CASE("ideal table step") {
    CramRow row = ideal_row(3);
    Rng rng(4);
    for (unsigned s = 0; s < 4; ++s) {
        mem_write(row, 0, s & 2u, rng);
        mem_write(row, 1, s & 1u, rng);
        execute_step(row, nand_step(0, 1, 2), rng);
        CHECK(mem_read(row, 2) == ideal_output(GateKind::NAND, s));
        CHECK(mem_read(row, 0) == static_cast<bool>(s & 2u));
        CHECK(mem_read(row, 1) == static_cast<bool>(s & 1u));
    }
}

TEST_CASE("steps take two draws whatever the model") {
    CramRow row = ideal_row(3);
    Rng rng(5);
    execute_step(row, nand_step(0, 1, 2), rng);
    CHECK(rng.position() == 2);
    CramRow dev(3, kCal, LogicModel::DevicePhysics);
    dev.electrical[GateKind::NAND] = LogicStepConfig::for_gate(GateKind::NAND, 0.62, 1e-3);
    Rng rng2(5);
    execute_step(dev, nand_step(0, 1, 2), rng2);
    CHECK(rng2.position() == 2);
}

TEST_CASE("device step without drive keeps the preset") {
    CramRow row(3, kCal, LogicModel::DevicePhysics);
    Rng rng(6);
    for (bool preset : {false, true}) {
        LogicStepConfig cfg = LogicStepConfig::for_gate(GateKind::NAND, 0.0, 1e-3);
        cfg.output_preset = preset;
        LogicStep st = nand_step(0, 1, 2);
        st.preset = preset;
        st.electrical = cfg;
        for (int i = 0; i < 200; ++i) {
            execute_step(row, st, rng);
            CHECK(mem_read(row, 2) == preset);
        }
    }
}

TEST_CASE("device step at the NAND point matches dout_mean") {
    CramRow row(3, kCal, LogicModel::DevicePhysics);
    const LogicStepConfig cfg = LogicStepConfig::for_gate(GateKind::NAND, 0.620, 1e-3);
    row.electrical[GateKind::NAND] = cfg;
    Rng rng(7);
    const std::size_t n = 100000;
    for (unsigned s = 0; s < 4; ++s) {
        mem_write(row, 0, s & 2u, rng);
        mem_write(row, 1, s & 1u, rng);
        const std::array<MtjState, 2> st{from_bit(s & 2u), from_bit(s & 1u)};
        const double p = dout_mean(st, cfg, kCal);
        std::size_t ones = 0;
        for (std::size_t i = 0; i < n; ++i) {
            execute_step(row, nand_step(0, 1, 2), rng);
            ones += mem_read(row, 2);
        }
        CHECK(within_3sigma(ones, n, p));
        if (s == 0) CHECK(static_cast<double>(ones) / n >= 0.99);
    }
}

TEST_CASE("failed preset under a table leaves the wrong preset in place") {
    CramRow row = ideal_row(3);
    row.set_write_error_rate(1.0);
    Rng rng(8);
    // Inputs are written with errors too, so use the raw cells.
    row.cell(0).stored = MtjState::P;
    row.cell(1).stored = MtjState::P;
    execute_step(row, nand_step(0, 1, 2), rng);
    CHECK(mem_read(row, 2));
    row.cell(0).stored = MtjState::AP;
    row.cell(1).stored = MtjState::AP;
    execute_step(row, nand_step(0, 1, 2), rng);
    CHECK(mem_read(row, 2));
}

TEST_CASE("execute_step errors") {
    CramRow row = ideal_row(3);
    Rng rng(9);
    CHECK_THROWS_AS(execute_step(row, nand_step(0, 1, 3), rng), ScheduleError);
    CHECK_THROWS_AS(execute_step(row, nand_step(0, 2, 2), rng), ScheduleError);
    CHECK_THROWS_AS(execute_step(row, LogicStep{GateKind::NAND, {0}, 2, false, {}, {}}, rng), ScheduleError);
    CramRow bare(3, kCal, LogicModel::ProbTable);
    CHECK_THROWS_AS(execute_step(bare, nand_step(0, 1, 2), rng), ConfigError);
    CramRow dev(3, kCal, LogicModel::DevicePhysics);
    CHECK_THROWS_AS(execute_step(dev, nand_step(0, 1, 2), rng), ConfigError);
}

TEST_CASE("execute_step never mutates inputs") {
    CramRow row(6, kCal, LogicModel::DevicePhysics);
    for (GateKind k : kAllGateKinds) row.electrical[k] = LogicStepConfig::for_gate(k, 0.6, 1e-3);
    Rng rng(10);
    for (int t = 0; t < 2000; ++t) {
        for (int c = 0; c < 5; ++c) row.cell(c).stored = from_bit(rng.uniform() < 0.5);
        const GateKind k = kAllGateKinds[t % 8];
        LogicStep st{k, {}, 5, default_preset(k), {}, {}};
        for (int i = 0; i < gate_arity(k); ++i) st.inputs.push_back(i);
        std::array<MtjState, 5> before{};
        for (int c = 0; c < 5; ++c) before[c] = row.cell(c).stored;
        execute_step(row, st, rng);
        for (int c = 0; c < 5; ++c) CHECK(row.cell(c).stored == before[c]);
    }
}

TEST_CASE("full adder examples") {
    Rng rng(11);
    const Schedule nand = full_adder_all_nand();
    CramRow row = ideal_row(nand.cell_count);
    const auto out = execute_schedule(row, nand, {{"A", true}, {"B", false}, {"C", true}}, rng);
    CHECK(out[nand.output_port_index("S")] == 0);
    CHECK(out[nand.output_port_index("Cout")] == 1);

    const Schedule maj = full_adder_maj_not();
    CramRow row2 = ideal_row(maj.cell_count);
    const auto out2 = execute_schedule(row2, maj, {{"A", false}, {"B", false}, {"C", false}}, rng);
    CHECK(out2[maj.output_port_index("S")] == 0);
    CHECK(out2[maj.output_port_index("Cout")] == 0);
}

TEST_CASE("adders are exact with zero-error tables") {
    for (const Schedule& s : {full_adder_all_nand(), full_adder_maj_not(),
                              full_adder_all_nand({Allocation::Reuse}), ripple_carry_adder(2)}) {
        CramRow row = ideal_row(s.cell_count);
        Rng rng(12);
        for (std::uint64_t idx = 0; idx < (1u << s.input_bits()); ++idx) {
            const auto bits = input_bits_of(s.input_bits(), idx);
            // Count ones among inputs, independently of the arithmetic terms.
            std::uint64_t ones = 0;
            for (auto b : bits) ones += b;
            const auto out = execute_schedule(row, s, bits, rng);
            if (s.input_bits() == 3) {
                CHECK(decode_output(out) == ones);
            } else {
                CHECK(decode_output(out) == reference_output(s, bits));
            }
            // Pure function: a second run agrees.
            CHECK(execute_schedule(row, s, bits, rng) == out);
        }
    }
}

TEST_CASE("row width limit") {
    const Schedule fresh = full_adder_all_nand({Allocation::Fresh});
    const Schedule reuse = full_adder_all_nand({Allocation::Reuse});
    CramRow row = ideal_row(64);
    row.max_width = 7;
    Rng rng(13);
    const std::array<std::uint8_t, 3> bits{1, 1, 0};
    CHECK_THROWS_AS(execute_schedule(row, fresh, bits, rng), CapacityError);
    CHECK(decode_output(execute_schedule(row, reuse, bits, rng)) == 2);
    CramRow small = ideal_row(4);
    CHECK_THROWS_AS(execute_schedule(small, reuse, bits, rng), CapacityError);
}

TEST_CASE("execute_schedule errors") {
    const Schedule s = full_adder_all_nand();
    CramRow row = ideal_row(s.cell_count);
    Rng rng(14);
    CHECK_THROWS_AS(execute_schedule(row, s, {{"A", true}, {"B", false}}, rng), ConfigError);
    CHECK_THROWS_AS(execute_schedule(row, s, {{"A", true}, {"B", false}, {"C", true}, {"D", true}}, rng), ConfigError);
    Schedule broken = s;
    broken.steps[0].inputs[0] = broken.steps[0].output;
    CHECK_THROWS_AS(execute_schedule(row, broken, {{"A", true}, {"B", false}, {"C", true}}, rng), ScheduleError);
}

TEST_CASE("snapshot lists cell states") {
    CramRow row = ideal_row(3);
    Rng rng(15);
    mem_write(row, 1, true, rng);
    const auto j = snapshot(row);
    CHECK(j.at("model") == "table");
    REQUIRE(j.at("cells").size() == 3);
    CHECK(j.at("cells")[0].at("stored") == 0);
    CHECK(j.at("cells")[1].at("stored") == 1);
}
