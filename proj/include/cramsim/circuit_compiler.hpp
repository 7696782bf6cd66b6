#pragma once

#include <string>
#include <vector>

#include "cramsim/schedule.hpp"

namespace cramsim {

enum class Allocation { Fresh, Reuse };
enum class NotStyle { Dedicated, Nand };     ///< NOT as its own step or as NAND(x, x)
enum class AndStyle { Native, NandOnly };    ///< AND as its own step or as NAND then NAND(t, t)
enum class AdderDesign { AllNand, MajNot };

struct CompileOptions {
    Allocation allocation = Allocation::Fresh;
    NotStyle not_style = NotStyle::Dedicated;
    AndStyle and_style = AndStyle::Native;
    AdderDesign adder = AdderDesign::AllNand;
};

/// Netlist builder with single-assignment values. `build` drops gates that
/// reach no output and assigns cells.
class ScheduleBuilder {
public:
    using Value = int;

    explicit ScheduleBuilder(std::string name) : name_(std::move(name)) {}

    Value input(const std::string& port);
    Value constant(bool value);
    Value gate(GateKind kind, std::vector<Value> args);
    void output(const std::string& port, Value v);
    /// Declares a word over already-declared input ports (LSB first).
    int word(const std::string& name, const std::vector<Value>& bits);
    void arithmetic_term(std::vector<int> words);

    Value nand(Value a, Value b) { return gate(GateKind::NAND, {a, b}); }
    Value not_(Value a, NotStyle style);
    Value and_(Value a, Value b, AndStyle style);

    Schedule build(Allocation allocation) const;

private:
    enum class NodeType { Input, Constant, Gate };
    struct Node {
        NodeType type;
        GateKind kind = GateKind::BUF;
        std::vector<Value> args;
        bool value = false;
        int port = -1;
    };

    std::string name_;
    std::vector<Node> nodes_;
    std::vector<std::string> input_names_;
    std::vector<std::pair<std::string, Value>> outputs_;
    std::vector<InputWord> words_;
    std::vector<std::vector<int>> arithmetic_;
    Value const_[2] = {-1, -1};
};

struct SumCarry {
    ScheduleBuilder::Value sum;
    ScheduleBuilder::Value carry;
};

/// Gate-level building blocks shared by the generators.
SumCarry emit_full_adder(ScheduleBuilder& b, ScheduleBuilder::Value x, ScheduleBuilder::Value y,
                         ScheduleBuilder::Value z, const CompileOptions& options);
SumCarry emit_half_adder(ScheduleBuilder& b, ScheduleBuilder::Value x, ScheduleBuilder::Value y);

/// C_out = MAJ3(A,B,C), two NOT copies of C_out, S = MAJ5(A,B,C,~C_out,~C_out).
Schedule full_adder_maj_not(const CompileOptions& options = {});
/// The 9-step NAND full adder.
Schedule full_adder_all_nand(const CompileOptions& options = {});

/// n full adders chained through the carry; ports a0.., b0.., cin; outputs s0..s{n}.
Schedule ripple_carry_adder(int n_bits, const CompileOptions& options = {});

/// Carry-save array multiplier with a final ripple row; outputs p0..p{2n-1}.
Schedule array_multiplier(int n_bits, const CompileOptions& options = {});

/// vec_len multipliers summed by a binary tree of ripple adders; outputs
/// y0..y{2n+log2(len)-1}.
Schedule dot_product(int n_bits, int vec_len, const CompileOptions& options = {});

std::string_view to_string(Allocation a);
std::string_view to_string(NotStyle s);
std::string_view to_string(AndStyle s);
std::string_view to_string(AdderDesign d);
Allocation parse_allocation(std::string_view s);
NotStyle parse_not_style(std::string_view s);
AndStyle parse_and_style(std::string_view s);
AdderDesign parse_adder_design(std::string_view s);

}  // namespace cramsim
