#include <doctest.h>

#include <functional>

#include "mechlogic/circuits.hpp"
#include "mechlogic/netlist.hpp"

using namespace mechlogic::logic;

namespace {

// Exhaustive zero-delay check of a two-input combinator.
void check_binary(const std::function<NetId(Netlist &, NetId, NetId)> &build,
                  const std::function<bool(bool, bool)> &ref) {
    Netlist nl;
    const NetId a = nl.add_input("a"), b = nl.add_input("b");
    const NetId y = build(nl, a, b);
    GoldenSim sim(nl);
    for (int x = 0; x < 4; ++x) {
        sim.set(a, from_bool(x & 1));
        sim.set(b, from_bool(x & 2));
        sim.settle();
        CHECK(sim.get(y) == from_bool(ref(x & 1, x & 2)));
    }
}

}  // namespace

TEST_CASE("three-valued NOR") {
    CHECK(nor(Value::Zero, Value::Zero) == Value::One);
    CHECK(nor(Value::One, Value::X) == Value::Zero);
    CHECK(nor(Value::Zero, Value::X) == Value::X);
    CHECK(nor(Value::X, Value::X) == Value::X);
}

TEST_CASE("basic combinators") {
    check_binary([](Netlist &nl, NetId a, NetId b) { return nl.nor(a, b); },
                 [](bool a, bool b) { return !(a || b); });
    check_binary([](Netlist &nl, NetId a, NetId b) { return or_(nl, a, b); },
                 [](bool a, bool b) { return a || b; });
    check_binary([](Netlist &nl, NetId a, NetId b) { return and_(nl, a, b); },
                 [](bool a, bool b) { return a && b; });
    check_binary([](Netlist &nl, NetId a, NetId b) { return xor_(nl, a, b); },
                 [](bool a, bool b) { return a != b; });
    check_binary([](Netlist &nl, NetId a, NetId b) { return xnor_(nl, a, b); },
                 [](bool a, bool b) { return a == b; });
}

TEST_CASE("and costs three gates") {
    Netlist nl;
    const NetId a = nl.add_input("a"), b = nl.add_input("b");
    and_(nl, a, b);
    CHECK(nl.gate_count() == 3);
    CHECK(nl.combinator_gates.at("and") == 3);
    const auto d = nl.depth();
    CHECK(*std::max_element(d.begin(), d.end()) == 2);
}

TEST_CASE("mux selects") {
    Netlist nl;
    const NetId a = nl.add_input("a"), b = nl.add_input("b"), s = nl.add_input("s");
    const NetId y = mux(nl, a, b, s);
    GoldenSim sim(nl);
    for (int x = 0; x < 8; ++x) {
        sim.set(a, from_bool(x & 1));
        sim.set(b, from_bool(x & 2));
        sim.set(s, from_bool(x & 4));
        sim.settle();
        CHECK(sim.get(y) == from_bool((x & 4) ? (x & 2) : (x & 1)));
    }
}

TEST_CASE("arithmetic blocks, exhaustive at 4 bits") {
    Netlist nl;
    const Bus a = nl.add_input_bus("a", 4), b = nl.add_input_bus("b", 4);
    const auto add = ripple_adder(nl, a, b);
    const NetId gt = greater_than(nl, a, b);
    const NetId ne = not_equal(nl, a, b);
    const Bus prod = multiply(nl, a, b);
    const Bus sq = multiply(nl, a, a);
    const Bus srl = shift_right_logical(nl, a);
    const Bus sra = shift_right_arith(a);
    GoldenSim sim(nl);
    for (unsigned x = 0; x < 16; ++x) {
        for (unsigned y = 0; y < 16; ++y) {
            sim.set_bus(a, x);
            sim.set_bus(b, y);
            sim.settle();
            CHECK(*sim.get_bus(add.sum) == ((x + y) & 15));
            CHECK((sim.get(add.carry) == Value::One) == (x + y > 15));
            CHECK((sim.get(gt) == Value::One) == (x > y));
            CHECK((sim.get(ne) == Value::One) == (x != y));
            CHECK(*sim.get_bus(prod) == x * y);
            CHECK(*sim.get_bus(sq) == x * x);
            CHECK(*sim.get_bus(srl) == (x >> 1));
            CHECK(*sim.get_bus(sra) == ((x >> 1) | (x & 8)));
        }
    }
}

TEST_CASE("X propagates and resolves") {
    Netlist nl;
    const NetId a = nl.add_input("a"), b = nl.add_input("b");
    const NetId y = nl.nor(a, b);
    GoldenSim sim(nl);
    sim.set(a, Value::X);
    sim.set(b, Value::Zero);
    sim.settle();
    CHECK(sim.get(y) == Value::X);
    sim.set(b, Value::One);
    sim.settle();
    CHECK(sim.get(y) == Value::Zero);
}

TEST_CASE("latch holds and loads under unit delay") {
    Netlist nl;
    const NetId d = nl.add_input("d"), en = nl.add_input("en");
    const Latch l = build_latch(nl, d, en);
    CHECK(nl.gate_count() == 4 + 2 * kLatchDelayPairs);
    CHECK(nl.combinational_loops().size() == 1);
    GoldenSim sim(nl);
    sim.set(d, Value::One);
    sim.set(en, Value::Zero);
    sim.run_until_stable(100);
    CHECK(sim.get(l.out) == Value::X);  // never loaded
    sim.set(en, Value::One);
    for (int i = 0; i < 5; ++i) sim.tick();
    sim.set(en, Value::Zero);
    sim.run_until_stable(100);
    sim.set(d, Value::Zero);
    sim.run_until_stable(100);
    CHECK(sim.get(l.out) == Value::One);
    CHECK(sim.get(l.q) == Value::One);
}

TEST_CASE("ring oscillator is reported") {
    Netlist nl;
    const auto g = nl.nor_deferred();
    const NetId out = nl.gates()[g].out;
    nl.bind_inputs(g, out, nl.const0());
    GoldenSim sim(nl);
    sim.tick();
    CHECK(sim.get(out) == Value::X);
    Netlist nl2;
    const NetId en = nl2.add_input("en");
    const auto g2 = nl2.nor_deferred();
    const NetId o2 = nl2.gates()[g2].out;
    nl2.bind_inputs(g2, o2, en);
    GoldenSim s2(nl2);
    s2.set(en, Value::Zero);
    s2.set(en, Value::One);
    s2.settle();
    s2.set(en, Value::Zero);
    CHECK_THROWS_AS(s2.run_until_stable(50), OscillationError);
}

TEST_CASE("validation catches unbound gates") {
    Netlist nl;
    nl.nor_deferred();
    CHECK_THROWS_AS(nl.validate(), NetlistError);
    Netlist ok;
    ok.nor(ok.add_input("a"), ok.const0());
    ok.freeze();
    CHECK_THROWS_AS(ok.add_input("b"), NetlistError);
}

TEST_CASE("structural import of the 2-bit adder") {
    const auto nl = import_structural_json(mechlogic::circuits::adder2_structural_json());
    CHECK(nl.gate_count() == 17);
    GoldenSim sim(nl);
    for (unsigned x = 0; x < 4; ++x) {
        for (unsigned y = 0; y < 4; ++y) {
            sim.set_bus(nl.bus("a"), x);
            sim.set_bus(nl.bus("b"), y);
            sim.settle();
            CHECK(*sim.get_bus(nl.bus("s")) == x + y);
        }
    }
}

TEST_CASE("structural import errors and latches") {
    CHECK_THROWS_AS(import_structural_json("{"), NetlistError);
    const char *bad_cell = R"({"modules":{"m":{"ports":{"a":{"direction":"input","bits":[2]}},
        "cells":{"x":{"type":"AND","port_directions":{},"connections":{}}}}}})";
    CHECK_THROWS_AS(import_structural_json(bad_cell), NetlistError);
    const char *undriven = R"({"modules":{"m":{"ports":{"y":{"direction":"output","bits":[3]}},
        "cells":{}}}})";
    CHECK_THROWS_AS(import_structural_json(undriven), NetlistError);
    const char *latch = R"({"modules":{"m":{"ports":{
        "d":{"direction":"input","bits":[2]},"en":{"direction":"input","bits":[3]},
        "q":{"direction":"output","bits":[4]}},
        "cells":{"r":{"type":"DFF","port_directions":{"D":"input","C":"input","Q":"output"},
        "connections":{"D":[2],"C":[3],"Q":[4]}}}}}})";
    const auto nl = import_structural_json(latch);
    CHECK(nl.gate_count() == 4 + 2 * kLatchDelayPairs);
    GoldenSim sim(nl);
    sim.set(nl.input("d"), Value::One);
    sim.set(nl.input("en"), Value::One);
    sim.run_until_stable(100);
    sim.set(nl.input("en"), Value::Zero);
    sim.run_until_stable(100);
    sim.set(nl.input("d"), Value::Zero);
    sim.run_until_stable(100);
    CHECK(sim.get(nl.output("q")) == Value::One);
}
