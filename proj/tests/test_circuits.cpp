#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mechlogic/circuits.hpp"

using namespace mechlogic;
using namespace mechlogic::circuits;
using logic::GoldenSim;
using logic::Value;

TEST_CASE("nor cascade computes x1 NOR x2 at every odd stage") {
    const auto nl = build_nor_cascade(3);
    CHECK(nl.gate_count() == 3);
    GoldenSim sim(nl);
    for (int x = 0; x < 4; ++x) {
        sim.set(nl.input("x1"), logic::from_bool(x & 1));
        sim.set(nl.input("x2"), logic::from_bool(x & 2));
        sim.settle();
        const Value want = logic::from_bool(x == 0);
        CHECK(sim.get(nl.output("s1")) == want);
        CHECK(sim.get(nl.output("s3")) == want);
        CHECK(sim.get(nl.output("s2")) != want);
    }
}

TEST_CASE("2-bit adder: 17 gates, exhaustive, JSON twin matches") {
    const auto nl = build_adder2();
    CHECK(nl.gate_count() == 17);
    GoldenSim sim(nl);
    for (unsigned a = 0; a < 4; ++a) {
        for (unsigned b = 0; b < 4; ++b) {
            sim.set_bus(nl.bus("a"), a);
            sim.set_bus(nl.bus("b"), b);
            sim.settle();
            CHECK(*sim.get_bus(nl.bus("s")) == a + b);
        }
    }
    const auto imported = logic::import_structural_json(adder2_structural_json());
    REQUIRE(imported.gate_count() == nl.gate_count());
    const auto d1 = nl.depth(), d2 = imported.depth();
    CHECK(*std::max_element(d1.begin(), d1.end()) == *std::max_element(d2.begin(), d2.end()));
}

TEST_CASE("sqrt fsm converges MSB first") {
    const auto nl = build_sqrt_fsm(8);
    const auto roots = sqrt_golden_run(nl, 2809, 9);
    REQUIRE(roots.size() == 9);
    CHECK(roots[7] == 53u);
    CHECK(roots[8] == 53u);
    CHECK(roots[0] == 0u);
    CHECK(roots[2] == 32u);
}

TEST_CASE("sqrt fsm width 4, every input, lane-parallel") {
    const auto nl = build_sqrt_fsm(4);
    LaneSim sim(nl);
    std::vector<std::uint64_t> ns;
    for (std::uint64_t n = 0; n < 256; ++n) ns.push_back(n);
    for (std::size_t base = 0; base < ns.size(); base += 64) {
        std::vector<std::uint64_t> lane(ns.begin() + base, ns.begin() + base + 64);
        sim.set_bus_lanes(nl.bus("n"), lane);
        for (int cyc = 0; cyc < 5; ++cyc) {
            sim.set(nl.input("reset"), cyc == 0 ? ~0ULL : 0);
            sim.set(nl.input("clk"), ~0ULL);
            sim.run(5);
            sim.set(nl.input("clk"), 0);
            sim.run(300);
        }
        for (int l = 0; l < 64; ++l) {
            const auto want = static_cast<std::uint64_t>(std::sqrt(double(lane[l])));
            CHECK(sim.bus_value(nl.bus("root"), l) == want);
        }
    }
}

TEST_CASE("processor netlist runs in lockstep with the cycle model") {
    const auto cpu = build_processor();
    MESSAGE("processor gates: " << cpu.netlist.gate_count());
    CHECK(cpu.netlist.gate_count() < 2500);
    const auto prog = isa::assemble(isa::sieve_program(16, 128));
    GoldenCpu golden(cpu, prog.image);
    isa::ClockedMachine model(prog.image);
    for (int i = 0; i < 150; ++i) {
        CAPTURE(i);
        const auto g = golden.step();
        const auto w = model.clock();
        CHECK(g.write == w);
        auto expect = model.state();
        expect.arch.halted = false;
        REQUIRE(g.state == expect);
    }
    MESSAGE("worst ticks per cycle: " << golden.worst_cycle_ticks());
}
