#include <doctest.h>

#include <sstream>

#include "mechlogic/circuits.hpp"
#include "mechlogic/lowering.hpp"

using namespace mechlogic;

namespace {

constexpr double kOmega = 16.768;

logic::Netlist single_nor() {
    logic::Netlist nl;
    const auto a = nl.add_input("a");
    const auto b = nl.add_input("b");
    nl.add_output(nl.nor(a, b), "y");
    return nl;
}

}  // namespace

TEST_CASE("element counts: single NOR and the 2-bit adder") {
    const auto tmpl = gate::NorTemplate<double>::reconstructed();
    const auto one = lower::compile(single_nor(), tmpl, {}, kOmega);
    CHECK(one.stats.oscillators == 6);
    CHECK(one.stats.springs == 0);
    CHECK(one.stats.cubics == 5);
    CHECK(one.stats.dashpots == 0);
    CHECK(one.stats.drives == 1 + 4);

    const auto adder = circuits::build_adder2();
    const auto c = lower::compile(adder, tmpl, {}, kOmega);
    CHECK(c.stats.gates == 17);
    CHECK(c.stats.oscillators == 102);
    CHECK(c.stats.cubics == 85);
    CHECK(c.stats.springs == c.stats.dashpots);
    CHECK(c.stats.springs + (c.stats.drives - 17) / 2 == 34);

    const auto pre = lower::count(adder);
    CHECK(pre.springs == c.stats.springs);
    CHECK(pre.drives + 17 == c.stats.drives);
}

TEST_CASE("coupling compensation keeps every diagonal at its template value") {
    const auto tmpl = gate::NorTemplate<double>::reconstructed();
    const auto nl = circuits::build_adder2();
    const auto c = lower::compile(nl, tmpl, {}, kOmega);
    const auto &sys = c.system;
    const auto n = static_cast<Eigen::Index>(sys.size());
    dyn::Vec<double> zero = dyn::Vec<double>::Zero(n);
    const auto base = sys.compute_accelerations(zero, zero, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto &o = sys.oscillators()[static_cast<std::size_t>(i)];
        dyn::Vec<double> u = zero;
        u[i] = 1.0;
        const double k_eff = -(sys.compute_accelerations(u, zero, 0.0)[i] - base[i]) * o.m;
        dyn::Vec<double> v = zero;
        v[i] = 1.0;
        const double c_eff = -(sys.compute_accelerations(zero, v, 0.0)[i] - base[i]) * o.m;
        double k_tmpl = tmpl.gate.k, c_tmpl = tmpl.gate.c();
        if (o.label.ends_with(".ins")) {
            k_tmpl = tmpl.insulator.k;
            c_tmpl = tmpl.insulator.c();
        } else if (o.label.ends_with(".ch")) {
            k_tmpl = tmpl.channel.k;
            c_tmpl = tmpl.channel.c();
        }
        INFO(o.label);
        CHECK(k_eff == doctest::Approx(k_tmpl).epsilon(1e-9));
        CHECK(c_eff == doctest::Approx(c_tmpl).epsilon(1e-9));
    }
}

TEST_CASE("nets without a driver and unwatched nets are rejected") {
    const auto tmpl = gate::NorTemplate<double>::reconstructed();
    const auto nl = single_nor();
    const auto c = lower::compile(nl, tmpl, {}, kOmega);
    CHECK_THROWS_AS(lower::CircuitOde(c, {nl.input("a")}), lower::CompileError);
    lower::CircuitOde ode(c, {nl.output("y")});
    CHECK_THROWS_AS(ode.amplitude(nl.input("a")), lower::CompileError);
    CHECK_THROWS_AS(lower::CircuitOde(c, {}, {0.03, 50}), lower::CompileError);
}

TEST_CASE("snapshot and resume are bit-identical") {
    const auto tmpl = gate::NorTemplate<double>::reconstructed();
    const auto nl = single_nor();
    const auto c = lower::compile(nl, tmpl, {}, kOmega);
    const auto y = nl.output("y");

    lower::CircuitOde a(c, {y}, {0.025, 5});
    a.set_input(nl.input("a"), true);
    a.run_periods(40);
    std::stringstream blob;
    a.save(blob);
    a.set_input(nl.input("b"), true);
    a.run_periods(33);

    lower::CircuitOde b(c, {y}, {0.025, 5});
    b.load(blob);
    b.set_input(nl.input("b"), true);
    b.run_periods(33);
    CHECK(a.state().u == b.state().u);
    CHECK(a.state().v == b.state().v);
    CHECK(a.amplitude(y) == b.amplitude(y));
    CHECK(a.steps() == b.steps());

    lower::CircuitOde other(c, {y}, {0.025, 7});
    std::stringstream again;
    a.save(again);
    CHECK_THROWS_AS(other.load(again), lower::CompileError);
}
