#include "mechlogic/circuits.hpp"

#include <array>
#include <map>

#include <json.hpp>

namespace mechlogic::circuits {

using logic::GoldenSim;
using logic::NetlistError;
using logic::Value;

Netlist build_nor_cascade(int depth) {
    if (depth < 1) throw NetlistError("cascade depth must be at least 1");
    Netlist nl;
    const NetId x1 = nl.add_input("x1");
    const NetId x2 = nl.add_input("x2");
    NetId s = nl.nor(x1, x2);
    nl.add_output(s, "s1");
    for (int i = 2; i <= depth; ++i) {
        s = nl.nor(s, nl.const0());
        nl.add_output(s, "s" + std::to_string(i));
    }
    nl.freeze();
    return nl;
}

namespace {

// Gate list of the 2-bit adder; an empty second operand means NOT.
struct AdderCell {
    const char *name;
    const char *a;
    const char *b;
};

constexpr std::array<AdderCell, 17> kAdder2{{
    {"na0", "a0", ""},     {"nb0", "b0", ""},     {"c0", "na0", "nb0"},  {"g1", "a0", "b0"},
    {"s0", "g1", "c0"},    {"na1", "a1", ""},     {"nb1", "b1", ""},     {"and1", "na1", "nb1"},
    {"h1", "a1", "b1"},    {"x1", "h1", "and1"},  {"x1n", "x1", ""},     {"k1", "x1n", "c0"},
    {"k2", "x1n", "k1"},   {"k3", "c0", "k1"},    {"s1", "k2", "k3"},    {"h1b", "a1", "b1"},
    {"c1", "h1b", "k1"},
}};
constexpr std::array<const char *, 3> kAdder2Outputs{"s0", "s1", "c1"};

}  // namespace

Netlist build_adder2() {
    Netlist nl;
    const Bus a = nl.add_input_bus("a", 2);
    const Bus b = nl.add_input_bus("b", 2);
    std::map<std::string, NetId> sig{{"a0", a[0]}, {"a1", a[1]}, {"b0", b[0]}, {"b1", b[1]}};
    for (const auto &c : kAdder2) {
        const NetId x = sig.at(c.a);
        const NetId y = *c.b ? sig.at(c.b) : nl.const0();
        sig[c.name] = nl.nor(x, y);
        nl.set_net_name(sig[c.name], c.name);
    }
    Bus s;
    for (const char *o : kAdder2Outputs) s.push_back(sig.at(o));
    nl.add_output_bus(s, "s");
    nl.freeze();
    return nl;
}

std::string adder2_structural_json() {
    using json = nlohmann::ordered_json;
    std::map<std::string, int> bit{{"a0", 2}, {"a1", 3}, {"b0", 4}, {"b1", 5}};
    int next = 6;
    for (const auto &c : kAdder2) bit[c.name] = next++;

    json ports = json::object();
    ports["a"] = {{"direction", "input"}, {"bits", {bit["a0"], bit["a1"]}}};
    ports["b"] = {{"direction", "input"}, {"bits", {bit["b0"], bit["b1"]}}};
    json out_bits = json::array();
    for (const char *o : kAdder2Outputs) out_bits.push_back(bit[o]);
    ports["s"] = {{"direction", "output"}, {"bits", out_bits}};

    json cells = json::object();
    for (const auto &c : kAdder2) {
        json cell;
        if (*c.b) {
            cell["type"] = "NOR";
            cell["port_directions"] = {{"A", "input"}, {"B", "input"}, {"Y", "output"}};
            cell["connections"] = {{"A", {bit[c.a]}}, {"B", {bit[c.b]}}, {"Y", {bit[c.name]}}};
        } else {
            cell["type"] = "NOT";
            cell["port_directions"] = {{"A", "input"}, {"Y", "output"}};
            cell["connections"] = {{"A", {bit[c.a]}}, {"Y", {bit[c.name]}}};
        }
        cells[c.name] = cell;
    }
    json doc;
    doc["modules"]["adder2"] = {{"ports", ports}, {"cells", cells}};
    return doc.dump(2) + "\n";
}

Netlist build_sqrt_fsm(int width) {
    if (width < 1 || width > 16) throw NetlistError("sqrt width must be in [1, 16]");
    const auto w = static_cast<std::size_t>(width);
    Netlist nl;
    const Bus n = nl.add_input_bus("n", 2 * w);
    const NetId reset = nl.add_input("reset");
    const NetId clk = nl.add_input("clk");
    const NetId clk_n = logic::not_(nl, clk);

    // registers first; their d inputs are bound once the logic exists
    std::vector<std::uint32_t> g_loop(w), h_loop(w);
    Bus g_q(w), h_q(w), g(w), h(w);
    auto open_latch = [&](std::uint32_t &loop, NetId &q, NetId &out) {
        loop = nl.nor_deferred();
        q = nl.gates()[loop].out;
        out = logic::delay_chain(nl, q, logic::kLatchDelayPairs);
    };
    for (std::size_t i = 0; i < w; ++i) {
        open_latch(g_loop[i], g_q[i], g[i]);
        open_latch(h_loop[i], h_q[i], h[i]);
    }
    auto close_latch = [&](std::uint32_t loop, NetId q, NetId d) {
        const NetId hold = nl.nor(q, clk);
        const NetId load = nl.nor(d, clk_n);
        nl.bind_inputs(loop, hold, load);
    };

    Bus t(w);
    for (std::size_t i = 0; i < w; ++i) t[i] = logic::or_(nl, g[i], h[i]);
    const Bus sq = logic::multiply(nl, t, t);
    const NetId too_big = logic::greater_than(nl, sq, n);
    const NetId accept = logic::not_(nl, too_big);

    for (std::size_t i = 0; i < w; ++i) {
        const NetId next = logic::mux(nl, g[i], t[i], accept, too_big);
        close_latch(g_loop[i], g_q[i], nl.nor(logic::not_(nl, next), reset));
    }
    close_latch(h_loop[w - 1], h_q[w - 1], reset);
    for (std::size_t i = 0; i + 1 < w; ++i) {
        close_latch(h_loop[i], h_q[i], nl.nor(logic::not_(nl, h[i + 1]), reset));
    }

    nl.add_output_bus(g, "root");
    nl.name_bus("guess", g);
    nl.name_bus("step", h);
    nl.freeze();
    return nl;
}

// ---------------------------------------------------------------------------

ClockedGolden::ClockedGolden(const Netlist &nl, NetId clk, ClockTicks ticks)
    : sim_(nl), clk_(clk), ticks_(ticks) {
    if (ticks.pulse == 0 || ticks.sample < ticks.pulse || ticks.cycle < ticks.sample) {
        throw NetlistError("clock ticks must satisfy 0 < pulse <= sample <= cycle");
    }
    sim_.set(clk_, Value::Zero);
}

void ClockedGolden::pulse_and_wait() {
    in_cycle_ = 0;
    sim_.set(clk_, Value::One);
    for (; in_cycle_ < ticks_.pulse; ++in_cycle_) sim_.tick();
    sim_.set(clk_, Value::Zero);
    for (; in_cycle_ < ticks_.sample; ++in_cycle_) sim_.tick();
}

void ClockedGolden::finish_cycle() {
    while (sim_.tick()) {
        if (++in_cycle_ > ticks_.cycle) {
            throw logic::OscillationError("logic still switching after " +
                                          std::to_string(ticks_.cycle) + " ticks of a cycle");
        }
    }
    worst_ = std::max(worst_, in_cycle_);
}

void ClockedGolden::cycle() {
    pulse_and_wait();
    finish_cycle();
}

std::vector<std::optional<std::uint64_t>> sqrt_golden_run(const Netlist &nl, std::uint64_t n,
                                                          int cycles) {
    ClockTicks ticks{5, 20, 1000};
    ClockedGolden clock(nl, nl.input("clk"), ticks);
    auto &sim = clock.sim();
    sim.set_bus(nl.bus("n"), n);
    sim.set(nl.input("reset"), Value::One);
    clock.finish_cycle();
    clock.cycle();
    sim.set(nl.input("reset"), Value::Zero);
    clock.finish_cycle();
    std::vector<std::optional<std::uint64_t>> roots;
    for (int i = 0; i < cycles; ++i) {
        clock.cycle();
        roots.push_back(sim.get_bus(nl.bus("root")));
    }
    return roots;
}

// ---------------------------------------------------------------------------

LaneSim::LaneSim(const Netlist &nl) : nl_(nl), v_(nl.nets().size(), 0), old_(v_) {
    nl.validate();
}

void LaneSim::set_bus_lanes(const Bus &bus, const std::vector<std::uint64_t> &values) {
    if (values.size() > 64) throw NetlistError("at most 64 lanes");
    for (std::size_t i = 0; i < bus.size(); ++i) {
        std::uint64_t lanes = 0;
        for (std::size_t l = 0; l < values.size(); ++l) {
            lanes |= ((values[l] >> i) & 1U) << l;
        }
        v_[bus[i]] = lanes;
    }
}

std::uint64_t LaneSim::bus_value(const Bus &bus, int lane) const {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < bus.size(); ++i) v |= ((v_[bus[i]] >> lane) & 1U) << i;
    return v;
}

bool LaneSim::tick() {
    old_ = v_;
    bool changed = false;
    for (const auto &g : nl_.gates()) {
        const std::uint64_t x = ~(old_[g.a] | old_[g.b]);
        changed |= x != v_[g.out];
        v_[g.out] = x;
    }
    return changed;
}

void LaneSim::run(std::size_t ticks) {
    for (std::size_t i = 0; i < ticks; ++i) tick();
}

// ---------------------------------------------------------------------------

isa::CycleState read_registers(const GoldenSim &sim, const RegisterFileSpec &r) {
    auto byte = [&](const Bus &b) -> std::uint8_t {
        auto v = sim.get_bus(b);
        if (!v) throw NetlistError("register holds X");
        return static_cast<std::uint8_t>(*v);
    };
    auto bit = [&](NetId n) {
        const Value v = sim.get(n);
        if (v == Value::X) throw NetlistError("register bit holds X");
        return v == Value::One;
    };
    isa::CycleState s;
    s.arch.pc = byte(r.ra);
    s.arch.write_addr = byte(r.wa);
    s.arch.write_data = byte(r.wd);
    s.arch.a = byte(r.a);
    s.arch.b = byte(r.b);
    s.arch.c = byte(r.c);
    s.arch.d = byte(r.d);
    s.arch.overflow = bit(r.overflow);
    s.arch.write_valid = bit(r.write_valid);
    s.load_pending = bit(r.load_pending);
    s.load_to_b = bit(r.load_to_b);
    return s;
}

GoldenCpu::GoldenCpu(const Processor &cpu, isa::MemoryImage image, isa::MmrDevice *device,
                     ClockTicks ticks)
    : cpu_(cpu), memory_(image, device), clock_(cpu.netlist, cpu.ports.clk, ticks) {
    auto &sim = clock_.sim();
    sim.set_bus(cpu.ports.read_data, std::uint64_t{0});
    sim.set(cpu.ports.reset, Value::One);
    clock_.finish_cycle();  // reset must be steady before the edge
    clock_.pulse_and_wait();
    sim.set(cpu.ports.reset, Value::Zero);
}

GoldenCpuCycle GoldenCpu::step() {
    auto &sim = clock_.sim();
    const auto &p = cpu_.ports;
    auto port_snapshot = [&] {
        return std::array<std::optional<std::uint64_t>, 4>{
            sim.get_bus(p.read_addr), sim.get_bus(p.write_addr), sim.get_bus(p.write_data),
            sim.get_bus(Bus{p.write_valid})};
    };
    const auto sampled = port_snapshot();
    for (const auto &v : sampled) {
        if (!v) throw NetlistError("processor port holds X at the sample instant");
    }
    GoldenCpuCycle out;
    if (*sampled[3]) {
        out.write = isa::WriteEvent{static_cast<std::uint8_t>(*sampled[1]),
                                    static_cast<std::uint8_t>(*sampled[2])};
        memory_.write(out.write->address, out.write->data);
    }
    out.read_addr = static_cast<std::uint8_t>(*sampled[0]);
    sim.set_bus(p.read_data, std::uint64_t{memory_.read(out.read_addr)});
    clock_.finish_cycle();
    if (port_snapshot() != sampled) {
        throw NetlistError("processor outputs moved after the sample instant");
    }
    clock_.pulse_and_wait();
    out.state = read_registers(sim, cpu_.regs);
    ++cycles_;
    return out;
}

}  // namespace mechlogic::circuits
