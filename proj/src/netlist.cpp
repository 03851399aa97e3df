#include "mechlogic/netlist.hpp"

#include <algorithm>
#include <functional>

namespace mechlogic::logic {

char to_char(Value v) {
    switch (v) {
    case Value::Zero: return '0';
    case Value::One: return '1';
    default: return 'X';
    }
}

// ---------------------------------------------------------------------------
// Netlist

NetId Netlist::new_net(DriverKind kind, std::uint32_t driver, std::string name) {
    nets_.push_back({kind, driver, std::move(name)});
    return static_cast<NetId>(nets_.size() - 1);
}

void Netlist::check_mutable() const {
    if (frozen_) throw NetlistError("netlist is frozen");
}

void Netlist::check_net(NetId n) const {
    if (n >= nets_.size()) throw NetlistError("unknown net " + std::to_string(n));
}

NetId Netlist::const0() {
    if (!const0_) {
        check_mutable();
        const0_ = new_net(DriverKind::Const0, 0, "const0");
    }
    return *const0_;
}

NetId Netlist::const1() {
    if (!const1_) {
        const1_ = nor(const0(), const0());
        nets_[*const1_].name = "const1";
    }
    return *const1_;
}

NetId Netlist::add_input(const std::string &name) {
    check_mutable();
    const NetId n = new_net(DriverKind::Input, static_cast<std::uint32_t>(inputs_.size()), name);
    inputs_.push_back(n);
    return n;
}

Bus Netlist::add_input_bus(const std::string &name, std::size_t width) {
    Bus bus;
    for (std::size_t i = 0; i < width; ++i) {
        bus.push_back(add_input(name + "[" + std::to_string(i) + "]"));
    }
    buses_[name] = bus;
    return bus;
}

NetId Netlist::nor(NetId a, NetId b) {
    check_mutable();
    check_net(a);
    check_net(b);
    const auto g = static_cast<std::uint32_t>(gates_.size());
    const NetId out = new_net(DriverKind::Gate, g);
    gates_.push_back({a, b, out});
    return out;
}

std::uint32_t Netlist::nor_deferred() {
    check_mutable();
    const auto g = static_cast<std::uint32_t>(gates_.size());
    const NetId out = new_net(DriverKind::Gate, g);
    gates_.push_back({kNoNet, kNoNet, out});
    return g;
}

void Netlist::bind_inputs(std::uint32_t gate, NetId a, NetId b) {
    check_mutable();
    check_net(a);
    check_net(b);
    Gate &g = gates_.at(gate);
    if (g.a != kNoNet || g.b != kNoNet) throw NetlistError("gate inputs already bound");
    g.a = a;
    g.b = b;
}

void Netlist::add_output(NetId net, const std::string &name) {
    check_net(net);
    outputs_.emplace_back(name, net);
}

void Netlist::add_output_bus(const Bus &bus, const std::string &name) {
    for (std::size_t i = 0; i < bus.size(); ++i) {
        add_output(bus[i], name + "[" + std::to_string(i) + "]");
    }
    buses_[name] = bus;
}

const Bus &Netlist::bus(const std::string &name) const {
    auto it = buses_.find(name);
    if (it == buses_.end()) throw NetlistError("no bus named '" + name + "'");
    return it->second;
}

NetId Netlist::input(const std::string &name) const {
    for (NetId n : inputs_) {
        if (nets_[n].name == name) return n;
    }
    throw NetlistError("no input named '" + name + "'");
}

NetId Netlist::output(const std::string &name) const {
    for (const auto &[n, net] : outputs_) {
        if (n == name) return net;
    }
    throw NetlistError("no output named '" + name + "'");
}

void Netlist::validate() const {
    for (std::size_t g = 0; g < gates_.size(); ++g) {
        const Gate &gate = gates_[g];
        if (gate.a == kNoNet || gate.b == kNoNet) {
            throw NetlistError("gate " + std::to_string(g) + " has an unbound input");
        }
        for (NetId n : {gate.a, gate.b}) {
            check_net(n);
            if (nets_[n].kind == DriverKind::None) {
                throw NetlistError("net " + std::to_string(n) + " has no driver");
            }
        }
    }
    for (const auto &[name, n] : outputs_) {
        if (nets_.at(n).kind == DriverKind::None) throw NetlistError("output " + name + " undriven");
    }
}

std::vector<std::vector<Sink>> Netlist::fanout() const {
    std::vector<std::vector<Sink>> out(nets_.size());
    for (std::uint32_t g = 0; g < gates_.size(); ++g) {
        out[gates_[g].a].push_back({g, 0});
        out[gates_[g].b].push_back({g, 1});
    }
    return out;
}

std::vector<std::vector<std::uint32_t>> Netlist::combinational_loops() const {
    // Tarjan over the gate graph, iterative to survive long chains.
    const auto n = static_cast<std::uint32_t>(gates_.size());
    const auto fo = fanout();
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::uint32_t> stack;
    std::vector<std::vector<std::uint32_t>> loops;
    int counter = 0;

    auto successors = [&](std::uint32_t g) {
        std::vector<std::uint32_t> s;
        for (const Sink &k : fo[gates_[g].out]) s.push_back(k.gate);
        return s;
    };

    for (std::uint32_t root = 0; root < n; ++root) {
        if (index[root] >= 0) continue;
        std::vector<std::pair<std::uint32_t, std::size_t>> work{{root, 0}};
        std::vector<std::vector<std::uint32_t>> succ_cache{successors(root)};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!work.empty()) {
            auto &[v, i] = work.back();
            auto &succ = succ_cache.back();
            if (i < succ.size()) {
                const std::uint32_t w = succ[i++];
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    work.emplace_back(w, 0);
                    succ_cache.push_back(successors(w));
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            const std::uint32_t done = v;
            if (low[done] == index[done]) {
                std::vector<std::uint32_t> comp;
                std::uint32_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp.push_back(w);
                } while (w != done);
                const Gate &g = gates_[done];
                const bool self = g.a == g.out || g.b == g.out;
                if (comp.size() > 1 || self) {
                    std::sort(comp.begin(), comp.end());
                    loops.push_back(std::move(comp));
                }
            }
            work.pop_back();
            succ_cache.pop_back();
            if (!work.empty()) {
                const std::uint32_t parent = work.back().first;
                low[parent] = std::min(low[parent], low[done]);
            }
        }
    }
    return loops;
}

std::vector<int> Netlist::depth() const {
    std::vector<int> d(nets_.size(), -1);
    std::vector<std::uint8_t> state(gates_.size(), 0);  // 0 new, 1 active, 2 done
    for (std::size_t n = 0; n < nets_.size(); ++n) {
        if (nets_[n].kind != DriverKind::Gate) d[n] = 0;
    }
    for (std::uint32_t root = 0; root < gates_.size(); ++root) {
        if (state[root]) continue;
        std::vector<std::uint32_t> work{root};
        while (!work.empty()) {
            const std::uint32_t g = work.back();
            const Gate &gate = gates_[g];
            if (state[g] == 0) {
                state[g] = 1;
                for (NetId in : {gate.a, gate.b}) {
                    if (nets_[in].kind == DriverKind::Gate && state[nets_[in].driver] == 0) {
                        work.push_back(nets_[in].driver);
                    }
                }
                continue;
            }
            work.pop_back();
            if (state[g] == 2) continue;
            int m = 0;
            for (NetId in : {gate.a, gate.b}) {
                // an input still active closes a loop; count it as a source
                if (d[in] >= 0) m = std::max(m, d[in]);
            }
            d[gate.out] = m + 1;
            state[g] = 2;
        }
    }
    return d;
}

Netlist::Scope::Scope(Netlist &nl, std::string name)
    : nl_(nl), name_(std::move(name)), start_(nl.gate_count()) {
    ++nl_.scope_depth_;
}

Netlist::Scope::~Scope() {
    if (--nl_.scope_depth_ == 0) {
        nl_.combinator_gates[name_] += nl_.gate_count() - start_;
    }
}

// ---------------------------------------------------------------------------
// Combinators

namespace {

void require_same_width(const Bus &a, const Bus &b, const char *what) {
    if (a.size() != b.size()) {
        throw NetlistError(std::string(what) + ": width mismatch " + std::to_string(a.size()) +
                           " vs " + std::to_string(b.size()));
    }
}

}  // namespace

NetId not_(Netlist &nl, NetId a) {
    Netlist::Scope s(nl, "not");
    return nl.nor(a, nl.const0());
}

NetId or_(Netlist &nl, NetId a, NetId b) {
    Netlist::Scope s(nl, "or");
    return not_(nl, nl.nor(a, b));
}

NetId and_(Netlist &nl, NetId a, NetId b) {
    Netlist::Scope s(nl, "and");
    return nl.nor(not_(nl, a), not_(nl, b));
}

NetId xnor_(Netlist &nl, NetId a, NetId b) {
    Netlist::Scope s(nl, "xnor");
    const NetId n1 = nl.nor(a, b);
    return nl.nor(nl.nor(a, n1), nl.nor(b, n1));
}

NetId xor_(Netlist &nl, NetId a, NetId b) {
    Netlist::Scope s(nl, "xor");
    return not_(nl, xnor_(nl, a, b));
}

NetId mux(Netlist &nl, NetId a, NetId b, NetId sel) {
    Netlist::Scope s(nl, "mux");
    return mux(nl, a, b, sel, not_(nl, sel));
}

NetId mux(Netlist &nl, NetId a, NetId b, NetId sel, NetId sel_n) {
    Netlist::Scope s(nl, "mux");
    // NOR(a, sel) = !a & !sel ; NOR(b, !sel) = !b & sel
    return nl.nor(nl.nor(a, sel), nl.nor(b, sel_n));
}

NetId nor_many(Netlist &nl, const std::vector<NetId> &terms) {
    if (terms.empty()) throw NetlistError("nor_many needs at least one term");
    if (terms.size() == 1) return not_(nl, terms[0]);
    if (terms.size() == 2) return nl.nor(terms[0], terms[1]);
    const auto mid = terms.begin() + static_cast<std::ptrdiff_t>(terms.size() / 2);
    return nl.nor(or_many(nl, {terms.begin(), mid}), or_many(nl, {mid, terms.end()}));
}

NetId or_many(Netlist &nl, const std::vector<NetId> &terms) {
    if (terms.size() == 1) return terms[0];
    return not_(nl, nor_many(nl, terms));
}

Bus not_bus(Netlist &nl, const Bus &a) {
    Bus out;
    for (NetId n : a) out.push_back(not_(nl, n));
    return out;
}

Bus mux_bus(Netlist &nl, const Bus &a, const Bus &b, NetId sel) {
    require_same_width(a, b, "mux_bus");
    Netlist::Scope s(nl, "mux_bus");
    const NetId sel_n = not_(nl, sel);
    Bus out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(mux(nl, a[i], b[i], sel, sel_n));
    return out;
}

HalfAdder half_adder(Netlist &nl, NetId a, NetId b) {
    Netlist::Scope s(nl, "half_adder");
    const NetId x = xnor_(nl, a, b);
    const NetId sum = not_(nl, x);
    // (a | b) & xnor(a, b) = a & b
    const NetId carry = nl.nor(nl.nor(a, b), sum);
    return {sum, carry};
}

namespace {

struct FullAdder {
    NetId sum;
    NetId carry;
};

// nine-gate NOR full adder; carry = NOR(NOR(a,b), (a^b) & !c)
FullAdder full_adder(Netlist &nl, NetId a, NetId b, NetId c) {
    const NetId n1 = nl.nor(a, b);
    const NetId x = nl.nor(nl.nor(a, n1), nl.nor(b, n1));  // xnor(a, b)
    const NetId m1 = nl.nor(x, c);                         // (a^b) & !c
    const NetId sum = nl.nor(nl.nor(x, m1), nl.nor(c, m1));
    const NetId carry = nl.nor(n1, m1);
    return {sum, carry};
}

}  // namespace

AdderResult ripple_adder(Netlist &nl, const Bus &a, const Bus &b) {
    require_same_width(a, b, "ripple_adder");
    if (a.empty()) throw NetlistError("ripple_adder: empty operands");
    Netlist::Scope s(nl, "ripple_adder");
    AdderResult r;
    const HalfAdder h = half_adder(nl, a[0], b[0]);
    r.sum.push_back(h.sum);
    NetId carry = h.carry;
    for (std::size_t i = 1; i < a.size(); ++i) {
        const FullAdder f = full_adder(nl, a[i], b[i], carry);
        r.sum.push_back(f.sum);
        carry = f.carry;
    }
    r.carry = carry;
    return r;
}

NetId greater_than(Netlist &nl, const Bus &a, const Bus &b) {
    require_same_width(a, b, "greater_than");
    Netlist::Scope s(nl, "greater_than");
    // carry out of a + !b: maj(a, !b, c) = NOR(NOR(a, !b), NOR(a & !b, c))
    NetId carry = kNoNet;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const NetId a_n = not_(nl, a[i]);
        const NetId b_n = not_(nl, b[i]);
        const NetId gen = nl.nor(a_n, b[i]);  // a & !b
        if (carry == kNoNet) {
            carry = gen;
            continue;
        }
        carry = nl.nor(nl.nor(a[i], b_n), nl.nor(gen, carry));
    }
    return carry;
}

NetId not_equal(Netlist &nl, const Bus &a, const Bus &b) {
    require_same_width(a, b, "not_equal");
    Netlist::Scope s(nl, "not_equal");
    std::vector<NetId> diff;
    for (std::size_t i = 0; i < a.size(); ++i) diff.push_back(xor_(nl, a[i], b[i]));
    return or_many(nl, diff);
}

Bus shift_right_logical(Netlist &nl, const Bus &a) {
    Bus out(a.begin() + (a.empty() ? 0 : 1), a.end());
    out.push_back(nl.const0());
    return out;
}

Bus shift_right_arith(const Bus &a) {
    if (a.empty()) return {};
    Bus out(a.begin() + 1, a.end());
    out.push_back(a.back());
    return out;
}

Bus multiply(Netlist &nl, const Bus &a, const Bus &b) {
    if (a.empty() || b.empty()) throw NetlistError("multiply: empty operand");
    Netlist::Scope s(nl, "multiply");
    const Bus a_n = not_bus(nl, a);
    const Bus b_n = a == b ? a_n : not_bus(nl, b);
    const std::size_t width = a.size() + b.size();
    // column-wise partial products, reduced with carry-save adders
    std::vector<std::vector<NetId>> columns(width);
    if (a == b) {
        // squaring: a_i a_j appears twice for i != j, a_i a_i = a_i
        for (std::size_t i = 0; i < a.size(); ++i) {
            columns[2 * i].push_back(a[i]);
            for (std::size_t j = i + 1; j < a.size(); ++j) {
                columns[i + j + 1].push_back(nl.nor(a_n[i], a_n[j]));
            }
        }
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (std::size_t j = 0; j < b.size(); ++j) {
                columns[i + j].push_back(nl.nor(a_n[i], b_n[j]));
            }
        }
    }
    Bus product;
    for (std::size_t c = 0; c < width; ++c) {
        auto &col = columns[c];
        while (col.size() > 2) {
            const FullAdder f = full_adder(nl, col[0], col[1], col[2]);
            col.erase(col.begin(), col.begin() + 3);
            col.push_back(f.sum);
            if (c + 1 < width) columns[c + 1].push_back(f.carry);
        }
        if (col.size() == 2) {
            const HalfAdder h = half_adder(nl, col[0], col[1]);
            col = {h.sum};
            if (c + 1 < width) columns[c + 1].push_back(h.carry);
        }
        product.push_back(col.empty() ? nl.const0() : col[0]);
    }
    return product;
}

// ---------------------------------------------------------------------------
// Latch

NetId delay_chain(Netlist &nl, NetId x, int pairs) {
    Netlist::Scope s(nl, "delay_chain");
    for (int i = 0; i < pairs; ++i) x = not_(nl, not_(nl, x));
    return x;
}

Latch build_latch(Netlist &nl, NetId d, NetId en, NetId en_n, int delay_pairs) {
    Netlist::Scope s(nl, "latch");
    if (en_n == kNoNet) en_n = not_(nl, en);
    const std::uint32_t loop = nl.nor_deferred();
    const NetId q = nl.gates()[loop].out;
    const NetId hold = nl.nor(q, en);    // !q & !en
    const NetId load = nl.nor(d, en_n);  // !d & en
    nl.bind_inputs(loop, hold, load);
    return {q, delay_chain(nl, q, delay_pairs)};
}

// ---------------------------------------------------------------------------
// Golden simulation

GoldenSim::GoldenSim(const Netlist &nl) : nl_(nl), values_(nl.nets().size(), Value::X) {
    nl.validate();
    if (auto c0 = nl.const0_net()) values_[*c0] = Value::Zero;
}

void GoldenSim::set(NetId input, Value v) {
    if (nl_.nets().at(input).kind != DriverKind::Input) {
        throw NetlistError("net " + std::to_string(input) + " is not a primary input");
    }
    values_[input] = v;
}

void GoldenSim::set_bus(const Bus &bus, std::uint64_t value) {
    for (std::size_t i = 0; i < bus.size(); ++i) set(bus[i], from_bool((value >> i) & 1U));
}

void GoldenSim::set_bus(const Bus &bus, Value v) {
    for (NetId n : bus) set(n, v);
}

std::optional<std::uint64_t> GoldenSim::get_bus(const Bus &bus) const {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < bus.size(); ++i) {
        const Value b = values_[bus[i]];
        if (b == Value::X) return std::nullopt;
        if (b == Value::One) v |= std::uint64_t{1} << i;
    }
    return v;
}

std::size_t GoldenSim::settle() {
    const auto &gates = nl_.gates();
    const std::size_t limit = std::max<std::size_t>(4, 4 * gates.size());
    for (std::size_t sweep = 1; sweep <= limit; ++sweep) {
        bool changed = false;
        for (const Gate &g : gates) {
            const Value v = nor(values_[g.a], values_[g.b]);
            if (v != values_[g.out]) {
                values_[g.out] = v;
                changed = true;
            }
        }
        if (!changed) return sweep;
    }
    throw OscillationError("no fixpoint after " + std::to_string(limit) + " sweeps");
}

bool GoldenSim::tick() {
    scratch_ = values_;
    bool changed = false;
    for (const Gate &g : nl_.gates()) {
        const Value v = nor(scratch_[g.a], scratch_[g.b]);
        if (v != values_[g.out]) {
            values_[g.out] = v;
            changed = true;
        }
    }
    ++ticks_;
    return changed;
}

std::size_t GoldenSim::run_until_stable(std::size_t max_ticks) {
    for (std::size_t t = 0; t < max_ticks; ++t) {
        if (!tick()) return t;
    }
    throw OscillationError("still switching after " + std::to_string(max_ticks) + " ticks");
}

std::vector<std::vector<Value>> golden_simulate(const Netlist &nl,
                                                const std::vector<std::vector<Value>> &schedule) {
    GoldenSim sim(nl);
    std::vector<std::vector<Value>> result;
    for (const auto &phase : schedule) {
        if (phase.size() != nl.inputs().size()) {
            throw NetlistError("phase assigns " + std::to_string(phase.size()) + " of " +
                               std::to_string(nl.inputs().size()) + " inputs");
        }
        for (std::size_t i = 0; i < phase.size(); ++i) sim.set(nl.inputs()[i], phase[i]);
        sim.settle();
        std::vector<Value> out;
        for (const auto &[name, net] : nl.outputs()) out.push_back(sim.get(net));
        result.push_back(std::move(out));
    }
    return result;
}

}  // namespace mechlogic::logic
