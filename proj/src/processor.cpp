#include <unordered_map>

#include "mechlogic/circuits.hpp"

namespace mechlogic::circuits {

namespace {

using logic::delay_chain;
using logic::kLatchDelayPairs;
using logic::not_;
using isa::Opcode;

constexpr std::size_t kW = 8;

// NOT with memo in both directions, so NOT(NOT x) is x again.
class Inverter {
  public:
    explicit Inverter(Netlist &nl) : nl_(nl) {}
    NetId operator()(NetId x) {
        if (auto it = memo_.find(x); it != memo_.end()) return it->second;
        const NetId y = not_(nl_, x);
        memo_[x] = y;
        memo_.emplace(y, x);
        return y;
    }
    Bus operator()(const Bus &b) {
        Bus r;
        for (NetId x : b) r.push_back((*this)(x));
        return r;
    }

  private:
    Netlist &nl_;
    std::unordered_map<NetId, NetId> memo_;
};

// Latch whose d input is bound later.
struct OpenLatch {
    std::uint32_t loop;
    NetId q;
    NetId out;
};

OpenLatch open_latch(Netlist &nl) {
    OpenLatch l;
    l.loop = nl.nor_deferred();
    l.q = nl.gates()[l.loop].out;
    l.out = delay_chain(nl, l.q, kLatchDelayPairs);
    return l;
}

void close_latch(Netlist &nl, const OpenLatch &l, NetId d, NetId en, NetId en_n) {
    nl.bind_inputs(l.loop, nl.nor(l.q, en), nl.nor(d, en_n));
}

struct OpenRegister {
    std::vector<OpenLatch> bits;
    Bus out() const {
        Bus b;
        for (const auto &l : bits) b.push_back(l.out);
        return b;
    }
};

OpenRegister open_register(Netlist &nl, std::size_t width) {
    OpenRegister r;
    for (std::size_t i = 0; i < width; ++i) r.bits.push_back(open_latch(nl));
    return r;
}

// A source for a register: NOT(select) and the candidate value per bit.
struct Candidate {
    NetId select_n;
    Bus value;
};

class Builder {
  public:
    Builder(Netlist &nl, NetId reset) : nl_(nl), inv_(nl), reset_(reset) {}

    Inverter &inv() { return inv_; }

    // d = (OR over k of select_k AND value_k) AND NOT reset
    NetId next_bit(const std::vector<Candidate> &cands, std::size_t bit) {
        std::vector<NetId> terms;
        for (const auto &c : cands) {
            const NetId v = c.value[bit];
            if (nl_.const0_net() && v == *nl_.const0_net()) continue;
            terms.push_back(nl_.nor(c.select_n, inv_(v)));
        }
        if (terms.empty()) return *nl_.const0_net();
        const NetId f_n = logic::nor_many(nl_, terms);
        return nl_.nor(f_n, reset_);
    }

    void close(const OpenRegister &r, const std::vector<Candidate> &cands, NetId en, NetId en_n) {
        for (std::size_t i = 0; i < r.bits.size(); ++i) {
            close_latch(nl_, r.bits[i], next_bit(cands, i), en, en_n);
        }
    }

    // en = clk AND (any select OR reset)
    std::pair<NetId, NetId> enable(NetId clk_n, const std::vector<NetId> &selects) {
        std::vector<NetId> any = selects;
        any.push_back(reset_);
        const NetId en = nl_.nor(clk_n, logic::nor_many(nl_, any));
        return {en, not_(nl_, en)};
    }

  private:
    Netlist &nl_;
    Inverter inv_;
    NetId reset_;
};

Bus increment(Netlist &nl, const Bus &a) {
    Bus r;
    r.push_back(not_(nl, a[0]));
    NetId carry = a[0];
    for (std::size_t i = 1; i < a.size(); ++i) {
        const auto ha = logic::half_adder(nl, a[i], carry);
        r.push_back(ha.sum);
        carry = ha.carry;
    }
    return r;
}

}  // namespace

Processor build_processor() {
    Processor p;
    Netlist &nl = p.netlist;
    auto &ports = p.ports;
    auto &regs = p.regs;

    ports.read_data = nl.add_input_bus("data", kW);
    ports.reset = nl.add_input("reset");
    ports.clk = nl.add_input("clk");
    nl.const0();
    Builder bld(nl, ports.reset);
    auto &inv = bld.inv();
    const NetId clk_n = not_(nl, ports.clk);

    OpenRegister ra = open_register(nl, kW), wa = open_register(nl, kW),
                 wd = open_register(nl, kW), a = open_register(nl, kW),
                 b = open_register(nl, kW), c = open_register(nl, kW),
                 d = open_register(nl, kW);
    const OpenLatch ovf = open_latch(nl), ph = open_latch(nl), lk = open_latch(nl),
                    wv = open_latch(nl);
    const Bus RA = ra.out(), WA = wa.out(), WD = wd.out(), A = a.out(), B = b.out(),
              C = c.out(), D = d.out();
    const Bus &data = ports.read_data;

    // decode: e[op] = (low nibble == op) AND NOT PH
    std::vector<NetId> e(isa::kOpcodeCount);
    {
        Netlist::Scope s(nl, "decode");
        Bus op_n;
        for (std::size_t i = 0; i < 4; ++i) op_n.push_back(inv(data[i]));
        auto lit_n = [&](std::size_t bit, bool one) { return one ? op_n[bit] : data[bit]; };
        std::array<NetId, 4> lo_n{}, hi_q_n{};
        for (int j = 0; j < 4; ++j) {
            const NetId lo = nl.nor(lit_n(0, j & 1), lit_n(1, j & 2));
            lo_n[j] = not_(nl, lo);
            const NetId hi = nl.nor(lit_n(2, j & 1), lit_n(3, j & 2));
            hi_q_n[j] = not_(nl, nl.nor(not_(nl, hi), ph.out));
        }
        for (std::size_t op = 0; op < isa::kOpcodeCount; ++op) {
            e[op] = nl.nor(lo_n[op & 3], hi_q_n[op >> 2]);
        }
    }
    auto E = [&](Opcode op) { return e[isa::encode(op)]; };

    const NetId ph_n = inv(ph.out);
    const NetId ld = nl.nor(ph_n, lk.out);        // second cycle of LDNX
    const NetId lb = nl.nor(ph_n, inv(lk.out));   // second cycle of LOAD

    // datapath
    Bus sum;
    NetId carry;
    {
        Netlist::Scope s(nl, "adder");
        auto r = logic::ripple_adder(nl, A, B);
        sum = r.sum;
        carry = r.carry;
    }
    NetId gt, ne;
    {
        Netlist::Scope s(nl, "compare");
        gt = logic::greater_than(nl, A, B);
        ne = logic::not_equal(nl, A, B);
    }
    Bus nor_ab(kW);
    for (std::size_t i = 0; i < kW; ++i) nor_ab[i] = nl.nor(A[i], B[i]);
    Bus ra_inc, ra_inc2;
    {
        Netlist::Scope s(nl, "increment");
        ra_inc = increment(nl, RA);
        const Bus upper(RA.begin() + 1, RA.end());
        const Bus up_inc = increment(nl, upper);
        ra_inc2.push_back(RA[0]);
        ra_inc2.insert(ra_inc2.end(), up_inc.begin(), up_inc.end());
    }
    const Bus d_srl = logic::shift_right_logical(nl, D);
    const Bus d_sra = logic::shift_right_arith(D);
    const Bus C_n = inv(C);

    auto sel_n = [&](NetId s) { return inv(s); };
    const NetId c0 = *nl.const0_net();

    {
        Netlist::Scope s(nl, "register_a");
        const std::vector<NetId> sels{E(Opcode::SwapAC), E(Opcode::SwapAB), ld};
        auto [en, en_n] = bld.enable(clk_n, sels);
        bld.close(a, {{sel_n(sels[0]), C}, {sel_n(sels[1]), B}, {sel_n(sels[2]), data}}, en, en_n);
    }
    {
        Netlist::Scope s(nl, "register_b");
        const std::vector<NetId> sels{E(Opcode::SwapBD), E(Opcode::SwapAB), lb};
        auto [en, en_n] = bld.enable(clk_n, sels);
        bld.close(b, {{sel_n(sels[0]), D}, {sel_n(sels[1]), A}, {sel_n(sels[2]), data}}, en, en_n);
    }
    {
        Netlist::Scope s(nl, "register_c");
        const std::vector<NetId> sels{E(Opcode::SwapAC), E(Opcode::CopyAC), E(Opcode::NotC),
                                      E(Opcode::ANorBToC)};
        auto [en, en_n] = bld.enable(clk_n, sels);
        const NetId take_a_n = nl.nor(sels[0], sels[1]);
        bld.close(c, {{take_a_n, A}, {sel_n(sels[2]), C_n}, {sel_n(sels[3]), nor_ab}}, en, en_n);
    }
    {
        Netlist::Scope s(nl, "register_d");
        const std::vector<NetId> sels{E(Opcode::SwapBD), E(Opcode::APlusBToD),
                                      E(Opcode::ShiftRightLogicalD), E(Opcode::ShiftRightArithD)};
        auto [en, en_n] = bld.enable(clk_n, sels);
        // both shifts agree below the top bit
        const NetId shift_n = nl.nor(sels[2], sels[3]);
        Bus shifted = d_srl;
        shifted[kW - 1] = c0;
        Bus top(kW, c0);
        top[kW - 1] = d_sra[kW - 1];
        bld.close(d,
                  {{sel_n(sels[0]), B},
                   {sel_n(sels[1]), sum},
                   {shift_n, shifted},
                   {sel_n(sels[3]), top}},
                  en, en_n);
    }
    {
        Netlist::Scope s(nl, "register_ovf");
        const NetId add = E(Opcode::APlusBToD);
        auto [en, en_n] = bld.enable(clk_n, {add});
        close_latch(nl, ovf, bld.next_bit({{sel_n(add), {carry}}}, 0), en, en_n);
    }
    {
        Netlist::Scope s(nl, "register_wa");
        const std::vector<NetId> sels{E(Opcode::SaveAB), E(Opcode::LoadAB)};
        auto [en, en_n] = bld.enable(clk_n, sels);
        bld.close(wa, {{sel_n(sels[0]), B}, {sel_n(sels[1]), ra_inc}}, en, en_n);
    }
    {
        Netlist::Scope s(nl, "register_wd");
        const NetId save = E(Opcode::SaveAB);
        auto [en, en_n] = bld.enable(clk_n, {save});
        bld.close(wd, {{sel_n(save), A}}, en, en_n);
    }
    {
        Netlist::Scope s(nl, "register_ra");
        const NetId t_gt = nl.nor(sel_n(E(Opcode::SkipIfAGreaterB)), inv(gt));
        const NetId t_ne = nl.nor(sel_n(E(Opcode::SkipIfADifferentB)), inv(ne));
        const NetId t_ov = nl.nor(sel_n(E(Opcode::SkipIfOverflow)), inv(ovf.out));
        const NetId skip_n = logic::nor_many(nl, {t_gt, t_ne, t_ov});
        const NetId skip = inv(skip_n);
        const NetId jmp = E(Opcode::JumpC), load = E(Opcode::LoadAB);
        const NetId other = logic::nor_many(nl, {lb, jmp, load, skip});
        bld.close(ra,
                  {{sel_n(lb), WA},
                   {sel_n(jmp), C},
                   {sel_n(load), A},
                   {skip_n, ra_inc2},
                   {inv(other), ra_inc}},
                  ports.clk, clk_n);
    }
    {
        Netlist::Scope s(nl, "control");
        const NetId load = E(Opcode::LoadAB), ldnx = E(Opcode::LdnxAB), save = E(Opcode::SaveAB);
        close_latch(nl, ph, nl.nor(nl.nor(load, ldnx), ports.reset), ports.clk, clk_n);
        close_latch(nl, lk, nl.nor(inv(load), ports.reset), ports.clk, clk_n);
        close_latch(nl, wv, nl.nor(inv(save), ports.reset), ports.clk, clk_n);
    }

    ports.read_addr = RA;
    ports.write_addr = WA;
    ports.write_data = WD;
    ports.write_valid = wv.out;
    nl.add_output_bus(RA, "read_addr");
    nl.add_output_bus(WA, "write_addr");
    nl.add_output_bus(WD, "write_data");
    nl.add_output(wv.out, "write_valid");

    regs = {RA, WA, WD, A, B, C, D, ovf.out, ph.out, lk.out, wv.out};
    const std::pair<const char *, const Bus *> named[] = {{"RA", &RA}, {"WA", &WA}, {"WD", &WD},
                                                          {"A", &A},   {"B", &B},   {"C", &C},
                                                          {"D", &D}};
    for (const auto &[n, bus] : named) nl.name_bus(n, *bus);
    nl.name_bus("OVF", {ovf.out});
    nl.name_bus("PH", {ph.out});
    nl.name_bus("LK", {lk.out});
    nl.name_bus("V", {wv.out});
    nl.freeze();
    return p;
}

}  // namespace mechlogic::circuits
