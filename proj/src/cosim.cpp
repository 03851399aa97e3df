#include "mechlogic/cosim.hpp"

#include <istream>
#include <ostream>
#include <string>

namespace mechlogic::cosim {

OdeClock::OdeClock(lower::CircuitOde &ode, NetId clk, config::ClockSchedule s)
    : ode_(ode), clk_(clk), s_(s) {}

void OdeClock::advance(double periods) {
    if (periods <= 0) return;
    ode_.run_periods(periods);
    in_cycle_ += periods;
}

void OdeClock::pulse_and_wait() {
    in_cycle_ = 0;
    ode_.set_input(clk_, true);
    advance(s_.pulse_periods);
    ode_.set_input(clk_, false);
    advance(s_.sample_periods - s_.pulse_periods);
}

void OdeClock::finish_cycle() { advance(s_.cycle_periods - in_cycle_); }

void OdeClock::cycle() {
    pulse_and_wait();
    finish_cycle();
}

std::uint64_t decode_bus(const lower::CircuitOde &ode, const Bus &bus, std::uint64_t cycle,
                         const std::string &what, double slack) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < bus.size(); ++i) {
        auto ref = ode.reference();
        for (auto *band : {&ref.zero_band, &ref.one_band}) {
            (*band)[0] *= 1 - slack;
            (*band)[1] *= 1 + slack;
        }
        const double amp = ode.amplitude(bus[i]);
        const auto l = gate::classify(amp, ref, gate::Quantity::Displacement);
        if (l == gate::LogicLevel::Ambiguous) {
            throw CosimFault(cycle, what + " bit " + std::to_string(i) + " ambiguous, amplitude " +
                                        std::to_string(amp / ref.u_ref) + " u_ref");
        }
        if (l == gate::LogicLevel::One) v |= std::uint64_t{1} << i;
    }
    return v;
}

std::vector<std::optional<std::uint64_t>> sqrt_ode_run(const logic::Netlist &nl,
                                                       const lower::CompiledCircuit &c, std::uint64_t n,
                                                       int cycles, const config::ClockSchedule &clock,
                                                       lower::OdeSettings settings) {
    const Bus root = nl.bus("root");
    lower::CircuitOde ode(c, root, settings);
    OdeClock clk(ode, nl.input("clk"), clock);
    ode.set_bus(nl.bus("n"), n);
    ode.set_input(nl.input("reset"), true);
    clk.finish_cycle();
    clk.cycle();
    ode.set_input(nl.input("reset"), false);
    clk.finish_cycle();
    std::vector<std::optional<std::uint64_t>> roots;
    for (int i = 0; i < cycles; ++i) {
        clk.pulse_and_wait();
        roots.push_back(ode.bus_value(root));
        clk.finish_cycle();
    }
    return roots;
}

// ---------------------------------------------------------------------------

std::uint8_t CosimDevice::read(std::uint64_t cycle, std::uint8_t address) {
    const std::uint8_t v = memory_.read(address);
    events_.push_back({cycle, CosimEvent::Kind::Read, address, v});
    return v;
}

void CosimDevice::write(std::uint64_t cycle, std::uint8_t address, std::uint8_t data) {
    memory_.write(address, data);
    events_.push_back({cycle, CosimEvent::Kind::Write, address, data});
}

namespace {

std::vector<NetId> watch_list(const circuits::Processor &cpu, bool regs) {
    const auto &p = cpu.ports;
    std::vector<NetId> w(p.read_addr.begin(), p.read_addr.end());
    w.insert(w.end(), p.write_addr.begin(), p.write_addr.end());
    w.insert(w.end(), p.write_data.begin(), p.write_data.end());
    w.push_back(p.write_valid);
    if (regs) {
        const auto &r = cpu.regs;
        for (const Bus *b : {&r.ra, &r.wa, &r.wd, &r.a, &r.b, &r.c, &r.d}) w.insert(w.end(), b->begin(), b->end());
        for (NetId n : {r.overflow, r.load_pending, r.load_to_b, r.write_valid}) w.push_back(n);
    }
    return w;
}

}  // namespace

ProcessorCosim::ProcessorCosim(const circuits::Processor &cpu, const lower::CompiledCircuit &c,
                               CosimDevice &dev, config::ClockSchedule clock, lower::OdeSettings settings,
                               bool watch_registers)
    : cpu_(cpu),
      dev_(dev),
      ode_(c, watch_list(cpu, watch_registers), settings),
      clock_(ode_, cpu.ports.clk, clock),
      watch_regs_(watch_registers) {
    const auto &pol = dev.policy();
    if (pol.window_periods != settings.window_periods) {
        throw config::ConfigError("sampling window differs from the demodulation window");
    }
    if (pol.read_offset < clock.sample_periods || pol.commit_windows_before_pulse < 1 ||
        pol.commit_offset(clock) <= pol.read_offset + pol.window_periods) {
        throw config::ConfigError(
            "need sample <= read instant, and the commit instant at least one window after it and before the "
            "pulse");
    }
    if (pol.band_slack < 0 || pol.band_slack > 0.2) throw config::ConfigError("band slack must lie in [0, 0.2]");
}

void ProcessorCosim::reset() {
    ode_.set_bus(cpu_.ports.read_data, 0);
    ode_.set_input(cpu_.ports.reset, true);
    clock_.finish_cycle();
    clock_.pulse_and_wait();
    ode_.set_input(cpu_.ports.reset, false);
    cycles_ = 0;
}

std::array<std::uint64_t, 4> ProcessorCosim::ports() const {
    const auto &p = cpu_.ports;
    const double sl = dev_.policy().band_slack;
    return {decode_bus(ode_, p.read_addr, cycles_, "read address", sl),
            decode_bus(ode_, p.write_addr, cycles_, "write address", sl),
            decode_bus(ode_, p.write_data, cycles_, "write data", sl),
            decode_bus(ode_, Bus{p.write_valid}, cycles_, "write valid", sl)};
}

isa::CycleState ProcessorCosim::read_registers() const {
    const auto &r = cpu_.regs;
    auto byte = [&](const Bus &b, const char *name) {
        return static_cast<std::uint8_t>(decode_bus(ode_, b, cycles_, name, dev_.policy().band_slack));
    };
    auto bit = [&](NetId n, const char *name) {
        return decode_bus(ode_, Bus{n}, cycles_, name, dev_.policy().band_slack) != 0;
    };
    isa::CycleState s;
    s.arch.pc = byte(r.ra, "pc");
    s.arch.write_addr = byte(r.wa, "wa");
    s.arch.write_data = byte(r.wd, "wd");
    s.arch.a = byte(r.a, "a");
    s.arch.b = byte(r.b, "b");
    s.arch.c = byte(r.c, "c");
    s.arch.d = byte(r.d, "d");
    s.arch.overflow = bit(r.overflow, "overflow");
    s.arch.write_valid = bit(r.write_valid, "write valid register");
    s.load_pending = bit(r.load_pending, "load pending");
    s.load_to_b = bit(r.load_to_b, "load to b");
    return s;
}

CosimCycle ProcessorCosim::step() {
    const auto &pol = dev_.policy();
    const auto &cs = clock_.schedule();
    // pulse_and_wait left us at the sample instant
    ode_.run_periods(pol.read_offset - cs.sample_periods);
    const auto at_read = ports();
    CosimCycle out;
    out.cycle = cycles_;
    out.read_addr = static_cast<std::uint8_t>(at_read[0]);
    std::uint8_t data;
    if (at_read[3] && at_read[1] == at_read[0] && !dev_.memory().is_mmr(out.read_addr)) {
        data = static_cast<std::uint8_t>(at_read[2]);  // the pending write wins
        dev_.log_read(cycles_, out.read_addr, data);
    } else {
        data = dev_.read(cycles_, out.read_addr);
    }
    ode_.set_bus(cpu_.ports.read_data, data);

    const double commit = pol.commit_offset(cs);
    ode_.run_periods(commit - pol.read_offset);
    const auto at_commit = ports();
    if (at_commit != at_read) throw CosimFault(cycles_, "processor outputs moved between read and commit");
    if (at_commit[3]) {
        out.write = isa::WriteEvent{static_cast<std::uint8_t>(at_commit[1]), static_cast<std::uint8_t>(at_commit[2])};
        dev_.write(cycles_, out.write->address, out.write->data);
    }
    ode_.run_periods(cs.cycle_periods - commit);
    dev_.snapshot();
    clock_.pulse_and_wait();
    if (watch_regs_) out.state = read_registers();
    ++cycles_;
    return out;
}

// Binary checkpoint between cycles: cycle count, memory, full ODE snapshot.
void ProcessorCosim::save_checkpoint(std::ostream &out) const {
    out << "mechlogic-checkpoint 1 " << cycles_ << '\n';
    isa::write_binary(out, dev_.memory().image());
    ode_.save(out);
}

void ProcessorCosim::load_checkpoint(std::istream &in) {
    std::string magic;
    int version = 0;
    std::uint64_t cycles = 0;
    in >> magic >> version >> cycles;
    if (magic != "mechlogic-checkpoint" || version != 1) throw config::ConfigError("not a checkpoint file");
    in.get();
    dev_.restore(isa::read_binary(in));
    ode_.load(in);
    cycles_ = cycles;
}

std::optional<std::uint64_t> halt_detect(const std::vector<CosimEvent> &log) {
    std::optional<std::uint8_t> prev;
    std::uint64_t prev_cycle = 0;
    bool wrote = false;
    for (const auto &e : log) {
        if (e.kind == CosimEvent::Kind::Write) {
            wrote = true;
            continue;
        }
        if (prev && e.cycle == prev_cycle + 1 && *prev == e.address && !wrote) return e.cycle;
        prev = e.address;
        prev_cycle = e.cycle;
        wrote = false;
    }
    return std::nullopt;
}

void write_events_csv(std::ostream &out, const std::vector<CosimEvent> &log) {
    out << "cycle,kind,address,data\n";
    for (const auto &e : log) {
        out << e.cycle << ',' << (e.kind == CosimEvent::Kind::Read ? "read" : "write") << ','
            << int{e.address} << ',' << int{e.data} << '\n';
    }
}

void write_pgm(std::ostream &out, const isa::MemoryImage &image) {
    out << "P5\n16 16\n255\n";
    out.write(reinterpret_cast<const char *>(image.bytes.data()), static_cast<std::streamsize>(image.bytes.size()));
}

}  // namespace mechlogic::cosim
