#pragma once

// Clocked ODE runs of compiled circuits, and the memory device that serves
// the processor's ports during a co-simulation.

#include <cstdint>
#include <array>
#include <iosfwd>
#include <stdexcept>
#include <optional>
#include <string>
#include <vector>

#include "mechlogic/circuits.hpp"
#include "mechlogic/config.hpp"
#include "mechlogic/isa.hpp"
#include "mechlogic/lowering.hpp"

namespace mechlogic::cosim {

using logic::Bus;
using logic::NetId;

/// Ambiguous bit at a decision instant, or ports moving when they must not.
class CosimFault : public std::runtime_error {
  public:
    CosimFault(std::uint64_t cycle, const std::string &what)
        : std::runtime_error("cycle " + std::to_string(cycle) + ": " + what), cycle_(cycle) {}
    std::uint64_t cycle() const { return cycle_; }

  private:
    std::uint64_t cycle_;
};

/// Enable pulses on one clock net of a compiled circuit.
class OdeClock {
  public:
    OdeClock(lower::CircuitOde &ode, NetId clk, config::ClockSchedule s);
    /// Pulse, then run until the sample instant.
    void pulse_and_wait();
    /// Run to the end of the cycle.
    void finish_cycle();
    void cycle();
    /// Periods since the current cycle's pulse started.
    double in_cycle() const { return in_cycle_; }
    const config::ClockSchedule &schedule() const { return s_; }

  private:
    void advance(double periods);
    lower::CircuitOde &ode_;
    NetId clk_;
    config::ClockSchedule s_;
    double in_cycle_ = 0;
};

/// Decodes a bus at the current instant; throws CosimFault on Ambiguous bits.
/// `slack` widens both bands by that relative amount.
std::uint64_t decode_bus(const lower::CircuitOde &ode, const Bus &bus, std::uint64_t cycle,
                         const std::string &what, double slack = 0);

// ---------------------------------------------------------------------------
// Square root machine

/// Root after each cycle, decoded at the sample instant; nullopt while any
/// bit is Ambiguous. Same protocol as the golden run: a reset cycle first.
std::vector<std::optional<std::uint64_t>> sqrt_ode_run(const logic::Netlist &nl,
                                                       const lower::CompiledCircuit &c, std::uint64_t n,
                                                       int cycles, const config::ClockSchedule &clock,
                                                       lower::OdeSettings settings = {});

// ---------------------------------------------------------------------------
// Processor co-simulation

struct SamplingPolicy {
    int window_periods = 50;
    /// Periods after the pulse start at which the read address is decoded
    /// and read data driven; not before the clock's sample instant.
    double read_offset = 10000;
    /// Write ports are decoded and committed this many demodulation windows
    /// before the next pulse. A read of the address being written in the
    /// same cycle is served the new byte, except at the MMR address, where
    /// the device is read first.
    double commit_windows_before_pulse = 2;
    /// Relative widening of both logic bands when decoding bits.
    double band_slack = 0;

    double commit_offset(const config::ClockSchedule &c) const {
        return c.cycle_periods - commit_windows_before_pulse * window_periods;
    }
};

struct CosimEvent {
    std::uint64_t cycle;
    enum class Kind { Read, Write } kind;
    std::uint8_t address;
    std::uint8_t data;
};

/// The memory seen by the processor, with an event log and per-cycle
/// snapshots.
class CosimDevice {
  public:
    explicit CosimDevice(isa::MemoryImage image, isa::MmrDevice *mmr = nullptr, SamplingPolicy p = {})
        : memory_(image, mmr), mmr_(mmr), initial_(image), policy_(p) {}

    std::uint8_t read(std::uint64_t cycle, std::uint8_t address);
    void write(std::uint64_t cycle, std::uint8_t address, std::uint8_t data);
    /// Logs a read served without touching memory (write forwarding).
    void log_read(std::uint64_t cycle, std::uint8_t address, std::uint8_t data) {
        events_.push_back({cycle, CosimEvent::Kind::Read, address, data});
    }
    void snapshot() { snapshots_.push_back(memory_.image()); }
    /// Replaces the memory contents (checkpoint resume); the log is kept.
    void restore(isa::MemoryImage image) {
        image.mmr_address = memory_.image().mmr_address;
        memory_ = isa::Memory(image, mmr_);
    }

    const isa::Memory &memory() const { return memory_; }
    const isa::MemoryImage &initial() const { return initial_; }
    const std::vector<CosimEvent> &events() const { return events_; }
    const std::vector<isa::MemoryImage> &snapshots() const { return snapshots_; }
    const SamplingPolicy &policy() const { return policy_; }

  private:
    isa::Memory memory_;
    isa::MmrDevice *mmr_;
    isa::MemoryImage initial_;
    SamplingPolicy policy_;
    std::vector<CosimEvent> events_;
    std::vector<isa::MemoryImage> snapshots_;
};

struct CosimCycle {
    std::uint64_t cycle = 0;
    std::uint8_t read_addr = 0;
    std::optional<isa::WriteEvent> write;
    std::optional<isa::CycleState> state;  // when registers are watched
};

/// Processor ODE driven by a CosimDevice, cycle for cycle like GoldenCpu.
class ProcessorCosim {
  public:
    ProcessorCosim(const circuits::Processor &cpu, const lower::CompiledCircuit &c, CosimDevice &dev,
                   config::ClockSchedule clock, lower::OdeSettings settings = {},
                   bool watch_registers = false);

    /// Holds reset through one cycle and the first pulse.
    void reset();
    CosimCycle step();
    std::uint64_t cycles() const { return cycles_; }
    lower::CircuitOde &ode() { return ode_; }

    void save_checkpoint(std::ostream &out) const;
    void load_checkpoint(std::istream &in);

  private:
    isa::CycleState read_registers() const;
    std::array<std::uint64_t, 4> ports() const;

    const circuits::Processor &cpu_;
    CosimDevice &dev_;
    lower::CircuitOde ode_;
    OdeClock clock_;
    bool watch_regs_;
    std::uint64_t cycles_ = 0;
};

/// First cycle whose fetch address equals the previous cycle's with no
/// write in between (the self-jump halt).
std::optional<std::uint64_t> halt_detect(const std::vector<CosimEvent> &log);

void write_events_csv(std::ostream &out, const std::vector<CosimEvent> &log);
/// 16 x 16 binary PGM, one pixel per byte.
void write_pgm(std::ostream &out, const isa::MemoryImage &image);

}  // namespace mechlogic::cosim
