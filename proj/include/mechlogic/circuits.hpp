#pragma once

// Generators for the demonstration circuits and their clocked golden drivers.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mechlogic/isa.hpp"
#include "mechlogic/netlist.hpp"

namespace mechlogic::circuits {

using logic::Bus;
using logic::NetId;
using logic::Netlist;

/// (((x1 NOR x2) NOR 0) NOR 0 ...): `depth` gates, outputs s1..s<depth>.
Netlist build_nor_cascade(int depth = 3);

/// Two 2-bit operands a, b; 3-bit sum s. 17 NOR gates.
Netlist build_adder2();
/// The same adder as structural JSON (NOR and NOT cells).
std::string adder2_structural_json();

/// Binary-search integer square root of a 2*width-bit input `n`.
/// Inputs: n, reset, clk. Output: root (width bits). Registers `guess` and
/// `step` are latches enabled by clk.
Netlist build_sqrt_fsm(int width = 8);

/// Bus names of the processor netlist.
struct ProcessorPorts {
    Bus read_addr;   // outputs, program counter
    Bus read_data;   // inputs
    Bus write_addr;  // outputs
    Bus write_data;  // outputs
    NetId write_valid = logic::kNoNet;
    NetId reset = logic::kNoNet;
    NetId clk = logic::kNoNet;
};

/// Architectural registers, each a set of latches.
struct RegisterFileSpec {
    Bus ra, wa, wd, a, b, c, d;
    NetId overflow = logic::kNoNet;
    NetId load_pending = logic::kNoNet;
    NetId load_to_b = logic::kNoNet;
    NetId write_valid = logic::kNoNet;
    static constexpr int kRegisters = 7;
};

struct Processor {
    Netlist netlist;
    ProcessorPorts ports;
    RegisterFileSpec regs;
};

Processor build_processor();

// ---------------------------------------------------------------------------
// Clocked golden drivers (unit-delay timing)

/// One clock cycle in gate delays: enable pulse, then the pause. Memory is
/// sampled `sample` ticks after the pulse starts.
struct ClockTicks {
    std::size_t pulse = 5;
    std::size_t sample = 20;
    std::size_t cycle = 55;
};

class ClockedGolden {
  public:
    ClockedGolden(const Netlist &nl, NetId clk, ClockTicks ticks = {});

    /// Pulse, then tick up to the sample instant. Returns false if the
    /// network was already quiet before the instant.
    void pulse_and_wait();
    /// Tick until quiet, failing if the cycle budget is exceeded.
    void finish_cycle();
    /// pulse_and_wait + finish_cycle.
    void cycle();

    logic::GoldenSim &sim() { return sim_; }
    std::size_t ticks_in_cycle() const { return in_cycle_; }
    std::size_t worst_cycle_ticks() const { return worst_; }

  private:
    logic::GoldenSim sim_;
    NetId clk_;
    ClockTicks ticks_;
    std::size_t in_cycle_ = 0;
    std::size_t worst_ = 0;
};

/// Golden square-root run: reset cycle, then `cycles` more. Returns the root
/// bus value after each cycle (nullopt while X).
std::vector<std::optional<std::uint64_t>> sqrt_golden_run(const Netlist &nl, std::uint64_t n,
                                                          int cycles);

/// Lane-parallel two-valued unit-delay simulation, 64 vectors at once.
class LaneSim {
  public:
    explicit LaneSim(const Netlist &nl);
    void set(NetId input, std::uint64_t lanes) { v_[input] = lanes; }
    void set_bus_lanes(const Bus &bus, const std::vector<std::uint64_t> &per_lane_values);
    std::uint64_t get(NetId net) const { return v_[net]; }
    std::uint64_t bus_value(const Bus &bus, int lane) const;
    bool tick();
    void run(std::size_t ticks);

  private:
    const Netlist &nl_;
    std::vector<std::uint64_t> v_, old_;
};

/// Register snapshot read from the processor netlist.
isa::CycleState read_registers(const logic::GoldenSim &sim, const RegisterFileSpec &regs);

struct GoldenCpuCycle {
    std::uint8_t read_addr = 0;
    std::optional<isa::WriteEvent> write;
    isa::CycleState state;
};

/// Processor netlist driven by a memory: cycle 0 holds reset, later cycles
/// commit pending writes at the sample instant, then present mem[read_addr].
class GoldenCpu {
  public:
    GoldenCpu(const Processor &cpu, isa::MemoryImage image, isa::MmrDevice *device = nullptr,
              ClockTicks ticks = {});
    GoldenCpuCycle step();
    const isa::Memory &memory() const { return memory_; }
    std::uint64_t cycles() const { return cycles_; }
    std::size_t worst_cycle_ticks() const { return clock_.worst_cycle_ticks(); }

  private:
    const Processor &cpu_;
    isa::Memory memory_;
    ClockedGolden clock_;
    std::uint64_t cycles_ = 0;
};

}  // namespace mechlogic::circuits
