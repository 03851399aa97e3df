#pragma once

// Netlist -> mechanical system, plus a driver that runs the compiled circuit
// with digital inputs and demodulated, classified outputs.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mechlogic/dynamics.hpp"
#include "mechlogic/gate.hpp"
#include "mechlogic/netlist.hpp"

namespace mechlogic::lower {

using logic::Bus;
using logic::NetId;
using logic::Netlist;

struct CompileStats {
    std::size_t gates = 0;
    std::size_t oscillators = 0;
    std::size_t springs = 0;
    std::size_t cubics = 0;
    std::size_t dashpots = 0;
    std::size_t drives = 0;
};

inline constexpr dyn::Index kNoChannel = static_cast<dyn::Index>(-1);

struct CompiledCircuit {
    dyn::MechanicalSystem<double> system;
    std::vector<gate::NorInstance> gates;
    /// Channel oscillator of each gate-driven net, kNoChannel otherwise.
    std::vector<dyn::Index> net_channel;
    /// Drive indices (spring side, dashpot side, ...) of each input or const0 net.
    std::vector<std::vector<dyn::Index>> net_drives;
    CompileStats stats;
    double omega = 0;
    gate::LogicReference<double> ref;
};

class CompileError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// One NOR block per gate; gate-driven nets become spring+dashpot edges to
/// every sink, primary inputs and const0 become quadrature drives (inputs
/// start at the Zero level).
CompiledCircuit compile(const Netlist &nl, const gate::NorTemplate<double> &t,
                        const gate::LogicReference<double> &ref, double omega);

/// Stats without building the system.
CompileStats count(const Netlist &nl);

struct OdeSettings {
    double dt_periods = 0.025;
    int window_periods = 50;
};

/// Integrates a compiled circuit while tracking the amplitude of chosen nets.
class CircuitOde {
  public:
    CircuitOde(const CompiledCircuit &c, std::vector<NetId> watch, OdeSettings s = {});

    void set_input(NetId net, bool one);
    /// Drive at an arbitrary level, as a fraction of the force reference.
    void set_input_level(NetId net, double ratio);
    void set_bus(const Bus &bus, std::uint64_t value);
    void run_periods(double periods);
    void run_steps(std::size_t steps);

    double periods() const;
    /// Demodulated amplitude over the trailing window (watched nets only).
    double amplitude(NetId net) const;
    gate::LogicLevel level(NetId net) const;
    /// nullopt if any bit is Ambiguous.
    std::optional<std::uint64_t> bus_value(const Bus &bus) const;

    const gate::LogicReference<double> &reference() const { return c_.ref; }
    const dyn::State<double> &state() const { return s_; }
    dyn::State<double> &state() { return s_; }
    dyn::Rk4<double> &integrator() { return rk_; }
    std::size_t steps_per_period() const { return spp_; }
    std::uint64_t steps() const { return steps_; }
    /// Restores a saved state; the demodulators restart empty.
    void restore(const dyn::State<double> &s, std::uint64_t steps);
    /// Full snapshot (state, drive levels, demodulator windows), binary.
    void save(std::ostream &out) const;
    /// Inverse of save(); resumes bit-identically.
    void load(std::istream &in);

  private:
    struct Probe {
        NetId net;
        dyn::Index osc;
        std::vector<double> ps, pc;
        double ss = 0, sc = 0;
    };
    const Probe &probe(NetId net) const;

    const CompiledCircuit &c_;
    dyn::Rk4<double> rk_;
    dyn::State<double> s_;
    std::size_t spp_;
    std::size_t n_;  // window length in steps
    std::size_t pos_ = 0;
    std::uint64_t steps_ = 0;
    std::vector<Probe> probes_;
    std::vector<int> probe_of_;
};

}  // namespace mechlogic::lower
