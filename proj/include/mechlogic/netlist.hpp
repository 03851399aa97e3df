#pragma once

// NOR-only logic IR, circuit combinators and three-valued golden simulation.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mechlogic::logic {

using NetId = std::uint32_t;
inline constexpr NetId kNoNet = std::numeric_limits<NetId>::max();

/// Bits are stored LSB first.
using Bus = std::vector<NetId>;

enum class Value : std::uint8_t { Zero, One, X };

constexpr Value nor(Value a, Value b) {
    if (a == Value::One || b == Value::One) return Value::Zero;
    if (a == Value::Zero && b == Value::Zero) return Value::One;
    return Value::X;
}
constexpr Value from_bool(bool b) { return b ? Value::One : Value::Zero; }
char to_char(Value v);

class NetlistError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Gate {
    NetId a = kNoNet;
    NetId b = kNoNet;
    NetId out = kNoNet;
};

enum class DriverKind : std::uint8_t { Gate, Input, Const0, None };

struct NetInfo {
    DriverKind kind = DriverKind::None;
    std::uint32_t driver = 0;  // gate index or input ordinal
    std::string name;
};

/// Gate input reference: gate index and port (0 = a, 1 = b).
struct Sink {
    std::uint32_t gate;
    std::uint8_t port;
};

class Netlist {
  public:
    NetId const0();
    /// NOT(const0), created once and shared.
    NetId const1();

    NetId add_input(const std::string &name);
    Bus add_input_bus(const std::string &name, std::size_t width);

    NetId nor(NetId a, NetId b);
    /// Gate whose inputs are bound later; needed for feedback loops.
    std::uint32_t nor_deferred();
    void bind_inputs(std::uint32_t gate, NetId a, NetId b);

    void add_output(NetId net, const std::string &name);
    void add_output_bus(const Bus &bus, const std::string &name);

    void name_bus(const std::string &name, const Bus &bus) { buses_[name] = bus; }
    const Bus &bus(const std::string &name) const;
    bool has_bus(const std::string &name) const { return buses_.count(name) != 0; }
    void set_net_name(NetId net, const std::string &name) { nets_.at(net).name = name; }

    const std::vector<Gate> &gates() const { return gates_; }
    const std::vector<NetInfo> &nets() const { return nets_; }
    const std::vector<NetId> &inputs() const { return inputs_; }
    const std::vector<std::pair<std::string, NetId>> &outputs() const { return outputs_; }
    std::optional<NetId> const0_net() const { return const0_; }
    std::size_t gate_count() const { return gates_.size(); }
    NetId input(const std::string &name) const;
    NetId output(const std::string &name) const;

    /// Every net has one driver and every gate input is bound.
    void validate() const;
    /// Gate sinks of every net, indexed by net.
    std::vector<std::vector<Sink>> fanout() const;
    /// Strongly connected gate sets that form combinational loops.
    std::vector<std::vector<std::uint32_t>> combinational_loops() const;
    /// Longest gate path from any input to each net, ignoring loop edges.
    std::vector<int> depth() const;

    /// Gates added by each top-level combinator call.
    std::map<std::string, std::size_t> combinator_gates;

    void freeze() { validate(); frozen_ = true; }
    bool frozen() const { return frozen_; }

    /// Counts the gates added while alive under `name`; nested scopes do not count.
    class Scope {
      public:
        Scope(Netlist &nl, std::string name);
        ~Scope();
        Scope(const Scope &) = delete;
        Scope &operator=(const Scope &) = delete;

      private:
        Netlist &nl_;
        std::string name_;
        std::size_t start_;
    };

  private:
    NetId new_net(DriverKind kind, std::uint32_t driver, std::string name = {});
    void check_mutable() const;
    void check_net(NetId n) const;

    std::vector<Gate> gates_;
    std::vector<NetInfo> nets_;
    std::vector<NetId> inputs_;
    std::vector<std::pair<std::string, NetId>> outputs_;
    std::map<std::string, Bus> buses_;
    std::optional<NetId> const0_;
    std::optional<NetId> const1_;
    int scope_depth_ = 0;
    bool frozen_ = false;
};

// ---------------------------------------------------------------------------
// Combinators (emit NOR gates only)

NetId not_(Netlist &nl, NetId a);
NetId or_(Netlist &nl, NetId a, NetId b);
/// NOR(NOT a, NOT b): three gates, two levels deep.
NetId and_(Netlist &nl, NetId a, NetId b);
NetId xor_(Netlist &nl, NetId a, NetId b);
NetId xnor_(Netlist &nl, NetId a, NetId b);
/// sel = 0 -> a, sel = 1 -> b, as (a AND NOT sel) OR (b AND sel).
NetId mux(Netlist &nl, NetId a, NetId b, NetId sel);
/// Same function in three gates when NOT sel is already available.
NetId mux(Netlist &nl, NetId a, NetId b, NetId sel, NetId sel_n);
/// OR of any number of nets (at least one).
NetId or_many(Netlist &nl, const std::vector<NetId> &terms);
/// NOR of any number of nets (at least one).
NetId nor_many(Netlist &nl, const std::vector<NetId> &terms);

Bus not_bus(Netlist &nl, const Bus &a);
Bus mux_bus(Netlist &nl, const Bus &a, const Bus &b, NetId sel);

struct HalfAdder {
    NetId sum;
    NetId carry;
};
HalfAdder half_adder(Netlist &nl, NetId a, NetId b);

struct AdderResult {
    Bus sum;
    NetId carry;
};
AdderResult ripple_adder(Netlist &nl, const Bus &a, const Bus &b);

/// a > b, unsigned.
NetId greater_than(Netlist &nl, const Bus &a, const Bus &b);
NetId not_equal(Netlist &nl, const Bus &a, const Bus &b);
/// Pure rewiring: no gates except the shared constant.
Bus shift_right_logical(Netlist &nl, const Bus &a);
Bus shift_right_arith(const Bus &a);

/// Unsigned product, width a + width b.
Bus multiply(Netlist &nl, const Bus &a, const Bus &b);

// ---------------------------------------------------------------------------
// Latch

inline constexpr int kLatchDelayPairs = 5;

struct Latch {
    NetId q;    // storage node inside the loop
    NetId out;  // after the delay chain
};

/// MUX with output feedback (q = en ? d : q) followed by `delay_pairs`
/// identity pairs. `en_n` may pass a shared NOT(en).
Latch build_latch(Netlist &nl, NetId d, NetId en, NetId en_n = kNoNet,
                  int delay_pairs = kLatchDelayPairs);

/// Chain of identity pairs (x NOR 0) NOR 0.
NetId delay_chain(Netlist &nl, NetId x, int pairs);

// ---------------------------------------------------------------------------
// Golden simulation

class OscillationError : public NetlistError {
  public:
    using NetlistError::NetlistError;
};

class GoldenSim {
  public:
    explicit GoldenSim(const Netlist &nl);

    void set(NetId input, Value v);
    void set_bus(const Bus &bus, std::uint64_t value);
    void set_bus(const Bus &bus, Value v);
    Value get(NetId net) const { return values_[net]; }
    /// nullopt when any bit is X.
    std::optional<std::uint64_t> get_bus(const Bus &bus) const;

    /// Zero-delay evaluation: in-place sweeps in gate order until nothing
    /// changes. Throws OscillationError after 4 * gate count sweeps.
    std::size_t settle();

    /// Unit-delay model: every gate takes its new value from the previous
    /// tick. Returns true if any net changed.
    bool tick();
    /// Ticks until quiescent; throws OscillationError after max_ticks.
    std::size_t run_until_stable(std::size_t max_ticks);
    std::uint64_t ticks() const { return ticks_; }

    const std::vector<Value> &values() const { return values_; }

  private:
    const Netlist &nl_;
    std::vector<Value> values_;
    std::vector<Value> scratch_;
    std::uint64_t ticks_ = 0;
};

/// Applies each phase's input vector (one value per primary input, in input
/// order), settles, and records the primary outputs.
std::vector<std::vector<Value>> golden_simulate(const Netlist &nl,
                                                const std::vector<std::vector<Value>> &schedule);

/// Clock schedule in gate-delay units for the unit-delay model: a pulse of
/// `pulse` ticks, then at most `pause` ticks to settle.
struct TickSchedule {
    std::size_t pulse = 5;
    std::size_t pause = 50;
};

// ---------------------------------------------------------------------------
// Structural JSON import

/// Reads the structural-JSON subset: one module with `ports`, and `cells` of
/// type NOR, NOT or DFF (the latter expanded as a pulse latch). Each cell has
/// `port_directions` and `connections` holding bit ids or the constants
/// "0"/"1".
Netlist import_structural_json(const std::string &text);
Netlist import_structural_file(const std::string &path);

}  // namespace mechlogic::logic
