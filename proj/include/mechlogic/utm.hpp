#pragma once

// Turing machines with m states and n symbols, a direct interpreter, and the
// table-driven emulator program that runs one on the processor through a
// memory-mapped tape register.

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "mechlogic/isa.hpp"

namespace mechlogic::utm {

class UtmError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Rule {
    std::uint8_t write = 0;   // symbol written, < n
    bool move_right = false;  // direction bit: 1 = right
    std::uint8_t next = 0;    // next state index, < m
};

struct UtmSpec {
    int states = 5;
    int symbols = 5;
    std::vector<Rule> rules;  // rules[i * symbols + j]

    const Rule &rule(int state, int symbol) const;
    void validate() const;
};

/// Random machine with every rule drawn uniformly.
UtmSpec random_machine(std::uint32_t seed, int states = 5, int symbols = 5);
/// Writes what it reads, never changes state, always moves right.
UtmSpec identity_machine(int states = 5, int symbols = 5);

/// Bi-infinite tape of small symbol codes; unseen cells hold blank (0).
class Tape {
  public:
    std::uint8_t read() const;
    void write(std::uint8_t symbol);
    void move(bool right);

    long head() const { return head_; }
    /// Cells from the leftmost to the rightmost ever touched.
    std::vector<std::uint8_t> contents() const;
    long leftmost() const { return origin_; }

    bool operator==(const Tape &other) const;

  private:
    std::size_t index() const { return static_cast<std::size_t>(head_ - origin_); }
    void grow();

    std::deque<std::uint8_t> cells_{0};
    long origin_ = 0;  // coordinate of cells_[0]
    long head_ = 0;
};

struct Config {
    Tape tape;
    int state = 0;
    std::uint64_t steps = 0;
};

/// One step of the direct interpreter.
void reference_step(const UtmSpec &spec, Config &config);

/// Memory layout of the emulator program.
struct Layout {
    std::uint8_t out_base = 160;
    std::uint8_t trans_base = 192;
    std::uint8_t mmr = 255;
};

/// State code kept in register D: out_base + i * n.
std::uint8_t state_code(const UtmSpec &spec, const Layout &layout, int state);
/// Inverse of state_code; throws on a value that is not a state code.
int decode_state(const UtmSpec &spec, const Layout &layout, std::uint8_t code);

/// Assembly text for the emulator loop (code only, tables not included).
std::string emulator_source(const Layout &layout = {});
/// Assembled program with output and transition tables placed and the MMR set.
isa::MemoryImage emulator_image(const UtmSpec &spec, const Layout &layout = {});

/// MMR device: a read returns the symbol under the head, a write stores the
/// symbol bits then moves the head.
class TapeDevice : public isa::MmrDevice {
  public:
    explicit TapeDevice(int symbols) : symbols_(symbols) {}

    std::uint8_t read() override;
    void write(std::uint8_t value) override;

    const Tape &tape() const { return tape_; }
    Tape &tape() { return tape_; }
    std::uint64_t writes() const { return writes_; }

  private:
    int symbols_;
    Tape tape_;
    std::uint64_t writes_ = 0;
};

struct LockstepReport {
    std::uint64_t steps = 0;
    std::uint64_t cycles = 0;
    bool match = true;
    std::uint64_t first_mismatch = 0;
    std::string detail;
};

/// Runs the emulator program on the instruction-level model next to the
/// direct interpreter, comparing tape, head and state after every machine
/// step.
LockstepReport run_lockstep(const UtmSpec &spec, std::uint64_t steps, const Layout &layout = {});

}  // namespace mechlogic::utm
