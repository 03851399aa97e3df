#pragma once

// 8-bit accumulator-free ISA of the mechanical processor: encoding, assembler,
// and two golden models (instruction level and clock-cycle level).

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mechlogic::isa {

/// Opcodes in encoding order; the byte value of an instruction is its index.
enum class Opcode : std::uint8_t {
    SwapAC = 0,
    SwapBD,
    SwapAB,
    CopyAC,
    SaveAB,
    LoadAB,
    LdnxAB,
    SkipIfAGreaterB,
    SkipIfADifferentB,
    SkipIfOverflow,
    JumpC,
    NotC,
    ANorBToC,
    APlusBToD,
    ShiftRightLogicalD,
    ShiftRightArithD,
};

inline constexpr std::size_t kOpcodeCount = 16;
inline constexpr std::size_t kMemorySize = 256;

inline constexpr std::array<std::string_view, kOpcodeCount> kMnemonics{
    "SWAP_AC",       "SWAP_BD",       "SWAP_AB",     "COPY_AC",
    "SAVE_AB",       "LOAD_AB",       "LDNX_AB",     "SKPNX_A_GRT_B",
    "SKPNX_A_DIF_B", "SKPNX_OVER",    "JMP_C",       "NOT_C",
    "ANORB_TO_C",    "APLUSB_TO_D",   "RSL_D",       "RSA_D",
};

constexpr std::uint8_t encode(Opcode op) { return static_cast<std::uint8_t>(op); }
constexpr std::string_view mnemonic(Opcode op) { return kMnemonics[encode(op)]; }

/// Strict decode: bytes with a non-zero high nibble are not instructions.
std::optional<Opcode> decode(std::uint8_t byte);
std::optional<Opcode> parse_mnemonic(std::string_view text);

constexpr bool is_skip(Opcode op) {
    return op == Opcode::SkipIfAGreaterB || op == Opcode::SkipIfADifferentB ||
           op == Opcode::SkipIfOverflow;
}

/// Number of clock cycles the hardware spends on an instruction.
constexpr int cycles_for(Opcode op) {
    return (op == Opcode::LdnxAB || op == Opcode::LoadAB) ? 2 : 1;
}

class IsaError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class AssemblyError : public IsaError {
  public:
    AssemblyError(int line, const std::string &what)
        : IsaError("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

  private:
    int line_;
};

class ExecutionFault : public IsaError {
  public:
    ExecutionFault(std::uint8_t pc, const std::string &what)
        : IsaError("pc " + std::to_string(pc) + ": " + what), pc_(pc) {}
    std::uint8_t pc() const { return pc_; }

  private:
    std::uint8_t pc_;
};

// ---------------------------------------------------------------------------
// Memory

/// External device attached behind the memory-mapped register address.
class MmrDevice {
  public:
    virtual ~MmrDevice() = default;
    virtual std::uint8_t read() = 0;
    virtual void write(std::uint8_t value) = 0;
};

struct MemoryImage {
    std::array<std::uint8_t, kMemorySize> bytes{};
    std::optional<std::uint8_t> mmr_address;

    std::uint8_t &operator[](std::size_t i) { return bytes[i]; }
    std::uint8_t operator[](std::size_t i) const { return bytes[i]; }
    bool operator==(const MemoryImage &) const = default;
};

/// 16 lines of 16 space-separated hex bytes.
std::string to_hex_dump(const MemoryImage &image);
MemoryImage from_hex_dump(std::string_view text);
void write_binary(std::ostream &out, const MemoryImage &image);
MemoryImage read_binary(std::istream &in);

/// Byte-addressed RAM with the MMR address redirected to a device.
class Memory {
  public:
    explicit Memory(MemoryImage image, MmrDevice *device = nullptr)
        : image_(image), device_(device) {}

    std::uint8_t read(std::uint8_t address);
    void write(std::uint8_t address, std::uint8_t value);

    const MemoryImage &image() const { return image_; }
    bool is_mmr(std::uint8_t address) const {
        return image_.mmr_address && *image_.mmr_address == address;
    }

  private:
    MemoryImage image_;
    MmrDevice *device_;
};

// ---------------------------------------------------------------------------
// Instruction-level model

struct MachineState {
    std::uint8_t a = 0;
    std::uint8_t b = 0;
    std::uint8_t c = 0;
    std::uint8_t d = 0;
    std::uint8_t pc = 0;  // read-address register
    std::uint8_t write_addr = 0;
    std::uint8_t write_data = 0;
    bool overflow = false;
    bool write_valid = false;
    bool halted = false;

    bool operator==(const MachineState &) const = default;
};

struct WriteEvent {
    std::uint8_t address;
    std::uint8_t data;
    bool operator==(const WriteEvent &) const = default;
};

struct StepRecord {
    std::uint64_t cycle = 0;  // clock cycle at which the instruction was fetched
    std::uint8_t pc = 0;
    Opcode opcode = Opcode::SwapAC;
    MachineState after;
    std::optional<WriteEvent> write;
};

/// Executes one instruction. LOAD_AB leaves pc+1 in write_addr because the
/// hardware parks its return address there while the operand is fetched.
MachineState emulate_step(const MachineState &state, Memory &memory,
                          StepRecord *record = nullptr);

struct RunResult {
    MachineState state;
    MemoryImage memory;
    std::uint64_t cycles = 0;        // clock cycles, counting 2 for LDNX/LOAD
    std::uint64_t instructions = 0;
    std::vector<StepRecord> trace;
};

/// Steps until the self-jump halt or throws once max_cycles clock cycles pass.
RunResult run_until_halt(const MemoryImage &image, std::uint64_t max_cycles,
                         MmrDevice *device = nullptr, bool keep_trace = true);

void write_trace_csv(std::ostream &out, const std::vector<StepRecord> &trace);

// ---------------------------------------------------------------------------
// Clock-cycle model (what the processor netlist implements)

struct CycleState {
    MachineState arch;
    bool load_pending = false;  // data input holds an operand, not an opcode
    bool load_to_b = false;     // pending operand goes to B (LOAD_AB) or A (LDNX_AB)

    bool operator==(const CycleState &) const = default;
};

/// Next latched state given the byte present on the read-data port. Only the
/// low nibble is decoded, as in hardware.
CycleState next_cycle_state(const CycleState &state, std::uint8_t data_in);

/// Runs the clocked machine against a memory: at every clock a pending write
/// is committed first, then the byte at the read address is presented.
class ClockedMachine {
  public:
    explicit ClockedMachine(MemoryImage image, MmrDevice *device = nullptr)
        : memory_(image, device) {}

    /// Returns the write committed at the start of this cycle, if any.
    std::optional<WriteEvent> clock();

    const CycleState &state() const { return state_; }
    const Memory &memory() const { return memory_; }
    std::uint8_t last_data() const { return last_data_; }
    std::uint64_t cycles() const { return cycles_; }

  private:
    Memory memory_;
    CycleState state_;
    std::uint8_t last_data_ = 0;
    std::uint64_t cycles_ = 0;
};

// ---------------------------------------------------------------------------
// Assembler

struct Program {
    MemoryImage image;
    std::map<std::string, std::uint8_t> labels;
    std::size_t size = 0;  // bytes emitted
};

/// Two-pass assembler. One statement per line, `;` comments, `label:`
/// definitions, `.byte v[, v...]`, `.org addr`. A skip may not be followed
/// by LDNX_AB.
Program assemble(std::string_view text);

/// Canonical listing of [begin, end): one mnemonic per line, non-opcode bytes
/// as `.byte 0xNN`.
std::string disassemble(const MemoryImage &image, std::size_t begin, std::size_t end);

// ---------------------------------------------------------------------------
// Programs

/// Sieve of Eratosthenes: after the run, bytes [base, base + n_max) hold zero
/// for primes and non-zero for everything else, 0 and 1 included. Needs a
/// zero-initialized array.
std::string sieve_program(int n_max = 32, int array_base = 128);

}  // namespace mechlogic::isa
