#include "mechlogic/isa.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace mechlogic::isa {

std::optional<Opcode> decode(std::uint8_t byte) {
    if (byte >> 4) {
        return std::nullopt;
    }
    return static_cast<Opcode>(byte);
}

std::optional<Opcode> parse_mnemonic(std::string_view text) {
    for (std::size_t i = 0; i < kMnemonics.size(); ++i) {
        if (kMnemonics[i] == text) {
            return static_cast<Opcode>(i);
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Memory images

std::string to_hex_dump(const MemoryImage &image) {
    std::ostringstream out;
    out << std::hex << std::setfill('0');
    for (std::size_t row = 0; row < 16; ++row) {
        for (std::size_t col = 0; col < 16; ++col) {
            if (col) {
                out << ' ';
            }
            out << std::setw(2) << static_cast<int>(image.bytes[row * 16 + col]);
        }
        out << '\n';
    }
    return out.str();
}

MemoryImage from_hex_dump(std::string_view text) {
    MemoryImage image;
    std::size_t count = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (auto colon = line.find(':'); colon != std::string::npos) {
            line.erase(0, colon + 1);  // optional "addr:" prefix
        }
        std::istringstream words(line);
        std::string word;
        while (words >> word) {
            unsigned value = 0;
            auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value, 16);
            if (ec != std::errc{} || ptr != word.data() + word.size() || value > 0xff) {
                throw IsaError("bad hex byte '" + word + "'");
            }
            if (count >= kMemorySize) {
                throw IsaError("hex dump longer than 256 bytes");
            }
            image.bytes[count++] = static_cast<std::uint8_t>(value);
        }
    }
    if (count != kMemorySize) {
        throw IsaError("hex dump holds " + std::to_string(count) + " bytes, expected 256");
    }
    return image;
}

void write_binary(std::ostream &out, const MemoryImage &image) {
    out.write(reinterpret_cast<const char *>(image.bytes.data()), kMemorySize);
}

MemoryImage read_binary(std::istream &in) {
    MemoryImage image;
    in.read(reinterpret_cast<char *>(image.bytes.data()), kMemorySize);
    if (in.gcount() != static_cast<std::streamsize>(kMemorySize)) {
        throw IsaError("binary image shorter than 256 bytes");
    }
    return image;
}

std::uint8_t Memory::read(std::uint8_t address) {
    if (is_mmr(address) && device_) {
        return device_->read();
    }
    return image_.bytes[address];
}

void Memory::write(std::uint8_t address, std::uint8_t value) {
    if (is_mmr(address) && device_) {
        device_->write(value);
        return;
    }
    image_.bytes[address] = value;
}

// ---------------------------------------------------------------------------
// Instruction-level model

namespace {

std::uint8_t shift_right_arith(std::uint8_t v) {
    return static_cast<std::uint8_t>((v >> 1) | (v & 0x80));
}

}  // namespace

MachineState emulate_step(const MachineState &state, Memory &memory, StepRecord *record) {
    const std::uint8_t pc = state.pc;
    const std::uint8_t byte = memory.read(pc);
    const auto op = decode(byte);
    if (!op) {
        throw ExecutionFault(pc, "invalid opcode byte " + std::to_string(byte));
    }

    MachineState next = state;
    next.write_valid = false;
    next.pc = static_cast<std::uint8_t>(pc + 1);
    std::optional<WriteEvent> write;

    switch (*op) {
    case Opcode::SwapAC:
        std::swap(next.a, next.c);
        break;
    case Opcode::SwapBD:
        std::swap(next.b, next.d);
        break;
    case Opcode::SwapAB:
        std::swap(next.a, next.b);
        break;
    case Opcode::CopyAC:
        next.c = state.a;
        break;
    case Opcode::SaveAB:
        next.write_addr = state.b;
        next.write_data = state.a;
        next.write_valid = true;
        write = WriteEvent{state.b, state.a};
        memory.write(state.b, state.a);
        break;
    case Opcode::LoadAB:
        next.write_addr = static_cast<std::uint8_t>(pc + 1);
        next.b = memory.read(state.a);
        break;
    case Opcode::LdnxAB:
        next.a = memory.read(static_cast<std::uint8_t>(pc + 1));
        next.pc = static_cast<std::uint8_t>(pc + 2);
        break;
    case Opcode::SkipIfAGreaterB:
        if (state.a > state.b) {
            next.pc = static_cast<std::uint8_t>(pc + 2);
        }
        break;
    case Opcode::SkipIfADifferentB:
        if (state.a != state.b) {
            next.pc = static_cast<std::uint8_t>(pc + 2);
        }
        break;
    case Opcode::SkipIfOverflow:
        if (state.overflow) {
            next.pc = static_cast<std::uint8_t>(pc + 2);
        }
        break;
    case Opcode::JumpC:
        next.pc = state.c;
        next.halted = state.c == pc;
        break;
    case Opcode::NotC:
        next.c = static_cast<std::uint8_t>(~state.c);
        break;
    case Opcode::ANorBToC:
        next.c = static_cast<std::uint8_t>(~(state.a | state.b));
        break;
    case Opcode::APlusBToD: {
        const unsigned sum = unsigned{state.a} + unsigned{state.b};
        next.d = static_cast<std::uint8_t>(sum);
        next.overflow = sum > 0xff;
        break;
    }
    case Opcode::ShiftRightLogicalD:
        next.d = static_cast<std::uint8_t>(state.d >> 1);
        break;
    case Opcode::ShiftRightArithD:
        next.d = shift_right_arith(state.d);
        break;
    }

    if (record) {
        record->pc = pc;
        record->opcode = *op;
        record->after = next;
        record->write = write;
    }
    return next;
}

RunResult run_until_halt(const MemoryImage &image, std::uint64_t max_cycles, MmrDevice *device,
                         bool keep_trace) {
    if (max_cycles == 0) {
        throw IsaError("cycle bound must be positive");
    }
    Memory memory(image, device);
    RunResult result;
    while (!result.state.halted) {
        if (result.cycles >= max_cycles) {
            throw IsaError("no halt within " + std::to_string(max_cycles) + " cycles");
        }
        StepRecord record;
        record.cycle = result.cycles;
        result.state = emulate_step(result.state, memory, &record);
        result.cycles += cycles_for(record.opcode);
        ++result.instructions;
        if (keep_trace) {
            result.trace.push_back(record);
        }
    }
    result.memory = memory.image();
    return result;
}

void write_trace_csv(std::ostream &out, const std::vector<StepRecord> &trace) {
    out << "cycle,pc,opcode,a,b,c,d,overflow,write_addr,write_data\n";
    for (const auto &r : trace) {
        out << r.cycle << ',' << int{r.pc} << ',' << mnemonic(r.opcode) << ',' << int{r.after.a}
            << ',' << int{r.after.b} << ',' << int{r.after.c} << ',' << int{r.after.d} << ','
            << int{r.after.overflow} << ',';
        if (r.write) {
            out << int{r.write->address} << ',' << int{r.write->data};
        } else {
            out << ',';
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Clock-cycle model

CycleState next_cycle_state(const CycleState &state, std::uint8_t data_in) {
    const MachineState &s = state.arch;
    CycleState next = state;
    MachineState &n = next.arch;
    n.write_valid = false;

    if (state.load_pending) {
        if (state.load_to_b) {
            n.b = data_in;
            n.pc = s.write_addr;
        } else {
            n.a = data_in;
            n.pc = static_cast<std::uint8_t>(s.pc + 1);
        }
        next.load_pending = false;
        next.load_to_b = false;
        return next;
    }

    const auto op = static_cast<Opcode>(data_in & 0x0f);
    n.pc = static_cast<std::uint8_t>(s.pc + 1);
    switch (op) {
    case Opcode::SwapAC:
        std::swap(n.a, n.c);
        break;
    case Opcode::SwapBD:
        std::swap(n.b, n.d);
        break;
    case Opcode::SwapAB:
        std::swap(n.a, n.b);
        break;
    case Opcode::CopyAC:
        n.c = s.a;
        break;
    case Opcode::SaveAB:
        n.write_addr = s.b;
        n.write_data = s.a;
        n.write_valid = true;
        break;
    case Opcode::LoadAB:
        n.write_addr = static_cast<std::uint8_t>(s.pc + 1);
        n.pc = s.a;
        next.load_pending = true;
        next.load_to_b = true;
        break;
    case Opcode::LdnxAB:
        next.load_pending = true;
        next.load_to_b = false;
        break;
    case Opcode::SkipIfAGreaterB:
        if (s.a > s.b) n.pc = static_cast<std::uint8_t>(s.pc + 2);
        break;
    case Opcode::SkipIfADifferentB:
        if (s.a != s.b) n.pc = static_cast<std::uint8_t>(s.pc + 2);
        break;
    case Opcode::SkipIfOverflow:
        if (s.overflow) n.pc = static_cast<std::uint8_t>(s.pc + 2);
        break;
    case Opcode::JumpC:
        n.pc = s.c;
        n.halted = s.c == s.pc;
        break;
    case Opcode::NotC:
        n.c = static_cast<std::uint8_t>(~s.c);
        break;
    case Opcode::ANorBToC:
        n.c = static_cast<std::uint8_t>(~(s.a | s.b));
        break;
    case Opcode::APlusBToD: {
        const unsigned sum = unsigned{s.a} + unsigned{s.b};
        n.d = static_cast<std::uint8_t>(sum);
        n.overflow = sum > 0xff;
        break;
    }
    case Opcode::ShiftRightLogicalD:
        n.d = static_cast<std::uint8_t>(s.d >> 1);
        break;
    case Opcode::ShiftRightArithD:
        n.d = shift_right_arith(s.d);
        break;
    }
    return next;
}

std::optional<WriteEvent> ClockedMachine::clock() {
    std::optional<WriteEvent> committed;
    if (state_.arch.write_valid) {
        committed = WriteEvent{state_.arch.write_addr, state_.arch.write_data};
        memory_.write(committed->address, committed->data);
    }
    last_data_ = memory_.read(state_.arch.pc);
    state_ = next_cycle_state(state_, last_data_);
    ++cycles_;
    return committed;
}

// ---------------------------------------------------------------------------
// Assembler

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) {
        return false;
    }
    return std::all_of(s.begin(), s.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_';
    });
}

std::optional<long> parse_number(std::string_view s) {
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        base = 16;
        s.remove_prefix(2);
    } else if (s.size() > 2 && s[0] == '0' && (s[1] == 'b' || s[1] == 'B')) {
        base = 2;
        s.remove_prefix(2);
    }
    long value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value, base);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

struct Statement {
    int line;
    std::size_t address;
    enum class Kind { Instruction, Bytes } kind;
    Opcode op{};
    std::vector<std::string> operands;
};

long resolve(const std::string &expr, const std::map<std::string, std::uint8_t> &labels, int line) {
    // number | label | label+number | label-number
    std::string_view e = trim(expr);
    if (auto n = parse_number(e)) {
        return *n;
    }
    std::size_t split = e.find_first_of("+-", 1);
    std::string_view name = trim(e.substr(0, split));
    long offset = 0;
    if (split != std::string_view::npos) {
        auto n = parse_number(trim(e.substr(split + 1)));
        if (!n) {
            throw AssemblyError(line, "bad operand '" + std::string(e) + "'");
        }
        offset = e[split] == '+' ? *n : -*n;
    }
    auto it = labels.find(std::string(name));
    if (it == labels.end()) {
        throw AssemblyError(line, "undefined label '" + std::string(name) + "'");
    }
    return it->second + offset;
}

std::uint8_t to_byte(long v, int line) {
    if (v < -128 || v > 255) {
        throw AssemblyError(line, "value " + std::to_string(v) + " does not fit in a byte");
    }
    return static_cast<std::uint8_t>(v);
}

std::vector<std::string> split_operands(std::string_view rest) {
    std::vector<std::string> out;
    while (!rest.empty()) {
        auto comma = rest.find(',');
        auto item = trim(rest.substr(0, comma));
        if (!item.empty()) {
            out.emplace_back(item);
        }
        if (comma == std::string_view::npos) {
            break;
        }
        rest.remove_prefix(comma + 1);
    }
    return out;
}

}  // namespace

Program assemble(std::string_view text) {
    Program program;
    std::vector<Statement> statements;
    std::vector<bool> used(kMemorySize, false);
    std::size_t address = 0;
    int line_no = 0;

    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (auto semi = line.find(';'); semi != std::string_view::npos) {
            line = line.substr(0, semi);
        }
        line = trim(line);
        // any number of leading labels
        while (true) {
            auto colon = line.find(':');
            if (colon == std::string_view::npos) break;
            auto name = trim(line.substr(0, colon));
            if (!is_identifier(name)) {
                throw AssemblyError(line_no, "bad label '" + std::string(name) + "'");
            }
            if (address >= kMemorySize) {
                throw AssemblyError(line_no, "label past end of memory");
            }
            if (!program.labels.emplace(std::string(name), static_cast<std::uint8_t>(address)).second) {
                throw AssemblyError(line_no, "label '" + std::string(name) + "' redefined");
            }
            line = trim(line.substr(colon + 1));
        }
        if (line.empty()) continue;

        auto space = line.find_first_of(" \t");
        std::string_view head = line.substr(0, space);
        std::string_view rest = space == std::string_view::npos ? std::string_view{} : trim(line.substr(space));

        if (head == ".org") {
            auto n = parse_number(rest);
            if (!n || *n < 0 || *n >= static_cast<long>(kMemorySize)) {
                throw AssemblyError(line_no, "bad .org address");
            }
            address = static_cast<std::size_t>(*n);
            continue;
        }

        Statement st{line_no, address, Statement::Kind::Bytes, {}, split_operands(rest)};
        std::size_t length = 0;
        if (head == ".byte") {
            if (st.operands.empty()) {
                throw AssemblyError(line_no, ".byte needs at least one value");
            }
            length = st.operands.size();
        } else {
            auto op = parse_mnemonic(head);
            if (!op) {
                throw AssemblyError(line_no, "unknown mnemonic '" + std::string(head) + "'");
            }
            st.kind = Statement::Kind::Instruction;
            st.op = *op;
            const std::size_t want = *op == Opcode::LdnxAB ? 1 : 0;
            if (st.operands.size() != want) {
                throw AssemblyError(line_no, std::string(head) + " takes " + std::to_string(want) +
                                                 " operand(s)");
            }
            length = 1 + want;
        }
        if (address + length > kMemorySize) {
            throw AssemblyError(line_no, "program runs past address 255");
        }
        for (std::size_t i = address; i < address + length; ++i) {
            if (used[i]) {
                throw AssemblyError(line_no, "address " + std::to_string(i) + " assembled twice");
            }
            used[i] = true;
        }
        address += length;
        statements.push_back(std::move(st));
    }

    const Statement *previous = nullptr;
    for (const auto &st : statements) {
        std::size_t at = st.address;
        if (st.kind == Statement::Kind::Bytes) {
            for (const auto &v : st.operands) {
                program.image.bytes[at++] = to_byte(resolve(v, program.labels, st.line), st.line);
            }
        } else {
            if (st.op == Opcode::LdnxAB && previous && previous->kind == Statement::Kind::Instruction &&
                is_skip(previous->op) && previous->address + 1 == st.address) {
                throw AssemblyError(st.line, "LDNX_AB may not follow a skip instruction");
            }
            program.image.bytes[at++] = encode(st.op);
            if (st.op == Opcode::LdnxAB) {
                program.image.bytes[at++] = to_byte(resolve(st.operands[0], program.labels, st.line), st.line);
            }
        }
        previous = &st;
    }
    program.size = static_cast<std::size_t>(std::count(used.begin(), used.end(), true));
    return program;
}

std::string disassemble(const MemoryImage &image, std::size_t begin, std::size_t end) {
    std::ostringstream out;
    end = std::min(end, kMemorySize);
    for (std::size_t at = begin; at < end;) {
        const auto op = decode(image.bytes[at]);
        if (op && (*op != Opcode::LdnxAB || at + 1 < end)) {
            out << mnemonic(*op);
            if (*op == Opcode::LdnxAB) {
                out << ' ' << int{image.bytes[at + 1]};
                at += 2;
            } else {
                at += 1;
            }
        } else {
            out << ".byte 0x" << std::hex << std::setw(2) << std::setfill('0') << int{image.bytes[at]}
                << std::dec;
            at += 1;
        }
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Sieve

std::string sieve_program(int n_max, int array_base) {
    if (n_max < 2 || n_max > 64) {
        throw IsaError("sieve size must lie in [2, 64]");
    }
    if (array_base < 1 || array_base + n_max > 255) {
        throw IsaError("sieve array does not fit in memory");
    }
    // Largest candidate that still needs marking: p*p < n_max.
    int limit = 1;
    while ((limit + 1) * (limit + 1) < n_max) ++limit;

    std::ostringstream s;
    s << "; sieve of Eratosthenes over [" << array_base << ", " << array_base + n_max << ")\n"
      << "; D holds the current candidate p between blocks\n"
      << "        LDNX_AB " << array_base + 1 << "\n"
      << "        SWAP_AB\n"
      << "        LDNX_AB " << array_base << "\n"
      << "        SAVE_AB          ; 1 is not prime\n"
      << "        SWAP_AB\n"
      << "        SAVE_AB          ; 0 is not prime\n"
      << "next:   LDNX_AB 1\n"
      << "        SWAP_BD\n"
      << "        APLUSB_TO_D\n"
      << "        SWAP_BD          ; B = p + 1\n"
      << "        LDNX_AB halt\n"
      << "        COPY_AC\n"
      << "        LDNX_AB " << limit + 1 << "\n"
      << "        SKPNX_A_GRT_B\n"
      << "        JMP_C            ; p*p >= n_max\n"
      << "        LDNX_AB " << array_base << "\n"
      << "        APLUSB_TO_D\n"
      << "        SWAP_BD          ; B = base + p, D = p\n"
      << "        SWAP_AB\n"
      << "        LOAD_AB          ; B = flag of p\n"
      << "        LDNX_AB next\n"
      << "        COPY_AC\n"
      << "        LDNX_AB 1\n"
      << "        SKPNX_A_GRT_B    ; prime when 1 > flag\n"
      << "        JMP_C\n"
      << "        LDNX_AB inner\n"
      << "        COPY_AC\n"
      << "        LDNX_AB " << array_base << "\n"
      << "        SWAP_BD\n"
      << "        APLUSB_TO_D\n"
      << "        SWAP_AB\n"
      << "        SWAP_BD\n"
      << "        APLUSB_TO_D      ; D = base + 2p\n"
      << "        SWAP_BD\n"
      << "        SWAP_AB\n"
      << "        SWAP_BD          ; A = m, B != 0, D = p\n"
      << "inner:  SWAP_AB\n"
      << "        SAVE_AB          ; mark m composite\n"
      << "        SWAP_AB\n"
      << "        SWAP_BD\n"
      << "        APLUSB_TO_D\n"
      << "        SWAP_BD          ; B = m + p, D = p\n"
      << "        LDNX_AB " << array_base + n_max - 1 << "\n"
      << "        SWAP_AB\n"
      << "        SKPNX_A_GRT_B    ; leave once m + p is past the array\n"
      << "        JMP_C\n"
      << "        LDNX_AB next\n"
      << "        COPY_AC\n"
      << "        JMP_C\n"
      << "halt:   JMP_C\n";
    return s.str();
}

}  // namespace mechlogic::isa
