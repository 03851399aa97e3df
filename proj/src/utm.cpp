#include "mechlogic/utm.hpp"

#include <algorithm>
#include <sstream>

namespace mechlogic::utm {

const Rule &UtmSpec::rule(int state, int symbol) const {
    if (state < 0 || state >= states) {
        throw UtmError("state " + std::to_string(state) + " out of range");
    }
    if (symbol < 0 || symbol >= symbols) {
        throw UtmError("symbol code " + std::to_string(symbol) + " out of range");
    }
    return rules[static_cast<std::size_t>(state * symbols + symbol)];
}

void UtmSpec::validate() const {
    if (states < 1 || symbols < 1 || symbols > 8) {
        throw UtmError("machine needs 1..8 symbols and at least one state");
    }
    if (rules.size() != static_cast<std::size_t>(states * symbols)) {
        throw UtmError("rule table has wrong size");
    }
    for (const auto &r : rules) {
        if (r.write >= symbols || r.next >= states) {
            throw UtmError("rule refers to an unknown symbol or state");
        }
    }
}

UtmSpec random_machine(std::uint32_t seed, int states, int symbols) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> sym(0, symbols - 1), st(0, states - 1), dir(0, 1);
    UtmSpec spec{states, symbols, {}};
    for (int i = 0; i < states * symbols; ++i) {
        spec.rules.push_back({static_cast<std::uint8_t>(sym(rng)), dir(rng) == 1,
                              static_cast<std::uint8_t>(st(rng))});
    }
    return spec;
}

UtmSpec identity_machine(int states, int symbols) {
    UtmSpec spec{states, symbols, {}};
    for (int i = 0; i < states; ++i) {
        for (int j = 0; j < symbols; ++j) {
            spec.rules.push_back({static_cast<std::uint8_t>(j), true, static_cast<std::uint8_t>(i)});
        }
    }
    return spec;
}

// ---------------------------------------------------------------------------

std::uint8_t Tape::read() const { return cells_[index()]; }

void Tape::write(std::uint8_t symbol) { cells_[index()] = symbol; }

void Tape::move(bool right) {
    head_ += right ? 1 : -1;
    grow();
}

void Tape::grow() {
    if (head_ < origin_) {
        cells_.push_front(0);
        --origin_;
    } else if (index() >= cells_.size()) {
        cells_.push_back(0);
    }
}

std::vector<std::uint8_t> Tape::contents() const { return {cells_.begin(), cells_.end()}; }

bool Tape::operator==(const Tape &other) const {
    if (head_ != other.head_) return false;
    const long lo = std::min(origin_, other.origin_);
    const long hi = std::max(origin_ + static_cast<long>(cells_.size()),
                             other.origin_ + static_cast<long>(other.cells_.size()));
    auto at = [](const Tape &t, long x) -> std::uint8_t {
        const long i = x - t.origin_;
        return (i < 0 || i >= static_cast<long>(t.cells_.size())) ? 0 : t.cells_[static_cast<std::size_t>(i)];
    };
    for (long x = lo; x < hi; ++x) {
        if (at(*this, x) != at(other, x)) return false;
    }
    return true;
}

void reference_step(const UtmSpec &spec, Config &config) {
    const Rule &r = spec.rule(config.state, config.tape.read());
    config.tape.write(r.write);
    config.tape.move(r.move_right);
    config.state = r.next;
    ++config.steps;
}

// ---------------------------------------------------------------------------

std::uint8_t state_code(const UtmSpec &spec, const Layout &layout, int state) {
    return static_cast<std::uint8_t>(layout.out_base + state * spec.symbols);
}

int decode_state(const UtmSpec &spec, const Layout &layout, std::uint8_t code) {
    const int offset = int{code} - int{layout.out_base};
    if (offset < 0 || offset % spec.symbols != 0 || offset / spec.symbols >= spec.states) {
        throw UtmError("value " + std::to_string(code) + " is not a state code");
    }
    return offset / spec.symbols;
}

std::string emulator_source(const Layout &layout) {
    const int delta = int{layout.trans_base} - int{layout.out_base};
    std::ostringstream s;
    s << "; table-driven Turing machine, state code lives in D\n"
      << "        LDNX_AB " << int{layout.out_base} << "\n"
      << "        SWAP_AB\n"
      << "        SWAP_BD          ; D = code of state 0\n"
      << "loop:   LDNX_AB " << int{layout.mmr} << "\n"
      << "        LOAD_AB          ; B = symbol under the head\n"
      << "        SWAP_AB\n"
      << "        SWAP_BD\n"
      << "        APLUSB_TO_D      ; D = state + symbol\n"
      << "        SWAP_BD\n"
      << "        SWAP_AB\n"
      << "        LOAD_AB          ; B = output entry\n"
      << "        SWAP_AB\n"
      << "        SWAP_BD\n"
      << "        COPY_AC\n"
      << "        LDNX_AB " << int{layout.mmr} << "\n"
      << "        SWAP_AB\n"
      << "        SWAP_AC\n"
      << "        SAVE_AB          ; write symbol and move\n"
      << "        LDNX_AB " << delta << "\n"
      << "        SWAP_BD\n"
      << "        APLUSB_TO_D\n"
      << "        SWAP_BD\n"
      << "        SWAP_AB\n"
      << "        LOAD_AB          ; B = next state code\n"
      << "        SWAP_BD\n"
      << "        LDNX_AB loop\n"
      << "        COPY_AC\n"
      << "        JMP_C\n";
    return s.str();
}

isa::MemoryImage emulator_image(const UtmSpec &spec, const Layout &layout) {
    spec.validate();
    const int table = spec.states * spec.symbols;
    auto overlaps = [](int a, int b, int len) { return a < b + len && b < a + len; };
    if (layout.out_base + table > 256 || layout.trans_base + table > 256 ||
        overlaps(layout.out_base, layout.trans_base, table) ||
        (layout.mmr >= layout.out_base && layout.mmr < layout.out_base + table) ||
        (layout.mmr >= layout.trans_base && layout.mmr < layout.trans_base + table)) {
        throw UtmError("tables do not fit the layout");
    }
    auto program = isa::assemble(emulator_source(layout));
    if (program.size > layout.out_base || program.size > layout.trans_base) {
        throw UtmError("emulator code overlaps the tables");
    }
    isa::MemoryImage image = program.image;
    for (int i = 0; i < spec.states; ++i) {
        for (int j = 0; j < spec.symbols; ++j) {
            const Rule &r = spec.rule(i, j);
            const int k = i * spec.symbols + j;
            image[layout.out_base + k] = static_cast<std::uint8_t>(r.write | (r.move_right ? 0x08 : 0));
            image[layout.trans_base + k] = state_code(spec, layout, r.next);
        }
    }
    image.mmr_address = layout.mmr;
    return image;
}

std::uint8_t TapeDevice::read() { return tape_.read(); }

void TapeDevice::write(std::uint8_t value) {
    const std::uint8_t symbol = value & 0x07;
    if (symbol >= symbols_ || (value & 0xf0)) {
        throw UtmError("tape write of invalid code " + std::to_string(value));
    }
    tape_.write(symbol);
    tape_.move((value & 0x08) != 0);
    ++writes_;
}

LockstepReport run_lockstep(const UtmSpec &spec, std::uint64_t steps, const Layout &layout) {
    TapeDevice device(spec.symbols);
    isa::Memory memory(emulator_image(spec, layout), &device);
    isa::MachineState state;
    Config reference;
    LockstepReport report;

    // generous per-step instruction budget; the loop is ~30 instructions
    const std::uint64_t budget = 64;
    const std::uint8_t loop = isa::assemble(emulator_source(layout)).labels.at("loop");
    while (report.steps < steps) {
        const std::uint64_t before = device.writes();
        std::uint64_t n = 0;
        while (device.writes() == before) {
            isa::StepRecord rec;
            state = isa::emulate_step(state, memory, &rec);
            report.cycles += isa::cycles_for(rec.opcode);
            if (++n > budget || state.halted) {
                report.match = false;
                report.first_mismatch = report.steps;
                report.detail = "emulator stopped producing tape writes";
                return report;
            }
        }
        reference_step(spec, reference);
        ++report.steps;
        // the state register only updates after the write, so finish the loop
        while (state.pc != loop) {
            isa::StepRecord rec;
            state = isa::emulate_step(state, memory, &rec);
            report.cycles += isa::cycles_for(rec.opcode);
        }
        int emulated_state = -1;
        try {
            emulated_state = decode_state(spec, layout, state.d);
        } catch (const UtmError &e) {
            report.detail = e.what();
        }
        if (!(device.tape() == reference.tape) || emulated_state != reference.state) {
            report.match = false;
            report.first_mismatch = report.steps;
            if (report.detail.empty()) {
                report.detail = "tape or state differs after step " + std::to_string(report.steps);
            }
            return report;
        }
    }
    return report;
}

}  // namespace mechlogic::utm
