#include <doctest.h>

#include <sstream>

#include "mechlogic/config.hpp"
#include "mechlogic/cosim.hpp"

using namespace mechlogic;
using cosim::CosimEvent;

namespace {

std::vector<CosimEvent> golden_log(const isa::MemoryImage &img, int cycles) {
    const auto cpu = circuits::build_processor();
    circuits::GoldenCpu g(cpu, img);
    std::vector<CosimEvent> log;
    for (int k = 0; k < cycles; ++k) {
        const auto c = g.step();
        if (c.write) log.push_back({static_cast<std::uint64_t>(k), CosimEvent::Kind::Write, c.write->address, c.write->data});
        log.push_back({static_cast<std::uint64_t>(k), CosimEvent::Kind::Read, c.read_addr, g.memory().image()[c.read_addr]});
    }
    return log;
}

}  // namespace

TEST_CASE("halt detection: self-jump found, counting loop not") {
    const auto loop = isa::assemble("SWAP_AB\nSWAP_AB\nstop: JMP_C\n");
    // C is 0 after reset, so JMP_C jumps back to 0; a real self-jump needs C set
    const auto self = isa::assemble("LDNX_AB 6\nSWAP_AC\nSWAP_AB\nSWAP_AB\nSWAP_AB\nJMP_C\n");
    const auto h = cosim::halt_detect(golden_log(self.image, 20));
    REQUIRE(h.has_value());
    CHECK(*h > 5);
    CHECK_FALSE(cosim::halt_detect(golden_log(loop.image, 20)).has_value());

    std::vector<CosimEvent> log{{1, CosimEvent::Kind::Read, 9, 0},
                                {2, CosimEvent::Kind::Write, 9, 1},
                                {2, CosimEvent::Kind::Read, 9, 0},
                                {3, CosimEvent::Kind::Read, 9, 0}};
    CHECK(cosim::halt_detect(log) == std::optional<std::uint64_t>(3));
}

TEST_CASE("event log CSV and memory PGM") {
    std::ostringstream csv;
    cosim::write_events_csv(csv, {{0, CosimEvent::Kind::Read, 1, 2}, {4, CosimEvent::Kind::Write, 200, 255}});
    CHECK(csv.str() == "cycle,kind,address,data\n0,read,1,2\n4,write,200,255\n");

    isa::MemoryImage img;
    img[0] = 7;
    img[255] = 0;
    img[17] = 0;
    std::ostringstream pgm;
    cosim::write_pgm(pgm, img);
    const std::string s = pgm.str();
    const std::string header = "P5\n16 16\n255\n";
    REQUIRE(s.size() == header.size() + 256);
    CHECK(s.substr(0, header.size()) == header);
    CHECK(static_cast<unsigned char>(s[header.size()]) != static_cast<unsigned char>(s[header.size() + 17]));
}

TEST_CASE("device: reads and writes logged, snapshots taken in order") {
    isa::MemoryImage img;
    img[3] = 42;
    cosim::CosimDevice dev(img);
    CHECK(dev.read(0, 3) == 42);
    dev.write(0, 3, 9);
    dev.snapshot();
    CHECK(dev.read(1, 3) == 9);
    dev.snapshot();
    REQUIRE(dev.events().size() == 3);
    CHECK(dev.events()[1].kind == CosimEvent::Kind::Write);
    REQUIRE(dev.snapshots().size() == 2);
    CHECK(dev.snapshots()[0][3] == 9);
    CHECK(dev.initial()[3] == 42);
    dev.restore(dev.initial());
    CHECK(dev.memory().image()[3] == 42);
}

TEST_CASE("sampling policy refuses decision instants the clock cannot honour") {
    const auto cpu = circuits::build_processor();
    const auto tmpl = gate::NorTemplate<double>::reconstructed();
    const auto c = lower::compile(cpu.netlist, tmpl, {}, 16.768);
    config::ClockSchedule clock;
    {
        cosim::SamplingPolicy p;
        p.read_offset = clock.sample_periods - 1;
        cosim::CosimDevice dev({}, nullptr, p);
        CHECK_THROWS(cosim::ProcessorCosim(cpu, c, dev, clock));
    }
    {
        cosim::SamplingPolicy p;
        p.window_periods = 20;
        cosim::CosimDevice dev({}, nullptr, p);
        CHECK_THROWS(cosim::ProcessorCosim(cpu, c, dev, clock));
    }
    {
        cosim::SamplingPolicy p;
        p.commit_windows_before_pulse = 400;
        cosim::CosimDevice dev({}, nullptr, p);
        CHECK_THROWS(cosim::ProcessorCosim(cpu, c, dev, clock));
    }
}

TEST_CASE("processor checkpoint round trip") {
    const auto cpu = circuits::build_processor();
    const auto tmpl = gate::NorTemplate<double>::reconstructed();
    const auto c = lower::compile(cpu.netlist, tmpl, {}, 16.768);
    isa::MemoryImage img;
    img[5] = 77;
    cosim::CosimDevice dev(img);
    cosim::ProcessorCosim a(cpu, c, dev, {});
    a.ode().run_periods(3);
    dev.write(0, 6, 1);
    std::stringstream blob;
    a.save_checkpoint(blob);

    cosim::CosimDevice dev2(isa::MemoryImage{});
    cosim::ProcessorCosim b(cpu, c, dev2, {});
    b.load_checkpoint(blob);
    CHECK(b.cycles() == a.cycles());
    CHECK(dev2.memory().image() == dev.memory().image());
    CHECK(b.ode().state().u == a.ode().state().u);
    CHECK(b.ode().steps() == a.ode().steps());

    std::stringstream bad("not a checkpoint");
    CHECK_THROWS(b.load_checkpoint(bad));
}

TEST_CASE("config round trip and validation") {
    config::RunConfig c;
    c.omega = 16.5;
    c.tmpl.channel.q = 123;
    c.clock.cycle_periods = 30000;
    std::stringstream s;
    config::write(s, c);
    const auto back = config::parse(s);
    CHECK(back.omega == c.omega);
    CHECK(back.tmpl.channel.q == 123);
    CHECK(back.clock.cycle_periods == 30000);
    CHECK(back.require_omega() == 16.5);

    std::stringstream unknown("no_such_key = 1\n");
    CHECK_THROWS_AS(config::parse(unknown), config::ConfigError);
    std::stringstream badnum("omega = fast\n");
    CHECK_THROWS_AS(config::parse(badnum), config::ConfigError);
    config::RunConfig none;
    CHECK_THROWS_AS(none.require_omega(), config::ConfigError);
}
