#include <doctest.h>

#include "mechlogic/utm.hpp"

using namespace mechlogic;
using namespace mechlogic::utm;

TEST_CASE("tape grows both ways and compares by content") {
    Tape t;
    t.move(false);
    t.write(2);
    t.move(true);
    t.move(true);
    Tape u;
    u.move(true);
    CHECK_FALSE(t == u);
    u.move(false);
    u.move(false);
    u.write(2);
    u.move(true);
    u.move(true);
    CHECK(t == u);
}

TEST_CASE("state codes round trip") {
    const auto spec = random_machine(3, 4, 3);
    Layout layout;
    for (int s = 0; s < spec.states; ++s) {
        CHECK(decode_state(spec, layout, state_code(spec, layout, s)) == s);
    }
    CHECK_THROWS_AS(decode_state(spec, layout, 161), UtmError);
}

TEST_CASE("emulator follows random machines") {
    for (std::uint32_t seed = 1; seed <= 5; ++seed) {
        CAPTURE(seed);
        const auto spec = random_machine(seed, 4, 3);
        const auto report = run_lockstep(spec, 100);
        CHECK(report.match);
        CHECK(report.steps == 100);
    }
}

TEST_CASE("identity machine and bad tables") {
    CHECK(run_lockstep(identity_machine(2, 2), 20).match);
    UtmSpec bad{2, 2, {{0, true, 5}, {0, true, 0}, {0, true, 0}, {0, true, 0}}};
    CHECK_THROWS_AS(bad.validate(), UtmError);
    TapeDevice dev(2);
    CHECK_THROWS_AS(dev.write(0x13), UtmError);
}
