#pragma once

// Time-domain experiments on compiled circuits: cascade delay, level
// restoration, adder transitions, latch timing. Shared by the CLI and the
// acceptance checks.

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mechlogic/config.hpp"
#include "mechlogic/lowering.hpp"

namespace mechlogic::runs {

struct Setup {
    gate::NorTemplate<double> tmpl;
    gate::LogicReference<double> ref;
    double omega = 0;
    lower::OdeSettings ode;
};

/// Throws ConfigError when the config has no calibrated frequency.
Setup setup_from(const config::RunConfig &c);

/// Amplitude ratio halfway between the Zero band top and the One band bottom.
double mid_threshold(const gate::LogicReference<double> &ref);

/// Amplitude samples of a few nets over time, in units of u_ref.
struct TraceTable {
    std::vector<std::string> names;
    std::vector<double> time;  // periods
    std::vector<std::vector<double>> rows;
    void write_csv(std::ostream &out) const;
};

// ---------------------------------------------------------------------------
// Cascade of NOR stages: stage 1 = NOR(x1, x2), later stages invert.

struct CascadeEdge {
    bool input_one = false;
    double toggle = 0;                // periods
    std::vector<double> crossing;     // per stage; negative if never crossed
};

struct CascadeResult {
    TraceTable trace;
    std::vector<CascadeEdge> edges;
    /// Per-stage delays over all edges (crossing(i) - crossing(i-1)).
    std::vector<double> stage_delays;
    double mean_delay() const;
};

CascadeResult cascade_ode(const Setup &s, int depth = 3, int toggles = 4, double hold_periods = 4000,
                          double sample_every = 5, int window = 10);

/// Unit-delay twin: same schema, one sample per tick, delays in ticks.
CascadeResult cascade_golden(int depth = 3, int toggles = 4, int hold_ticks = 20);

// ---------------------------------------------------------------------------
// Level restoration over an n x n grid of in-band inputs

struct SpreadPoint {
    bool row_one;  // true: both inputs in the Zero band (output One)
    double x1, x2;
    std::vector<double> stage;  // settled amplitude ratio per stage
};

struct SpreadResult {
    std::vector<SpreadPoint> points;
    /// Max - min of the settled ratio, by output value and stage.
    double spread(bool one, int stage) const;
};

SpreadResult level_restoration(const Setup &s, int grid = 5, int depth = 3, double settle_periods = 8000);

// ---------------------------------------------------------------------------
// 2-bit adder: each of the 16 input pairs applied to the settled (0, 0) state

struct AdderRow {
    unsigned a = 0, b = 0;
    unsigned expected = 0;
    std::optional<unsigned> sum;  // nullopt if any bit ends Ambiguous
    std::array<double, 3> amplitude{};
};

std::vector<AdderRow> adder_sweep_ode(const Setup &s, double settle_periods = 8000,
                                      TraceTable *trace = nullptr, double sample_every = 20);
std::vector<AdderRow> adder_sweep_golden();

// ---------------------------------------------------------------------------
// Single latch: store on a pulse, hold while idle

struct LatchResult {
    TraceTable trace;         // d, en and the delayed output
    bool initial_zero = false;      // stored 0 after the first pulse
    bool held_while_idle = false;   // d -> 1 without a pulse leaves 0
    bool quiet_during_pulse = false;  // output still Zero when the pulse ends
    bool stored_one = false;        // output One after the pulse
    double first_change = -1;       // periods after the pulse starts
    double pulse_periods = 0;
};

LatchResult latch_ode(const Setup &s, const config::ClockSchedule &clock, double sample_every = 10);

}  // namespace mechlogic::runs
