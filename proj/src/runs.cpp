#include "mechlogic/runs.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "mechlogic/circuits.hpp"

namespace mechlogic::runs {

using logic::Bus;
using logic::NetId;
using logic::Value;

Setup setup_from(const config::RunConfig &c) {
    return {c.tmpl, c.ref, c.require_omega(), {c.dt_periods, c.window_periods}};
}

double mid_threshold(const gate::LogicReference<double> &ref) {
    return 0.5 * (ref.zero_band[1] + ref.one_band[0]);
}

void TraceTable::write_csv(std::ostream &out) const {
    out << "time";
    for (const auto &n : names) out << ',' << n;
    out << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out << time[r];
        for (double v : rows[r]) out << ',' << v;
        out << '\n';
    }
}

namespace {

std::vector<NetId> stage_nets(const logic::Netlist &nl, int depth) {
    std::vector<NetId> s;
    for (int i = 1; i <= depth; ++i) s.push_back(nl.output("s" + std::to_string(i)));
    return s;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1));
    return v;
}

void fill_delays(CascadeResult &r) {
    for (const auto &e : r.edges) {
        double prev = 0;
        for (double c : e.crossing) {
            if (c < 0) break;
            r.stage_delays.push_back(c - prev);
            prev = c;
        }
    }
}

}  // namespace

double CascadeResult::mean_delay() const {
    if (stage_delays.empty()) return -1;
    double s = 0;
    for (double d : stage_delays) s += d;
    return s / static_cast<double>(stage_delays.size());
}

CascadeResult cascade_ode(const Setup &s, int depth, int toggles, double hold_periods, double sample_every,
                          int window) {
    const auto nl = circuits::build_nor_cascade(depth);
    const auto c = lower::compile(nl, s.tmpl, s.ref, s.omega);
    const auto stages = stage_nets(nl, depth);
    lower::CircuitOde ode(c, stages, {s.ode.dt_periods, window});
    const NetId x1 = nl.input("x1");
    const double mid = mid_threshold(s.ref);

    CascadeResult r;
    r.trace.names.push_back("x1");
    for (int i = 1; i <= depth; ++i) r.trace.names.push_back("s" + std::to_string(i));
    bool x = false;
    double next_sample = 0;
    auto record = [&] {
        if (ode.periods() + 1e-9 < next_sample) return;
        std::vector<double> row{x ? s.ref.one_level : s.ref.zero_level};
        for (NetId n : stages) row.push_back(ode.amplitude(n) / s.ref.u_ref);
        r.trace.time.push_back(ode.periods());
        r.trace.rows.push_back(std::move(row));
        next_sample += sample_every;
    };
    const auto per = static_cast<int>(std::llround(hold_periods));
    for (int p = 0; p < per; ++p) {
        ode.run_periods(1);
        record();
    }
    for (int k = 0; k < toggles; ++k) {
        x = !x;
        ode.set_input(x1, x);
        CascadeEdge e{x, ode.periods(), std::vector<double>(static_cast<std::size_t>(depth), -1.0)};
        for (int p = 0; p < per; ++p) {
            ode.run_periods(1);
            record();
            bool want_one = !x;
            for (int i = 0; i < depth; ++i, want_one = !want_one) {
                auto &cr = e.crossing[static_cast<std::size_t>(i)];
                if (cr >= 0) continue;
                const double a = ode.amplitude(stages[static_cast<std::size_t>(i)]) / s.ref.u_ref;
                if ((a > mid) == want_one) cr = ode.periods() - e.toggle;
            }
        }
        r.edges.push_back(std::move(e));
    }
    fill_delays(r);
    return r;
}

CascadeResult cascade_golden(int depth, int toggles, int hold_ticks) {
    const auto nl = circuits::build_nor_cascade(depth);
    const auto stages = stage_nets(nl, depth);
    logic::GoldenSim sim(nl);
    const gate::LogicReference<double> ref;
    const NetId x1 = nl.input("x1");
    CascadeResult r;
    r.trace.names.push_back("x1");
    for (int i = 1; i <= depth; ++i) r.trace.names.push_back("s" + std::to_string(i));
    bool x = false;
    auto level = [&](Value v) {
        return v == Value::One ? ref.one_level : v == Value::Zero ? ref.zero_level : 0.0;
    };
    auto record = [&] {
        std::vector<double> row{x ? ref.one_level : ref.zero_level};
        for (NetId n : stages) row.push_back(level(sim.get(n)));
        r.trace.time.push_back(static_cast<double>(sim.ticks()));
        r.trace.rows.push_back(std::move(row));
    };
    sim.set(x1, Value::Zero);
    sim.set(nl.input("x2"), Value::Zero);
    for (int t = 0; t < hold_ticks; ++t) {
        sim.tick();
        record();
    }
    for (int k = 0; k < toggles; ++k) {
        x = !x;
        sim.set(x1, x ? Value::One : Value::Zero);
        CascadeEdge e{x, static_cast<double>(sim.ticks()), std::vector<double>(static_cast<std::size_t>(depth), -1.0)};
        for (int t = 0; t < hold_ticks; ++t) {
            sim.tick();
            record();
            bool want_one = !x;
            for (int i = 0; i < depth; ++i, want_one = !want_one) {
                auto &cr = e.crossing[static_cast<std::size_t>(i)];
                if (cr < 0 && sim.get(stages[static_cast<std::size_t>(i)]) == (want_one ? Value::One : Value::Zero)) {
                    cr = static_cast<double>(sim.ticks()) - e.toggle;
                }
            }
        }
        r.edges.push_back(std::move(e));
    }
    fill_delays(r);
    return r;
}

// ---------------------------------------------------------------------------

double SpreadResult::spread(bool one, int stage) const {
    double lo = 1e300, hi = -1e300;
    for (const auto &p : points) {
        if (p.row_one != one) continue;
        const double v = p.stage.at(static_cast<std::size_t>(stage - 1));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi >= lo ? hi - lo : 0;
}

SpreadResult level_restoration(const Setup &s, int grid, int depth, double settle_periods) {
    const auto nl = circuits::build_nor_cascade(depth);
    const auto c = lower::compile(nl, s.tmpl, s.ref, s.omega);
    const auto stages = stage_nets(nl, depth);
    const auto zero = linspace(s.ref.zero_band[0], s.ref.zero_band[1], grid);
    const auto one = linspace(s.ref.one_band[0], s.ref.one_band[1], grid);
    SpreadResult r;
    for (bool row_one : {true, false}) {
        for (double v1 : row_one ? zero : one) {
            for (double v2 : zero) {
                lower::CircuitOde ode(c, stages, s.ode);
                ode.set_input_level(nl.input("x1"), v1);
                ode.set_input_level(nl.input("x2"), v2);
                ode.run_periods(settle_periods);
                SpreadPoint p{row_one, v1, v2, {}};
                for (NetId n : stages) p.stage.push_back(ode.amplitude(n) / s.ref.u_ref);
                r.points.push_back(std::move(p));
            }
        }
    }
    return r;
}

// ---------------------------------------------------------------------------

std::vector<AdderRow> adder_sweep_ode(const Setup &s, double settle_periods, TraceTable *trace,
                                      double sample_every) {
    const auto nl = circuits::build_adder2();
    const auto c = lower::compile(nl, s.tmpl, s.ref, s.omega);
    const auto sum = nl.bus("s");
    lower::CircuitOde ode(c, sum, s.ode);
    ode.run_periods(settle_periods);
    std::stringstream base;
    ode.save(base);
    const std::string blob = base.str();
    if (trace) trace->names = {"case", "s0", "s1", "s2"};

    std::vector<AdderRow> rows;
    for (unsigned a = 0; a < 4; ++a) {
        for (unsigned b = 0; b < 4; ++b) {
            std::istringstream in(blob);
            ode.load(in);
            const double t0 = ode.periods();
            ode.set_bus(nl.bus("a"), a);
            ode.set_bus(nl.bus("b"), b);
            const auto steps = static_cast<int>(std::llround(settle_periods / sample_every));
            for (int k = 0; k < steps; ++k) {
                ode.run_periods(sample_every);
                if (trace) {
                    trace->time.push_back(ode.periods() - t0);
                    std::vector<double> row{static_cast<double>(4 * a + b)};
                    for (NetId n : sum) row.push_back(ode.amplitude(n) / s.ref.u_ref);
                    trace->rows.push_back(std::move(row));
                }
            }
            AdderRow r{a, b, a + b, {}, {}};
            r.sum = ode.bus_value(sum);
            for (std::size_t i = 0; i < 3; ++i) r.amplitude[i] = ode.amplitude(sum[i]) / s.ref.u_ref;
            rows.push_back(r);
        }
    }
    return rows;
}

std::vector<AdderRow> adder_sweep_golden() {
    const auto nl = circuits::build_adder2();
    const gate::LogicReference<double> ref;
    std::vector<AdderRow> rows;
    for (unsigned a = 0; a < 4; ++a) {
        for (unsigned b = 0; b < 4; ++b) {
            logic::GoldenSim sim(nl);
            sim.set_bus(nl.bus("a"), std::uint64_t{0});
            sim.set_bus(nl.bus("b"), std::uint64_t{0});
            sim.settle();
            sim.set_bus(nl.bus("a"), a);
            sim.set_bus(nl.bus("b"), b);
            sim.run_until_stable(1000);
            AdderRow r{a, b, a + b, {}, {}};
            const auto v = sim.get_bus(nl.bus("s"));
            if (v) r.sum = static_cast<unsigned>(*v);
            const Bus s = nl.bus("s");
            for (std::size_t i = 0; i < 3; ++i) {
                r.amplitude[i] = sim.get(s[i]) == Value::One ? ref.one_level : ref.zero_level;
            }
            rows.push_back(r);
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------

LatchResult latch_ode(const Setup &s, const config::ClockSchedule &clock, double sample_every) {
    logic::Netlist nl;
    const NetId d = nl.add_input("d");
    const NetId en = nl.add_input("en");
    const auto l = logic::build_latch(nl, d, en);
    nl.add_output(l.out, "out");
    nl.add_output(l.q, "q");
    nl.freeze();
    const auto c = lower::compile(nl, s.tmpl, s.ref, s.omega);
    lower::CircuitOde ode(c, {l.out, l.q}, s.ode);

    LatchResult r;
    r.pulse_periods = clock.pulse_periods;
    r.trace.names = {"d", "en", "q", "out"};
    bool dv = false, ev = false;
    auto lv = [&](bool b) { return b ? s.ref.one_level : s.ref.zero_level; };
    auto run = [&](double periods) {
        const auto n = static_cast<int>(std::llround(periods / sample_every));
        for (int k = 0; k < n; ++k) {
            ode.run_periods(sample_every);
            r.trace.time.push_back(ode.periods());
            r.trace.rows.push_back({lv(dv), lv(ev), ode.amplitude(l.q) / s.ref.u_ref,
                                    ode.amplitude(l.out) / s.ref.u_ref});
        }
    };
    auto set = [&](bool dn, bool en_on) {
        dv = dn;
        ev = en_on;
        ode.set_input(d, dv);
        ode.set_input(en, ev);
    };
    const double idle = clock.cycle_periods - clock.pulse_periods;

    // store 0
    set(false, true);
    run(clock.pulse_periods);
    set(false, false);
    run(idle);
    r.initial_zero = ode.level(l.out) == gate::LogicLevel::Zero;

    // d rises while idle: nothing happens
    set(true, false);
    run(idle);
    r.held_while_idle = ode.level(l.out) == gate::LogicLevel::Zero;

    // pulse stores 1; watch the output through the pulse
    const std::size_t pulse_row = r.trace.rows.size();
    const double t_pulse = ode.periods();
    set(true, true);
    run(clock.pulse_periods);
    r.quiet_during_pulse = true;
    for (std::size_t k = pulse_row; k < r.trace.rows.size(); ++k) {
        if (gate::classify(r.trace.rows[k][3] * s.ref.u_ref, s.ref, gate::Quantity::Displacement) != gate::LogicLevel::Zero) {
            r.quiet_during_pulse = false;
        }
    }
    set(true, false);
    run(idle);
    r.stored_one = ode.level(l.out) == gate::LogicLevel::One;
    const double z_hi = s.ref.zero_band[1];
    for (std::size_t k = pulse_row; k < r.trace.rows.size(); ++k) {
        if (r.trace.rows[k][3] > z_hi) {
            r.first_change = r.trace.time[k] - t_pulse;
            break;
        }
    }
    // d falls while idle: 1 is held
    set(false, false);
    run(idle);
    r.stored_one = r.stored_one && ode.level(l.out) == gate::LogicLevel::One;
    return r;
}

}  // namespace mechlogic::runs
