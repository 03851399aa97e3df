// mechlogic command-line driver. Exit codes: 0 ok, 1 logic mismatch against
// the digital oracle, 2 simulation fault, 3 configuration or usage error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "mechlogic/circuits.hpp"
#include "mechlogic/config.hpp"
#include "mechlogic/cosim.hpp"
#include "mechlogic/isa.hpp"
#include "mechlogic/runs.hpp"
#include "mechlogic/utm.hpp"

namespace fs = std::filesystem;
using namespace mechlogic;

namespace {

constexpr int kOk = 0, kMismatch = 1, kFault = 2, kUsage = 3;

struct Global {
    std::string config_path;
    std::string out_dir;
    config::RunConfig cfg;

    fs::path out(const std::string &name) const {
        fs::path d = cfg.output_dir;
        fs::create_directories(d);
        return d / name;
    }
};

std::ofstream open_out(const fs::path &p) {
    std::ofstream f(p);
    if (!f) throw config::ConfigError("cannot write " + p.string());
    f << std::setprecision(10);
    return f;
}

isa::MemoryImage load_image(const std::string &path) {
    if (path.ends_with(".hex")) {
        std::ifstream f(path);
        if (!f) throw config::ConfigError("cannot read " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return isa::from_hex_dump(ss.str());
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) throw config::ConfigError("cannot read " + path);
    return isa::read_binary(f);
}

const char *yes(bool b) { return b ? "1" : "0"; }

// ---------------------------------------------------------------------------

int cmd_calibrate(const Global &g, int points, int settle, double lo, double hi, const std::string &write_to) {
    gate::FrequencySweep sw;
    sw.points = points;
    sw.settle_periods = settle;
    sw.lo = lo;
    sw.hi = hi;
    const auto r = gate::calibrate_operating_frequency(g.cfg.tmpl, g.cfg.ref, sw);
    auto f = open_out(g.out("calibration.csv"));
    f << "in1,in2,F_G1,F_G2,roots,u_C_amplitude,level,margin\n";
    for (const auto &p : r.points) {
        f << p.in1 << ',' << p.in2 << ',' << p.f1 << ',' << p.f2 << ',' << p.roots << ',' << p.amplitude << ','
          << gate::to_string(p.level) << ',' << p.margin << '\n';
    }
    std::cout << std::setprecision(10) << "omega " << r.omega << "  margin " << r.margin << "  output margin "
              << r.output_margin << "  fold distance " << r.fold_distance << "  settled truth-table margin "
              << r.settle_margin << '\n';
    if (!r.valid) {
        std::cout << "no frequency gives a valid NOR with this template\n";
        return kMismatch;
    }
    auto cfg = g.cfg;
    cfg.omega = r.omega;
    const fs::path dest = write_to.empty() ? g.out("calibration.cfg") : fs::path(write_to);
    config::save(dest.string(), cfg);
    std::cout << "wrote " << dest.string() << '\n';
    return kOk;
}

int cmd_nor_map(const Global &g, int grid, double fmax) {
    const double w = g.cfg.require_omega();
    auto f = open_out(g.out("nor_map.csv"));
    f << "F_G1,F_G2,u_C_amplitude,level\n";
    const double top = fmax * g.cfg.ref.f_ref;
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            const double f1 = top * i / (grid - 1), f2 = top * j / (grid - 1);
            // several rows for one input pair where the gate is multistable
            for (const auto &r : gate::steady_state_nor(g.cfg.tmpl, w, f1, f2)) {
                f << f1 << ',' << f2 << ',' << r.channel_amplitude << ','
                  << gate::to_string(gate::classify(r.channel_amplitude, g.cfg.ref, gate::Quantity::Displacement))
                  << '\n';
            }
        }
    }
    std::cout << "wrote " << g.out("nor_map.csv").string() << '\n';
    return kOk;
}

int cmd_truth_table(const Global &g, bool golden, int settle, bool corners) {
    const double w = g.cfg.require_omega();
    auto f = open_out(g.out(golden ? "truth_table_golden.csv" : "truth_table_ode.csv"));
    f << "in1,in2,F_G1,F_G2,u_C_amplitude,level,expected\n";
    bool ok = true;
    std::vector<gate::OdeRow> rows;
    if (golden) {
        for (int r = 0; r < 4; ++r) {
            const bool in1 = r & 2, in2 = r & 1;
            const auto pts = gate::band_points(g.cfg.ref, in1, in2);
            for (std::size_t k = 0; k < (corners ? pts.size() : 1); ++k) {
                const auto roots = gate::steady_state_nor(g.cfg.tmpl, w, pts[k][0], pts[k][1]);
                gate::OdeRow row{in1, in2, pts[k][0], pts[k][1], roots[0].channel_amplitude,
                                 gate::LogicLevel::Ambiguous, !in1 && !in2};
                if (roots.size() == 1) {
                    row.level = gate::classify(row.amplitude, g.cfg.ref, gate::Quantity::Displacement);
                }
                rows.push_back(row);
            }
        }
    } else {
        rows = gate::truth_table_ode(g.cfg.tmpl, g.cfg.ref, w, settle, corners);
    }
    for (const auto &r : rows) {
        const auto want = r.expected_one ? gate::LogicLevel::One : gate::LogicLevel::Zero;
        ok = ok && r.level == want;
        f << r.in1 << ',' << r.in2 << ',' << r.f1 << ',' << r.f2 << ',' << r.amplitude << ','
          << gate::to_string(r.level) << ',' << (r.expected_one ? "One" : "Zero") << '\n';
        std::cout << r.in1 << ' ' << r.in2 << "  " << std::setw(10) << r.amplitude / g.cfg.ref.u_ref << " u_ref  "
                  << gate::to_string(r.level) << '\n';
    }
    return ok ? kOk : kMismatch;
}

int cmd_cascade(const Global &g, bool golden, int depth, int toggles, double hold) {
    const auto r = golden ? runs::cascade_golden(depth, toggles, static_cast<int>(hold))
                          : runs::cascade_ode(runs::setup_from(g.cfg), depth, toggles, hold);
    const std::string tag = golden ? "golden" : "ode";
    auto t = open_out(g.out("cascade_trace_" + tag + ".csv"));
    r.trace.write_csv(t);
    auto d = open_out(g.out("cascade_delays_" + tag + ".csv"));
    d << "edge,input,stage,crossing,delay\n";
    bool ok = true;
    for (std::size_t e = 0; e < r.edges.size(); ++e) {
        double prev = 0;
        for (std::size_t i = 0; i < r.edges[e].crossing.size(); ++i) {
            const double c = r.edges[e].crossing[i];
            ok = ok && c >= 0;
            d << e << ',' << r.edges[e].input_one << ',' << i + 1 << ',' << c << ',' << (c >= 0 ? c - prev : -1) << '\n';
            prev = c;
        }
    }
    std::cout << "mean delay per stage " << r.mean_delay() << (golden ? " ticks\n" : " periods\n");
    return ok ? kOk : kMismatch;
}

int cmd_adder(const Global &g, bool golden) {
    runs::TraceTable trace;
    const auto rows = golden ? runs::adder_sweep_golden()
                             : runs::adder_sweep_ode(runs::setup_from(g.cfg), 8000, &trace);
    const std::string tag = golden ? "golden" : "ode";
    auto f = open_out(g.out("adder_" + tag + ".csv"));
    f << "a,b,expected,sum,ok,s0,s1,s2\n";
    bool ok = true;
    for (const auto &r : rows) {
        const bool good = r.sum && *r.sum == r.expected;
        ok = ok && good;
        f << r.a << ',' << r.b << ',' << r.expected << ',' << (r.sum ? std::to_string(*r.sum) : "X") << ','
          << yes(good) << ',' << r.amplitude[0] << ',' << r.amplitude[1] << ',' << r.amplitude[2] << '\n';
    }
    if (!golden) {
        auto t = open_out(g.out("adder_trace_ode.csv"));
        trace.write_csv(t);
    }
    std::cout << (ok ? "all 16 sums correct\n" : "adder mismatch\n");
    return ok ? kOk : kMismatch;
}

int cmd_sqrt(const Global &g, bool golden, std::uint64_t n, int width, int cycles) {
    const auto nl = circuits::build_sqrt_fsm(width);
    if (n >> (2 * width)) throw config::ConfigError("n does not fit in " + std::to_string(2 * width) + " bits");
    if (cycles <= 0) cycles = width + 2;
    std::vector<std::optional<std::uint64_t>> roots;
    if (golden) {
        roots = circuits::sqrt_golden_run(nl, n, cycles);
    } else {
        const auto s = runs::setup_from(g.cfg);
        const auto c = lower::compile(nl, s.tmpl, s.ref, s.omega);
        roots = cosim::sqrt_ode_run(nl, c, n, cycles, g.cfg.clock, s.ode);
    }
    auto f = open_out(g.out(std::string("sqrt_") + (golden ? "golden" : "ode") + ".csv"));
    f << "cycle,root\n";
    for (std::size_t i = 0; i < roots.size(); ++i) {
        f << i + 1 << ',' << (roots[i] ? std::to_string(*roots[i]) : "X") << '\n';
    }
    const auto want = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
    if (!roots.back()) {
        std::cout << "X\n";
        return kMismatch;
    }
    std::cout << *roots.back() << '\n';
    return *roots.back() == want ? kOk : kMismatch;
}

int cmd_assemble(const Global &g, const std::string &src, const std::string &program, int n_max,
                 std::string out) {
    std::string text;
    std::string stem;
    if (!program.empty()) {
        if (program != "sieve") throw config::ConfigError("unknown built-in program " + program);
        text = isa::sieve_program(n_max);
        stem = "sieve";
    } else {
        std::ifstream f(src);
        if (!f) throw config::ConfigError("cannot read " + src);
        std::stringstream ss;
        ss << f.rdbuf();
        text = ss.str();
        stem = fs::path(src).stem().string();
    }
    const auto p = isa::assemble(text);
    const fs::path dest = out.empty() ? g.out(stem + ".bin") : fs::path(out);
    std::ofstream bin(dest, std::ios::binary);
    if (!bin) throw config::ConfigError("cannot write " + dest.string());
    isa::write_binary(bin, p.image);
    auto hex = open_out(fs::path(dest).replace_extension(".hex"));
    hex << isa::to_hex_dump(p.image);
    std::cout << p.size << " bytes -> " << dest.string() << '\n';
    return kOk;
}

int cmd_emulate(const Global &g, const std::string &image, std::uint64_t max_cycles) {
    const auto img = load_image(image);
    const auto r = isa::run_until_halt(img, max_cycles);
    auto hex = open_out(g.out("memory.hex"));
    hex << isa::to_hex_dump(r.memory);
    auto tr = open_out(g.out("trace.csv"));
    isa::write_trace_csv(tr, r.trace);
    std::cout << isa::to_hex_dump(r.memory);
    std::cout << "halted after " << r.cycles << " cycles, " << r.instructions << " instructions\n";
    return kOk;
}

struct CpuRunOptions {
    std::string image;
    std::uint64_t cycles = 20;
    bool golden = false;
    bool snapshots = false;
    bool until_halt = false;
    std::string checkpoint;
    std::uint64_t checkpoint_every = 1;
    std::string resume;
};

int cmd_cpu_run(const Global &g, const CpuRunOptions &o) {
    const auto img = load_image(o.image);
    const auto cpu = circuits::build_processor();
    isa::ClockedMachine model(img);
    std::vector<cosim::CosimEvent> events;
    std::vector<isa::MemoryImage> frames;
    auto cyc = open_out(g.out(std::string("cpu_cycles_") + (o.golden ? "golden" : "ode") + ".csv"));
    cyc << "cycle,read_addr,write,write_addr,write_data,pc,a,b,c,d,overflow,match\n";
    bool ok = true;
    auto check = [&](std::uint64_t k, std::uint8_t ra, const std::optional<isa::WriteEvent> &w,
                     const isa::CycleState &st) {
        const std::uint8_t model_ra = model.state().arch.pc;
        const auto mw = model.clock();
        auto expect = model.state();
        expect.arch.halted = false;
        const bool m = ra == model_ra && w == mw && st == expect;
        ok = ok && m;
        cyc << k << ',' << int{ra} << ',' << yes(w.has_value()) << ',' << (w ? int{w->address} : 0) << ','
            << (w ? int{w->data} : 0) << ',' << int{st.arch.pc} << ',' << int{st.arch.a} << ',' << int{st.arch.b}
            << ',' << int{st.arch.c} << ',' << int{st.arch.d} << ',' << yes(st.arch.overflow) << ',' << yes(m)
            << '\n';
        cyc.flush();
        return m;
    };

    std::optional<std::uint64_t> halt;
    if (o.golden) {
        circuits::GoldenCpu cpu_sim(cpu, img);
        for (std::uint64_t k = 0; k < o.cycles; ++k) {
            const auto c = cpu_sim.step();
            if (c.write) events.push_back({k, cosim::CosimEvent::Kind::Write, c.write->address, c.write->data});
            const std::uint8_t data = cpu_sim.memory().image()[c.read_addr];
            events.push_back({k, cosim::CosimEvent::Kind::Read, c.read_addr, data});
            frames.push_back(cpu_sim.memory().image());
            if (!check(k, c.read_addr, c.write, c.state)) break;
            halt = cosim::halt_detect(events);
            if (o.until_halt && halt) break;
        }
    } else {
        const auto s = runs::setup_from(g.cfg);
        std::cerr << "compiling " << cpu.netlist.gate_count() << " gates\n";
        const auto compiled = lower::compile(cpu.netlist, s.tmpl, s.ref, s.omega);
        cosim::SamplingPolicy pol;
        pol.window_periods = s.ode.window_periods;
        pol.read_offset = g.cfg.clock.sample_periods;
        cosim::CosimDevice dev(img, nullptr, pol);
        cosim::ProcessorCosim sim(cpu, compiled, dev, g.cfg.clock, s.ode, true);
        if (!o.resume.empty()) {
            std::ifstream in(o.resume, std::ios::binary);
            if (!in) throw config::ConfigError("cannot read " + o.resume);
            sim.load_checkpoint(in);
            // replay the oracle up to the checkpoint
            for (std::uint64_t k = 0; k < sim.cycles(); ++k) model.clock();
            if (model.memory().image().bytes != dev.memory().image().bytes) {
                throw config::ConfigError("checkpoint memory does not match the program replay");
            }
            std::cerr << "resumed at cycle " << sim.cycles() << '\n';
        } else {
            sim.reset();
        }
        while (sim.cycles() < o.cycles) {
            const auto c = sim.step();
            std::cerr << "cycle " << c.cycle << "  pc " << int{c.state->arch.pc} << "  t " << sim.ode().periods()
                      << " periods\n";
            if (!check(c.cycle, c.read_addr, c.write, *c.state)) break;
            if (!o.checkpoint.empty() && sim.cycles() % o.checkpoint_every == 0) {
                const std::string tmp = o.checkpoint + ".tmp";
                {
                    std::ofstream cp(tmp, std::ios::binary);
                    sim.save_checkpoint(cp);
                }
                fs::rename(tmp, o.checkpoint);
            }
            halt = cosim::halt_detect(dev.events());
            if (o.until_halt && halt) break;
        }
        events = dev.events();
        frames = dev.snapshots();
    }

    auto ev = open_out(g.out(std::string("events_") + (o.golden ? "golden" : "ode") + ".csv"));
    cosim::write_events_csv(ev, events);
    auto hex = open_out(g.out(std::string("memory_") + (o.golden ? "golden" : "ode") + ".hex"));
    hex << isa::to_hex_dump(frames.empty() ? img : frames.back());
    if (o.snapshots) {
        const fs::path dir = g.out(std::string("snapshots_") + (o.golden ? "golden" : "ode"));
        fs::create_directories(dir);
        for (std::size_t k = 0; k < frames.size(); ++k) {
            std::ostringstream name;
            name << "cycle_" << std::setw(6) << std::setfill('0') << k << ".pgm";
            std::ofstream p(dir / name.str(), std::ios::binary);
            cosim::write_pgm(p, frames[k]);
        }
    }
    if (halt) std::cout << "halt detected at cycle " << *halt << '\n';
    std::cout << (ok ? "lockstep with the emulator held\n" : "mismatch against the emulator\n");
    return ok ? kOk : kMismatch;
}

int cmd_utm_run(const Global &g, std::uint64_t steps, std::uint32_t seed, int machines) {
    auto f = open_out(g.out("utm.csv"));
    f << "seed,steps,cycles,match,first_mismatch\n";
    bool ok = true;
    for (int m = 0; m < machines; ++m) {
        const auto spec = utm::random_machine(seed + static_cast<std::uint32_t>(m));
        const auto r = utm::run_lockstep(spec, steps);
        ok = ok && r.match;
        f << seed + static_cast<std::uint32_t>(m) << ',' << r.steps << ',' << r.cycles << ',' << yes(r.match) << ','
          << r.first_mismatch << '\n';
        std::cout << "machine " << seed + static_cast<std::uint32_t>(m) << ": " << r.steps << " steps, " << r.cycles
                  << " cycles, " << (r.match ? "tape-for-tape match" : "MISMATCH " + r.detail) << '\n';
    }
    return ok ? kOk : kMismatch;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Mechanical NOR logic: compile, simulate and check against digital models"};
    app.require_subcommand(1);
    Global g;
    app.add_option("-c,--config", g.config_path, "key=value run configuration");
    app.add_option("-o,--out", g.out_dir, "output directory (overrides the config)");

    auto *cal = app.add_subcommand("calibrate", "find the operating frequency and write a config");
    int cal_points = 8001, cal_settle = 3000;
    double cal_lo = 0, cal_hi = 0;
    std::string cal_write;
    cal->add_option("--points", cal_points, "coarse sweep points");
    cal->add_option("--lo", cal_lo, "sweep start (rad/time)");
    cal->add_option("--hi", cal_hi, "sweep end (rad/time)");
    cal->add_option("--settle", cal_settle, "periods for the time-domain check (0 skips it)");
    cal->add_option("--write", cal_write, "config file to write (default <out>/calibration.cfg)");

    auto *map = app.add_subcommand("nor-map", "steady-state output over a grid of gate drives");
    int map_grid = 41;
    double map_fmax = 1.2;
    map->add_option("--grid", map_grid, "points per axis")->check(CLI::Range(2, 2001));
    map->add_option("--fmax", map_fmax, "largest drive as a fraction of f_ref");

    bool golden = false, ode = false;
    auto backend = [&](CLI::App *sub) {
        auto *gflag = sub->add_flag("--golden", golden, "digital or steady-state model");
        auto *oflag = sub->add_flag("--ode", ode, "time-domain simulation (default)");
        gflag->excludes(oflag);
    };

    auto *tt = app.add_subcommand("truth-table", "the four NOR rows");
    int tt_settle = 3000;
    bool tt_corners = false;
    backend(tt);
    tt->add_option("--settle", tt_settle, "settle periods");
    tt->add_flag("--corners", tt_corners, "also the band corners of each row");

    auto *casc = app.add_subcommand("cascade", "toggle the input of a NOR chain and time each stage");
    int casc_depth = 3, casc_toggles = 4;
    double casc_hold = 0;
    backend(casc);
    casc->add_option("--depth", casc_depth, "stages")->check(CLI::Range(1, 64));
    casc->add_option("--toggles", casc_toggles, "input edges")->check(CLI::Range(1, 1000));
    casc->add_option("--hold", casc_hold, "periods (ticks with --golden) between edges");

    auto *add = app.add_subcommand("adder", "all 16 transitions of the 2-bit adder");
    backend(add);

    auto *sq = app.add_subcommand("sqrt", "square-root state machine");
    std::uint64_t sq_n = 9;
    int sq_width = 8, sq_cycles = 0;
    backend(sq);
    sq->add_option("--n", sq_n, "radicand")->required();
    sq->add_option("--width", sq_width, "root width in bits")->check(CLI::Range(1, 16));
    sq->add_option("--cycles", sq_cycles, "clock cycles after reset (default width + 2)");

    auto *as = app.add_subcommand("assemble", "assemble a program to a 256-byte image");
    std::string as_src, as_prog, as_out;
    int as_nmax = 32;
    auto *src_opt = as->add_option("source", as_src, "assembly file");
    auto *prog_opt = as->add_option("--program", as_prog, "built-in program: sieve");
    src_opt->excludes(prog_opt);
    as->add_option("--n-max", as_nmax, "sieve size");
    as->add_option("--image", as_out, "output image (default <out>/<name>.bin)");

    auto *em = app.add_subcommand("emulate", "run an image on the instruction-level emulator until it halts");
    std::string em_image;
    std::uint64_t em_max = 100000;
    em->add_option("--image", em_image, "image (.bin or .hex)")->required();
    em->add_option("--cycles", em_max, "cycle limit");

    auto *cr = app.add_subcommand("cpu-run", "run the processor netlist against a memory image");
    CpuRunOptions cro;
    backend(cr);
    cr->add_option("--image", cro.image, "image (.bin or .hex)")->required();
    cr->add_option("--cycles", cro.cycles, "clock cycles");
    cr->add_flag("--until-halt", cro.until_halt, "stop at the self-jump halt");
    cr->add_flag("--snapshots", cro.snapshots, "one PGM memory frame per cycle");
    cr->add_option("--checkpoint", cro.checkpoint, "ODE checkpoint file, rewritten as the run goes");
    cr->add_option("--checkpoint-every", cro.checkpoint_every, "cycles between checkpoints")->check(CLI::PositiveNumber);
    cr->add_option("--resume", cro.resume, "continue an ODE run from a checkpoint");

    auto *ut = app.add_subcommand("utm-run", "UTM(5,5) on the emulator against the direct interpreter");
    std::uint64_t ut_steps = 10000;
    std::uint32_t ut_seed = 1;
    int ut_machines = 3;
    ut->add_option("--steps", ut_steps, "machine steps");
    ut->add_option("--seed", ut_seed, "first random machine");
    ut->add_option("--machines", ut_machines, "how many machines")->check(CLI::Range(1, 1000));

    CLI11_PARSE(app, argc, argv);

    try {
        if (!g.config_path.empty()) g.cfg = config::load(g.config_path);
        if (!g.out_dir.empty()) g.cfg.output_dir = g.out_dir;
        if (*cal) return cmd_calibrate(g, cal_points, cal_settle, cal_lo, cal_hi, cal_write);
        if (*map) return cmd_nor_map(g, map_grid, map_fmax);
        if (*tt) return cmd_truth_table(g, golden, tt_settle, tt_corners);
        if (*casc) {
            const double hold = casc_hold > 0 ? casc_hold : golden ? 20 : 4000;
            return cmd_cascade(g, golden, casc_depth, casc_toggles, hold);
        }
        if (*add) return cmd_adder(g, golden);
        if (*sq) return cmd_sqrt(g, golden, sq_n, sq_width, sq_cycles);
        if (*as) return cmd_assemble(g, as_src, as_prog, as_nmax, as_out);
        if (*em) return cmd_emulate(g, em_image, em_max);
        if (*cr) {
            cro.golden = golden;
            return cmd_cpu_run(g, cro);
        }
        if (*ut) return cmd_utm_run(g, ut_steps, ut_seed, ut_machines);
    } catch (const config::ConfigError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const cosim::CosimFault &e) {
        std::cerr << "fault: " << e.what() << '\n';
        return kFault;
    } catch (const dyn::IntegrationFault &e) {
        std::cerr << "fault: " << e.what() << '\n';
        return kFault;
    } catch (const isa::ExecutionFault &e) {
        std::cerr << "fault: " << e.what() << '\n';
        return kFault;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
