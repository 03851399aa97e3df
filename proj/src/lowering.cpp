#include "mechlogic/lowering.hpp"

#include <cmath>
#include <istream>
#include <ostream>

namespace mechlogic::lower {

using logic::DriverKind;

CompileStats count(const Netlist &nl) {
    CompileStats s;
    s.gates = nl.gate_count();
    s.oscillators = 6 * s.gates;
    s.cubics = 5 * s.gates;
    for (const auto &g : nl.gates()) {
        for (NetId in : {g.a, g.b}) {
            if (in == logic::kNoNet) throw CompileError("gate input not bound");
            if (nl.nets()[in].kind == DriverKind::Gate) {
                ++s.springs;
                ++s.dashpots;
            } else {
                s.drives += 2;
            }
        }
    }
    return s;
}

CompiledCircuit compile(const Netlist &nl, const gate::NorTemplate<double> &t,
                        const gate::LogicReference<double> &ref, double omega) {
    nl.validate();
    gate::NorNetworkBuilder<double> nb(t, ref, omega);
    std::vector<gate::NorInstance> inst;
    inst.reserve(nl.gate_count());
    for (std::size_t g = 0; g < nl.gate_count(); ++g) {
        const auto &out = nl.nets()[nl.gates()[g].out];
        inst.push_back(nb.instantiate_nor(out.name.empty() ? "g" + std::to_string(g) : out.name));
    }
    const std::size_t n_nets = nl.nets().size();
    std::vector<dyn::Index> channel(n_nets, kNoChannel);
    for (std::size_t g = 0; g < inst.size(); ++g) channel[nl.gates()[g].out] = inst[g].channel;

    std::vector<std::vector<dyn::Index>> drives(n_nets);
    for (std::size_t g = 0; g < inst.size(); ++g) {
        const auto &gt = nl.gates()[g];
        for (int port = 0; port < 2; ++port) {
            const NetId in = port == 0 ? gt.a : gt.b;
            const auto &info = nl.nets()[in];
            switch (info.kind) {
                case DriverKind::Gate:
                    nb.connect(channel[in], inst[g].input(port));
                    break;
                case DriverKind::Input:
                case DriverKind::Const0: {
                    const auto d = nb.drive_input(inst[g].input(port), false);
                    drives[in].push_back(d.spring_side);
                    drives[in].push_back(d.dashpot_side);
                    break;
                }
                default:
                    throw CompileError("net without driver feeds gate " + std::to_string(g));
            }
        }
    }

    CompiledCircuit c{nb.builder().build(), std::move(inst), std::move(channel), std::move(drives), {}, omega, ref};
    c.stats.gates = nl.gate_count();
    c.stats.oscillators = c.system.size();
    c.stats.springs = c.system.springs().size();
    c.stats.cubics = c.system.cubics().size();
    c.stats.dashpots = c.system.dashpots().size();
    c.stats.drives = c.system.drives().size();
    return c;
}

CircuitOde::CircuitOde(const CompiledCircuit &c, std::vector<NetId> watch, OdeSettings s)
    : c_(c),
      rk_(c.system, c.omega, s.dt_periods),
      s_(dyn::State<double>::zero(c.system.size())),
      spp_(static_cast<std::size_t>(std::llround(1.0 / s.dt_periods))),
      probe_of_(c.net_channel.size(), -1) {
    if (std::abs(1.0 / s.dt_periods - static_cast<double>(spp_)) > 1e-9) {
        throw CompileError("dt must divide one period");
    }
    if (s.window_periods < 1) throw CompileError("demodulation window must be at least one period");
    n_ = spp_ * static_cast<std::size_t>(s.window_periods);
    for (NetId net : watch) {
        if (net >= c.net_channel.size() || c.net_channel[net] == kNoChannel) {
            throw CompileError("watched net " + std::to_string(net) + " is not driven by a gate");
        }
        if (probe_of_[net] >= 0) continue;
        probe_of_[net] = static_cast<int>(probes_.size());
        probes_.push_back({net, c.net_channel[net], std::vector<double>(n_, 0.0), std::vector<double>(n_, 0.0)});
    }
    rk_.attach(s_);
}

void CircuitOde::set_input(NetId net, bool one) {
    if (net >= c_.net_drives.size()) throw CompileError("unknown net");
    const double a = c_.ref.drive(one);
    for (dyn::Index d : c_.net_drives[net]) rk_.set_drive_amplitude(d, a);
}

void CircuitOde::set_input_level(NetId net, double ratio) {
    if (net >= c_.net_drives.size()) throw CompileError("unknown net");
    if (!(ratio >= 0)) throw CompileError("drive level must be non-negative");
    for (dyn::Index d : c_.net_drives[net]) rk_.set_drive_amplitude(d, ratio * c_.ref.f_ref);
}

void CircuitOde::set_bus(const Bus &bus, std::uint64_t value) {
    for (std::size_t i = 0; i < bus.size(); ++i) set_input(bus[i], (value >> i) & 1u);
}

void CircuitOde::run_steps(std::size_t steps) {
    for (std::size_t i = 0; i < steps; ++i) {
        rk_.step(s_);
        ++steps_;
        const double sn = std::sin(c_.omega * s_.t), cs = std::cos(c_.omega * s_.t);
        for (auto &p : probes_) {
            const double u = s_.u[static_cast<Eigen::Index>(p.osc)];
            const double a = u * sn, b = u * cs;
            p.ss += a - p.ps[pos_];
            p.sc += b - p.pc[pos_];
            p.ps[pos_] = a;
            p.pc[pos_] = b;
        }
        if (++pos_ == n_) {
            pos_ = 0;
            for (auto &p : probes_) {
                p.ss = p.sc = 0;
                for (std::size_t k = 0; k < n_; ++k) {
                    p.ss += p.ps[k];
                    p.sc += p.pc[k];
                }
            }
        }
    }
}

void CircuitOde::run_periods(double periods) {
    run_steps(static_cast<std::size_t>(std::llround(periods * static_cast<double>(spp_))));
}

double CircuitOde::periods() const { return static_cast<double>(steps_) / static_cast<double>(spp_); }

const CircuitOde::Probe &CircuitOde::probe(NetId net) const {
    if (net >= probe_of_.size() || probe_of_[net] < 0) throw CompileError("net is not watched");
    return probes_[static_cast<std::size_t>(probe_of_[net])];
}

double CircuitOde::amplitude(NetId net) const {
    const auto &p = probe(net);
    return 2 * std::hypot(p.ss, p.sc) / static_cast<double>(n_);
}

gate::LogicLevel CircuitOde::level(NetId net) const {
    return gate::classify(amplitude(net), c_.ref, gate::Quantity::Displacement);
}

std::optional<std::uint64_t> CircuitOde::bus_value(const Bus &bus) const {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < bus.size(); ++i) {
        const auto l = level(bus[i]);
        if (l == gate::LogicLevel::Ambiguous) return std::nullopt;
        if (l == gate::LogicLevel::One) v |= std::uint64_t{1} << i;
    }
    return v;
}

void CircuitOde::restore(const dyn::State<double> &s, std::uint64_t steps) {
    s_ = s;
    steps_ = steps;
    rk_.attach(s_);
    pos_ = 0;
    for (auto &p : probes_) {
        std::fill(p.ps.begin(), p.ps.end(), 0.0);
        std::fill(p.pc.begin(), p.pc.end(), 0.0);
        p.ss = p.sc = 0;
    }
}

namespace {

template <class T>
void put(std::ostream &out, const T &v) {
    out.write(reinterpret_cast<const char *>(&v), sizeof v);
}

template <class T>
void get(std::istream &in, T &v) {
    in.read(reinterpret_cast<char *>(&v), sizeof v);
    if (!in) throw CompileError("truncated ODE snapshot");
}

void put_doubles(std::ostream &out, const double *p, std::size_t n) {
    out.write(reinterpret_cast<const char *>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void get_doubles(std::istream &in, double *p, std::size_t n) {
    in.read(reinterpret_cast<char *>(p), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw CompileError("truncated ODE snapshot");
}

constexpr std::uint32_t kSnapshotTag = 0x4d4c4f44;  // "MLOD"

}  // namespace

void CircuitOde::save(std::ostream &out) const {
    put(out, kSnapshotTag);
    const std::uint64_t n = static_cast<std::uint64_t>(s_.u.size()), nd = c_.system.drives().size();
    put(out, n);
    put(out, nd);
    put(out, static_cast<std::uint64_t>(probes_.size()));
    put(out, static_cast<std::uint64_t>(n_));
    put(out, steps_);
    put(out, static_cast<std::uint64_t>(pos_));
    put(out, s_.t);
    put(out, rk_.origin());
    put(out, static_cast<std::uint64_t>(rk_.attached_steps()));
    put_doubles(out, s_.u.data(), n);
    put_doubles(out, s_.v.data(), n);
    for (std::size_t d = 0; d < nd; ++d) put(out, rk_.drive_amplitude(static_cast<dyn::Index>(d)));
    for (const auto &p : probes_) {
        put(out, static_cast<std::uint64_t>(p.net));
        put(out, p.ss);
        put(out, p.sc);
        put_doubles(out, p.ps.data(), n_);
        put_doubles(out, p.pc.data(), n_);
    }
}

void CircuitOde::load(std::istream &in) {
    std::uint32_t tag = 0;
    std::uint64_t n = 0, nd = 0, np = 0, win = 0, pos = 0;
    get(in, tag);
    if (tag != kSnapshotTag) throw CompileError("not an ODE snapshot");
    get(in, n);
    get(in, nd);
    get(in, np);
    get(in, win);
    if (n != static_cast<std::uint64_t>(s_.u.size()) || nd != c_.system.drives().size() ||
        np != probes_.size() || win != n_) {
        throw CompileError("ODE snapshot does not match this circuit and watch list");
    }
    auto s = s_;
    get(in, steps_);
    get(in, pos);
    get(in, s.t);
    double origin = 0;
    std::uint64_t rk_steps = 0;
    get(in, origin);
    get(in, rk_steps);
    get_doubles(in, s.u.data(), n);
    get_doubles(in, s.v.data(), n);
    for (std::size_t d = 0; d < nd; ++d) {
        double a = 0;
        get(in, a);
        rk_.set_drive_amplitude(static_cast<dyn::Index>(d), a);
    }
    for (auto &p : probes_) {
        std::uint64_t net = 0;
        get(in, net);
        if (net != p.net) throw CompileError("ODE snapshot watches different nets");
        get(in, p.ss);
        get(in, p.sc);
        get_doubles(in, p.ps.data(), n_);
        get_doubles(in, p.pc.data(), n_);
    }
    pos_ = static_cast<std::size_t>(pos);
    s_ = s;
    rk_.resume(origin, static_cast<std::size_t>(rk_steps));
}

}  // namespace mechlogic::lower
