#include "mechlogic/config.hpp"

#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <vector>

namespace mechlogic::config {

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double number(const std::string &key, const std::string &v) {
    std::size_t used = 0;
    double x = 0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw ConfigError("bad number for " + key + ": '" + v + "'");
    return x;
}

// name -> accessor for every numeric field
std::vector<std::pair<std::string, std::function<double &(RunConfig &)>>> numeric_fields() {
    using F = std::function<double &(RunConfig &)>;
    return {
        {"gate.m", F([](RunConfig &c) -> double & { return c.tmpl.gate.m; })},
        {"gate.q", F([](RunConfig &c) -> double & { return c.tmpl.gate.q; })},
        {"gate.k", F([](RunConfig &c) -> double & { return c.tmpl.gate.k; })},
        {"insulator.m", F([](RunConfig &c) -> double & { return c.tmpl.insulator.m; })},
        {"insulator.q", F([](RunConfig &c) -> double & { return c.tmpl.insulator.q; })},
        {"insulator.k", F([](RunConfig &c) -> double & { return c.tmpl.insulator.k; })},
        {"channel.m", F([](RunConfig &c) -> double & { return c.tmpl.channel.m; })},
        {"channel.q", F([](RunConfig &c) -> double & { return c.tmpl.channel.q; })},
        {"channel.k", F([](RunConfig &c) -> double & { return c.tmpl.channel.k; })},
        {"gamma_ig", F([](RunConfig &c) -> double & { return c.tmpl.gamma_ig; })},
        {"gamma_ic", F([](RunConfig &c) -> double & { return c.tmpl.gamma_ic; })},
        {"f_channel", F([](RunConfig &c) -> double & { return c.tmpl.f_channel; })},
        {"f_ref", F([](RunConfig &c) -> double & { return c.ref.f_ref; })},
        {"u_ref", F([](RunConfig &c) -> double & { return c.ref.u_ref; })},
        {"zero_band.lo", F([](RunConfig &c) -> double & { return c.ref.zero_band[0]; })},
        {"zero_band.hi", F([](RunConfig &c) -> double & { return c.ref.zero_band[1]; })},
        {"one_band.lo", F([](RunConfig &c) -> double & { return c.ref.one_band[0]; })},
        {"one_band.hi", F([](RunConfig &c) -> double & { return c.ref.one_band[1]; })},
        {"zero_level", F([](RunConfig &c) -> double & { return c.ref.zero_level; })},
        {"one_level", F([](RunConfig &c) -> double & { return c.ref.one_level; })},
        {"dt_periods", F([](RunConfig &c) -> double & { return c.dt_periods; })},
        {"clock.pulse_periods", F([](RunConfig &c) -> double & { return c.clock.pulse_periods; })},
        {"clock.sample_periods", F([](RunConfig &c) -> double & { return c.clock.sample_periods; })},
        {"clock.cycle_periods", F([](RunConfig &c) -> double & { return c.clock.cycle_periods; })},
    };
}

}  // namespace

double RunConfig::require_omega() const {
    if (!omega) throw ConfigError("operating frequency not calibrated; run `calibrate` first");
    return *omega;
}

void RunConfig::validate() const {
    tmpl.validate();
    if (!(ref.f_ref > 0) || !(ref.u_ref > 0)) throw ConfigError("references must be positive");
    if (!(ref.zero_band[0] < ref.zero_band[1] && ref.zero_band[1] < ref.one_band[0] &&
          ref.one_band[0] < ref.one_band[1])) {
        throw ConfigError("logic bands must be ordered and disjoint");
    }
    if (!(ref.zero_level > ref.zero_band[0] && ref.zero_level < ref.zero_band[1]) ||
        !(ref.one_level > ref.one_band[0] && ref.one_level < ref.one_band[1])) {
        throw ConfigError("nominal levels must lie strictly inside their bands");
    }
    if (!(dt_periods > 0) || dt_periods > 0.05) throw ConfigError("dt_periods must lie in (0, 0.05]");
    if (window_periods < 1) throw ConfigError("window_periods must be at least 1");
    if (omega && !(*omega > 0)) throw ConfigError("omega must be positive");
    if (!(clock.pulse_periods > 0 && clock.pulse_periods < clock.sample_periods &&
          clock.sample_periods < clock.cycle_periods)) {
        throw ConfigError("clock must satisfy 0 < pulse < sample < cycle");
    }
}

RunConfig parse(std::istream &in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        if (!kv.emplace(key, trim(line.substr(eq + 1))).second) {
            throw ConfigError("line " + std::to_string(no) + ": duplicate key " + key);
        }
    }

    RunConfig c;
    if (auto it = kv.find("template"); it != kv.end()) {
        if (it->second == "published") {
            c.tmpl = gate::NorTemplate<double>::published();
        } else if (it->second != "reconstructed") {
            throw ConfigError("template must be 'published' or 'reconstructed'");
        }
        c.template_name = it->second;
        kv.erase(it);
    }
    for (auto &[name, field] : numeric_fields()) {
        if (auto it = kv.find(name); it != kv.end()) {
            field(c) = number(name, it->second);
            kv.erase(it);
        }
    }
    if (auto it = kv.find("omega"); it != kv.end()) {
        if (it->second != "uncalibrated") c.omega = number("omega", it->second);
        kv.erase(it);
    }
    if (auto it = kv.find("window_periods"); it != kv.end()) {
        const double w = number("window_periods", it->second);
        if (w != static_cast<int>(w)) throw ConfigError("window_periods must be an integer");
        c.window_periods = static_cast<int>(w);
        kv.erase(it);
    }
    if (auto it = kv.find("output_dir"); it != kv.end()) {
        c.output_dir = it->second;
        kv.erase(it);
    }
    if (!kv.empty()) throw ConfigError("unknown key: " + kv.begin()->first);
    c.validate();
    return c;
}

void write(std::ostream &out, const RunConfig &c) {
    out << std::setprecision(17);
    out << "template=" << c.template_name << '\n';
    RunConfig copy = c;
    for (auto &[name, field] : numeric_fields()) out << name << '=' << field(copy) << '\n';
    out << "window_periods=" << c.window_periods << '\n';
    out << "omega=";
    if (c.omega) {
        out << *c.omega;
    } else {
        out << "uncalibrated";
    }
    out << '\n' << "output_dir=" << c.output_dir << '\n';
}

RunConfig load(const std::string &path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config " + path);
    return parse(f);
}

void save(const std::string &path, const RunConfig &c) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write config " + path);
    write(f, c);
}

}  // namespace mechlogic::config
