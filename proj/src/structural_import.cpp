#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "mechlogic/netlist.hpp"

namespace mechlogic::logic {

namespace {

using json = nlohmann::ordered_json;  // keep cell order from the file

enum class CellKind { Nor, Not, Latch };

CellKind cell_kind(const std::string &type) {
    if (type == "NOR" || type == "$_NOR_") return CellKind::Nor;
    if (type == "NOT" || type == "$_NOT_") return CellKind::Not;
    if (type == "DFF" || type == "$_DLATCH_P_") return CellKind::Latch;
    throw NetlistError("unsupported cell type '" + type + "'");
}

// A bit is either an integer id or one of the constant strings.
std::string bit_key(const json &bit) {
    if (bit.is_number_integer()) return std::to_string(bit.get<long>());
    if (bit.is_string()) {
        const auto s = bit.get<std::string>();
        if (s == "0" || s == "1") return "c" + s;
        throw NetlistError("unsupported constant bit '" + s + "'");
    }
    throw NetlistError("bit must be an integer or a constant string");
}

const json &single_bit(const json &cell, const std::string &cell_name, const char *port) {
    const auto &conn = cell.at("connections");
    if (!conn.contains(port)) {
        throw NetlistError("cell " + cell_name + " lacks port " + port);
    }
    const auto &bits = conn.at(port);
    if (!bits.is_array() || bits.size() != 1) {
        throw NetlistError("cell " + cell_name + " port " + port + " must be one bit");
    }
    return bits[0];
}

const char *pick_port(const json &cell, std::initializer_list<const char *> names) {
    for (const char *n : names) {
        if (cell.at("connections").contains(n)) return n;
    }
    return *names.begin();
}

}  // namespace

Netlist import_structural_json(const std::string &text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw NetlistError(std::string("bad JSON: ") + e.what());
    }
    const auto &modules = doc.at("modules");
    if (modules.size() != 1) throw NetlistError("expected exactly one module");
    const auto &mod = modules.begin().value();

    Netlist nl;
    std::unordered_map<std::string, NetId> bits;
    auto drive = [&](const std::string &key, NetId net) {
        if (!bits.emplace(key, net).second) throw NetlistError("bit " + key + " driven twice");
    };

    std::vector<std::pair<std::string, const json *>> out_ports;
    for (const auto &[name, port] : mod.at("ports").items()) {
        const auto dir = port.at("direction").get<std::string>();
        if (dir == "input") {
            Bus bus;
            const auto &pb = port.at("bits");
            for (std::size_t i = 0; i < pb.size(); ++i) {
                const NetId n = nl.add_input(pb.size() == 1 ? name : name + "[" + std::to_string(i) + "]");
                drive(bit_key(pb[i]), n);
                bus.push_back(n);
            }
            nl.name_bus(name, bus);
        } else if (dir == "output") {
            out_ports.emplace_back(name, &port.at("bits"));
        } else {
            throw NetlistError("port direction '" + dir + "' not supported");
        }
    }

    // Pass 1: create every cell with unbound inputs so loops can close.
    struct Pending {
        CellKind kind;
        std::string name;
        const json *cell;
        std::vector<std::uint32_t> gates;  // Nor/Not: {g}; Latch: {loop, hold, load, inv}
    };
    std::vector<Pending> pending;
    if (mod.contains("cells")) {
        for (const auto &[name, cell] : mod.at("cells").items()) {
            Pending p{cell_kind(cell.at("type").get<std::string>()), name, &cell, {}};
            if (cell.contains("port_directions")) {
                for (const auto &[pn, pd] : cell.at("port_directions").items()) {
                    if (pd != "input" && pd != "output") {
                        throw NetlistError("cell " + name + " port " + pn + " has bad direction");
                    }
                }
            }
            if (p.kind == CellKind::Latch) {
                const std::uint32_t loop = nl.nor_deferred();
                const std::uint32_t hold = nl.nor_deferred();
                const std::uint32_t load = nl.nor_deferred();
                const std::uint32_t inv = nl.nor_deferred();
                p.gates = {loop, hold, load, inv};
                const NetId out = delay_chain(nl, nl.gates()[loop].out, kLatchDelayPairs);
                drive(bit_key(single_bit(cell, name, "Q")), out);
            } else {
                const std::uint32_t g = nl.nor_deferred();
                p.gates = {g};
                drive(bit_key(single_bit(cell, name, "Y")), nl.gates()[g].out);
            }
            pending.push_back(std::move(p));
        }
    }

    auto resolve = [&](const json &bit, const std::string &cell) -> NetId {
        const auto key = bit_key(bit);
        if (key == "c0") return nl.const0();
        if (key == "c1") return nl.const1();
        auto it = bits.find(key);
        if (it == bits.end()) throw NetlistError("cell " + cell + " reads undriven bit " + key);
        return it->second;
    };

    // Pass 2: bind inputs.
    for (const auto &p : pending) {
        const json &cell = *p.cell;
        switch (p.kind) {
        case CellKind::Nor:
            nl.bind_inputs(p.gates[0], resolve(single_bit(cell, p.name, "A"), p.name),
                           resolve(single_bit(cell, p.name, "B"), p.name));
            break;
        case CellKind::Not:
            nl.bind_inputs(p.gates[0], resolve(single_bit(cell, p.name, "A"), p.name), nl.const0());
            break;
        case CellKind::Latch: {
            const NetId d = resolve(single_bit(cell, p.name, "D"), p.name);
            const NetId en = resolve(single_bit(cell, p.name, pick_port(cell, {"C", "E", "EN"})), p.name);
            const auto &g = nl.gates();
            const NetId q = g[p.gates[0]].out;
            nl.bind_inputs(p.gates[3], en, nl.const0());
            nl.bind_inputs(p.gates[1], q, en);
            nl.bind_inputs(p.gates[2], d, g[p.gates[3]].out);
            nl.bind_inputs(p.gates[0], g[p.gates[1]].out, g[p.gates[2]].out);
            break;
        }
        }
    }

    for (const auto &[name, pb] : out_ports) {
        Bus bus;
        for (const auto &bit : *pb) bus.push_back(resolve(bit, "port " + name));
        if (bus.size() == 1) {
            nl.add_output(bus[0], name);
            nl.name_bus(name, bus);
        } else {
            nl.add_output_bus(bus, name);
        }
    }
    nl.validate();
    return nl;
}

Netlist import_structural_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw NetlistError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return import_structural_json(ss.str());
}

}  // namespace mechlogic::logic
