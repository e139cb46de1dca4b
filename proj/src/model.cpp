#include "ssr/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ssr {

using ordered_json = nlohmann::ordered_json;

std::string to_string(BusKind k) {
    switch (k) {
        case BusKind::Station: return "station";
        case BusKind::Boundary: return "boundary";
        case BusKind::ExternalGrid: return "external-grid";
        case BusKind::Poi: return "poi";
    }
    return "?";
}

std::string to_string(BranchRole r) {
    switch (r) {
        case BranchRole::Line: return "line";
        case BranchRole::Transformer: return "transformer";
        case BranchRole::TertiaryStub: return "tertiary-stub";
    }
    return "?";
}

std::string to_string(MachineKind k) {
    switch (k) {
        case MachineKind::WindFarm: return "wind-farm";
        case MachineKind::Conventional: return "conventional";
        case MachineKind::InfiniteGrid: return "infinite-grid";
    }
    return "?";
}

std::string to_string(Status s) { return s == Status::In ? "in" : "out"; }

namespace {

BusKind bus_kind_from(const std::string& s) {
    if (s == "station") return BusKind::Station;
    if (s == "boundary") return BusKind::Boundary;
    if (s == "external-grid") return BusKind::ExternalGrid;
    if (s == "poi") return BusKind::Poi;
    throw ModelError("unknown bus kind '" + s + "'");
}

BranchRole branch_role_from(const std::string& s) {
    if (s == "line") return BranchRole::Line;
    if (s == "transformer") return BranchRole::Transformer;
    if (s == "tertiary-stub") return BranchRole::TertiaryStub;
    throw ModelError("unknown branch role '" + s + "'");
}

MachineKind machine_kind_from(const std::string& s) {
    if (s == "wind-farm") return MachineKind::WindFarm;
    if (s == "conventional") return MachineKind::Conventional;
    if (s == "infinite-grid") return MachineKind::InfiniteGrid;
    throw ModelError("unknown machine kind '" + s + "'");
}

Status status_from(const std::string& s) {
    if (s == "in") return Status::In;
    if (s == "out") return Status::Out;
    throw ModelError("status must be \"in\" or \"out\", got '" + s + "'");
}

double require_number(const ordered_json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw ModelError(ctx + ": missing numeric field '" + key + "'");
    return j.at(key).get<double>();
}

std::string require_string(const ordered_json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key) || !j.at(key).is_string())
        throw ModelError(ctx + ": missing string field '" + key + "'");
    return j.at(key).get<std::string>();
}

} // namespace

double WindFarmParams::rotor_frequency(double dispatch_fraction) const {
    if (f_rotor_map.empty()) throw ModelError("wind farm has empty rotor frequency map");
    const auto& m = f_rotor_map;
    if (dispatch_fraction <= m.front().dispatch) return m.front().f_rotor;
    if (dispatch_fraction >= m.back().dispatch) return m.back().f_rotor;
    for (std::size_t i = 1; i < m.size(); ++i) {
        if (dispatch_fraction <= m[i].dispatch) {
            double span = m[i].dispatch - m[i - 1].dispatch;
            if (span <= 0.0) return m[i].f_rotor;
            double t = (dispatch_fraction - m[i - 1].dispatch) / span;
            return m[i - 1].f_rotor + t * (m[i].f_rotor - m[i - 1].f_rotor);
        }
    }
    return m.back().f_rotor;
}

bool Outage::operator<(const Outage& o) const {
    auto norm = [](const Outage& g) {
        auto e = g.from <= g.to ? std::make_pair(g.from, g.to) : std::make_pair(g.to, g.from);
        return std::make_tuple(e.first, e.second, g.circuit);
    };
    return norm(*this) < norm(o);
}

void NetworkModel::validate() const {
    if (system_mva_base <= 0.0) throw ModelError("system_mva_base must be > 0");
    std::set<std::string> ids;
    for (const auto& b : buses) {
        if (b.id.empty()) throw ModelError("bus with empty id");
        if (!ids.insert(b.id).second) throw ModelError("duplicate bus id '" + b.id + "'");
        if (b.base_kv <= 0.0) throw ModelError("bus '" + b.id + "': base_kv must be > 0");
    }
    std::set<std::tuple<std::string, std::string, std::string>> branch_keys;
    for (const auto& br : branches) {
        const std::string ctx = "branch " + br.key().str();
        if (!ids.count(br.from)) throw ModelError(ctx + ": unknown bus '" + br.from + "'");
        if (!ids.count(br.to)) throw ModelError(ctx + ": unknown bus '" + br.to + "'");
        if (br.from == br.to) throw ModelError(ctx + ": from == to");
        auto e = br.key().ends();
        if (!branch_keys.insert({e.first, e.second, br.circuit}).second)
            throw ModelError(ctx + ": duplicate (from,to,circuit)");
        if (br.r < 0.0) throw ModelError(ctx + ": r must be >= 0");
        if (br.b_shunt < 0.0) throw ModelError(ctx + ": b_shunt must be >= 0");
        if (br.xc < 0.0) throw ModelError(ctx + ": xc must be >= 0");
        if (br.circuit.empty() || br.circuit == "*")
            throw ModelError(ctx + ": invalid circuit id");
    }
    for (const auto& sh : shunts) {
        if (!ids.count(sh.bus)) throw ModelError("shunt: unknown bus '" + sh.bus + "'");
    }
    for (const auto& m : machines) {
        const std::string ctx = "machine at '" + m.bus + "'";
        if (!ids.count(m.bus)) throw ModelError("machine: unknown bus '" + m.bus + "'");
        if (m.mva_base <= 0.0) throw ModelError(ctx + ": mva_base must be > 0");
        if (m.kind != MachineKind::WindFarm && m.x_subtransient <= 0.0)
            throw ModelError(ctx + ": x_subtransient must be > 0");
        if (m.kind == MachineKind::WindFarm) {
            if (!m.wf_params) throw ModelError(ctx + ": wind-farm machine needs wf_params");
            const auto& p = *m.wf_params;
            if (p.n_turbines_total <= 0) throw ModelError(ctx + ": n_turbines_total must be > 0");
            if (p.r_s <= 0 || p.x_s <= 0 || p.x_m <= 0 || p.r_r <= 0 || p.x_r <= 0)
                throw ModelError(ctx + ": turbine impedances must be > 0");
            if (p.f_rotor_map.empty()) throw ModelError(ctx + ": empty f_rotor map");
            double prev_d = -1.0, prev_f = -1.0;
            for (const auto& pt : p.f_rotor_map) {
                if (pt.dispatch < 0.0 || pt.dispatch > 1.0)
                    throw ModelError(ctx + ": f_rotor map dispatch out of [0,1]");
                if (pt.f_rotor <= 0.0 || pt.f_rotor >= 90.0)
                    throw ModelError(ctx + ": f_rotor must lie in (0,90) Hz");
                if (pt.dispatch < prev_d || pt.f_rotor < prev_f)
                    throw ModelError(ctx + ": f_rotor map must be monotone nondecreasing");
                prev_d = pt.dispatch;
                prev_f = pt.f_rotor;
            }
        } else if (m.wf_params) {
            throw ModelError(ctx + ": wf_params only valid for wind-farm machines");
        }
    }
}

bool NetworkModel::has_bus(const std::string& id) const {
    return std::any_of(buses.begin(), buses.end(), [&](const Bus& b) { return b.id == id; });
}

const Bus& NetworkModel::bus(const std::string& id) const {
    for (const auto& b : buses)
        if (b.id == id) return b;
    throw ModelError("unknown bus '" + id + "'");
}

int NetworkModel::find_branch(const BranchKey& key) const {
    for (std::size_t i = 0; i < branches.size(); ++i)
        if (branches[i].key() == key) return static_cast<int>(i);
    return -1;
}

const Branch& NetworkModel::branch(const BranchKey& key) const {
    int i = find_branch(key);
    if (i < 0) throw ModelError("unknown branch " + key.str());
    return branches[static_cast<std::size_t>(i)];
}

std::vector<const Branch*> NetworkModel::branches_at(const std::string& bus_id) const {
    std::vector<const Branch*> out;
    for (const auto& br : branches)
        if (br.from == bus_id || br.to == bus_id) out.push_back(&br);
    return out;
}

std::vector<const Machine*> NetworkModel::machines_at(const std::string& bus_id) const {
    std::vector<const Machine*> out;
    for (const auto& m : machines)
        if (m.bus == bus_id) out.push_back(&m);
    return out;
}

std::vector<const ShuntDevice*> NetworkModel::shunts_at(const std::string& bus_id) const {
    std::vector<const ShuntDevice*> out;
    for (const auto& s : shunts)
        if (s.bus == bus_id) out.push_back(&s);
    return out;
}

std::vector<BranchKey> NetworkModel::series_compensated_branches() const {
    std::vector<BranchKey> out;
    for (const auto& br : branches)
        if (br.compensated()) out.push_back(br.key());
    std::sort(out.begin(), out.end());
    return out;
}

bool NetworkModel::multi_island() const {
    if (buses.empty()) return false;
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& br : branches) {
        if (!br.in_service()) continue;
        adj[br.from].push_back(br.to);
        adj[br.to].push_back(br.from);
    }
    std::set<std::string> seen;
    std::vector<std::string> stack{buses.front().id};
    seen.insert(buses.front().id);
    while (!stack.empty()) {
        auto u = stack.back();
        stack.pop_back();
        for (const auto& v : adj[u])
            if (seen.insert(v).second) stack.push_back(v);
    }
    return seen.size() != buses.size();
}

double NetworkModel::z_base_ohm(const std::string& bus_id) const {
    const auto& b = bus(bus_id);
    return b.base_kv * b.base_kv / system_mva_base;
}

namespace {

ordered_json wf_params_to_json(const WindFarmParams& p) {
    ordered_json j;
    j["n_turbines_total"] = p.n_turbines_total;
    j["r_s"] = p.r_s;
    j["x_s"] = p.x_s;
    j["x_m"] = p.x_m;
    j["r_r"] = p.r_r;
    j["x_r"] = p.x_r;
    ordered_json pts = ordered_json::array();
    for (const auto& pt : p.f_rotor_map)
        pts.push_back(ordered_json{{"dispatch", pt.dispatch}, {"f_rotor", pt.f_rotor}});
    j["f_rotor_map"] = pts;
    return j;
}

WindFarmParams wf_params_from_json(const ordered_json& j) {
    WindFarmParams p;
    p.n_turbines_total = static_cast<int>(require_number(j, "n_turbines_total", "wf_params"));
    p.r_s = require_number(j, "r_s", "wf_params");
    p.x_s = require_number(j, "x_s", "wf_params");
    p.x_m = require_number(j, "x_m", "wf_params");
    p.r_r = require_number(j, "r_r", "wf_params");
    p.x_r = require_number(j, "x_r", "wf_params");
    if (!j.contains("f_rotor_map") || !j.at("f_rotor_map").is_array())
        throw ModelError("wf_params: missing f_rotor_map array");
    for (const auto& pt : j.at("f_rotor_map")) {
        p.f_rotor_map.push_back({require_number(pt, "dispatch", "f_rotor_map"),
                                 require_number(pt, "f_rotor", "f_rotor_map")});
    }
    return p;
}

} // namespace

NetworkModel parse_network(const std::string& document) {
    ordered_json j;
    try {
        j = ordered_json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        // byte offset -> line/column for the diagnostic
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < e.byte && i < document.size(); ++i) {
            if (document[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError("network file syntax error at line " + std::to_string(line) +
                         ", column " + std::to_string(col) + ": " + e.what());
    }

    NetworkModel m;
    m.name = j.value("name", "");
    m.system_mva_base = require_number(j, "system_mva_base", "network");
    if (!j.contains("buses") || !j.at("buses").is_array())
        throw ModelError("network: missing buses array");
    for (const auto& jb : j.at("buses")) {
        Bus b;
        b.id = require_string(jb, "id", "bus");
        b.base_kv = require_number(jb, "base_kv", "bus " + b.id);
        b.kind = bus_kind_from(jb.value("kind", "station"));
        m.buses.push_back(b);
    }
    for (const auto& jb : j.value("branches", ordered_json::array())) {
        Branch br;
        br.from = require_string(jb, "from", "branch");
        br.to = require_string(jb, "to", "branch");
        br.circuit = jb.value("circuit", "1");
        br.r = jb.value("r", 0.0);
        br.x = require_number(jb, "x", "branch " + br.key().str());
        br.b_shunt = jb.value("b_shunt", 0.0);
        br.xc = jb.value("xc", 0.0);
        br.role = branch_role_from(jb.value("role", "line"));
        br.status = status_from(jb.value("status", "in"));
        m.branches.push_back(br);
    }
    for (const auto& js : j.value("shunts", ordered_json::array())) {
        ShuntDevice s;
        s.bus = require_string(js, "bus", "shunt");
        s.b = require_number(js, "b", "shunt at " + s.bus);
        s.switchable = js.value("switchable", false);
        s.status = status_from(js.value("status", "in"));
        m.shunts.push_back(s);
    }
    for (const auto& jm : j.value("machines", ordered_json::array())) {
        Machine mc;
        mc.bus = require_string(jm, "bus", "machine");
        mc.kind = machine_kind_from(require_string(jm, "kind", "machine at " + mc.bus));
        mc.mva_base = require_number(jm, "mva_base", "machine at " + mc.bus);
        mc.x_subtransient = jm.value("x_subtransient", 0.0);
        mc.status = status_from(jm.value("status", "in"));
        if (jm.contains("wf_params")) mc.wf_params = wf_params_from_json(jm.at("wf_params"));
        m.machines.push_back(mc);
    }
    m.validate();
    return m;
}

NetworkModel load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_network(ss.str());
}

std::string serialize_network(const NetworkModel& model) {
    ordered_json j;
    j["name"] = model.name;
    j["system_mva_base"] = model.system_mva_base;
    ordered_json buses = ordered_json::array();
    for (const auto& b : model.buses)
        buses.push_back(ordered_json{
            {"id", b.id}, {"base_kv", b.base_kv}, {"kind", to_string(b.kind)}});
    j["buses"] = buses;
    ordered_json branches = ordered_json::array();
    for (const auto& br : model.branches) {
        ordered_json jb;
        jb["from"] = br.from;
        jb["to"] = br.to;
        jb["circuit"] = br.circuit;
        jb["r"] = br.r;
        jb["x"] = br.x;
        jb["b_shunt"] = br.b_shunt;
        jb["xc"] = br.xc;
        jb["role"] = to_string(br.role);
        jb["status"] = to_string(br.status);
        branches.push_back(jb);
    }
    j["branches"] = branches;
    ordered_json shunts = ordered_json::array();
    for (const auto& s : model.shunts)
        shunts.push_back(ordered_json{{"bus", s.bus},
                                      {"b", s.b},
                                      {"switchable", s.switchable},
                                      {"status", to_string(s.status)}});
    j["shunts"] = shunts;
    ordered_json machines = ordered_json::array();
    for (const auto& mc : model.machines) {
        ordered_json jm;
        jm["bus"] = mc.bus;
        jm["kind"] = to_string(mc.kind);
        jm["mva_base"] = mc.mva_base;
        jm["x_subtransient"] = mc.x_subtransient;
        jm["status"] = to_string(mc.status);
        if (mc.wf_params) jm["wf_params"] = wf_params_to_json(*mc.wf_params);
        machines.push_back(jm);
    }
    j["machines"] = machines;
    return j.dump(2) + "\n";
}

NetworkModel apply_contingency(const NetworkModel& model, const Contingency& ctg) {
    NetworkModel out = model;
    for (const auto& og : ctg.outages) {
        if (og.circuit == "*") {
            bool any = false;
            for (auto& br : out.branches) {
                BranchKey k{og.from, og.to, br.circuit};
                if (br.key().ends() == k.ends() && br.in_service()) {
                    br.status = Status::Out;
                    any = true;
                }
            }
            if (!any)
                throw ModelError("contingency '" + ctg.label + "': no in-service circuit on " +
                                 og.from + "-" + og.to);
            continue;
        }
        int idx = out.find_branch({og.from, og.to, og.circuit});
        if (idx < 0)
            throw ModelError("contingency '" + ctg.label + "': unknown branch " + og.str());
        Branch& br = out.branches[static_cast<std::size_t>(idx)];
        if (!br.in_service())
            throw ModelError("contingency '" + ctg.label + "': branch " + og.str() +
                             " already out of service");
        br.status = Status::Out;
    }
    return out;
}

Contingency parse_contingency(const std::string& document) {
    ordered_json j;
    try {
        j = ordered_json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("contingency file syntax error: ") + e.what());
    }
    Contingency c;
    c.label = j.value("label", "");
    for (const auto& jo : j.value("outages", ordered_json::array())) {
        Outage o;
        o.from = require_string(jo, "from", "outage");
        o.to = require_string(jo, "to", "outage");
        o.circuit = jo.value("circuit", "1");
        c.outages.push_back(o);
    }
    std::set<Outage> dedup(c.outages.begin(), c.outages.end());
    if (dedup.size() != c.outages.size())
        throw ModelError("contingency '" + c.label + "': duplicate outages");
    return c;
}

std::string serialize_contingency(const Contingency& ctg) {
    ordered_json j;
    j["label"] = ctg.label;
    ordered_json arr = ordered_json::array();
    for (const auto& o : ctg.outages)
        arr.push_back(ordered_json{{"from", o.from}, {"to", o.to}, {"circuit", o.circuit}});
    j["outages"] = arr;
    return j.dump(2) + "\n";
}

} // namespace ssr
