#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssr/errors.hpp"

namespace ssr {

enum class BusKind { Station, Boundary, ExternalGrid, Poi };
enum class BranchRole { Line, Transformer, TertiaryStub };
enum class MachineKind { WindFarm, Conventional, InfiniteGrid };
enum class Status { In, Out };

std::string to_string(BusKind k);
std::string to_string(BranchRole r);
std::string to_string(MachineKind k);
std::string to_string(Status s);

struct Bus {
    std::string id;
    double base_kv = 0.0;
    BusKind kind = BusKind::Station;

    bool operator==(const Bus&) const = default;
};

/// Unordered (from,to) plus circuit id; parallel circuits are first-class.
struct BranchKey {
    std::string from;
    std::string to;
    std::string circuit;

    /// Endpoint order is electrically meaningless; keys compare normalized.
    std::pair<std::string, std::string> ends() const {
        return from <= to ? std::make_pair(from, to) : std::make_pair(to, from);
    }
    bool operator==(const BranchKey& o) const {
        return ends() == o.ends() && circuit == o.circuit;
    }
    bool operator<(const BranchKey& o) const {
        auto a = ends(), b = o.ends();
        if (a != b) return a < b;
        return circuit < o.circuit;
    }
    std::string str() const { return from + "-" + to + "/" + circuit; }
};

struct Branch {
    std::string from;
    std::string to;
    std::string circuit = "1";
    double r = 0.0;        // pu series resistance, >= 0
    double x = 0.0;        // pu series reactance at 60 Hz
    double b_shunt = 0.0;  // pu total line charging, >= 0
    double xc = 0.0;       // pu series-capacitor reactance, >= 0; 0 = uncompensated
    BranchRole role = BranchRole::Line;
    Status status = Status::In;

    BranchKey key() const { return {from, to, circuit}; }
    bool compensated() const { return xc > 0.0; }
    bool in_service() const { return status == Status::In; }

    bool operator==(const Branch&) const = default;
};

struct ShuntDevice {
    std::string bus;
    double b = 0.0;  // pu susceptance; > 0 capacitive, < 0 reactive
    bool switchable = false;
    Status status = Status::In;

    bool operator==(const ShuntDevice&) const = default;
};

struct RotorFrequencyPoint {
    double dispatch = 0.0;  // fraction in [0,1]
    double f_rotor = 0.0;   // Hz, in (0,90)

    bool operator==(const RotorFrequencyPoint&) const = default;
};

/// Single-cage induction equivalent of one turbine, pu on turbine MVA base.
struct WindFarmParams {
    int n_turbines_total = 0;
    double r_s = 0.0;
    double x_s = 0.0;
    double x_m = 0.0;
    double r_r = 0.0;
    double x_r = 0.0;
    std::vector<RotorFrequencyPoint> f_rotor_map;  // monotone in dispatch

    /// Piecewise-linear interpolation, clamped at the map ends.
    double rotor_frequency(double dispatch_fraction) const;

    bool operator==(const WindFarmParams&) const = default;
};

struct Machine {
    std::string bus;
    MachineKind kind = MachineKind::Conventional;
    double mva_base = 0.0;
    double x_subtransient = 0.0;  // pu on machine base; unused for InfiniteGrid
    std::optional<WindFarmParams> wf_params;
    Status status = Status::In;

    bool operator==(const Machine&) const = default;
};

struct Outage {
    std::string from;
    std::string to;
    std::string circuit;  // "*" matches every in-service parallel circuit

    bool operator==(const Outage&) const = default;
    bool operator<(const Outage& o) const;
    std::string str() const { return from + "-" + to + "/" + circuit; }
};

struct Contingency {
    std::string label;
    std::vector<Outage> outages;

    std::size_t outage_count() const { return outages.size(); }
    bool operator==(const Contingency&) const = default;
};

class NetworkModel {
public:
    std::string name;
    double system_mva_base = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<ShuntDevice> shunts;
    std::vector<Machine> machines;

    /// Validates every invariant; throws ModelError. Called by parse_network.
    void validate() const;

    bool has_bus(const std::string& id) const;
    const Bus& bus(const std::string& id) const;
    /// Index into branches, or -1. Matches endpoints in either order.
    int find_branch(const BranchKey& key) const;
    const Branch& branch(const BranchKey& key) const;

    std::vector<const Branch*> branches_at(const std::string& bus_id) const;
    std::vector<const Machine*> machines_at(const std::string& bus_id) const;
    std::vector<const ShuntDevice*> shunts_at(const std::string& bus_id) const;

    /// Branches with xc > 0 (any status).
    std::vector<BranchKey> series_compensated_branches() const;

    /// True when the in-service branch graph has more than one island.
    bool multi_island() const;

    double z_base_ohm(const std::string& bus_id) const;

    bool operator==(const NetworkModel&) const = default;
};

/// Parse the network file format (structured text, JSON-compatible).
NetworkModel parse_network(const std::string& document);
NetworkModel load_network(const std::string& path);

/// Inverse of parse_network up to structural equality.
std::string serialize_network(const NetworkModel& model);

/// Returns a copy with the listed branches out of service. The input is not
/// modified. Wildcard circuit "*" expands to all in-service circuits of the
/// bus pair. Throws ModelError for unknown or already-out branches.
NetworkModel apply_contingency(const NetworkModel& model, const Contingency& ctg);

Contingency parse_contingency(const std::string& document);
std::string serialize_contingency(const Contingency& ctg);

} // namespace ssr
