#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ssr/model.hpp"

namespace ssr {

/// Multigraph edge inside a TopologyGraph; node indices into graph.nodes.
struct TopoEdge {
    int u = -1;
    int v = -1;
    std::string circuit;
    BranchKey branch;  // key into the source model
};

/// Pruned multigraph view of the in-service network used by the screening
/// pipeline. Node ids are sorted; edges are sorted by (ends, circuit) so all
/// downstream enumeration is deterministic.
class TopologyGraph {
public:
    std::vector<std::string> nodes;  // sorted bus ids
    std::vector<TopoEdge> edges;
    bool stub_pruned = false;
    /// Node indices of external-grid buses (the "wider grid").
    std::vector<int> grid_nodes;

    int node_index(const std::string& id) const;
    const std::string& node_id(int idx) const { return nodes.at(static_cast<std::size_t>(idx)); }
    int degree(int node) const;
    std::vector<int> incident_edges(int node) const;
    /// Edge ids joining the unordered pair (a,b), ascending.
    std::vector<int> edges_between(int a, int b) const;
    int find_edge(const BranchKey& key) const;

    /// Copy without one edge (used to protect the series line).
    TopologyGraph without_edge(int edge_id) const;

    std::size_t edge_count() const { return edges.size(); }
    std::size_t node_count() const { return nodes.size(); }
};

/// Simple path from source to sink at bus-sequence level. Parallel circuits
/// are collapsed: edges holds one representative (lowest circuit id) per hop.
struct RadialPath {
    std::vector<std::string> buses;
    std::vector<int> edges;  // edge ids, size = buses.size()-1
    int depth() const { return static_cast<int>(edges.size()); }
};

/// Closed cycle: nodes.front() == nodes.back(), edges form the loop.
struct Cycle {
    std::vector<std::string> nodes;
    std::vector<int> edges;
    /// True for the 2-edge cycle made of two parallel circuits.
    bool parallel_pair() const { return edges.size() == 2; }
    std::set<int> edge_set() const { return {edges.begin(), edges.end()}; }
};

struct CycleGroup {
    std::vector<int> member_cycles;  // indices into the basis
    std::set<int> edge_union;        // union of member edge ids
    std::vector<std::vector<std::string>> member_loops;  // closed bus sequences
};

/// One element of a PathWithCycles: a plain edge or a cycle group, plus the
/// path hop indices it covers.
struct PathElement {
    std::optional<int> plain_edge;      // edge id when no cycle contains it
    std::optional<CycleGroup> group;    // otherwise the substituted cycles
    std::vector<int> covered_hops;      // indices into path.edges
};

struct PathWithCycles {
    RadialPath path;  // collapsing the elements recovers exactly this
    std::vector<PathElement> elements;
};

struct RadialCondition {
    PathWithCycles path;
    Contingency contingency;
    int outage_count = 0;
    std::string sink;
    BranchKey series_line;
    /// Bus ids of the retained (post-contingency) component of the source.
    std::vector<std::string> retained_buses;
    /// Branch keys kept in service inside the retained component.
    std::vector<BranchKey> retained_branches;
};

struct ScreenRequest {
    std::string source;
    std::string sink;
    BranchKey series_line;
    int max_depth = 15;
    int k = 14;
};

ScreenRequest parse_screen_request(const std::string& document);
std::string serialize_screen_request(const ScreenRequest& req);

/// Multigraph over in-service branches with tertiary stubs removed and
/// degree-1 generation/shunt buses iteratively pruned. source/sink and
/// external-grid buses are always retained.
TopologyGraph build_topology_graph(const NetworkModel& model, const std::string& source,
                                   const std::string& sink);

/// All simple paths of <= max_depth edges, lexicographic by bus-id sequence.
std::vector<RadialPath> enumerate_radial_paths(const TopologyGraph& graph,
                                               const std::string& source,
                                               const std::string& sink, int max_depth);

/// Induced subgraph on the union of path buses plus immediate neighbors.
TopologyGraph build_network_subgraph(const TopologyGraph& graph,
                                     const std::vector<RadialPath>& paths);

/// Fundamental cycle basis (Paton spanning-tree method), per component,
/// deterministic under the graph's sorted node order. Parallel circuits
/// contribute 2-edge cycles; |basis| = E - V + C.
std::vector<Cycle> cycle_basis(const TopologyGraph& graph);

/// Replace each path edge contained in basis cycles by the group of its
/// containing cycles; cycles already emitted for earlier hops are not
/// repeated (redundant cycles collapse into the earlier group).
PathWithCycles substitute_cycles(const RadialPath& path, const std::vector<Cycle>& basis,
                                 const TopologyGraph& graph);

/// True iff the post-contingency in-service component of source contains
/// exactly one terminal of series_line and no external-grid bus: every
/// source-to-grid transfer crosses the series capacitor. Dead-end side
/// components are permitted. Throws if series_line is outaged by ctg.
bool verify_radiality(const NetworkModel& model, const Contingency& ctg,
                      const std::string& source, const BranchKey& series_line);

/// All necessity-minimal contingencies that leave the collapsed path radial
/// toward the series line: candidate branches incident to the retained
/// component are cut unless keeping them attaches only a dead-end subtree
/// (iterated to fixpoint over the growing component). graph must be the full
/// pruned topology graph with the series line still present.
std::vector<RadialCondition> contingency_for(const PathWithCycles& path,
                                             const TopologyGraph& graph,
                                             const ScreenRequest& req);

/// Full pipeline: graph -> paths -> subgraph -> basis -> substitution ->
/// contingencies -> verification. Deterministic, sorted by outage count.
std::vector<RadialCondition> screen(const NetworkModel& model, const ScreenRequest& req);

std::string serialize_conditions(const std::vector<RadialCondition>& conditions);

} // namespace ssr
