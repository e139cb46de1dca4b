#include "ssr/topology.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ssr {

using ordered_json = nlohmann::ordered_json;

int TopologyGraph::node_index(const std::string& id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
    if (it == nodes.end() || *it != id) return -1;
    return static_cast<int>(it - nodes.begin());
}

int TopologyGraph::degree(int node) const {
    int d = 0;
    for (const auto& e : edges)
        if (e.u == node || e.v == node) ++d;
    return d;
}

std::vector<int> TopologyGraph::incident_edges(int node) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < edges.size(); ++i)
        if (edges[i].u == node || edges[i].v == node) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> TopologyGraph::edges_between(int a, int b) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        if ((e.u == a && e.v == b) || (e.u == b && e.v == a)) out.push_back(static_cast<int>(i));
    }
    return out;
}

int TopologyGraph::find_edge(const BranchKey& key) const {
    for (std::size_t i = 0; i < edges.size(); ++i)
        if (edges[i].branch == key) return static_cast<int>(i);
    return -1;
}

TopologyGraph TopologyGraph::without_edge(int edge_id) const {
    TopologyGraph g;
    g.nodes = nodes;
    g.stub_pruned = stub_pruned;
    g.grid_nodes = grid_nodes;
    for (std::size_t i = 0; i < edges.size(); ++i)
        if (static_cast<int>(i) != edge_id) g.edges.push_back(edges[i]);
    return g;
}

namespace {

/// Sort edges by (low end id, high end id, circuit); node indices refer to
/// the sorted node list, so every downstream ordering is reproducible.
void finalize_graph(TopologyGraph& g, const NetworkModel& model,
                    const std::vector<std::pair<BranchKey, std::pair<std::string, std::string>>>& raw_edges) {
    std::sort(g.nodes.begin(), g.nodes.end());
    g.nodes.erase(std::unique(g.nodes.begin(), g.nodes.end()), g.nodes.end());

    std::vector<TopoEdge> es;
    for (const auto& [key, ends] : raw_edges) {
        int u = g.node_index(ends.first);
        int v = g.node_index(ends.second);
        if (u < 0 || v < 0) continue;
        TopoEdge e;
        e.u = std::min(u, v);
        e.v = std::max(u, v);
        e.circuit = key.circuit;
        e.branch = key;
        es.push_back(e);
    }
    std::sort(es.begin(), es.end(), [&](const TopoEdge& a, const TopoEdge& b) {
        auto ka = std::make_tuple(g.nodes[static_cast<std::size_t>(a.u)],
                                  g.nodes[static_cast<std::size_t>(a.v)], a.circuit);
        auto kb = std::make_tuple(g.nodes[static_cast<std::size_t>(b.u)],
                                  g.nodes[static_cast<std::size_t>(b.v)], b.circuit);
        return ka < kb;
    });
    g.edges = std::move(es);

    g.grid_nodes.clear();
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        if (model.has_bus(g.nodes[i]) && model.bus(g.nodes[i]).kind == BusKind::ExternalGrid)
            g.grid_nodes.push_back(static_cast<int>(i));
}

} // namespace

TopologyGraph build_topology_graph(const NetworkModel& model, const std::string& source,
                                   const std::string& sink) {
    if (!model.has_bus(source)) throw ModelError("source bus '" + source + "' not in model");
    if (!model.has_bus(sink)) throw ModelError("sink bus '" + sink + "' not in model");

    std::set<std::string> keep_nodes;
    std::map<std::string, std::vector<const Branch*>> adj;
    std::vector<const Branch*> live;
    for (const auto& br : model.branches) {
        if (!br.in_service()) continue;
        if (br.role == BranchRole::TertiaryStub) continue;
        live.push_back(&br);
        adj[br.from].push_back(&br);
        adj[br.to].push_back(&br);
        keep_nodes.insert(br.from);
        keep_nodes.insert(br.to);
    }

    auto infinite_grid_at = [&](const std::string& id) {
        for (const auto* m : model.machines_at(id))
            if (m->kind == MachineKind::InfiniteGrid && m->status == Status::In) return true;
        return false;
    };
    auto prunable = [&](const std::string& id) {
        if (id == source || id == sink) return false;
        if (model.bus(id).kind == BusKind::ExternalGrid) return false;
        if (infinite_grid_at(id)) return false;
        return true;
    };

    // Degree-1 generation/shunt terminations fall away iteratively.
    std::set<const Branch*> removed;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& id : std::vector<std::string>(keep_nodes.begin(), keep_nodes.end())) {
            if (!prunable(id)) continue;
            int deg = 0;
            const Branch* last = nullptr;
            for (const auto* br : adj[id])
                if (!removed.count(br)) {
                    ++deg;
                    last = br;
                }
            if (deg == 1) {
                removed.insert(last);
                keep_nodes.erase(id);
                changed = true;
            } else if (deg == 0) {
                keep_nodes.erase(id);
                changed = true;
            }
        }
    }
    keep_nodes.insert(source);
    keep_nodes.insert(sink);

    TopologyGraph g;
    g.stub_pruned = true;
    g.nodes.assign(keep_nodes.begin(), keep_nodes.end());
    std::vector<std::pair<BranchKey, std::pair<std::string, std::string>>> raw;
    for (const auto* br : live) {
        if (removed.count(br)) continue;
        if (!keep_nodes.count(br->from) || !keep_nodes.count(br->to)) continue;
        raw.push_back({br->key(), {br->from, br->to}});
    }
    finalize_graph(g, model, raw);
    return g;
}

std::vector<RadialPath> enumerate_radial_paths(const TopologyGraph& graph,
                                               const std::string& source,
                                               const std::string& sink, int max_depth) {
    int s = graph.node_index(source);
    int t = graph.node_index(sink);
    if (s < 0 || t < 0) throw ModelError("source/sink not present in topology graph");
    if (s == t) throw ModelError("source equals sink");

    // Bus-level adjacency; parallel circuits collapse to the lowest edge id.
    int n = static_cast<int>(graph.node_count());
    std::vector<std::vector<std::pair<int, int>>> nbr(static_cast<std::size_t>(n));  // (node, rep edge)
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        const auto& e = graph.edges[i];
        auto add = [&](int a, int b) {
            auto& lst = nbr[static_cast<std::size_t>(a)];
            for (auto& [node, rep] : lst)
                if (node == b) return;  // first edge id wins (edges sorted)
            lst.push_back({b, static_cast<int>(i)});
        };
        add(e.u, e.v);
        add(e.v, e.u);
    }
    for (auto& lst : nbr)
        std::sort(lst.begin(), lst.end());  // node index order == bus id order

    std::vector<RadialPath> out;
    std::vector<char> on_path(static_cast<std::size_t>(n), 0);
    RadialPath cur;
    cur.buses.push_back(graph.node_id(s));
    on_path[static_cast<std::size_t>(s)] = 1;

    std::function<void(int)> dfs = [&](int u) {
        if (u == t) {
            out.push_back(cur);
            return;
        }
        if (cur.depth() >= max_depth) return;
        for (const auto& [w, rep] : nbr[static_cast<std::size_t>(u)]) {
            if (on_path[static_cast<std::size_t>(w)]) continue;
            on_path[static_cast<std::size_t>(w)] = 1;
            cur.buses.push_back(graph.node_id(w));
            cur.edges.push_back(rep);
            dfs(w);
            cur.buses.pop_back();
            cur.edges.pop_back();
            on_path[static_cast<std::size_t>(w)] = 0;
        }
    };
    dfs(s);
    return out;
}

TopologyGraph build_network_subgraph(const TopologyGraph& graph,
                                     const std::vector<RadialPath>& paths) {
    if (paths.empty()) throw ModelError("build_network_subgraph: no paths given");
    std::set<int> node_set;
    for (const auto& p : paths)
        for (const auto& id : p.buses) node_set.insert(graph.node_index(id));
    std::set<int> with_neighbors = node_set;
    for (const auto& e : graph.edges) {
        if (node_set.count(e.u)) with_neighbors.insert(e.v);
        if (node_set.count(e.v)) with_neighbors.insert(e.u);
    }

    TopologyGraph g;
    g.stub_pruned = graph.stub_pruned;
    for (int idx : with_neighbors) g.nodes.push_back(graph.node_id(idx));
    std::sort(g.nodes.begin(), g.nodes.end());
    for (const auto& e : graph.edges) {
        if (!with_neighbors.count(e.u) || !with_neighbors.count(e.v)) continue;
        TopoEdge ne;
        ne.u = g.node_index(graph.node_id(e.u));
        ne.v = g.node_index(graph.node_id(e.v));
        if (ne.u > ne.v) std::swap(ne.u, ne.v);
        ne.circuit = e.circuit;
        ne.branch = e.branch;
        g.edges.push_back(ne);
    }
    // graph.edges were already sorted by (ends, circuit); order is preserved.
    for (int idx : graph.grid_nodes) {
        int ni = g.node_index(graph.node_id(idx));
        if (ni >= 0) g.grid_nodes.push_back(ni);
    }
    return g;
}

std::vector<Cycle> cycle_basis(const TopologyGraph& graph) {
    int n = static_cast<int>(graph.node_count());
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    std::vector<int> parent_edge(static_cast<std::size_t>(n), -1);
    std::vector<int> depth(static_cast<std::size_t>(n), -1);
    std::vector<char> tree_edge(graph.edges.size(), 0);

    std::vector<std::vector<int>> inc(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        inc[static_cast<std::size_t>(graph.edges[i].u)].push_back(static_cast<int>(i));
        inc[static_cast<std::size_t>(graph.edges[i].v)].push_back(static_cast<int>(i));
    }

    // Spanning tree per component, rooted at the smallest node id, growing
    // along ascending edge ids (Paton's tree construction).
    for (int root = 0; root < n; ++root) {
        if (depth[static_cast<std::size_t>(root)] >= 0) continue;
        depth[static_cast<std::size_t>(root)] = 0;
        std::vector<int> stack{root};
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int ei : inc[static_cast<std::size_t>(u)]) {
                const auto& e = graph.edges[static_cast<std::size_t>(ei)];
                int w = e.u == u ? e.v : e.u;
                if (depth[static_cast<std::size_t>(w)] >= 0) continue;
                depth[static_cast<std::size_t>(w)] = depth[static_cast<std::size_t>(u)] + 1;
                parent[static_cast<std::size_t>(w)] = u;
                parent_edge[static_cast<std::size_t>(w)] = ei;
                tree_edge[static_cast<std::size_t>(ei)] = 1;
                stack.push_back(w);
            }
        }
    }

    std::vector<Cycle> basis;
    for (std::size_t ei = 0; ei < graph.edges.size(); ++ei) {
        if (tree_edge[ei]) continue;
        const auto& e = graph.edges[ei];
        // Find the lowest common ancestor of the chord's endpoints.
        int a = e.u, b = e.v;
        while (depth[static_cast<std::size_t>(a)] > depth[static_cast<std::size_t>(b)])
            a = parent[static_cast<std::size_t>(a)];
        while (depth[static_cast<std::size_t>(b)] > depth[static_cast<std::size_t>(a)])
            b = parent[static_cast<std::size_t>(b)];
        while (a != b) {
            a = parent[static_cast<std::size_t>(a)];
            b = parent[static_cast<std::size_t>(b)];
        }
        const int lca = a;

        Cycle c;
        c.nodes.push_back(graph.node_id(e.u));
        int cur = e.u;
        while (cur != lca) {
            c.edges.push_back(parent_edge[static_cast<std::size_t>(cur)]);
            cur = parent[static_cast<std::size_t>(cur)];
            c.nodes.push_back(graph.node_id(cur));
        }
        std::vector<std::string> tail_nodes;
        std::vector<int> tail_edges;
        cur = e.v;
        while (cur != lca) {
            tail_nodes.push_back(graph.node_id(cur));
            tail_edges.push_back(parent_edge[static_cast<std::size_t>(cur)]);
            cur = parent[static_cast<std::size_t>(cur)];
        }
        for (std::size_t i = tail_nodes.size(); i-- > 0;) {
            c.edges.push_back(tail_edges[i]);
            c.nodes.push_back(tail_nodes[i]);
        }
        c.edges.push_back(static_cast<int>(ei));
        c.nodes.push_back(graph.node_id(e.u));
        basis.push_back(std::move(c));
    }
    return basis;
}

PathWithCycles substitute_cycles(const RadialPath& path, const std::vector<Cycle>& basis,
                                 const TopologyGraph& graph) {
    // Edge id -> containing basis cycles. Containment is checked for every
    // parallel circuit of the hop's bus pair, so a hop through one circuit of
    // a double-circuit line still picks up the pair cycle.
    std::map<int, std::vector<int>> containing;
    for (std::size_t ci = 0; ci < basis.size(); ++ci)
        for (int ei : basis[ci].edges) containing[ei].push_back(static_cast<int>(ci));

    PathWithCycles out;
    out.path = path;
    std::set<int> emitted;
    for (std::size_t hop = 0; hop < path.edges.size(); ++hop) {
        int ei = path.edges[hop];
        const auto& e = graph.edges[static_cast<std::size_t>(ei)];
        // A hop belongs to a cycle when the cycle uses any circuit of the
        // hop's bus pair.
        std::set<int> cycles_here;
        for (int par : graph.edges_between(e.u, e.v)) {
            auto it = containing.find(par);
            if (it == containing.end()) continue;
            for (int ci : it->second) cycles_here.insert(ci);
        }
        if (cycles_here.empty()) {
            PathElement el;
            el.plain_edge = ei;
            el.covered_hops.push_back(static_cast<int>(hop));
            out.elements.push_back(el);
            continue;
        }
        std::set<int> fresh;
        for (int ci : cycles_here)
            if (!emitted.count(ci)) fresh.insert(ci);
        if (!fresh.empty()) {
            PathElement el;
            CycleGroup grp;
            grp.member_cycles.assign(fresh.begin(), fresh.end());
            for (int ci : fresh) {
                for (int ge : basis[static_cast<std::size_t>(ci)].edges) grp.edge_union.insert(ge);
                grp.member_loops.push_back(basis[static_cast<std::size_t>(ci)].nodes);
            }
            el.group = grp;
            el.covered_hops.push_back(static_cast<int>(hop));
            out.elements.push_back(el);
            emitted.insert(fresh.begin(), fresh.end());
        } else {
            // Redundant: this hop is already represented by an earlier group.
            for (auto it = out.elements.rbegin(); it != out.elements.rend(); ++it) {
                if (!it->group) continue;
                bool shares = false;
                for (int ci : it->group->member_cycles)
                    if (cycles_here.count(ci)) shares = true;
                if (shares) {
                    it->covered_hops.push_back(static_cast<int>(hop));
                    break;
                }
            }
        }
    }
    return out;
}

bool verify_radiality(const NetworkModel& model, const Contingency& ctg,
                      const std::string& source, const BranchKey& series_line) {
    const Branch& line = model.branch(series_line);
    if (!line.in_service()) throw ModelError("series line " + series_line.str() + " out of service");
    for (const auto& og : ctg.outages) {
        BranchKey k{og.from, og.to, og.circuit};
        if (og.circuit == "*" ? k.ends() == series_line.ends() : k == series_line)
            throw ModelError("contingency outages the series line " + series_line.str());
    }
    NetworkModel post = apply_contingency(model, ctg);

    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& br : post.branches) {
        if (!br.in_service()) continue;
        if (br.key() == series_line) continue;
        adj[br.from].push_back(br.to);
        adj[br.to].push_back(br.from);
    }
    std::set<std::string> comp{source};
    std::vector<std::string> stack{source};
    while (!stack.empty()) {
        auto u = stack.back();
        stack.pop_back();
        for (const auto& v : adj[u])
            if (comp.insert(v).second) stack.push_back(v);
    }
    int terminals = static_cast<int>(comp.count(line.from)) + static_cast<int>(comp.count(line.to));
    if (terminals != 1) return false;
    for (const auto& b : post.buses)
        if (b.kind == BusKind::ExternalGrid && comp.count(b.id)) return false;
    return true;
}

namespace {

/// Keep/cut enumeration over the frontier of the growing retained component.
/// Emits every contingency whose outages are all necessary: restoring any
/// single outage either reconnects the wider grid / far terminal or closes a
/// cycle through the retained component.
class ConditionEngine {
public:
    ConditionEngine(const TopologyGraph& graph, int line_edge, const std::set<int>& forbidden,
                    int sink_node, int k)
        : g_(graph), line_edge_(line_edge), forbidden_(forbidden), sink_(sink_node), k_(k) {
        int n = static_cast<int>(g_.node_count());
        inc_.resize(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < g_.edges.size(); ++i) {
            if (static_cast<int>(i) == line_edge_) continue;
            inc_[static_cast<std::size_t>(g_.edges[i].u)].push_back(static_cast<int>(i));
            inc_[static_cast<std::size_t>(g_.edges[i].v)].push_back(static_cast<int>(i));
        }
        in_comp_.assign(static_cast<std::size_t>(n), 0);
        state_.assign(g_.edges.size(), Undecided);
    }

    struct Emitted {
        std::vector<int> cut_edges;
        std::vector<int> comp_nodes;
        std::vector<int> kept_edges;
    };

    std::vector<Emitted> run(const RadialPath& seed) {
        results_.clear();
        // Only the path's buses are pre-committed; every incident edge,
        // including the hop circuits themselves, is a keep/cut decision, so
        // a condition may retain any parallel circuit of a hop.
        for (const auto& id : seed.buses) {
            int ni = g_.node_index(id);
            if (forbidden_.count(ni)) return {};
            in_comp_[static_cast<std::size_t>(ni)] = 1;
            comp_nodes_.push_back(ni);
        }
        source_ = g_.node_index(seed.buses.front());
        for (int ni : comp_nodes_)
            for (int ei : inc_[static_cast<std::size_t>(ni)])
                if (state_[static_cast<std::size_t>(ei)] == Undecided) frontier_.insert(ei);
        cuts_ = 0;
        explore();
        // reset for reuse
        std::fill(in_comp_.begin(), in_comp_.end(), 0);
        std::fill(state_.begin(), state_.end(), Undecided);
        comp_nodes_.clear();
        frontier_.clear();
        return std::move(results_);
    }

private:
    enum EdgeState : char { Undecided, Kept, Cut };

    void explore() {
        if (frontier_.empty()) {
            emit();
            return;
        }
        int ei = *frontier_.begin();
        frontier_.erase(frontier_.begin());
        const auto& e = g_.edges[static_cast<std::size_t>(ei)];
        bool u_in = in_comp_[static_cast<std::size_t>(e.u)];
        bool v_in = in_comp_[static_cast<std::size_t>(e.v)];
        int outside = !u_in ? e.u : (!v_in ? e.v : -1);

        if (cuts_ < k_) {
            state_[static_cast<std::size_t>(ei)] = Cut;
            ++cuts_;
            explore();
            --cuts_;
            state_[static_cast<std::size_t>(ei)] = Undecided;
        }

        if (outside == -1) {
            state_[static_cast<std::size_t>(ei)] = Kept;
            explore();
            state_[static_cast<std::size_t>(ei)] = Undecided;
        } else if (!forbidden_.count(outside)) {
            state_[static_cast<std::size_t>(ei)] = Kept;
            in_comp_[static_cast<std::size_t>(outside)] = 1;
            comp_nodes_.push_back(outside);
            std::vector<int> added;
            for (int ne : inc_[static_cast<std::size_t>(outside)]) {
                if (state_[static_cast<std::size_t>(ne)] == Undecided && !frontier_.count(ne)) {
                    frontier_.insert(ne);
                    added.push_back(ne);
                }
            }
            explore();
            for (int ne : added) frontier_.erase(ne);
            comp_nodes_.pop_back();
            in_comp_[static_cast<std::size_t>(outside)] = 0;
            state_[static_cast<std::size_t>(ei)] = Undecided;
        }

        frontier_.insert(ei);
    }

    void emit() {
        std::vector<int> cut, kept;
        for (std::size_t i = 0; i < state_.size(); ++i) {
            if (state_[i] == Cut) cut.push_back(static_cast<int>(i));
            if (state_[i] == Kept) kept.push_back(static_cast<int>(i));
        }
        // The marked set must be exactly the component of the source over
        // kept edges, else the cuts severed the seed path itself.
        std::vector<char> reach(in_comp_.size(), 0);
        reach[static_cast<std::size_t>(source_)] = 1;
        std::vector<int> stack{source_};
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int ei : inc_[static_cast<std::size_t>(u)]) {
                if (state_[static_cast<std::size_t>(ei)] != Kept) continue;
                const auto& e = g_.edges[static_cast<std::size_t>(ei)];
                int w = e.u == u ? e.v : e.u;
                if (!reach[static_cast<std::size_t>(w)]) {
                    reach[static_cast<std::size_t>(w)] = 1;
                    stack.push_back(w);
                }
            }
        }
        if (reach != in_comp_) return;
        if (!all_necessary(cut)) return;
        Emitted em;
        em.cut_edges = std::move(cut);
        em.comp_nodes = comp_nodes_;
        std::sort(em.comp_nodes.begin(), em.comp_nodes.end());
        em.kept_edges = std::move(kept);
        results_.push_back(std::move(em));
    }

    /// Regions are the components of the graph minus the retained nodes.
    /// A cut into a region is unnecessary when that region is a tree with no
    /// grid/far node: restoring the cut only hangs a dead-end subtree.
    bool all_necessary(const std::vector<int>& cut) {
        int n = static_cast<int>(g_.node_count());
        std::vector<int> region(static_cast<std::size_t>(n), -1);
        std::vector<bool> reaches_forbidden;
        std::vector<bool> has_cycle;
        int nregions = 0;
        for (int start = 0; start < n; ++start) {
            if (in_comp_[static_cast<std::size_t>(start)] || region[static_cast<std::size_t>(start)] >= 0)
                continue;
            int id = nregions++;
            int nodes = 0, edges2 = 0;
            bool forbidden_hit = false;
            std::vector<int> stack{start};
            region[static_cast<std::size_t>(start)] = id;
            while (!stack.empty()) {
                int u = stack.back();
                stack.pop_back();
                ++nodes;
                if (forbidden_.count(u)) forbidden_hit = true;
                for (int ei : inc_[static_cast<std::size_t>(u)]) {
                    const auto& e = g_.edges[static_cast<std::size_t>(ei)];
                    int w = e.u == u ? e.v : e.u;
                    if (in_comp_[static_cast<std::size_t>(w)]) continue;
                    ++edges2;  // each region edge seen from both endpoints
                    if (region[static_cast<std::size_t>(w)] < 0) {
                        region[static_cast<std::size_t>(w)] = id;
                        stack.push_back(w);
                    }
                }
            }
            reaches_forbidden.push_back(forbidden_hit);
            has_cycle.push_back(edges2 / 2 >= nodes);
        }
        for (int ei : cut) {
            const auto& e = g_.edges[static_cast<std::size_t>(ei)];
            bool u_in = in_comp_[static_cast<std::size_t>(e.u)];
            bool v_in = in_comp_[static_cast<std::size_t>(e.v)];
            if (u_in && v_in) continue;  // closes a corridor cycle if restored
            int w = u_in ? e.v : e.u;
            int r = region[static_cast<std::size_t>(w)];
            if (r < 0) return false;
            if (!reaches_forbidden[static_cast<std::size_t>(r)] && !has_cycle[static_cast<std::size_t>(r)])
                return false;  // dead-end subtree: the cut is unnecessary
        }
        return true;
    }

    const TopologyGraph& g_;
    int line_edge_;
    std::set<int> forbidden_;
    int sink_;
    int k_;
    int source_ = -1;
    std::vector<std::vector<int>> inc_;
    std::vector<char> in_comp_;
    std::vector<char> state_;
    std::vector<int> comp_nodes_;
    std::set<int> frontier_;
    int cuts_ = 0;
    std::vector<Emitted> results_;
};

std::set<int> forbidden_nodes(const TopologyGraph& graph, const ScreenRequest& req) {
    int line_edge = graph.find_edge(req.series_line);
    if (line_edge < 0) throw ModelError("series line " + req.series_line.str() + " not in topology graph");
    const auto& le = graph.edges[static_cast<std::size_t>(line_edge)];
    int sink_node = graph.node_index(req.sink);
    if (sink_node != le.u && sink_node != le.v)
        throw ModelError("sink '" + req.sink + "' is not a terminal of series line " +
                         req.series_line.str());
    int far = sink_node == le.u ? le.v : le.u;
    std::set<int> forbidden(graph.grid_nodes.begin(), graph.grid_nodes.end());
    forbidden.insert(far);
    if (forbidden.count(sink_node))
        throw ModelError("sink '" + req.sink + "' is an external-grid bus");
    return forbidden;
}

/// Lexicographically least simple source->sink bus sequence over the kept
/// edges, at most max_depth hops; empty when none exists. Depth-first search
/// in sorted neighbor order finds it first.
RadialPath lex_min_path(const TopologyGraph& graph, const std::vector<int>& kept_edges,
                        int source, int sink, int max_depth) {
    std::map<int, std::map<int, int>> nbr;  // node -> neighbor -> lowest kept edge
    for (int ei : kept_edges) {
        const auto& e = graph.edges[static_cast<std::size_t>(ei)];
        auto add = [&](int a, int b) {
            auto it = nbr[a].find(b);
            if (it == nbr[a].end() || ei < it->second) nbr[a][b] = ei;
        };
        add(e.u, e.v);
        add(e.v, e.u);
    }
    RadialPath out;
    std::vector<char> on_path(graph.node_count(), 0);
    RadialPath cur;
    cur.buses.push_back(graph.node_id(source));
    on_path[static_cast<std::size_t>(source)] = 1;
    bool found = false;
    std::function<void(int)> dfs = [&](int u) {
        if (found) return;
        if (u == sink) {
            out = cur;
            found = true;
            return;
        }
        if (cur.depth() >= max_depth) return;
        for (const auto& [w, rep] : nbr[u]) {
            if (found) return;
            if (on_path[static_cast<std::size_t>(w)]) continue;
            on_path[static_cast<std::size_t>(w)] = 1;
            cur.buses.push_back(graph.node_id(w));
            cur.edges.push_back(rep);
            dfs(w);
            if (!found) {
                cur.buses.pop_back();
                cur.edges.pop_back();
            }
            on_path[static_cast<std::size_t>(w)] = 0;
        }
    };
    dfs(source);
    return found ? out : RadialPath{};
}

RadialCondition make_condition(const ConditionEngine::Emitted& em, const TopologyGraph& graph,
                               const PathWithCycles& pwc, const ScreenRequest& req) {
    RadialCondition cond;
    cond.sink = req.sink;
    cond.series_line = req.series_line;
    Contingency ctg;
    for (int ei : em.cut_edges) {
        const auto& b = graph.edges[static_cast<std::size_t>(ei)].branch;
        ctg.outages.push_back({b.from, b.to, b.circuit});
    }
    std::sort(ctg.outages.begin(), ctg.outages.end());
    cond.contingency = ctg;
    cond.outage_count = static_cast<int>(ctg.outages.size());
    for (int ni : em.comp_nodes) cond.retained_buses.push_back(graph.node_id(ni));
    for (int ei : em.kept_edges)
        cond.retained_branches.push_back(graph.edges[static_cast<std::size_t>(ei)].branch);
    std::sort(cond.retained_branches.begin(), cond.retained_branches.end());
    cond.path = pwc;
    return cond;
}

} // namespace

std::vector<RadialCondition> contingency_for(const PathWithCycles& path,
                                             const TopologyGraph& graph,
                                             const ScreenRequest& req) {
    int line_edge = graph.find_edge(req.series_line);
    auto forbidden = forbidden_nodes(graph, req);
    ConditionEngine engine(graph, line_edge, forbidden, graph.node_index(req.sink), req.k);
    auto emitted = engine.run(path.path);
    std::vector<RadialCondition> out;
    std::set<std::vector<Outage>> seen;
    for (const auto& em : emitted) {
        RadialCondition cond = make_condition(em, graph, path, req);
        if (seen.insert(cond.contingency.outages).second) out.push_back(std::move(cond));
    }
    std::sort(out.begin(), out.end(), [](const RadialCondition& a, const RadialCondition& b) {
        if (a.outage_count != b.outage_count) return a.outage_count < b.outage_count;
        return a.contingency.outages < b.contingency.outages;
    });
    return out;
}

std::vector<RadialCondition> screen(const NetworkModel& model, const ScreenRequest& req) {
    if (req.source == req.sink) throw ModelError("source equals sink");
    if (req.max_depth <= 0) throw ModelError("max_depth must be > 0");
    if (req.k < 0) throw ModelError("k must be >= 0");
    const Branch& line = model.branch(req.series_line);
    if (!line.in_service()) throw ModelError("series line " + req.series_line.str() + " out of service");

    TopologyGraph graph = build_topology_graph(model, req.source, req.sink);
    int line_edge = graph.find_edge(req.series_line);
    if (line_edge < 0) throw ModelError("series line " + req.series_line.str() + " not in topology graph");
    auto forbidden = forbidden_nodes(graph, req);

    TopologyGraph traversal = graph.without_edge(line_edge);
    std::vector<RadialPath> paths =
        enumerate_radial_paths(traversal, req.source, req.sink, req.max_depth);
    if (paths.empty()) return {};

    // Remap traversal edge ids back into the full graph.
    for (auto& p : paths)
        for (auto& ei : p.edges)
            ei = graph.find_edge(traversal.edges[static_cast<std::size_t>(ei)].branch);

    TopologyGraph subgraph = build_network_subgraph(traversal, paths);
    std::vector<Cycle> sub_basis = cycle_basis(subgraph);
    // Basis cycles remapped into full-graph edge ids for substitution.
    std::vector<Cycle> basis;
    for (const auto& c : sub_basis) {
        Cycle rc;
        rc.nodes = c.nodes;
        for (int ei : c.edges)
            rc.edges.push_back(graph.find_edge(subgraph.edges[static_cast<std::size_t>(ei)].branch));
        basis.push_back(rc);
    }

    // One exploration seeded with {source, sink} covers the union of the
    // per-path condition families: every retained component contains some
    // enumerated path, and the depth bound is re-imposed per condition below.
    ConditionEngine engine(graph, line_edge, forbidden, graph.node_index(req.sink), req.k);
    RadialPath seed;
    seed.buses = {req.source, req.sink};
    auto emitted = engine.run(seed);

    int source_node = graph.node_index(req.source);
    int sink_node = graph.node_index(req.sink);
    std::map<std::vector<Outage>, RadialCondition> dedup;
    for (const auto& em : emitted) {
        RadialPath canonical =
            lex_min_path(graph, em.kept_edges, source_node, sink_node, req.max_depth);
        if (canonical.buses.empty()) continue;  // corridor exceeds the depth bound
        PathWithCycles pwc;
        pwc.path = canonical;
        RadialCondition cond = make_condition(em, graph, pwc, req);
        auto key = cond.contingency.outages;
        if (!dedup.count(key)) dedup.emplace(std::move(key), std::move(cond));
    }

    std::vector<RadialCondition> out;
    out.reserve(dedup.size());
    for (auto& [key, cond] : dedup) out.push_back(std::move(cond));
    std::sort(out.begin(), out.end(), [](const RadialCondition& a, const RadialCondition& b) {
        if (a.outage_count != b.outage_count) return a.outage_count < b.outage_count;
        return a.contingency.outages < b.contingency.outages;
    });

    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& cond = out[i];
        cond.contingency.label = "CTG#" + std::to_string(i + 1);
        // Display substitution restricted to cycles fully retained in service.
        std::set<BranchKey> kept(cond.retained_branches.begin(), cond.retained_branches.end());
        std::vector<Cycle> retained;
        for (const auto& c : basis) {
            bool all = true;
            for (int ei : c.edges)
                if (!kept.count(graph.edges[static_cast<std::size_t>(ei)].branch)) all = false;
            if (all) retained.push_back(c);
        }
        cond.path = substitute_cycles(cond.path.path, retained, graph);
    }
    return out;
}

ScreenRequest parse_screen_request(const std::string& document) {
    ordered_json j;
    try {
        j = ordered_json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("screening request syntax error: ") + e.what());
    }
    ScreenRequest r;
    if (!j.contains("source") || !j.contains("sink") || !j.contains("series_line"))
        throw ModelError("screening request needs source, sink, series_line");
    r.source = j.at("source").get<std::string>();
    r.sink = j.at("sink").get<std::string>();
    const auto& jl = j.at("series_line");
    r.series_line = {jl.at("from").get<std::string>(), jl.at("to").get<std::string>(),
                     jl.value("circuit", "1")};
    r.max_depth = j.value("max_depth", 15);
    r.k = j.value("k", 14);
    return r;
}

std::string serialize_screen_request(const ScreenRequest& req) {
    ordered_json j;
    j["source"] = req.source;
    j["sink"] = req.sink;
    j["series_line"] = ordered_json{{"from", req.series_line.from},
                                    {"to", req.series_line.to},
                                    {"circuit", req.series_line.circuit}};
    j["max_depth"] = req.max_depth;
    j["k"] = req.k;
    return j.dump(2) + "\n";
}

std::string serialize_conditions(const std::vector<RadialCondition>& conditions) {
    ordered_json arr = ordered_json::array();
    for (const auto& c : conditions) {
        ordered_json j;
        j["label"] = c.contingency.label;
        j["sink"] = c.sink;
        j["series_line"] = ordered_json{{"from", c.series_line.from},
                                        {"to", c.series_line.to},
                                        {"circuit", c.series_line.circuit}};
        j["outage_count"] = c.outage_count;
        ordered_json outs = ordered_json::array();
        for (const auto& o : c.contingency.outages)
            outs.push_back(ordered_json{{"from", o.from}, {"to", o.to}, {"circuit", o.circuit}});
        j["outages"] = outs;
        j["path"] = c.path.path.buses;
        ordered_json els = ordered_json::array();
        for (const auto& el : c.path.elements) {
            if (el.group) {
                ordered_json ge;
                ge["type"] = "cycles";
                ordered_json members = ordered_json::array();
                for (const auto& loop : el.group->member_loops) members.push_back(loop);
                ge["members"] = members;
                ge["covered_hops"] = el.covered_hops;
                els.push_back(ge);
            } else {
                ordered_json pe;
                pe["type"] = "edge";
                pe["covered_hops"] = el.covered_hops;
                els.push_back(pe);
            }
        }
        j["elements"] = els;
        ordered_json kept = ordered_json::array();
        for (const auto& b : c.retained_branches)
            kept.push_back(ordered_json{{"from", b.from}, {"to", b.to}, {"circuit", b.circuit}});
        j["retained_branches"] = kept;
        j["retained_buses"] = c.retained_buses;
        arr.push_back(j);
    }
    return arr.dump(2) + "\n";
}

} // namespace ssr
