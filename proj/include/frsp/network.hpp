#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "frsp/decompose.hpp"

namespace frsp {

// Concrete passage waypoint on a cell boundary.
struct PathPos {
    int id = -1;
    Vec2 position;
    int owner_node = -1;
};

// Mean-position representative of a group of passage positions.
// Cap(i) = member count.
struct PathNode {
    int id = -1;
    Vec2 position;
    std::vector<int> members;  // PathPos ids, ordered along the boundary
    int capacity = 0;
    int boundary = -1;
    int below_cell = -1;
    int above_cell = -1;
};

// Directed connection crossing one cell, lower boundary node to upper
// boundary node.
struct Link {
    int id = -1;
    int start = -1;
    int end = -1;
    double length = 0.0;
    int capacity = 1;
};

struct NetworkParams {
    double alpha = 2.0;
    double r_min = 0.4;
    int n_b = 4;

    double spacing() const { return alpha * r_min; }
};

struct NetGraph {
    std::vector<PathNode> nodes;
    std::vector<PathPos> positions;
    std::vector<Link> links;
    std::vector<int> occupancy;  // Num(l); owned by the simulation, recounted per tick
    std::vector<std::vector<int>> up;  // per cell id: nodes on its upper boundaries
    std::vector<std::vector<int>> dn;  // per cell id: nodes on its lower boundaries
    std::vector<std::vector<int>> out_links;  // per node id, sorted by end node id

    int link_between(int a, int b) const {
        for (int l : out_links[static_cast<std::size_t>(a)]) {
            if (links[static_cast<std::size_t>(l)].end == b) return l;
        }
        return -1;
    }
    const std::vector<int>& up_nodes(int cell) const { return up[static_cast<std::size_t>(cell)]; }
    const std::vector<int>& dn_nodes(int cell) const { return dn[static_cast<std::size_t>(cell)]; }
};

// floor(L_B / (alpha * r_min)); a boundary shorter than one spacing admits
// no passage at all.
inline int passage_count(double boundary_length, const NetworkParams& p) {
    return static_cast<int>(std::floor(boundary_length / p.spacing() + 1e-9));
}

// Cap(l) = max(1, floor(Len * sin(theta) / (alpha*r_min) * min(Cap(i), Cap(j)))),
// theta measured against the horizontal. sin(theta) is clamped below so
// near-horizontal links keep unit capacity instead of vanishing.
inline int link_capacity(double length, double sin_theta, int cap_start, int cap_end,
                         const NetworkParams& p) {
    const double s = std::max(sin_theta, 0.05);
    const double raw = length * s / p.spacing() * std::min(cap_start, cap_end);
    return std::max(1, static_cast<int>(std::floor(raw + 1e-9)));
}

inline int link_capacity(const NetGraph& g, const Link& l, const NetworkParams& p) {
    const PathNode& a = g.nodes[static_cast<std::size_t>(l.start)];
    const PathNode& b = g.nodes[static_cast<std::size_t>(l.end)];
    const double sin_theta = l.length > 0.0 ? std::abs(b.position.y - a.position.y) / l.length : 1.0;
    return link_capacity(l.length, sin_theta, a.capacity, b.capacity, p);
}

// Build the capacity network: passage positions spaced uniformly on every
// boundary (half-spacing end margins), grouped left-to-right into nodes of
// at most n_b members (remainder forms its own group), and per cell a full
// bipartite link set from lower boundary nodes to upper boundary nodes.
inline NetGraph build_network(const CellSet& cs, const NetworkParams& p) {
    NetGraph g;
    g.up.resize(cs.cells.size());
    g.dn.resize(cs.cells.size());

    for (const auto& b : cs.boundaries) {
        const int n_pos = passage_count(b.length(), p);
        if (n_pos < 1) continue;  // too narrow for a robot passage
        const double spacing = b.length() / n_pos;
        std::vector<int> pos_ids;
        pos_ids.reserve(static_cast<std::size_t>(n_pos));
        for (int k = 0; k < n_pos; ++k) {
            PathPos pp;
            pp.id = static_cast<int>(g.positions.size());
            pp.position = {b.x0 + (k + 0.5) * spacing, b.world_y};
            g.positions.push_back(pp);
            pos_ids.push_back(pp.id);
        }
        for (int k = 0; k < n_pos; k += p.n_b) {
            PathNode node;
            node.id = static_cast<int>(g.nodes.size());
            node.boundary = b.id;
            node.below_cell = b.cell_a;
            node.above_cell = b.cell_b;
            Vec2 mean{0.0, 0.0};
            for (int m = k; m < std::min(k + p.n_b, n_pos); ++m) {
                node.members.push_back(pos_ids[static_cast<std::size_t>(m)]);
                mean += g.positions[static_cast<std::size_t>(pos_ids[static_cast<std::size_t>(m)])].position;
            }
            node.capacity = static_cast<int>(node.members.size());
            node.position = mean / static_cast<double>(node.capacity);
            for (int m : node.members) {
                g.positions[static_cast<std::size_t>(m)].owner_node = node.id;
            }
            g.up[static_cast<std::size_t>(b.cell_a)].push_back(node.id);
            g.dn[static_cast<std::size_t>(b.cell_b)].push_back(node.id);
            g.nodes.push_back(std::move(node));
        }
    }

    g.out_links.resize(g.nodes.size());
    for (std::size_t c = 0; c < cs.cells.size(); ++c) {
        for (int s : g.dn[c]) {
            for (int t : g.up[c]) {
                Link l;
                l.id = static_cast<int>(g.links.size());
                l.start = s;
                l.end = t;
                l.length = dist(g.nodes[static_cast<std::size_t>(s)].position,
                                g.nodes[static_cast<std::size_t>(t)].position);
                l.capacity = 1;
                g.links.push_back(l);
                g.out_links[static_cast<std::size_t>(s)].push_back(l.id);
            }
        }
    }
    for (auto& l : g.links) {
        l.capacity = link_capacity(g, l, p);
    }
    for (auto& ol : g.out_links) {
        std::sort(ol.begin(), ol.end(), [&g](int a, int b) {
            return g.links[static_cast<std::size_t>(a)].end < g.links[static_cast<std::size_t>(b)].end;
        });
    }
    g.occupancy.assign(g.links.size(), 0);
    return g;
}

// Shortest path by total link length, endpoints inclusive. Empty vector if
// unreachable. The graph is a DAG along the travel axis, so this always
// terminates; ties settle on the lower node id.
inline std::vector<int> dijkstra(const NetGraph& g, int from, int to) {
    if (from == to) return {from};
    const auto n = g.nodes.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist_to(n, inf);
    std::vector<int> parent(n, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist_to[static_cast<std::size_t>(from)] = 0.0;
    heap.emplace(0.0, from);
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist_to[static_cast<std::size_t>(u)]) continue;
        if (u == to) break;
        for (int lid : g.out_links[static_cast<std::size_t>(u)]) {
            const Link& l = g.links[static_cast<std::size_t>(lid)];
            const double nd = d + l.length;
            if (nd < dist_to[static_cast<std::size_t>(l.end)]) {
                dist_to[static_cast<std::size_t>(l.end)] = nd;
                parent[static_cast<std::size_t>(l.end)] = u;
                heap.emplace(nd, l.end);
            }
        }
    }
    if (dist_to[static_cast<std::size_t>(to)] == inf) return {};
    std::vector<int> path;
    for (int v = to; v != -1; v = parent[static_cast<std::size_t>(v)]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

// Single-source variant used by the scheduler: distances and parents to all
// reachable nodes.
struct ShortestPathTree {
    std::vector<double> dist;
    std::vector<int> parent;

    std::vector<int> path_to(int to) const {
        if (dist[static_cast<std::size_t>(to)] == std::numeric_limits<double>::infinity()) return {};
        std::vector<int> path;
        for (int v = to; v != -1; v = parent[static_cast<std::size_t>(v)]) path.push_back(v);
        std::reverse(path.begin(), path.end());
        return path;
    }
};

inline ShortestPathTree dijkstra_tree(const NetGraph& g, int from) {
    const auto n = g.nodes.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    ShortestPathTree t;
    t.dist.assign(n, inf);
    t.parent.assign(n, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    t.dist[static_cast<std::size_t>(from)] = 0.0;
    heap.emplace(0.0, from);
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > t.dist[static_cast<std::size_t>(u)]) continue;
        for (int lid : g.out_links[static_cast<std::size_t>(u)]) {
            const Link& l = g.links[static_cast<std::size_t>(lid)];
            const double nd = d + l.length;
            if (nd < t.dist[static_cast<std::size_t>(l.end)]) {
                t.dist[static_cast<std::size_t>(l.end)] = nd;
                t.parent[static_cast<std::size_t>(l.end)] = u;
                heap.emplace(nd, l.end);
            }
        }
    }
    return t;
}

// Golden-test dump: one line per node `N id x y cap`, one per link
// `L id a b len cap`.
inline std::string network_dump(const NetGraph& g) {
    std::string out;
    for (const auto& n : g.nodes) {
        out += "N " + std::to_string(n.id) + " " + detail::format_double(n.position.x) + " " +
               detail::format_double(n.position.y) + " " + std::to_string(n.capacity) + "\n";
    }
    for (const auto& l : g.links) {
        out += "L " + std::to_string(l.id) + " " + std::to_string(l.start) + " " +
               std::to_string(l.end) + " " + detail::format_double(l.length) + " " +
               std::to_string(l.capacity) + "\n";
    }
    return out;
}

} // namespace frsp
