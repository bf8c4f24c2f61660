#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <vector>

#include "frsp/scheduler.hpp"

namespace frsp {

enum class PlannerKind { frsp, astar, greedy, runcost };

inline const char* planner_name(PlannerKind k) {
    switch (k) {
        case PlannerKind::frsp: return "frsp";
        case PlannerKind::astar: return "astar";
        case PlannerKind::greedy: return "greedy";
        case PlannerKind::runcost: return "runcost";
    }
    return "?";
}

inline PlannerKind planner_from_name(const std::string& s) {
    if (s == "frsp") return PlannerKind::frsp;
    if (s == "astar") return PlannerKind::astar;
    if (s == "greedy") return PlannerKind::greedy;
    if (s == "runcost") return PlannerKind::runcost;
    throw std::invalid_argument("unknown planner '" + s + "'");
}

// RunCost is the same pipeline with the queuing terms switched off.
inline Weights runcost_weights() { return Weights{0.0, 0.0, 1.0}; }

struct AstarError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Grid A*, 8-connected with octile heuristic, no corner cutting through
// blocked orthogonals. Returns corner waypoints at cell centers, ending
// with the exact goal point.
inline std::vector<Vec2> astar_plan(const GridMap& map, Vec2 start, Vec2 goal) {
    const int sx = map.cell_x(start.x), sy = map.cell_y(start.y);
    const int gx = map.cell_x(goal.x), gy = map.cell_y(goal.y);
    if (!map.in_bounds(sx, sy) || map.occupied(sx, sy)) {
        throw AstarError("astar: start is not in free space");
    }
    if (!map.in_bounds(gx, gy) || map.occupied(gx, gy)) {
        throw AstarError("astar: goal is not in free space");
    }

    const auto idx = [&map](int x, int y) {
        return static_cast<std::size_t>(y) * map.width + x;
    };
    const double res = map.resolution;
    const double diag = res * std::numbers::sqrt2;
    const auto heuristic = [&](int x, int y) {
        const double dx = std::abs(x - gx), dy = std::abs(y - gy);
        return res * (std::max(dx, dy) + (std::numbers::sqrt2 - 1.0) * std::min(dx, dy));
    };

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> g_cost(map.occ.size(), inf);
    std::vector<std::int32_t> parent(map.occ.size(), -1);
    using Item = std::pair<double, std::size_t>;  // (f, cell index)
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    g_cost[idx(sx, sy)] = 0.0;
    open.emplace(heuristic(sx, sy), idx(sx, sy));

    static constexpr int dx8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int dy8[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    bool found = false;
    while (!open.empty()) {
        auto [f, u] = open.top();
        open.pop();
        const int ux = static_cast<int>(u) % map.width;
        const int uy = static_cast<int>(u / static_cast<std::size_t>(map.width));
        if (f > g_cost[u] + heuristic(ux, uy) + 1e-12) continue;
        if (ux == gx && uy == gy) {
            found = true;
            break;
        }
        for (int k = 0; k < 8; ++k) {
            const int nx = ux + dx8[k], ny = uy + dy8[k];
            if (!map.in_bounds(nx, ny) || map.occupied(nx, ny)) continue;
            if (k >= 4 && (map.occupied(ux + dx8[k], uy) || map.occupied(ux, uy + dy8[k]))) {
                continue;  // no squeezing through diagonal gaps
            }
            const double step = k < 4 ? res : diag;
            if (g_cost[u] + step < g_cost[idx(nx, ny)] - 1e-15) {
                g_cost[idx(nx, ny)] = g_cost[u] + step;
                parent[idx(nx, ny)] = static_cast<std::int32_t>(u);
                open.emplace(g_cost[idx(nx, ny)] + heuristic(nx, ny), idx(nx, ny));
            }
        }
    }
    if (!found) {
        throw AstarError("astar: goal unreachable");
    }

    std::vector<std::pair<int, int>> cells;
    for (std::int32_t u = static_cast<std::int32_t>(idx(gx, gy)); u != -1;
         u = parent[static_cast<std::size_t>(u)]) {
        cells.emplace_back(u % map.width, u / map.width);
    }
    std::reverse(cells.begin(), cells.end());

    // decimate to direction changes
    std::vector<Vec2> waypoints;
    for (std::size_t k = 1; k < cells.size(); ++k) {
        if (k + 1 < cells.size()) {
            const int dx0 = cells[k].first - cells[k - 1].first;
            const int dy0 = cells[k].second - cells[k - 1].second;
            const int dx1 = cells[k + 1].first - cells[k].first;
            const int dy1 = cells[k + 1].second - cells[k].second;
            if (dx0 == dx1 && dy0 == dy1) continue;
        }
        waypoints.push_back(map.cell_center(cells[k].first, cells[k].second));
    }
    if (!waypoints.empty()) waypoints.pop_back();  // last corner is the goal cell
    waypoints.push_back(goal);
    return waypoints;
}

// Grid path length of an A* plan for oracle comparisons.
inline double polyline_length(const std::vector<Vec2>& pts, Vec2 from) {
    double len = 0.0;
    Vec2 prev = from;
    for (Vec2 p : pts) {
        len += dist(prev, p);
        prev = p;
    }
    return len;
}

// Largest-remainder apportionment of n robots over normalized weights.
inline std::vector<int> apportion_largest_remainder(const std::vector<double>& weights, int n) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<int> counts(weights.size(), 0);
    if (total <= 0.0 || weights.empty()) return counts;
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double quota = n * weights[i] / total;
        counts[i] = static_cast<int>(std::floor(quota + 1e-12));
        assigned += counts[i];
        remainders.emplace_back(-(quota - counts[i]), i);  // sort descending remainder
    }
    std::sort(remainders.begin(), remainders.end());
    for (int k = 0; k < n - assigned; ++k) {
        ++counts[remainders[static_cast<std::size_t>(k) % remainders.size()].second];
    }
    return counts;
}

struct GreedyAssignment {
    std::vector<ControlPlan> plans;
    int stranded = 0;
};

// One-shot split: enumerate the candidate set per (start cell, goal cell)
// pair, weight each path by min-link-capacity / length, apportion robots by
// largest remainder and keep the assignment for the whole run.
inline GreedyAssignment greedy_plan(std::vector<RobotSchedState>& states,
                                    const std::vector<Vec2>& positions,
                                    const std::vector<Vec2>& goals, NetGraph& g) {
    GreedyAssignment out;
    out.plans.resize(states.size());

    std::map<std::pair<int, int>, std::vector<int>> groups;  // robots per (cell, goal cell)
    for (std::size_t r = 0; r < states.size(); ++r) {
        if (states[r].c_now == states[r].goal_cell) {
            out.plans[r] = ControlPlan{{}, {}, goals[r]};
            continue;
        }
        groups[{states[r].c_now, states[r].goal_cell}].push_back(static_cast<int>(r));
    }

    for (auto& [key, robots] : groups) {
        const auto cores = detail::search_cores(g, key.first, key.second);
        if (cores.empty()) {
            for (int r : robots) {
                ++out.stranded;
                out.plans[static_cast<std::size_t>(r)] =
                    ControlPlan{{}, {}, positions[static_cast<std::size_t>(r)]};
            }
            continue;
        }
        std::vector<double> weights;
        weights.reserve(cores.size());
        for (const auto& c : cores) {
            int min_cap = std::numeric_limits<int>::max();
            for (std::size_t k = 0; k + 1 < c.nodes.size(); ++k) {
                const int lid = g.link_between(c.nodes[k], c.nodes[k + 1]);
                min_cap = std::min(min_cap, g.links[static_cast<std::size_t>(lid)].capacity);
            }
            if (c.nodes.size() < 2) min_cap = 1;
            weights.push_back(min_cap / std::max(c.core_len, 1e-9));
        }
        const auto counts = apportion_largest_remainder(weights, static_cast<int>(robots.size()));
        std::size_t path_idx = 0;
        int used = 0;
        for (int r : robots) {
            while (path_idx < cores.size() && used >= counts[path_idx]) {
                ++path_idx;
                used = 0;
            }
            const auto& core = cores[std::min(path_idx, cores.size() - 1)];
            ++used;
            out.plans[static_cast<std::size_t>(r)] =
                allocate_positions(core.nodes, g, positions[static_cast<std::size_t>(r)],
                                   goals[static_cast<std::size_t>(r)]);
            rebind_state(states[static_cast<std::size_t>(r)], out.plans[static_cast<std::size_t>(r)],
                         g);
        }
    }
    return out;
}

} // namespace frsp
