#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "frsp/bqp.hpp"
#include "frsp/network.hpp"

namespace frsp {

struct SchedulerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-robot network state: current cell, the node just passed, the node
// being approached and the link between them. -1 where not yet on the
// network.
struct RobotSchedState {
    int robot_id = -1;
    int c_now = -1;
    int d_pre = -1;
    int d_nex = -1;
    int link = -1;
    int start_cell = -1;
    int goal_cell = -1;
};

// The control variables handed to the motion layer: node ids still to pass
// and the concrete passage position chosen at each of them.
struct ControlPlan {
    std::vector<int> path_nodes;
    std::vector<int> path_pos;
    Vec2 final_goal;

    bool empty() const { return path_nodes.empty(); }
};

// Candidate route from an upper-boundary node of the robot's cell to a
// lower-boundary node of its goal cell. An empty node list is the
// degenerate in-goal-cell candidate (head straight to the goal point).
struct PathCandidate {
    std::vector<int> node_list;
    double length = 0.0;  // entry distance + link lengths + exit distance
    int fir = -1;
    int sec = -1;
};

struct Weights {
    double k1 = 1.0;
    double k2 = 0.5;
    double k3 = 0.5;
};

// Replanning runs at 1 Hz and replaces plans wholesale; without a stickiness
// bonus the near-tie candidates flip large robot groups between gates every
// call and the swarm pays the lateral switching distance. The incumbent
// route gets this many meters of length credit.
inline constexpr double kIncumbentBonusM = 1.5;

// Num(l): robots whose state link is l. Always recounted from scratch;
// the counters are never trusted incrementally.
inline void recount_occupancy(NetGraph& g, const std::vector<RobotSchedState>& states) {
    std::fill(g.occupancy.begin(), g.occupancy.end(), 0);
    for (const auto& s : states) {
        if (s.link >= 0) ++g.occupancy[static_cast<std::size_t>(s.link)];
    }
}

namespace detail {

// Shared skeleton of the next-go-to set for one (cell, goal cell) pair:
// node lists, link-length sums and first/second links, before per-robot
// entry/exit distances are added.
struct CandidateCore {
    std::vector<int> nodes;
    double core_len = 0.0;
    int fir = -1;
    int sec = -1;
};

inline std::vector<CandidateCore> search_cores(const NetGraph& g, int c_now, int goal_cell) {
    std::vector<CandidateCore> out;
    std::set<std::vector<int>> seen;
    for (int i : g.up_nodes(c_now)) {
        const ShortestPathTree tree = dijkstra_tree(g, i);
        for (int j : g.dn_nodes(goal_cell)) {
            if (tree.dist[static_cast<std::size_t>(j)] ==
                std::numeric_limits<double>::infinity()) {
                continue;
            }
            CandidateCore c;
            c.nodes = tree.path_to(j);
            if (!seen.insert(c.nodes).second) continue;
            c.core_len = tree.dist[static_cast<std::size_t>(j)];
            if (c.nodes.size() >= 2) c.fir = g.link_between(c.nodes[0], c.nodes[1]);
            if (c.nodes.size() >= 3) c.sec = g.link_between(c.nodes[1], c.nodes[2]);
            out.push_back(std::move(c));
        }
    }
    return out;
}

// Memoized across robots within one scheduling call.
struct PathSetCache {
    std::map<std::pair<int, int>, std::vector<CandidateCore>> entries;

    const std::vector<CandidateCore>& get(const NetGraph& g, int c_now, int goal_cell) {
        const auto key = std::make_pair(c_now, goal_cell);
        auto it = entries.find(key);
        if (it == entries.end()) {
            it = entries.emplace(key, search_cores(g, c_now, goal_cell)).first;
        }
        return it->second;
    }
};

inline std::vector<PathCandidate> materialize(const std::vector<CandidateCore>& cores,
                                              const NetGraph& g, Vec2 position, Vec2 goal) {
    std::vector<PathCandidate> out;
    out.reserve(cores.size());
    for (const auto& c : cores) {
        PathCandidate pc;
        pc.node_list = c.nodes;
        pc.fir = c.fir;
        pc.sec = c.sec;
        pc.length = dist(position, g.nodes[static_cast<std::size_t>(c.nodes.front())].position) +
                    c.core_len +
                    dist(g.nodes[static_cast<std::size_t>(c.nodes.back())].position, goal);
        out.push_back(std::move(pc));
    }
    return out;
}

} // namespace detail

// Next-go-to path set: Dijkstra from every upper-boundary node of the
// robot's cell to every lower-boundary node of its goal cell, unreachable
// pairs omitted, duplicate node lists deduplicated. A robot already in its
// goal cell gets the single degenerate direct-to-goal candidate.
inline std::vector<PathCandidate> path_set_search(const RobotSchedState& robot, Vec2 position,
                                                  Vec2 final_goal, const NetGraph& g) {
    if (robot.c_now == robot.goal_cell) {
        PathCandidate direct;
        direct.length = dist(position, final_goal);
        return {direct};
    }
    return detail::materialize(detail::search_cores(g, robot.c_now, robot.goal_cell), g,
                               position, final_goal);
}

// Assembled path-selection problem plus the variable-to-candidate mapping.
struct AssembledProblem {
    BinaryQuadraticProgram bqp;
    std::vector<std::pair<int, int>> var_owner;  // (robot index, candidate index)
};

// One binary variable per (robot, candidate); one one-hot group per robot;
// objective k1*f_Fir + k2*f_Sec + k3*f_run with the queuing costs
// aggregated per first/second link as (S_l + Num(l) - Cap(l))^2 / Cap(l)^2.
inline AssembledProblem assemble_problem(const std::vector<std::vector<PathCandidate>>& candidates,
                                         const NetGraph& g, const Weights& w) {
    AssembledProblem ap;
    std::map<int, std::vector<int>> fir_vars;
    std::map<int, std::vector<int>> sec_vars;
    for (std::size_t r = 0; r < candidates.size(); ++r) {
        if (candidates[r].empty()) {
            throw SchedulerError("assemble_problem: robot with no candidates");
        }
        std::vector<int> group;
        for (std::size_t c = 0; c < candidates[r].size(); ++c) {
            const int var = static_cast<int>(ap.var_owner.size());
            ap.var_owner.emplace_back(static_cast<int>(r), static_cast<int>(c));
            ap.bqp.linear_costs.push_back(w.k3 * candidates[r][c].length);
            group.push_back(var);
            if (candidates[r][c].fir >= 0) fir_vars[candidates[r][c].fir].push_back(var);
            if (candidates[r][c].sec >= 0) sec_vars[candidates[r][c].sec].push_back(var);
        }
        ap.bqp.groups.push_back(std::move(group));
    }
    auto add_terms = [&](const std::map<int, std::vector<int>>& by_link, double k) {
        if (k == 0.0) return;
        for (const auto& [lid, vars] : by_link) {
            const Link& l = g.links[static_cast<std::size_t>(lid)];
            QuadTerm t;
            t.vars = vars;
            t.offset = g.occupancy[static_cast<std::size_t>(lid)] - l.capacity;
            t.scale = k / (static_cast<double>(l.capacity) * l.capacity);
            ap.bqp.quad_terms.push_back(std::move(t));
        }
    };
    add_terms(fir_vars, w.k1);
    add_terms(sec_vars, w.k2);
    return ap;
}

// Chosen candidate index per robot.
struct Selection {
    std::vector<int> chosen;
    double objective = 0.0;
    Assignment::Status status = Assignment::Status::optimal;
};

inline Selection select_paths(const AssembledProblem& ap, double time_budget_s,
                              long max_nodes = 0) {
    const Assignment a = solve(ap.bqp, time_budget_s, max_nodes);
    Selection s;
    s.objective = a.objective;
    s.status = a.status;
    s.chosen.resize(ap.bqp.groups.size(), -1);
    for (std::size_t gi = 0; gi < a.chosen.size(); ++gi) {
        const auto [robot, cand] = ap.var_owner[static_cast<std::size_t>(a.chosen[gi])];
        s.chosen[static_cast<std::size_t>(robot)] = cand;
    }
    return s;
}

// Greedy local position allocation: first waypoint nearest the robot, each
// later waypoint nearest the previous one, ties to the lowest position id.
inline ControlPlan allocate_positions(const std::vector<int>& node_list, const NetGraph& g,
                                      Vec2 robot_position, Vec2 final_goal) {
    ControlPlan plan;
    plan.final_goal = final_goal;
    Vec2 ref = robot_position;
    for (int node : node_list) {
        const PathNode& n = g.nodes[static_cast<std::size_t>(node)];
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int m : n.members) {
            const double d = dist(g.positions[static_cast<std::size_t>(m)].position, ref);
            if (d < best_d) {
                best_d = d;
                best = m;
            }
        }
        plan.path_nodes.push_back(node);
        plan.path_pos.push_back(best);
        ref = g.positions[static_cast<std::size_t>(best)].position;
    }
    return plan;
}

// Waypoint-arrival protocol: pop the reached node/position, shift
// d_pre/d_nex, rebind the link and refresh the occupied cell from the
// physical position.
inline void on_waypoint_reached(RobotSchedState& robot, ControlPlan& plan, const NetGraph& g,
                                const CellSet& cells, Vec2 position) {
    if (plan.path_nodes.empty()) {
        throw SchedulerError("on_waypoint_reached: plan already exhausted");
    }
    const int popped = plan.path_nodes.front();
    plan.path_nodes.erase(plan.path_nodes.begin());
    plan.path_pos.erase(plan.path_pos.begin());
    robot.d_pre = popped;
    if (!plan.path_nodes.empty()) {
        robot.d_nex = plan.path_nodes.front();
        robot.link = g.link_between(robot.d_pre, robot.d_nex);
        if (robot.link < 0) {
            throw SchedulerError("on_waypoint_reached: consecutive plan nodes are not linked");
        }
    } else {
        robot.d_nex = -1;
        robot.link = -1;
    }
    const int cell = cells.cell_at(position);
    if (cell >= 0) robot.c_now = cell;
}

// Wall-clock breakdown of one scheduling call, Table-style.
struct PlannerTiming {
    double search_s = 0.0;
    double select_s = 0.0;
    double allocate_s = 0.0;

    double total() const { return search_s + select_s + allocate_s; }
};

struct PlanResult {
    std::vector<ControlPlan> plans;  // indexed like the input states
    PlannerTiming timing;
    Assignment::Status status = Assignment::Status::optimal;
    double objective = 0.0;
    int miqp_robots = 0;
    int candidate_count = 0;
    int stranded = 0;
};

// Plans replace wholesale, so the state's target node and link rebind to
// the new plan head. d_pre is on the current cell's lower boundary whenever
// the robot has passed a node, which makes the rebound link the one
// crossing the current cell.
inline void rebind_state(RobotSchedState& s, const ControlPlan& plan, const NetGraph& g) {
    if (!plan.path_nodes.empty()) {
        s.d_nex = plan.path_nodes.front();
        s.link = s.d_pre >= 0 ? g.link_between(s.d_pre, s.d_nex) : -1;
    } else {
        s.d_nex = -1;
        s.link = -1;
    }
}

// One full scheduling call: refresh Num, search candidate sets (memoized
// per cell/goal pair), assemble and solve the path-selection program, then
// allocate concrete positions. Robots already in their goal cell bypass
// the program and head straight for the goal. Robots with an empty
// candidate set are flagged stranded and hold position.
inline PlanResult plan_frsp(std::vector<RobotSchedState>& states, const std::vector<Vec2>& positions,
                            const std::vector<Vec2>& goals, const std::vector<std::uint8_t>& active,
                            NetGraph& g, const Weights& w, double solver_budget_s,
                            long solver_node_budget = 0,
                            const std::vector<ControlPlan>& prev_plans = {}) {
    using clock = std::chrono::steady_clock;
    const auto elapsed = [](clock::time_point from) {
        return std::chrono::duration<double>(clock::now() - from).count();
    };

    PlanResult out;
    out.plans.resize(states.size());
    recount_occupancy(g, states);

    const auto t_search = clock::now();
    detail::PathSetCache cache;
    std::vector<int> miqp_robots;
    std::vector<std::vector<PathCandidate>> miqp_candidates;
    for (std::size_t r = 0; r < states.size(); ++r) {
        if (!active[r]) continue;
        RobotSchedState& s = states[r];
        if (s.c_now == s.goal_cell) {
            out.plans[r] = ControlPlan{{}, {}, goals[r]};
            rebind_state(s, out.plans[r], g);
            continue;
        }
        auto cands = detail::materialize(cache.get(g, s.c_now, s.goal_cell), g, positions[r],
                                         goals[r]);
        if (!prev_plans.empty() && !prev_plans[r].path_nodes.empty()) {
            for (auto& c : cands) {
                if (c.node_list == prev_plans[r].path_nodes) {
                    c.length = std::max(0.0, c.length - kIncumbentBonusM);
                    break;
                }
            }
        }
        if (cands.empty()) {
            ++out.stranded;
            out.plans[r] = ControlPlan{{}, {}, positions[r]};
            rebind_state(s, out.plans[r], g);
            continue;
        }
        out.candidate_count += static_cast<int>(cands.size());
        miqp_robots.push_back(static_cast<int>(r));
        miqp_candidates.push_back(std::move(cands));
    }
    out.timing.search_s = elapsed(t_search);
    out.miqp_robots = static_cast<int>(miqp_robots.size());

    if (!miqp_robots.empty()) {
        const auto t_select = clock::now();
        const AssembledProblem ap = assemble_problem(miqp_candidates, g, w);
        const Selection sel = select_paths(ap, solver_budget_s, solver_node_budget);
        out.timing.select_s = elapsed(t_select);
        out.status = sel.status;
        out.objective = sel.objective;

        const auto t_alloc = clock::now();
        for (std::size_t k = 0; k < miqp_robots.size(); ++k) {
            const auto r = static_cast<std::size_t>(miqp_robots[k]);
            const PathCandidate& chosen = miqp_candidates[k][static_cast<std::size_t>(
                sel.chosen[k])];
            out.plans[r] = allocate_positions(chosen.node_list, g, positions[r], goals[r]);
            rebind_state(states[r], out.plans[r], g);
        }
        out.timing.allocate_s = elapsed(t_alloc);
    }
    return out;
}

} // namespace frsp
