#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "frsp/baselines.hpp"
#include "frsp/decompose.hpp"
#include "frsp/grid_map.hpp"
#include "frsp/motion.hpp"
#include "frsp/network.hpp"
#include "frsp/scheduler.hpp"

namespace frsp {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimConfig {
    double h = 0.01;    // integration step
    int avoid_hz = 100;
    int sched_hz = 1;
    Weights weights{1.0, 0.5, 0.5};
    MotionLimits limits{};
    NetworkParams net{};
    PlannerKind planner = PlannerKind::frsp;
    double max_sim_time = 0.0;  // 0: ten times the slowest kinematic bound
    double solver_budget_s = 0.5;
    long solver_node_budget = 150000;  // deterministic cap used by the sim
    double band_height_m = 6.5;
    double lattice_spacing_factor = 4.0;  // x r_min; >= alpha keeps spawns legal
    std::uint32_t seed = 0;
    bool record_trajectories = false;
    double traj_sample_dt = 0.1;

    double arrival_tol() const { return 1.5 * limits.r_min; }
    int steps_per_sched() const { return std::max(1, avoid_hz / sched_hz); }
};

struct SchedCallStat {
    double t = 0.0;
    double remaining_pre = 0.0;   // network distance of the incoming plans
    double remaining_post = 0.0;  // after replanning
    int reroutes = 0;
    int miqp_robots = 0;
    int candidates = 0;
    double objective = 0.0;
    Assignment::Status status = Assignment::Status::optimal;
    PlannerTiming timing;
    // conservation counts at the call instant; they always sum to n
    int pre_network = 0;
    int on_link = 0;
    int in_goal_cell = 0;
    int arrived = 0;
};

struct TrajectorySample {
    double t = 0.0;
    std::vector<Vec2> positions;
};

struct Metrics {
    double makespan = 0.0;
    bool dnf = false;
    bool safety_violation = false;
    std::string violation_detail;
    double min_pairwise = std::numeric_limits<double>::infinity();
    double min_obstacle_clearance = std::numeric_limits<double>::infinity();
    int stranded = 0;
    int escapes = 0;
    int sched_calls = 0;
    double search_s = 0.0;  // wall-clock totals over all calls
    double select_s = 0.0;
    double allocate_s = 0.0;
    std::vector<double> per_robot_path_len;
    std::vector<double> arrival_times;
    std::vector<SchedCallStat> sched_stats;
    std::vector<TrajectorySample> trajectory;

    double compute_total_s() const { return search_s + select_s + allocate_s; }
};

// One line per scheduling call: timestamp, robot and candidate counts,
// objective, solver status and the wall-clock breakdown.
inline std::string schedule_trace(const Metrics& m) {
    std::string out;
    for (const auto& s : m.sched_stats) {
        const char* status = s.status == Assignment::Status::optimal    ? "optimal"
                             : s.status == Assignment::Status::incumbent ? "incumbent"
                                                                         : "fallback";
        out += "t=" + detail::format_double(s.t) + " robots=" + std::to_string(s.miqp_robots) +
               " candidates=" + std::to_string(s.candidates) + " objective=" +
               detail::format_double(s.objective) + " status=" + status + " search=" +
               detail::format_double(s.timing.search_s) + " select=" +
               detail::format_double(s.timing.select_s) + " allocate=" +
               detail::format_double(s.timing.allocate_s) + " reroutes=" +
               std::to_string(s.reroutes) + "\n";
    }
    return out;
}

// Bands are the obstacle-free strips where robots spawn and finish: the
// bottom and top of the map.
inline Rect sim_start_band(const GridMap& map, const SimConfig& cfg) {
    return {{map.origin.x, map.origin.y},
            {map.origin.x + map.width_m(), map.origin.y + cfg.band_height_m}};
}
inline Rect sim_goal_band(const GridMap& map, const SimConfig& cfg) {
    return {{map.origin.x, map.origin.y + map.height_m() - cfg.band_height_m},
            {map.origin.x + map.width_m(), map.origin.y + map.height_m()}};
}

// Matrix-queue placement: a centred rectangular lattice filled row-major
// from the interior-facing row outward. Spacing stays >= alpha * r_min.
inline std::vector<Vec2> place_robots(const GridMap& map, int n, const Rect& band,
                                      double spacing, bool fill_from_top) {
    const double margin = spacing * 0.5;
    const int cols =
        static_cast<int>(std::floor((band.width() - 2.0 * margin) / spacing + 1e-9)) + 1;
    const int rows =
        static_cast<int>(std::floor((band.height() - 2.0 * margin) / spacing + 1e-9)) + 1;
    if (cols < 1 || rows < 1 || static_cast<long>(cols) * rows < n) {
        throw SimError("band cannot hold " + std::to_string(n) + " robots at spacing " +
                       detail::format_double(spacing));
    }
    const double x0 = band.center().x - 0.5 * (cols - 1) * spacing;
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const int row = k / cols;
        const int col = k % cols;
        const double y = fill_from_top ? band.hi.y - margin - row * spacing
                                       : band.lo.y + margin + row * spacing;
        const Vec2 p{x0 + col * spacing, y};
        if (!map.is_free(p)) {
            throw SimError("placement point is not free space");
        }
        pts.push_back(p);
    }
    return pts;
}

namespace detail {

inline double plan_network_length(const ControlPlan& plan, const NetGraph& g) {
    double len = 0.0;
    for (std::size_t k = 0; k + 1 < plan.path_nodes.size(); ++k) {
        const int lid = g.link_between(plan.path_nodes[k], plan.path_nodes[k + 1]);
        if (lid >= 0) len += g.links[static_cast<std::size_t>(lid)].length;
    }
    return len;
}

} // namespace detail

// Closed-loop experiment: motion at avoid_hz, scheduling at sched_hz,
// termination when every robot is inside its arrival tolerance or the time
// cap elapses. Planner compute time is measured in wall clock but does not
// consume simulated time.
inline Metrics run(const GridMap& map, int n_robots, const SimConfig& cfg) {
    Metrics metrics;
    if (n_robots == 0) {
        metrics.makespan = 0.0;
        return metrics;
    }

    const CellSet cells = decompose(map);
    NetGraph net = build_network(cells, cfg.net);

    const Rect sband = sim_start_band(map, cfg);
    const Rect gband = sim_goal_band(map, cfg);
    const double spacing = cfg.lattice_spacing_factor * cfg.limits.r_min;
    const auto starts = place_robots(map, n_robots, sband, spacing, true);
    const auto goals = place_robots(map, n_robots, gband, spacing, true);

    std::vector<RobotState> robots(static_cast<std::size_t>(n_robots));
    std::vector<RobotSchedState> sched(static_cast<std::size_t>(n_robots));
    std::vector<ControlPlan> plans(static_cast<std::size_t>(n_robots));
    std::vector<std::uint8_t> active(static_cast<std::size_t>(n_robots), 1);
    double kinematic_bound = 0.0;
    for (int r = 0; r < n_robots; ++r) {
        const auto ur = static_cast<std::size_t>(r);
        robots[ur].id = r;
        robots[ur].position = starts[ur];
        sched[ur].robot_id = r;
        sched[ur].c_now = cells.cell_at(starts[ur]);
        sched[ur].start_cell = sched[ur].c_now;
        sched[ur].goal_cell = cells.cell_at(goals[ur]);
        plans[ur] = ControlPlan{{}, {}, goals[ur]};
        if (sched[ur].c_now < 0 || sched[ur].goal_cell < 0) {
            throw SimError("robot placed outside the decomposed free space");
        }
        kinematic_bound = std::max(kinematic_bound, dist(starts[ur], goals[ur]) / cfg.limits.v_max);
    }
    const double time_cap =
        cfg.max_sim_time > 0.0 ? cfg.max_sim_time : std::max(10.0 * kinematic_bound, 180.0);

    metrics.per_robot_path_len.assign(static_cast<std::size_t>(n_robots), 0.0);
    metrics.arrival_times.assign(static_cast<std::size_t>(n_robots), -1.0);

    // A* plans once, before the loop
    std::vector<std::vector<Vec2>> grid_waypoints(static_cast<std::size_t>(n_robots));
    std::vector<std::size_t> grid_wp_index(static_cast<std::size_t>(n_robots), 0);
    if (cfg.planner == PlannerKind::astar) {
        const auto t0 = std::chrono::steady_clock::now();
        for (int r = 0; r < n_robots; ++r) {
            grid_waypoints[static_cast<std::size_t>(r)] =
                astar_plan(map, starts[static_cast<std::size_t>(r)],
                           goals[static_cast<std::size_t>(r)]);
        }
        metrics.search_s += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                .count();
    }

    StallEscape escape(static_cast<std::size_t>(n_robots), cfg.h);
    std::vector<Vec2> targets(static_cast<std::size_t>(n_robots));
    const double tol = cfg.arrival_tol();
    const int steps_per_sched = cfg.steps_per_sched();
    const auto max_steps = static_cast<long>(std::ceil(time_cap / cfg.h));
    int arrived_count = 0;
    long traj_every = std::max(1L, static_cast<long>(std::lround(cfg.traj_sample_dt / cfg.h)));

    const Weights weights =
        cfg.planner == PlannerKind::runcost ? runcost_weights() : cfg.weights;

    for (long step = 0; step < max_steps; ++step) {
        const double t = step * cfg.h;

        // scheduling tick
        if (step % steps_per_sched == 0) {
            const bool network_planner =
                cfg.planner == PlannerKind::frsp || cfg.planner == PlannerKind::runcost;
            if (network_planner || (cfg.planner == PlannerKind::greedy && step == 0)) {
                SchedCallStat stat;
                stat.t = t;
                for (const auto& p : plans) stat.remaining_pre += detail::plan_network_length(p, net);
                for (int r = 0; r < n_robots; ++r) {
                    const auto ur = static_cast<std::size_t>(r);
                    if (robots[ur].arrived) {
                        ++stat.arrived;
                    } else if (sched[ur].c_now == sched[ur].goal_cell) {
                        ++stat.in_goal_cell;
                    } else if (sched[ur].link >= 0) {
                        ++stat.on_link;
                    } else {
                        ++stat.pre_network;
                    }
                }

                std::vector<ControlPlan> old_plans = plans;
                if (cfg.planner == PlannerKind::greedy) {
                    const auto t0 = std::chrono::steady_clock::now();
                    auto ga = greedy_plan(sched, starts, goals, net);
                    metrics.search_s +=
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                            .count();
                    plans = std::move(ga.plans);
                    metrics.stranded = std::max(metrics.stranded, ga.stranded);
                } else {
                    std::vector<Vec2> positions(static_cast<std::size_t>(n_robots));
                    for (int r = 0; r < n_robots; ++r) {
                        positions[static_cast<std::size_t>(r)] =
                            robots[static_cast<std::size_t>(r)].position;
                    }
                    // with a node budget the wall-clock limit stays out of the
                    // loop, keeping runs bit-reproducible
                    const double budget = cfg.solver_node_budget > 0
                                              ? std::numeric_limits<double>::infinity()
                                              : cfg.solver_budget_s;
                    auto res = plan_frsp(sched, positions, goals, active, net, weights, budget,
                                         cfg.solver_node_budget, plans);
                    for (int r = 0; r < n_robots; ++r) {
                        if (active[static_cast<std::size_t>(r)]) {
                            plans[static_cast<std::size_t>(r)] =
                                std::move(res.plans[static_cast<std::size_t>(r)]);
                        }
                    }
                    metrics.search_s += res.timing.search_s;
                    metrics.select_s += res.timing.select_s;
                    metrics.allocate_s += res.timing.allocate_s;
                    metrics.stranded = std::max(metrics.stranded, res.stranded);
                    stat.miqp_robots = res.miqp_robots;
                    stat.candidates = res.candidate_count;
                    stat.objective = res.objective;
                    stat.status = res.status;
                    stat.timing = res.timing;
                }
                for (int r = 0; r < n_robots; ++r) {
                    const auto ur = static_cast<std::size_t>(r);
                    if (active[ur] && plans[ur].path_nodes != old_plans[ur].path_nodes) {
                        ++stat.reroutes;
                    }
                    stat.remaining_post += detail::plan_network_length(plans[ur], net);
                }
                ++metrics.sched_calls;
                metrics.sched_stats.push_back(stat);
            }
        }

        if (cfg.record_trajectories && step % traj_every == 0) {
            TrajectorySample sample;
            sample.t = t;
            sample.positions.reserve(static_cast<std::size_t>(n_robots));
            for (const auto& rb : robots) sample.positions.push_back(rb.position);
            metrics.trajectory.push_back(std::move(sample));
        }

        // motion tick
        for (int r = 0; r < n_robots; ++r) {
            const auto ur = static_cast<std::size_t>(r);
            if (robots[ur].arrived) {
                targets[ur] = robots[ur].position;
            } else if (cfg.planner == PlannerKind::astar) {
                const auto& wps = grid_waypoints[ur];
                targets[ur] = grid_wp_index[ur] < wps.size() ? wps[grid_wp_index[ur]]
                                                             : plans[ur].final_goal;
            } else {
                targets[ur] = plans[ur].path_pos.empty()
                                  ? plans[ur].final_goal
                                  : net.positions[static_cast<std::size_t>(plans[ur].path_pos[0])]
                                        .position;
            }
        }
        const auto filtered = escape.filter(robots, targets, map);
        const auto vels =
            rvo_step(robots, filtered, map, cfg.limits, cfg.h, static_cast<std::uint32_t>(step));
        for (int r = 0; r < n_robots; ++r) {
            const auto ur = static_cast<std::size_t>(r);
            if (robots[ur].arrived) continue;
            const Vec2 before = robots[ur].position;
            robots[ur] = integrate(robots[ur], vels[ur], cfg.h);
            metrics.per_robot_path_len[ur] += dist(before, robots[ur].position);
        }

        // waypoint and arrival bookkeeping
        for (int r = 0; r < n_robots; ++r) {
            const auto ur = static_cast<std::size_t>(r);
            if (robots[ur].arrived) continue;
            const Vec2 pos = robots[ur].position;
            if (cfg.planner == PlannerKind::astar) {
                auto& wi = grid_wp_index[ur];
                while (wi < grid_waypoints[ur].size() &&
                       dist(pos, grid_waypoints[ur][wi]) <= tol) {
                    ++wi;
                }
            } else {
                while (!plans[ur].path_pos.empty() &&
                       dist(pos, net.positions[static_cast<std::size_t>(plans[ur].path_pos[0])]
                                     .position) <= tol) {
                    on_waypoint_reached(sched[ur], plans[ur], net, cells, pos);
                }
                const int c = cells.cell_at(pos);
                if (c >= 0) sched[ur].c_now = c;
            }
            if (dist(pos, goals[ur]) <= tol) {
                robots[ur].arrived = true;
                robots[ur].velocity = {0.0, 0.0};
                active[ur] = 0;
                sched[ur].d_nex = -1;
                sched[ur].link = -1;
                metrics.arrival_times[ur] = (step + 1) * cfg.h;
                metrics.makespan = (step + 1) * cfg.h;
                ++arrived_count;
            }
        }

        // safety monitor
        for (int i = 0; i < n_robots; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const Vec2 p = robots[ui].position;
            for (int j = i + 1; j < n_robots; ++j) {
                const double d = dist(p, robots[static_cast<std::size_t>(j)].position);
                metrics.min_pairwise = std::min(metrics.min_pairwise, d);
            }
            const int cx0 = map.cell_x(p.x), cy0 = map.cell_y(p.y);
            for (int cy = cy0 - 1; cy <= cy0 + 1; ++cy) {
                for (int cx = cx0 - 1; cx <= cx0 + 1; ++cx) {
                    if (!map.occupied(cx, cy)) continue;
                    const double rx0 = map.origin.x + cx * map.resolution;
                    const double ry0 = map.origin.y + cy * map.resolution;
                    const Vec2 q{std::clamp(p.x, rx0, rx0 + map.resolution),
                                 std::clamp(p.y, ry0, ry0 + map.resolution)};
                    metrics.min_obstacle_clearance =
                        std::min(metrics.min_obstacle_clearance, dist(p, q));
                }
            }
            if (!map.is_free(p)) {
                metrics.safety_violation = true;
                metrics.violation_detail = "robot " + std::to_string(i) + " inside obstacle at t=" +
                                           detail::format_double(t);
            }
        }
        if (metrics.min_pairwise < 0.9 * cfg.limits.r_min) {
            metrics.safety_violation = true;
            if (metrics.violation_detail.empty()) {
                metrics.violation_detail =
                    "pairwise distance " + detail::format_double(metrics.min_pairwise) + " at t=" +
                    detail::format_double(t);
            }
        }
        if (metrics.safety_violation) break;

        if (arrived_count == n_robots) break;
    }

    metrics.escapes = escape.total_escapes();
    metrics.dnf = arrived_count != n_robots && !metrics.safety_violation;
    if (metrics.dnf) metrics.makespan = time_cap;
    return metrics;
}

} // namespace frsp
