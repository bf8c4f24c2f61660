#include <catch2/catch_amalgamated.hpp>

#include "frsp/sim.hpp"

using namespace frsp;

namespace {

GridMap empty_map(double w_m, double h_m, double res = 0.5) {
    GridMap m;
    m.width = static_cast<int>(std::lround(w_m / res));
    m.height = static_cast<int>(std::lround(h_m / res));
    m.resolution = res;
    m.occ.assign(static_cast<std::size_t>(m.width) * m.height, 0);
    return m;
}

} // namespace

TEST_CASE("robot placement lattice") {
    GridMap m = empty_map(10, 10);
    const Rect band{{2.0, 1.0}, {7.0, 4.6}};  // 5.0 x 3.6 m

    SECTION("four robots in a wide band form one row") {
        auto pts = place_robots(m, 4, band, 1.2, true);
        REQUIRE(pts.size() == 4);
        for (const auto& p : pts) CHECK(p.y == pts[0].y);
    }

    SECTION("ten robots at four per row fill 4/4/2 row-major") {
        auto pts = place_robots(m, 10, band, 1.2, true);
        REQUIRE(pts.size() == 10);
        CHECK(pts[0].y == pts[3].y);
        CHECK(pts[4].y == pts[7].y);
        CHECK(pts[8].y == pts[9].y);
        CHECK(pts[0].y > pts[4].y);  // filled from the interior-facing row
        CHECK(pts[4].y > pts[8].y);
    }

    SECTION("pairwise spacing at least alpha*r_min") {
        auto pts = place_robots(m, 10, band, 1.2, true);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            for (std::size_t j = i + 1; j < pts.size(); ++j) {
                CHECK(dist(pts[i], pts[j]) >= 0.8);
            }
        }
    }

    SECTION("insufficient band capacity is an error") {
        CHECK_THROWS_AS(place_robots(m, 100, band, 1.2, true), SimError);
    }
}

TEST_CASE("zero robots complete immediately") {
    GridMap m = empty_map(12, 12);
    SimConfig cfg;
    Metrics mt = run(m, 0, cfg);
    CHECK(mt.makespan == 0.0);
    CHECK(mt.sched_calls == 0);
    CHECK_FALSE(mt.dnf);
}

TEST_CASE("single robot in an empty corridor runs at the kinematic bound") {
    // start and goal rows are exactly 10 m apart
    GridMap m = empty_map(6, 12);
    SimConfig cfg;
    cfg.band_height_m = 2.0;
    cfg.planner = PlannerKind::frsp;
    Metrics mt = run(m, 1, cfg);
    REQUIRE_FALSE(mt.dnf);
    REQUIRE_FALSE(mt.safety_violation);
    CHECK(mt.makespan == Catch::Approx(10.0 / 3.0).margin(1.0));
    CHECK(mt.per_robot_path_len[0] == Catch::Approx(10.0).margin(1.0));
}

TEST_CASE("ten robots cross a forest with frsp and astar") {
    MapGenConfig mc;
    mc.family = MapGenConfig::Family::forest;
    mc.seed = 1;
    mc.width_m = 24.0;
    mc.height_m = 30.0;
    GridMap map = generate_map(mc);

    for (PlannerKind kind : {PlannerKind::frsp, PlannerKind::astar}) {
        SimConfig cfg;
        cfg.planner = kind;
        cfg.record_trajectories = true;
        Metrics mt = run(map, 10, cfg);
        INFO("planner " << planner_name(kind) << " makespan " << mt.makespan);
        REQUIRE_FALSE(mt.dnf);
        REQUIRE_FALSE(mt.safety_violation);
        CHECK(mt.min_pairwise >= 0.9 * cfg.limits.r_min);
        CHECK(mt.min_obstacle_clearance >= 0.9 * cfg.limits.body_radius());

        // independent recheck over the logged trajectories
        double traj_min = std::numeric_limits<double>::infinity();
        for (const auto& s : mt.trajectory) {
            for (std::size_t i = 0; i < s.positions.size(); ++i) {
                for (std::size_t j = i + 1; j < s.positions.size(); ++j) {
                    traj_min = std::min(traj_min, dist(s.positions[i], s.positions[j]));
                }
                CHECK(map.is_free(s.positions[i]));
            }
        }
        CHECK(traj_min >= 0.9 * cfg.limits.r_min);

        // makespan is bounded below by the kinematic optimum
        for (double len : mt.per_robot_path_len) {
            CHECK(mt.makespan >= len / cfg.limits.v_max - 1.0);
        }
    }
}

TEST_CASE("runs are bit-reproducible") {
    MapGenConfig mc;
    mc.family = MapGenConfig::Family::maze;
    mc.seed = 2;
    mc.width_m = 24.0;
    mc.height_m = 30.0;
    GridMap map = generate_map(mc);
    SimConfig cfg;
    cfg.planner = PlannerKind::frsp;

    Metrics a = run(map, 8, cfg);
    Metrics b = run(map, 8, cfg);
    CHECK(a.makespan == b.makespan);
    CHECK(a.min_pairwise == b.min_pairwise);
    CHECK(a.per_robot_path_len == b.per_robot_path_len);
    CHECK(a.arrival_times == b.arrival_times);
    REQUIRE(a.sched_stats.size() == b.sched_stats.size());
    for (std::size_t k = 0; k < a.sched_stats.size(); ++k) {
        CHECK(a.sched_stats[k].remaining_post == b.sched_stats[k].remaining_post);
        CHECK(a.sched_stats[k].reroutes == b.sched_stats[k].reroutes);
        CHECK(a.sched_stats[k].objective == b.sched_stats[k].objective);
    }
}

TEST_CASE("conservation and monotone progress hold at every scheduling call") {
    MapGenConfig mc;
    mc.family = MapGenConfig::Family::forest;
    mc.seed = 4;
    mc.width_m = 24.0;
    mc.height_m = 30.0;
    GridMap map = generate_map(mc);
    SimConfig cfg;
    cfg.planner = PlannerKind::frsp;
    Metrics mt = run(map, 12, cfg);
    REQUIRE_FALSE(mt.dnf);
    REQUIRE(mt.sched_calls > 2);

    for (const auto& s : mt.sched_stats) {
        CHECK(s.pre_network + s.on_link + s.in_goal_cell + s.arrived == 12);
        if (s.reroutes == 0) {
            CHECK(s.remaining_post == Catch::Approx(s.remaining_pre).margin(1e-9));
        }
    }
    // between calls the plans only lose popped prefixes
    for (std::size_t k = 1; k < mt.sched_stats.size(); ++k) {
        CHECK(mt.sched_stats[k].remaining_pre <=
              mt.sched_stats[k - 1].remaining_post + 1e-9);
    }
}

TEST_CASE("stranded robots are reported, not fatal") {
    // walls with two gates too narrow for any passage position
    GridMap m = empty_map(8, 12);
    for (int cx = 0; cx < 16; ++cx) m.set_occupied(cx, 12, true);
    m.set_occupied(4, 12, false);   // 0.5 m gate: passage_count = 0
    m.set_occupied(11, 12, false);  // second gate keeps the sweep splitting
    SimConfig cfg;
    cfg.planner = PlannerKind::frsp;
    cfg.max_sim_time = 3.0;
    Metrics mt = run(m, 2, cfg);
    CHECK(mt.stranded == 2);
    CHECK(mt.dnf);
}
