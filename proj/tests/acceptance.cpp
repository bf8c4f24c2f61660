// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier end-to-end checks live here rather than in the unit
// suite.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "frsp/bench.hpp"
#include "frsp/bqp.hpp"
#include "frsp/scheduler.hpp"
#include "frsp/sim.hpp"

using namespace frsp;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what) {
    std::printf("%s  criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, what.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double unit_real(std::mt19937& rng) {
    return static_cast<double>(rng()) / 4294967296.0;
}

BinaryQuadraticProgram random_instance(std::mt19937& rng) {
    BinaryQuadraticProgram p;
    const int groups = 1 + static_cast<int>(rng() % 8u);
    int next_var = 0;
    for (int g = 0; g < groups; ++g) {
        const int size = 1 + static_cast<int>(rng() % 3u);
        std::vector<int> vars;
        for (int k = 0; k < size; ++k) vars.push_back(next_var++);
        p.groups.push_back(std::move(vars));
    }
    p.linear_costs.resize(static_cast<std::size_t>(next_var));
    for (auto& c : p.linear_costs) c = 10.0 * unit_real(rng);
    const int terms = static_cast<int>(rng() % 7u);
    for (int t = 0; t < terms; ++t) {
        QuadTerm q;
        const int cap = 1 + static_cast<int>(rng() % 5u);
        q.offset = static_cast<int>(rng() % 4u) - cap;
        q.scale = (rng() % 2 == 0 ? 1.0 : 0.5) / (cap * cap);
        for (int v = 0; v < next_var; ++v) {
            if (rng() % 3 == 0) q.vars.push_back(v);
        }
        if (!q.vars.empty()) p.quad_terms.push_back(std::move(q));
    }
    return p;
}

// --- criterion 1: solver equals the brute-force oracle ---------------------
void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937 rng(20240610);
    bool ok = true;
    int checked = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto p = random_instance(rng);
        const auto bf = brute_force(p);
        const auto a = solve(p, std::numeric_limits<double>::infinity());
        if (a.status != Assignment::Status::optimal || a.objective != bf.objective) {
            ok = false;
            break;
        }
        ++checked;
    }
    const double dt = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "solver-oracle equivalence on %d random programs, exact objectives, %.2f s "
                  "(limit 10 s)",
                  checked, dt);
    report(1, ok && dt < 10.0, buf);
}

// --- criterion 2: runcost weights reduce to shortest candidates ------------
void criterion_2() {
    std::mt19937 rng(42);
    auto rnd = [&rng](double lo, double hi) { return lo + (hi - lo) * unit_real(rng); };
    NetGraph g;
    g.up.resize(2);
    g.dn.resize(2);
    PathNode a, b;
    a.id = 0;
    a.position = {0, 0};
    a.capacity = 2;
    b.id = 1;
    b.position = {0, 2};
    b.capacity = 2;
    g.nodes = {a, b};
    Link l;
    l.id = 0;
    l.start = 0;
    l.end = 1;
    l.length = 2.0;
    l.capacity = 2;
    g.links = {l};
    g.out_links = {{0}, {}};
    g.occupancy = {1};

    bool ok = true;
    for (int trial = 0; trial < 50 && ok; ++trial) {
        const int robots = 1 + static_cast<int>(rng() % 8u);
        std::vector<std::vector<PathCandidate>> cands(static_cast<std::size_t>(robots));
        for (auto& rc : cands) {
            const int k = 1 + static_cast<int>(rng() % 4u);
            for (int c = 0; c < k; ++c) {
                PathCandidate pc;
                pc.node_list = {0, 1};
                pc.fir = 0;
                pc.length = rnd(1.0, 30.0);
                rc.push_back(pc);
            }
        }
        const auto ap = assemble_problem(cands, g, Weights{0.0, 0.0, 1.0});
        const auto sel = select_paths(ap, std::numeric_limits<double>::infinity());
        for (std::size_t r = 0; r < cands.size(); ++r) {
            int expect = 0;
            for (std::size_t c = 1; c < cands[r].size(); ++c) {
                if (cands[r][c].length < cands[r][static_cast<std::size_t>(expect)].length) {
                    expect = static_cast<int>(c);
                }
            }
            if (sel.chosen[r] != expect) ok = false;
        }
    }
    report(2, ok, "k=(0,0,1) selects each robot's shortest candidate on 50 random instances");
}

// --- criterion 3: capacity formula goldens ---------------------------------
void criterion_3() {
    const NetworkParams p{2.0, 0.4, 4};
    bool ok = true;

    CellSet cs;
    cs.cells.resize(2);
    cs.cells[0].id = 0;
    cs.cells[1].id = 1;
    BoundarySegment b;
    b.id = 0;
    b.cell_a = 0;
    b.cell_b = 1;
    b.world_y = 2.0;
    b.x0 = 0.0;
    b.x1 = 4.0;
    cs.boundaries.push_back(b);
    cs.cells[0].upper_boundaries.push_back(0);
    cs.cells[1].lower_boundaries.push_back(0);

    const NetGraph g = build_network(cs, p);
    ok &= g.positions.size() == 5;
    ok &= g.nodes.size() == 2;
    if (g.nodes.size() == 2) {
        ok &= g.nodes[0].capacity == 4 && g.nodes[1].capacity == 1;
    }
    ok &= link_capacity(2.0, 1.0, 5, 3, p) == 7;
    ok &= link_capacity(0.8, 1.0, 1, 1, p) == 1;
    ok &= link_capacity(1.0, 0.05, 4, 4, p) == 1;
    report(3, ok, "L_B=4.0 m yields 5 positions grouped into capacities {4,1}; Cap(l) cases 7/1/1");
}

// --- criterion 4: waypoint protocol golden ----------------------------------
void criterion_4() {
    NetGraph g;
    g.up.resize(4);
    g.dn.resize(4);
    auto add_node = [&g](std::vector<Vec2> members, int below, int above) {
        PathNode n;
        n.id = static_cast<int>(g.nodes.size());
        n.below_cell = below;
        n.above_cell = above;
        Vec2 mean{0, 0};
        for (Vec2 mp : members) {
            PathPos pp;
            pp.id = static_cast<int>(g.positions.size());
            pp.position = mp;
            pp.owner_node = n.id;
            g.positions.push_back(pp);
            n.members.push_back(pp.id);
            mean += mp;
        }
        n.capacity = static_cast<int>(n.members.size());
        n.position = mean / static_cast<double>(n.members.size());
        g.nodes.push_back(n);
        g.out_links.resize(g.nodes.size());
        return n.id;
    };
    auto add_link = [&g](int s, int t) {
        Link l;
        l.id = static_cast<int>(g.links.size());
        l.start = s;
        l.end = t;
        l.length = dist(g.nodes[static_cast<std::size_t>(s)].position,
                        g.nodes[static_cast<std::size_t>(t)].position);
        g.links.push_back(l);
        g.out_links[static_cast<std::size_t>(s)].push_back(l.id);
        g.occupancy.push_back(0);
        return l.id;
    };
    const int v1 = add_node({{1, 0}, {2, 0}, {3, 0}}, 0, 1);
    const int v2 = add_node({{1, 2}, {2, 2}, {3, 2}}, 1, 2);
    const int v3 = add_node({{1, 4}, {2, 4}, {3, 4}}, 2, 3);
    const int v4 = add_node({{0, 6}, {2.5, 6}, {5, 6}}, 3, -1);
    const int l1 = add_link(v1, v2);
    const int l2 = add_link(v2, v3);
    add_link(v3, v4);
    const auto& p2 = g.nodes[static_cast<std::size_t>(v2)].members;
    const auto& p3 = g.nodes[static_cast<std::size_t>(v3)].members;
    const auto& p4 = g.nodes[static_cast<std::size_t>(v4)].members;

    CellSet cells;
    cells.grid_width = 5;
    cells.grid_height = 8;
    cells.resolution = 1.0;
    cells.cells.resize(4);
    cells.cell_index.assign(40, -1);
    for (int cy = 0; cy < 8; ++cy) {
        for (int cx = 0; cx < 5; ++cx) {
            cells.cell_index[static_cast<std::size_t>(cy) * 5 + cx] = cy < 2 ? 1 : cy < 4 ? 2 : 3;
        }
    }

    // allocation golden: [P23, P33, P42]
    ControlPlan plan = allocate_positions({v2, v3, v4}, g, {3.2, 0.5}, {2.5, 7.5});
    bool ok = plan.path_pos == std::vector<int>({p2[2], p3[2], p4[1]});

    RobotSchedState robot;
    robot.c_now = 1;
    robot.d_pre = v1;
    robot.d_nex = v2;
    robot.link = l1;
    std::vector<RobotSchedState> all{robot};
    recount_occupancy(g, all);
    ok &= g.occupancy[static_cast<std::size_t>(l1)] == 1;

    on_waypoint_reached(all[0], plan, g, cells,
                        g.positions[static_cast<std::size_t>(p2[2])].position);
    ok &= all[0].c_now == 2 && all[0].d_pre == v2 && all[0].d_nex == v3 && all[0].link == l2;
    ok &= plan.path_nodes == std::vector<int>({v3, v4});
    ok &= plan.path_pos == std::vector<int>({p3[2], p4[1]});
    recount_occupancy(g, all);
    ok &= g.occupancy[static_cast<std::size_t>(l2)] == 1;
    report(4, ok, "reaching P23 shifts state to (Cell2, V2, V3, L2) with lists [V3,V4]/[P33,P42]");
}

// --- criteria 5 and 6: benchmark grid safety and makespan trend -------------
std::vector<RunRecord> benchmark_records;

void criterion_5() {
    const auto t0 = std::chrono::steady_clock::now();
    RunSpec spec;
    auto add_gen = [&spec](MapGenConfig::Family fam, std::uint32_t seed, const char* label) {
        MapSpec ms;
        ms.gen.family = fam;
        ms.gen.seed = seed;
        ms.label = label;
        spec.maps.push_back(ms);
    };
    add_gen(MapGenConfig::Family::forest, 101, "forest-a");
    add_gen(MapGenConfig::Family::forest, 202, "forest-b");
    add_gen(MapGenConfig::Family::maze, 303, "maze-a");
    add_gen(MapGenConfig::Family::maze, 404, "maze-b");
    spec.robot_counts = {10, 50, 100};
    spec.repetitions = 3;  // three seeds per map spec
    spec.zero_wallclock = false;

    const auto res = run_benchmark(spec);
    benchmark_records = res.records;

    int violations = 0;
    int errors = 0;
    double min_pair = std::numeric_limits<double>::infinity();
    for (const auto& r : res.records) {
        if (r.error) ++errors;
        if (r.metrics.safety_violation) ++violations;
        min_pair = std::min(min_pair, r.metrics.min_pairwise);
    }
    const double dt = seconds_since(t0);
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "%zu-run grid: %d safety violations, %d failed runs, min pairwise %.3f m "
                  "(floor 0.36), %.0f s (limit 1800 s)",
                  res.records.size(), violations, errors, min_pair, dt);
    report(5, violations == 0 && errors == 0 && min_pair >= 0.36 && dt <= 1800.0, buf);
}

void criterion_6() {
    auto mean_makespan = [&](const std::string& family, PlannerKind pk, int n, bool* any_dnf) {
        double sum = 0.0;
        int runs = 0;
        for (const auto& r : benchmark_records) {
            if (r.family == family && r.planner == pk && r.n == n && !r.error) {
                sum += r.metrics.makespan;
                runs += 1;
                if (any_dnf != nullptr && r.metrics.dnf) *any_dnf = true;
            }
        }
        return runs > 0 ? sum / runs : std::numeric_limits<double>::quiet_NaN();
    };

    bool dnf100 = false;
    const double frsp100 = mean_makespan("forest", PlannerKind::frsp, 100, &dnf100);
    const double astar100 = mean_makespan("forest", PlannerKind::astar, 100, &dnf100);
    const double impr100 = improvement_pct(astar100, frsp100);

    std::printf("      forest n=100 per-seed makespans (frsp / astar):\n");
    for (const auto& r : benchmark_records) {
        if (r.family == "forest" && r.n == 100 && !r.error &&
            (r.planner == PlannerKind::frsp || r.planner == PlannerKind::astar)) {
            std::printf("        %s seed %u rep %d %-6s %7.2f s%s\n", r.map_label.c_str(), r.seed,
                        r.rep, planner_name(r.planner), r.metrics.makespan,
                        r.metrics.dnf ? " DNF" : "");
        }
    }

    bool dnf10 = false;
    const double frsp10 = mean_makespan("forest", PlannerKind::frsp, 10, &dnf10);
    const double astar10 = mean_makespan("forest", PlannerKind::astar, 10, &dnf10);
    const double dev10 = std::abs(frsp10 / astar10 - 1.0) * 100.0;

    char buf[240];
    std::snprintf(buf, sizeof(buf),
                  "forest n=100 mean frsp %.2f s vs astar %.2f s: improvement %.1f%% "
                  "(target >= 5%%, floor >= 0%%); n=10 deviation %.1f%% (limit 5%%)",
                  frsp100, astar100, impr100, dev10);
    report(6, !dnf100 && !dnf10 && impr100 >= 0.0 && dev10 <= 5.0, buf);
    if (impr100 < 5.0) {
        std::printf("      note: improvement %.1f%% is below the 5%% target\n", impr100);
    }
}

// --- criterion 7: compute-time ceiling at n=500 ------------------------------
void criterion_7() {
    MapGenConfig mc;
    mc.family = MapGenConfig::Family::forest;
    mc.seed = 11;
    const GridMap map = generate_map(mc);
    const CellSet cells = decompose(map);
    NetGraph net = build_network(cells, NetworkParams{});

    const int n = 500;
    std::mt19937 rng(7);
    std::vector<RobotSchedState> sched(static_cast<std::size_t>(n));
    std::vector<Vec2> pos(static_cast<std::size_t>(n)), goals(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> active(static_cast<std::size_t>(n), 1);
    const int goal_cell = cells.cell_at(Vec2{20.0, 56.0});
    int placed = 0;
    while (placed < n) {
        const Vec2 p{unit_real(rng) * 40.0, 2.0 + unit_real(rng) * 47.0};
        const int c = cells.cell_at(p);
        if (c < 0 || c == goal_cell) continue;
        const auto up = static_cast<std::size_t>(placed);
        sched[up].robot_id = placed;
        sched[up].c_now = c;
        sched[up].goal_cell = goal_cell;
        pos[up] = p;
        goals[up] = {2.0 + unit_real(rng) * 36.0, 58.0};
        ++placed;
    }

    double best_total = std::numeric_limits<double>::infinity();
    double best_alloc = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 3; ++trial) {
        auto states = sched;
        NetGraph g = net;
        const auto res = plan_frsp(states, pos, goals, active, g, Weights{1.0, 0.5, 0.5}, 0.5,
                                   150000);
        best_total = std::min(best_total, res.timing.total());
        best_alloc = std::min(best_alloc, res.timing.allocate_s);
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "full scheduling call for 500 robots: %.3f s (limit 2.0 s), allocation %.4f s "
                  "(limit 0.1 s)",
                  best_total, best_alloc);
    report(7, best_total <= 2.0 && best_alloc <= 0.1, buf);
}

// --- criterion 8: decomposition and network invariants -----------------------
void criterion_8() {
    bool ok = true;
    std::mt19937 rng(1234);

    // partition + capacity sums + DAG on generated maps
    for (std::uint32_t seed : {5u, 6u, 7u}) {
        for (auto fam : {MapGenConfig::Family::forest, MapGenConfig::Family::maze}) {
            MapGenConfig mc;
            mc.family = fam;
            mc.seed = seed;
            mc.width_m = 30.0;
            mc.height_m = 40.0;
            const GridMap map = generate_map(mc);
            const CellSet cs = decompose(map);

            std::size_t area = 0;
            for (const auto& c : cs.cells) area += c.area_cells();
            ok &= area == map.free_count();

            const NetworkParams p{};
            const NetGraph g = build_network(cs, p);
            std::vector<int> sums(cs.boundaries.size(), 0);
            for (const auto& node : g.nodes) {
                sums[static_cast<std::size_t>(node.boundary)] += node.capacity;
            }
            for (const auto& b : cs.boundaries) {
                const int expect = passage_count(b.length(), p);
                if (expect >= 1) ok &= sums[static_cast<std::size_t>(b.id)] == expect;
            }
            for (const auto& l : g.links) {
                ok &= g.nodes[static_cast<std::size_t>(l.start)].position.y <
                      g.nodes[static_cast<std::size_t>(l.end)].position.y;
            }
        }
    }

    // dijkstra vs Bellman-Ford on 100 random layered graphs
    auto bellman_ford = [](const NetGraph& g, int src) {
        constexpr double inf = std::numeric_limits<double>::infinity();
        std::vector<double> d(g.nodes.size(), inf);
        d[static_cast<std::size_t>(src)] = 0.0;
        for (std::size_t pass = 0; pass < g.nodes.size(); ++pass) {
            bool changed = false;
            for (const auto& l : g.links) {
                if (d[static_cast<std::size_t>(l.start)] + l.length <
                    d[static_cast<std::size_t>(l.end)] - 1e-15) {
                    d[static_cast<std::size_t>(l.end)] =
                        d[static_cast<std::size_t>(l.start)] + l.length;
                    changed = true;
                }
            }
            if (!changed) break;
        }
        return d;
    };
    for (int trial = 0; trial < 100 && ok; ++trial) {
        NetGraph g;
        const int layers = 4, per_layer = 5;
        for (int ly = 0; ly < layers; ++ly) {
            for (int k = 0; k < per_layer; ++k) {
                PathNode node;
                node.id = static_cast<int>(g.nodes.size());
                node.position = {unit_real(rng) * 10.0, static_cast<double>(ly)};
                node.capacity = 1;
                g.nodes.push_back(node);
            }
        }
        g.out_links.resize(g.nodes.size());
        for (int ly = 0; ly + 1 < layers; ++ly) {
            for (int a = 0; a < per_layer; ++a) {
                for (int b = 0; b < per_layer; ++b) {
                    if (rng() % 3 == 0) continue;
                    Link l;
                    l.id = static_cast<int>(g.links.size());
                    l.start = ly * per_layer + a;
                    l.end = (ly + 1) * per_layer + b;
                    l.length = dist(g.nodes[static_cast<std::size_t>(l.start)].position,
                                    g.nodes[static_cast<std::size_t>(l.end)].position);
                    g.links.push_back(l);
                    g.out_links[static_cast<std::size_t>(l.start)].push_back(l.id);
                }
            }
        }
        const auto oracle = bellman_ford(g, 0);
        for (int t = (layers - 1) * per_layer; t < layers * per_layer; ++t) {
            const auto path = dijkstra(g, 0, t);
            if (path.empty()) {
                ok &= oracle[static_cast<std::size_t>(t)] ==
                      std::numeric_limits<double>::infinity();
            } else {
                double cost = 0.0;
                for (std::size_t k = 0; k + 1 < path.size(); ++k) {
                    const int lid = g.link_between(path[k], path[k + 1]);
                    ok &= lid >= 0;
                    if (lid >= 0) cost += g.links[static_cast<std::size_t>(lid)].length;
                }
                ok &= std::abs(cost - oracle[static_cast<std::size_t>(t)]) <= 1e-9;
            }
        }
    }
    report(8, ok, "partition, capacity sums, DAG and Dijkstra-vs-Bellman-Ford invariants");
}

// --- criterion 9: determinism ------------------------------------------------
void criterion_9() {
    RunSpec spec;
    MapSpec forest;
    forest.gen.family = MapGenConfig::Family::forest;
    forest.gen.seed = 31;
    forest.label = "forest-d";
    MapSpec maze;
    maze.gen.family = MapGenConfig::Family::maze;
    maze.gen.seed = 32;
    maze.label = "maze-d";
    spec.maps = {forest, maze};
    spec.robot_counts = {10, 50};
    spec.repetitions = 2;
    spec.zero_wallclock = true;

    const auto a = run_benchmark(spec);
    const auto b = run_benchmark(spec);
    const bool masked_identical = a.csv == b.csv && a.summary == b.summary;

    // with wall clock on, everything except the timing columns still matches
    spec.zero_wallclock = false;
    const auto c = run_benchmark(spec);
    const auto strip_timing = [](const std::string& csv) {
        std::string out;
        std::size_t start = 0;
        while (start < csv.size()) {
            std::size_t end = csv.find('\n', start);
            if (end == std::string::npos) end = csv.size();
            std::string line = csv.substr(start, end - start);
            int commas = 0;
            std::size_t cut = line.size();
            for (std::size_t i = 0; i < line.size(); ++i) {
                if (line[i] == ',' && ++commas == 15) {
                    cut = i;
                    break;
                }
            }
            out += line.substr(0, cut) + "\n";
            start = end + 1;
        }
        return out;
    };
    const bool stable_columns = strip_timing(c.csv) == strip_timing(a.csv);

    report(9, masked_identical && stable_columns,
           "repeated runs produce byte-identical CSVs (wall-clock columns masked)");
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    std::printf("%s: %d criterion(s) failed, total %.0f s\n", g_failures == 0 ? "OK" : "FAILURES",
                g_failures, seconds_since(t0));
    return g_failures == 0 ? 0 : 1;
}
