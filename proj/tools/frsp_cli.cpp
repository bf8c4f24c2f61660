#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "frsp/bench.hpp"
#include "frsp/svg.hpp"

namespace {

struct MapOptions {
    std::string map_file;
    std::string gen_family;
    std::uint32_t seed = 0;
    std::string size = "40x60";
    double resolution = 1.0;
    double density = 0.12;
    double corridor = 1.2;

    void attach(CLI::App* cmd) {
        cmd->add_option("--map", map_file, "map file to load");
        cmd->add_option("--gen", gen_family, "generate a map: forest|maze")
            ->check(CLI::IsMember({"forest", "maze"}));
        cmd->add_option("--seed", seed, "generator seed");
        cmd->add_option("--size", size, "generated map size WxH in meters");
        cmd->add_option("--res", resolution, "grid resolution in meters");
        cmd->add_option("--density", density, "forest obstacle density");
        cmd->add_option("--corridor", corridor, "maze corridor width in meters");
    }

    frsp::MapGenConfig gen_config() const {
        frsp::MapGenConfig cfg;
        cfg.family = gen_family == "maze" ? frsp::MapGenConfig::Family::maze
                                          : frsp::MapGenConfig::Family::forest;
        cfg.seed = seed;
        const auto x = size.find('x');
        if (x == std::string::npos) {
            throw CLI::ValidationError("--size", "expected WxH, e.g. 40x60");
        }
        cfg.width_m = std::stod(size.substr(0, x));
        cfg.height_m = std::stod(size.substr(x + 1));
        cfg.resolution = resolution;
        cfg.obstacle_density = density;
        cfg.corridor_width_m = corridor;
        return cfg;
    }

    frsp::GridMap make_map() const {
        if (!map_file.empty()) return frsp::load_map(map_file);
        if (gen_family.empty()) {
            throw CLI::ValidationError("--map/--gen", "one of --map or --gen is required");
        }
        return frsp::generate_map(gen_config());
    }
};

void write_trace(const std::string& path, const std::vector<frsp::TrajectorySample>& traj) {
    std::ofstream out(path, std::ios::binary);
    out << "t,id,x,y\n";
    for (const auto& s : traj) {
        for (std::size_t r = 0; r < s.positions.size(); ++r) {
            out << frsp::detail::format_double(s.t) << "," << r << ","
                << frsp::detail::format_double(s.positions[r].x) << ","
                << frsp::detail::format_double(s.positions[r].y) << "\n";
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"flow-inspired real-time scheduling planner benchmark"};
    app.require_subcommand(1);
    app.set_config("--config");

    // gen
    auto* gen = app.add_subcommand("gen", "generate a map file");
    MapOptions gen_opts;
    gen_opts.attach(gen);
    std::string gen_out = "map.txt";
    gen->add_option("--out", gen_out, "output map file");

    // run
    auto* runc = app.add_subcommand("run", "run one simulation");
    MapOptions run_opts;
    run_opts.attach(runc);
    std::string planner = "frsp";
    int robots = 10;
    std::string trace_file, snapshot_file, run_csv, sched_trace_file;
    double max_time = 0.0;
    runc->add_option("--planner", planner, "frsp|astar|greedy|runcost")
        ->check(CLI::IsMember({"frsp", "astar", "greedy", "runcost"}));
    runc->add_option("--robots", robots, "number of robots");
    runc->add_option("--trace", trace_file, "write trajectory CSV");
    runc->add_option("--sched-trace", sched_trace_file, "write one line per scheduling call");
    runc->add_option("--snapshot", snapshot_file, "write SVG snapshot");
    runc->add_option("--out", run_csv, "append one results CSV row to this file");
    runc->add_option("--max-time", max_time, "simulated time cap in seconds");

    // bench
    auto* bench = app.add_subcommand("bench", "run the benchmark grid");
    std::vector<std::string> bench_gens{"forest", "maze"};
    std::vector<int> bench_counts{10, 50, 100};
    std::vector<std::string> bench_planners{"frsp", "astar", "greedy", "runcost"};
    std::vector<std::string> bench_maps;
    int reps = 3;
    std::uint32_t bench_seed = 1;
    std::string bench_size = "40x60";
    std::string out_dir = "bench_out";
    bool no_timing = false;
    bool bench_snapshot = false;
    bench->add_option("--gen", bench_gens, "map families to generate");
    bench->add_option("--map", bench_maps, "map files to include");
    bench->add_option("--robots", bench_counts, "robot counts");
    bench->add_option("--planner", bench_planners, "planners to compare");
    bench->add_option("--reps", reps, "repetitions (seed offsets) per map");
    bench->add_option("--seed", bench_seed, "base generator seed");
    bench->add_option("--size", bench_size, "generated map size WxH");
    bench->add_option("--out", out_dir, "output directory");
    bench->add_flag("--no-timing", no_timing, "blank wall-clock columns for byte-stable CSVs");
    bench->add_flag("--snapshot", bench_snapshot, "write one SVG per map");

    // net
    auto* net = app.add_subcommand("net", "dump decomposition and network");
    MapOptions net_opts;
    net_opts.attach(net);
    std::string net_svg;
    net->add_option("--svg", net_svg, "write SVG overlay");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            if (gen_opts.gen_family.empty()) {
                std::cerr << "gen: --gen forest|maze is required\n";
                return 2;
            }
            frsp::GridMap map = frsp::generate_map(gen_opts.gen_config());
            frsp::save_map(map, gen_out);
            std::cout << "wrote " << gen_out << " (" << map.width << "x" << map.height
                      << " cells, " << map.occupied_count() << " occupied)\n";
            return 0;
        }

        if (runc->parsed()) {
            frsp::GridMap map = run_opts.make_map();
            frsp::SimConfig cfg;
            cfg.planner = frsp::planner_from_name(planner);
            cfg.max_sim_time = max_time;
            cfg.record_trajectories = !trace_file.empty() || !snapshot_file.empty();
            frsp::Metrics m = frsp::run(map, robots, cfg);

            std::printf("planner  %s\nrobots   %d\nmakespan %.3f s%s\n", planner.c_str(), robots,
                        m.makespan, m.dnf ? " (DNF)" : "");
            std::printf("min pairwise distance   %.3f m\n", m.min_pairwise);
            std::printf("min obstacle clearance  %.3f m\n", m.min_obstacle_clearance);
            std::printf("scheduling calls        %d\n", m.sched_calls);
            if (m.sched_calls > 0) {
                std::printf("mean call time          %.4f s (search %.4f, select %.4f, allocate %.4f)\n",
                            m.compute_total_s() / m.sched_calls, m.search_s / m.sched_calls,
                            m.select_s / m.sched_calls, m.allocate_s / m.sched_calls);
            }
            if (m.stranded > 0) std::printf("stranded robots         %d\n", m.stranded);
            if (m.safety_violation) std::printf("SAFETY VIOLATION: %s\n", m.violation_detail.c_str());

            if (!trace_file.empty()) write_trace(trace_file, m.trajectory);
            if (!sched_trace_file.empty()) {
                std::ofstream out(sched_trace_file, std::ios::binary);
                out << frsp::schedule_trace(m);
            }
            if (!snapshot_file.empty()) {
                const frsp::CellSet cells = frsp::decompose(map);
                const frsp::NetGraph netg = frsp::build_network(cells, cfg.net);
                frsp::write_svg(snapshot_file, frsp::render_svg(map, &cells, &netg, &m.trajectory));
            }
            if (!run_csv.empty()) {
                frsp::RunRecord rec;
                rec.map_label = run_opts.map_file.empty() ? run_opts.gen_family : run_opts.map_file;
                rec.family = run_opts.map_file.empty() ? run_opts.gen_family : "file";
                rec.seed = run_opts.seed;
                rec.planner = cfg.planner;
                rec.n = robots;
                rec.metrics = m;
                const bool fresh = !std::ifstream(run_csv).good();
                std::ofstream out(run_csv, std::ios::app | std::ios::binary);
                if (fresh) out << frsp::kResultsCsvHeader << "\n";
                std::string csv = frsp::results_csv({rec}, false);
                out << csv.substr(csv.find('\n') + 1);
            }
            return m.safety_violation ? 1 : 0;
        }

        if (bench->parsed()) {
            frsp::RunSpec spec;
            for (const auto& fam : bench_gens) {
                frsp::MapSpec ms;
                ms.gen.family = fam == "maze" ? frsp::MapGenConfig::Family::maze
                                              : frsp::MapGenConfig::Family::forest;
                ms.gen.seed = bench_seed;
                const auto x = bench_size.find('x');
                ms.gen.width_m = std::stod(bench_size.substr(0, x));
                ms.gen.height_m = std::stod(bench_size.substr(x + 1));
                ms.label = fam;
                spec.maps.push_back(ms);
            }
            for (const auto& f : bench_maps) {
                frsp::MapSpec ms;
                ms.path = f;
                ms.label = f;
                spec.maps.push_back(ms);
            }
            spec.robot_counts = bench_counts;
            spec.planners.clear();
            for (const auto& p : bench_planners) spec.planners.push_back(frsp::planner_from_name(p));
            spec.repetitions = reps;
            spec.output_dir = out_dir;
            spec.zero_wallclock = no_timing;

            frsp::BenchResult res = frsp::run_benchmark(spec);
            std::cout << res.summary << "\nwrote " << out_dir << "/results.csv and summary.txt\n";
            if (bench_snapshot) {
                for (const auto& ms : spec.maps) {
                    if (!ms.path.empty()) continue;
                    frsp::GridMap map = frsp::generate_map(ms.gen);
                    const frsp::CellSet cells = frsp::decompose(map);
                    const frsp::NetGraph netg = frsp::build_network(cells, spec.sim.net);
                    frsp::write_svg(out_dir + "/" + ms.label + ".svg",
                                    frsp::render_svg(map, &cells, &netg, nullptr));
                }
            }
            int errors = 0;
            for (const auto& r : res.records) errors += r.error ? 1 : 0;
            if (errors > 0) std::cerr << errors << " runs failed to execute\n";
            return res.any_safety_violation ? 1 : 0;
        }

        if (net->parsed()) {
            frsp::GridMap map = net_opts.make_map();
            const frsp::CellSet cells = frsp::decompose(map);
            const frsp::NetGraph netg = frsp::build_network(cells, frsp::NetworkParams{});
            std::cout << frsp::decomposition_report(cells);
            std::cout << frsp::network_dump(netg);
            if (!net_svg.empty()) {
                frsp::write_svg(net_svg, frsp::render_svg(map, &cells, &netg, nullptr));
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
