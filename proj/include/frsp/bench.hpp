#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "frsp/sim.hpp"

namespace frsp {

// One map source: either a file or a generator configuration. Repetition r
// of a generated map perturbs the seed, so "3 seeds" of a family are three
// repetitions of one spec.
struct MapSpec {
    std::string path;  // empty: generated
    MapGenConfig gen;
    std::string label;

    std::string family_name() const {
        if (!path.empty()) return "file";
        return gen.family == MapGenConfig::Family::forest ? "forest" : "maze";
    }
};

struct RunSpec {
    std::vector<MapSpec> maps;
    std::vector<int> robot_counts{10, 50, 100, 150, 200, 250, 300, 350, 400, 450, 500};
    std::vector<PlannerKind> planners{PlannerKind::frsp, PlannerKind::astar, PlannerKind::greedy,
                                      PlannerKind::runcost};
    int repetitions = 1;
    SimConfig sim;
    std::string output_dir;
    bool zero_wallclock = false;  // blank the wall-clock columns for byte-stable CSVs
};

struct RunRecord {
    std::string map_label;
    std::string family;
    std::uint32_t seed = 0;
    PlannerKind planner = PlannerKind::frsp;
    int n = 0;
    int rep = 0;
    bool error = false;  // run threw (configuration/planning failure)
    std::string error_detail;
    Metrics metrics;
};

inline double improvement_pct(double baseline, double frsp_value) {
    return (baseline - frsp_value) / baseline * 100.0;
}

inline const char* kResultsCsvHeader =
    "map,family,seed,planner,robots,rep,makespan,dnf,safety_violation,error,min_pairwise,"
    "min_obstacle_clearance,stranded,escapes,sched_calls,search_s,select_s,allocate_s,sum_s";

inline std::string results_csv(const std::vector<RunRecord>& records, bool zero_wallclock) {
    std::string out = std::string(kResultsCsvHeader) + "\n";
    for (const auto& r : records) {
        const Metrics& m = r.metrics;
        const double calls = std::max(1, m.sched_calls);
        const double search = zero_wallclock ? 0.0 : m.search_s / calls;
        const double select = zero_wallclock ? 0.0 : m.select_s / calls;
        const double alloc = zero_wallclock ? 0.0 : m.allocate_s / calls;
        out += r.map_label + "," + r.family + "," + std::to_string(r.seed) + "," +
               planner_name(r.planner) + "," + std::to_string(r.n) + "," + std::to_string(r.rep) +
               "," + detail::format_double(m.makespan) + "," + (m.dnf ? "1" : "0") + "," +
               (m.safety_violation ? "1" : "0") + "," + (r.error ? "1" : "0") + "," +
               detail::format_double(m.min_pairwise) + "," +
               detail::format_double(m.min_obstacle_clearance) + "," +
               std::to_string(m.stranded) + "," + std::to_string(m.escapes) + "," +
               std::to_string(m.sched_calls) + "," + detail::format_double(search) + "," +
               detail::format_double(select) + "," + detail::format_double(alloc) + "," +
               detail::format_double(search + select + alloc) + "\n";
    }
    return out;
}

// Mean makespan per (family, planner, n), the improvement table of frsp
// against every other planner, and the per-n compute-time breakdown.
inline std::string summary_tables(const std::vector<RunRecord>& records,
                                  bool zero_wallclock = false) {
    struct Agg {
        double makespan_sum = 0.0;
        int runs = 0;
        int dnf = 0;
    };
    std::map<std::tuple<std::string, std::string, int>, Agg> by_key;
    std::map<int, std::array<double, 4>> timing;  // n -> (search, select, allocate, runs)
    for (const auto& r : records) {
        if (r.error) continue;
        auto& a = by_key[{r.family, planner_name(r.planner), r.n}];
        a.makespan_sum += r.metrics.makespan;
        a.runs += 1;
        a.dnf += r.metrics.dnf ? 1 : 0;
        if (r.planner == PlannerKind::frsp && r.metrics.sched_calls > 0) {
            auto& t = timing[r.n];
            const double calls = r.metrics.sched_calls;
            t[0] += zero_wallclock ? 0.0 : r.metrics.search_s / calls;
            t[1] += zero_wallclock ? 0.0 : r.metrics.select_s / calls;
            t[2] += zero_wallclock ? 0.0 : r.metrics.allocate_s / calls;
            t[3] += 1.0;
        }
    }

    std::ostringstream out;
    out << "== mean makespan (s) ==\n";
    out << "family    planner   n      mean    runs  dnf\n";
    for (const auto& [key, a] : by_key) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-9s %-9s %-6d %7.2f  %-5d %d\n",
                      std::get<0>(key).c_str(), std::get<1>(key).c_str(), std::get<2>(key),
                      a.makespan_sum / a.runs, a.runs, a.dnf);
        out << line;
    }

    out << "\n== frsp improvement (%), mean over n ==\n";
    out << "family    vs         improvement\n";
    std::map<std::string, std::map<std::string, std::pair<double, int>>> impr;
    for (const auto& [key, a] : by_key) {
        const auto& [family, planner, n] = key;
        if (planner == "frsp") continue;
        auto frsp_it = by_key.find({family, "frsp", n});
        if (frsp_it == by_key.end()) continue;
        const double frsp_mean = frsp_it->second.makespan_sum / frsp_it->second.runs;
        const double base_mean = a.makespan_sum / a.runs;
        auto& cell = impr[family][planner];
        cell.first += improvement_pct(base_mean, frsp_mean);
        cell.second += 1;
    }
    for (const auto& [family, by_planner] : impr) {
        for (const auto& [planner, cell] : by_planner) {
            char line[128];
            std::snprintf(line, sizeof(line), "%-9s %-9s %8.2f%%\n", family.c_str(),
                          planner.c_str(), cell.first / cell.second);
            out << line;
        }
    }

    out << "\n== frsp mean compute time per call (s) ==\n";
    out << "n       search   select   allocate sum\n";
    for (const auto& [n, t] : timing) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-7d %.4f   %.4f   %.4f   %.4f\n", n, t[0] / t[3],
                      t[1] / t[3], t[2] / t[3], (t[0] + t[1] + t[2]) / t[3]);
        out << line;
    }
    return out.str();
}

struct BenchResult {
    std::vector<RunRecord> records;
    std::string csv;
    std::string summary;
    bool any_safety_violation = false;
};

inline BenchResult run_benchmark(const RunSpec& spec) {
    BenchResult result;
    for (const auto& ms : spec.maps) {
        for (int rep = 0; rep < spec.repetitions; ++rep) {
            GridMap map;
            std::uint32_t seed = 0;
            bool map_ok = true;
            std::string map_err;
            if (ms.path.empty()) {
                MapGenConfig gen = ms.gen;
                gen.seed += static_cast<std::uint32_t>(rep);
                seed = gen.seed;
                try {
                    map = generate_map(gen);
                } catch (const std::exception& e) {
                    map_ok = false;
                    map_err = e.what();
                }
            } else {
                try {
                    map = load_map(ms.path);
                } catch (const std::exception& e) {
                    map_ok = false;
                    map_err = e.what();
                }
            }
            for (PlannerKind planner : spec.planners) {
                for (int n : spec.robot_counts) {
                    RunRecord rec;
                    rec.map_label = ms.label.empty() ? ms.family_name() : ms.label;
                    rec.family = ms.family_name();
                    rec.seed = seed;
                    rec.planner = planner;
                    rec.n = n;
                    rec.rep = rep;
                    if (!map_ok) {
                        rec.error = true;
                        rec.error_detail = map_err;
                    } else {
                        SimConfig cfg = spec.sim;
                        cfg.planner = planner;
                        try {
                            rec.metrics = run(map, n, cfg);
                            result.any_safety_violation |= rec.metrics.safety_violation;
                        } catch (const std::exception& e) {
                            rec.error = true;
                            rec.error_detail = e.what();
                        }
                    }
                    result.records.push_back(std::move(rec));
                }
            }
        }
    }
    result.csv = results_csv(result.records, spec.zero_wallclock);
    result.summary = summary_tables(result.records, spec.zero_wallclock);
    if (!spec.output_dir.empty()) {
        std::filesystem::create_directories(spec.output_dir);
        std::ofstream csv(spec.output_dir + "/results.csv", std::ios::binary);
        csv << result.csv;
        std::ofstream sum(spec.output_dir + "/summary.txt", std::ios::binary);
        sum << result.summary;
    }
    return result;
}

} // namespace frsp
