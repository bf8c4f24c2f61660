#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace frsp {

// scale * (sum of selected vars + offset)^2, scale >= 0. One aggregate per
// congested link: scale = k / Cap^2, offset = Num - Cap.
struct QuadTerm {
    std::vector<int> vars;
    double offset = 0.0;
    double scale = 0.0;
};

// Binary variables partitioned into one-hot groups (one group per robot,
// exactly one variable chosen per group) with a separable convex quadratic
// objective over aggregate counts plus per-variable linear costs.
struct BinaryQuadraticProgram {
    std::vector<std::vector<int>> groups;
    std::vector<double> linear_costs;
    std::vector<QuadTerm> quad_terms;

    int num_vars() const { return static_cast<int>(linear_costs.size()); }
    int num_groups() const { return static_cast<int>(groups.size()); }

    void validate() const {
        std::vector<int> owner(linear_costs.size(), -1);
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (groups[g].empty()) throw std::invalid_argument("bqp: empty one-hot group");
            for (int v : groups[g]) {
                if (v < 0 || v >= num_vars()) throw std::invalid_argument("bqp: variable out of range");
                if (owner[static_cast<std::size_t>(v)] != -1) {
                    throw std::invalid_argument("bqp: variable in two groups");
                }
                owner[static_cast<std::size_t>(v)] = static_cast<int>(g);
            }
        }
        for (int v = 0; v < num_vars(); ++v) {
            if (owner[static_cast<std::size_t>(v)] == -1) {
                throw std::invalid_argument("bqp: variable in no group");
            }
        }
        for (const auto& t : quad_terms) {
            if (t.scale < 0.0) throw std::invalid_argument("bqp: negative quadratic scale");
        }
    }

    // chosen[g] = selected variable of group g
    double evaluate(const std::vector<int>& chosen) const {
        std::vector<std::uint8_t> sel(linear_costs.size(), 0);
        double obj = 0.0;
        for (int v : chosen) {
            sel[static_cast<std::size_t>(v)] = 1;
            obj += linear_costs[static_cast<std::size_t>(v)];
        }
        for (const auto& t : quad_terms) {
            int count = 0;
            for (int v : t.vars) count += sel[static_cast<std::size_t>(v)];
            const double x = count + t.offset;
            obj += t.scale * x * x;
        }
        return obj;
    }
};

struct Assignment {
    enum class Status { optimal, incumbent, fallback };
    std::vector<int> chosen;  // per group
    double objective = 0.0;
    Status status = Status::optimal;
};

// Exhaustive enumeration; ties resolve to the lexicographically smallest
// chosen vector. Guarded against combinatorial blowup.
inline Assignment brute_force(const BinaryQuadraticProgram& p) {
    p.validate();
    if (p.groups.empty()) {
        Assignment empty;
        empty.objective = p.evaluate({});
        return empty;
    }
    double combos = 1.0;
    for (const auto& g : p.groups) combos *= static_cast<double>(g.size());
    if (combos > 1e7) throw std::invalid_argument("bqp: instance too large for brute force");

    // enumerate with group members sorted ascending so iteration order is
    // lexicographic in the chosen vector
    std::vector<std::vector<int>> sorted = p.groups;
    for (auto& g : sorted) std::sort(g.begin(), g.end());

    const auto m = sorted.size();
    std::vector<std::size_t> idx(m, 0);
    std::vector<int> chosen(m);
    Assignment best;
    best.objective = std::numeric_limits<double>::infinity();
    while (true) {
        for (std::size_t g = 0; g < m; ++g) chosen[g] = sorted[g][idx[g]];
        const double obj = p.evaluate(chosen);
        if (obj < best.objective) {
            best.objective = obj;
            best.chosen = chosen;
        }
        std::size_t g = m;
        while (g > 0) {
            --g;
            if (++idx[g] < sorted[g].size()) break;
            idx[g] = 0;
            if (g == 0) {
                best.status = Assignment::Status::optimal;
                return best;
            }
        }
    }
}

namespace detail {

struct ComponentSolver {
    const BinaryQuadraticProgram& p;
    std::vector<int> group_ids;          // original group indices, branch order
    std::vector<int> rank_of;            // branch position -> rank in original order
    std::vector<int> term_ids;           // original quad term indices
    std::vector<std::vector<int>> var_terms;  // var -> local term indices
    std::vector<int> term_count;         // current aggregate count per local term
    std::vector<int> chosen;             // per branch position, var id
    std::vector<int> best_chosen;
    double best_obj = std::numeric_limits<double>::infinity();
    bool have_leaf = false;
    bool timed_out = false;
    std::chrono::steady_clock::time_point deadline;
    bool use_deadline = false;
    long* nodes_left = nullptr;  // deterministic budget shared across components
    std::uint32_t tick = 0;

    explicit ComponentSolver(const BinaryQuadraticProgram& prog) : p(prog) {}

    double select_delta(int v) const {
        double d = p.linear_costs[static_cast<std::size_t>(v)];
        for (int t : var_terms[static_cast<std::size_t>(v)]) {
            const QuadTerm& q =
                p.quad_terms[static_cast<std::size_t>(term_ids[static_cast<std::size_t>(t)])];
            d += q.scale * (2.0 * (term_count[static_cast<std::size_t>(t)] + q.offset) + 1.0);
        }
        return d;
    }

    void apply(int v, int dir) {
        for (int t : var_terms[static_cast<std::size_t>(v)]) {
            term_count[static_cast<std::size_t>(t)] += dir;
        }
    }

    // Exact objective of the component at a leaf: aggregate counts are
    // maintained as integers, so this is a canonical evaluation free of
    // the drift that incremental deltas accumulate.
    double leaf_objective() const {
        double obj = 0.0;
        for (std::size_t t = 0; t < term_ids.size(); ++t) {
            const QuadTerm& q = p.quad_terms[static_cast<std::size_t>(term_ids[t])];
            const double x = term_count[t] + q.offset;
            obj += q.scale * x * x;
        }
        for (std::size_t k = 0; k < chosen.size(); ++k) {
            obj += p.linear_costs[static_cast<std::size_t>(chosen[k])];
        }
        return obj;
    }

    // Admissible bound: every unfixed group must pay at least its cheapest
    // first-order marginal against the current aggregate counts (convexity
    // makes later marginals no smaller).
    double remaining_bound(std::size_t depth) const {
        double b = 0.0;
        for (std::size_t g = depth; g < group_ids.size(); ++g) {
            double lo = std::numeric_limits<double>::infinity();
            for (int v : p.groups[static_cast<std::size_t>(group_ids[g])]) {
                lo = std::min(lo, select_delta(v));
            }
            b += lo;
        }
        return b;
    }

    // chosen is indexed by branch position; view it in original group order
    std::vector<int> ordered_view(const std::vector<int>& by_pos) const {
        std::vector<int> out(by_pos.size(), -1);
        for (std::size_t k = 0; k < group_ids.size(); ++k) {
            out[static_cast<std::size_t>(rank_of[k])] = by_pos[k];
        }
        return out;
    }

    void dfs(std::size_t depth, double cost) {
        if (use_deadline && (++tick & 1023u) == 0 &&
            std::chrono::steady_clock::now() > deadline) {
            timed_out = true;
        }
        if (nodes_left != nullptr && --(*nodes_left) < 0) timed_out = true;
        if (timed_out) return;
        if (depth == group_ids.size()) {
            have_leaf = true;
            const double obj = leaf_objective();
            if (obj < best_obj) {
                best_obj = obj;
                best_chosen = chosen;
            } else if (obj == best_obj &&
                       ordered_view(chosen) < ordered_view(best_chosen)) {
                best_chosen = chosen;
            }
            return;
        }
        // tiny slack so float drift in the incremental cost never prunes a
        // true optimum; equal-bound branches stay open for tie resolution
        if (have_leaf &&
            cost + remaining_bound(depth) > best_obj + 1e-9 * (1.0 + std::abs(best_obj))) {
            return;
        }

        const auto& group = p.groups[static_cast<std::size_t>(group_ids[depth])];
        std::vector<std::pair<double, int>> order;
        order.reserve(group.size());
        for (int v : group) order.emplace_back(select_delta(v), v);
        std::sort(order.begin(), order.end());
        for (auto [delta, v] : order) {
            chosen[depth] = v;
            apply(v, 1);
            dfs(depth + 1, cost + delta);
            apply(v, -1);
            if (timed_out) return;
        }
    }
};

} // namespace detail

// Depth-first branch and bound, children visited cheapest-marginal first,
// groups branched in order of decreasing cost spread. Groups that share no
// quadratic term decouple and solve as independent components. Exact when
// the tree is exhausted within budget, anytime otherwise. max_nodes > 0
// adds a deterministic search cap on top of the wall-clock budget.
inline Assignment solve(const BinaryQuadraticProgram& p, double time_budget_s,
                        long max_nodes = 0) {
    p.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const bool finite_budget = std::isfinite(time_budget_s);
    const auto deadline = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double>(std::max(0.0, time_budget_s)));

    Assignment result;
    result.chosen.assign(p.groups.size(), -1);

    auto fallback_fill = [&p](std::vector<int>& chosen) {
        for (std::size_t g = 0; g < p.groups.size(); ++g) {
            if (chosen[g] != -1) continue;
            int best_v = p.groups[g].front();
            for (int v : p.groups[g]) {
                const auto c = p.linear_costs[static_cast<std::size_t>(v)];
                const auto bc = p.linear_costs[static_cast<std::size_t>(best_v)];
                if (c < bc || (c == bc && v < best_v)) best_v = v;
            }
            chosen[g] = best_v;
        }
    };

    if (finite_budget && time_budget_s <= 0.0) {
        fallback_fill(result.chosen);
        result.objective = p.evaluate(result.chosen);
        result.status = Assignment::Status::fallback;
        return result;
    }

    // var -> group, then union groups coupled through active quad terms
    std::vector<int> var_group(static_cast<std::size_t>(p.num_vars()), -1);
    for (std::size_t g = 0; g < p.groups.size(); ++g) {
        for (int v : p.groups[g]) var_group[static_cast<std::size_t>(v)] = static_cast<int>(g);
    }
    std::vector<int> uf(p.groups.size());
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&uf](int x) {
        while (uf[static_cast<std::size_t>(x)] != x) {
            uf[static_cast<std::size_t>(x)] = uf[static_cast<std::size_t>(uf[static_cast<std::size_t>(x)])];
            x = uf[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (const auto& t : p.quad_terms) {
        if (t.scale <= 0.0 || t.vars.empty()) continue;
        const int first = find(var_group[static_cast<std::size_t>(t.vars.front())]);
        for (int v : t.vars) {
            uf[static_cast<std::size_t>(find(var_group[static_cast<std::size_t>(v)]))] = first;
        }
    }

    std::vector<std::vector<int>> comp_groups(p.groups.size());
    for (std::size_t g = 0; g < p.groups.size(); ++g) {
        comp_groups[static_cast<std::size_t>(find(static_cast<int>(g)))].push_back(static_cast<int>(g));
    }

    bool any_timeout = false;
    bool any_leafless = false;
    long nodes_left = max_nodes > 0 ? max_nodes : 0;
    for (std::size_t root = 0; root < comp_groups.size(); ++root) {
        const auto& member_groups = comp_groups[root];
        if (member_groups.empty()) continue;

        detail::ComponentSolver cs(p);
        cs.use_deadline = finite_budget;
        cs.deadline = deadline;
        if (max_nodes > 0) {
            // every component gets at least its greedy dive, so an exhausted
            // budget degrades to incumbents rather than fallbacks
            nodes_left = std::max(nodes_left, static_cast<long>(member_groups.size()) + 1);
            cs.nodes_left = &nodes_left;
        }
        cs.group_ids = member_groups;

        // terms whose variables live in this component
        std::vector<std::uint8_t> in_comp(p.groups.size(), 0);
        for (int g : member_groups) in_comp[static_cast<std::size_t>(g)] = 1;
        for (std::size_t t = 0; t < p.quad_terms.size(); ++t) {
            const auto& q = p.quad_terms[t];
            if (q.scale <= 0.0 || q.vars.empty()) continue;
            if (in_comp[static_cast<std::size_t>(var_group[static_cast<std::size_t>(q.vars.front())])]) {
                cs.term_ids.push_back(static_cast<int>(t));
            }
        }
        cs.var_terms.assign(static_cast<std::size_t>(p.num_vars()), {});
        cs.term_count.assign(cs.term_ids.size(), 0);
        double base_cost = 0.0;
        for (std::size_t t = 0; t < cs.term_ids.size(); ++t) {
            const auto& q = p.quad_terms[static_cast<std::size_t>(cs.term_ids[t])];
            base_cost += q.scale * q.offset * q.offset;
            for (int v : q.vars) {
                cs.var_terms[static_cast<std::size_t>(v)].push_back(static_cast<int>(t));
            }
        }

        // branch on wide cost spread first
        std::vector<std::pair<double, int>> spread;
        spread.reserve(member_groups.size());
        for (int g : member_groups) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (int v : p.groups[static_cast<std::size_t>(g)]) {
                const double d = cs.select_delta(v);
                lo = std::min(lo, d);
                hi = std::max(hi, d);
            }
            spread.emplace_back(-(hi - lo), g);
        }
        std::sort(spread.begin(), spread.end());
        cs.group_ids.clear();
        for (auto& [s, g] : spread) cs.group_ids.push_back(g);
        cs.rank_of.resize(cs.group_ids.size());
        {
            std::vector<int> sorted_ids = cs.group_ids;
            std::sort(sorted_ids.begin(), sorted_ids.end());
            for (std::size_t k = 0; k < cs.group_ids.size(); ++k) {
                cs.rank_of[k] = static_cast<int>(
                    std::lower_bound(sorted_ids.begin(), sorted_ids.end(), cs.group_ids[k]) -
                    sorted_ids.begin());
            }
        }

        cs.chosen.assign(cs.group_ids.size(), -1);
        cs.dfs(0, base_cost);

        if (!cs.have_leaf) {
            any_leafless = true;
            any_timeout = true;
            continue;  // fallback fills these groups afterwards
        }
        if (cs.timed_out) any_timeout = true;
        for (std::size_t k = 0; k < cs.group_ids.size(); ++k) {
            result.chosen[static_cast<std::size_t>(cs.group_ids[k])] = cs.best_chosen[k];
        }
    }

    fallback_fill(result.chosen);
    result.objective = p.evaluate(result.chosen);
    result.status = any_leafless  ? Assignment::Status::fallback
                    : any_timeout ? Assignment::Status::incumbent
                                  : Assignment::Status::optimal;
    return result;
}

// Regression-fixture text format:
//   bqp
//   v <count>
//   l <var> <cost>            (one per variable)
//   g <var> <var> ...         (one per group)
//   q <scale> <offset> <var> ...
inline std::string bqp_dump(const BinaryQuadraticProgram& p) {
    std::ostringstream out;
    out.precision(17);
    out << "bqp\nv " << p.num_vars() << "\n";
    for (int v = 0; v < p.num_vars(); ++v) {
        out << "l " << v << " " << p.linear_costs[static_cast<std::size_t>(v)] << "\n";
    }
    for (const auto& g : p.groups) {
        out << "g";
        for (int v : g) out << " " << v;
        out << "\n";
    }
    for (const auto& t : p.quad_terms) {
        out << "q " << t.scale << " " << t.offset;
        for (int v : t.vars) out << " " << v;
        out << "\n";
    }
    return out.str();
}

inline BinaryQuadraticProgram bqp_parse(std::istream& in) {
    BinaryQuadraticProgram p;
    std::string line;
    if (!std::getline(in, line) || line != "bqp") {
        throw std::invalid_argument("bqp_parse: missing 'bqp' header");
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            int n = 0;
            ls >> n;
            p.linear_costs.assign(static_cast<std::size_t>(n), 0.0);
        } else if (tag == "l") {
            int v = 0;
            double c = 0.0;
            ls >> v >> c;
            p.linear_costs.at(static_cast<std::size_t>(v)) = c;
        } else if (tag == "g") {
            std::vector<int> g;
            int v;
            while (ls >> v) g.push_back(v);
            p.groups.push_back(std::move(g));
        } else if (tag == "q") {
            QuadTerm t;
            ls >> t.scale >> t.offset;
            int v;
            while (ls >> v) t.vars.push_back(v);
            p.quad_terms.push_back(std::move(t));
        } else {
            throw std::invalid_argument("bqp_parse: unknown tag '" + tag + "'");
        }
    }
    p.validate();
    return p;
}

inline BinaryQuadraticProgram bqp_parse(const std::string& text) {
    std::istringstream in(text);
    return bqp_parse(in);
}

} // namespace frsp
