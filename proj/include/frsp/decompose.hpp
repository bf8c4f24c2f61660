#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "frsp/grid_map.hpp"

namespace frsp {

struct DecompositionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Free interval of one sweep row, inclusive cell indices.
struct RowSpan {
    int y;
    int x0;
    int x1;
    int count() const { return x1 - x0 + 1; }
};

// Horizontal free segment shared by the top edge of cell_a and the bottom
// edge of cell_b. Lies on the grid line y = world_y, from x0 to x1 (meters).
struct BoundarySegment {
    int id = -1;
    int cell_a = -1;  // below
    int cell_b = -1;  // above
    double world_y = 0.0;
    double x0 = 0.0;
    double x1 = 0.0;

    double length() const { return x1 - x0; }
    Vec2 p0() const { return {x0, world_y}; }
    Vec2 p1() const { return {x1, world_y}; }
    Vec2 midpoint() const { return {(x0 + x1) * 0.5, world_y}; }
};

// One sweep cell: a run of consecutive rows whose free interval evolves
// without split or merge. Exactly one interval per row.
struct Cell {
    int id = -1;
    std::vector<RowSpan> spans;           // ordered by ascending y
    std::vector<int> lower_boundaries;    // BoundarySegment ids shared with predecessors
    std::vector<int> upper_boundaries;    // BoundarySegment ids shared with successors

    int y_first() const { return spans.front().y; }
    int y_last() const { return spans.back().y; }
    std::size_t area_cells() const {
        std::size_t a = 0;
        for (const auto& s : spans) a += static_cast<std::size_t>(s.count());
        return a;
    }
};

struct CellSet {
    std::vector<Cell> cells;
    std::vector<BoundarySegment> boundaries;
    // grid cell -> decomposition cell id, -1 for obstacles
    std::vector<std::int32_t> cell_index;
    int grid_width = 0;
    int grid_height = 0;
    double resolution = 1.0;
    Vec2 origin{0.0, 0.0};

    int cell_at(int cx, int cy) const {
        if (cx < 0 || cy < 0 || cx >= grid_width || cy >= grid_height) return -1;
        return cell_index[static_cast<std::size_t>(cy) * grid_width + cx];
    }
    int cell_at(Vec2 p) const {
        const int cx = static_cast<int>(std::floor((p.x - origin.x) / resolution));
        const int cy = static_cast<int>(std::floor((p.y - origin.y) / resolution));
        return cell_at(cx, cy);
    }
};

// Boustrophedon cellular decomposition with the sweep line horizontal and
// moving upward, so cell boundaries face the travel direction. 4-connected:
// diagonal contact does not join intervals.
inline CellSet decompose(const GridMap& map) {
    CellSet out;
    out.grid_width = map.width;
    out.grid_height = map.height;
    out.resolution = map.resolution;
    out.origin = map.origin;
    out.cell_index.assign(static_cast<std::size_t>(map.width) * map.height, -1);

    struct Active {
        int cell = -1;
        int x0 = 0;
        int x1 = 0;
    };
    std::vector<Active> active;

    auto row_intervals = [&map](int y) {
        std::vector<std::pair<int, int>> iv;
        int run = -1;
        for (int x = 0; x <= map.width; ++x) {
            const bool free_cell = x < map.width && !map.occupied(x, y);
            if (free_cell && run < 0) run = x;
            if (!free_cell && run >= 0) {
                iv.emplace_back(run, x - 1);
                run = -1;
            }
        }
        return iv;
    };
    auto overlaps = [](int a0, int a1, int b0, int b1) { return a0 <= b1 && b0 <= a1; };

    auto new_cell = [&out](int y, int x0, int x1) {
        Cell c;
        c.id = static_cast<int>(out.cells.size());
        c.spans.push_back({y, x0, x1});
        out.cells.push_back(std::move(c));
        return out.cells.back().id;
    };
    auto add_boundary = [&out, &map](int below, int above, int x0, int x1, int y_above) {
        BoundarySegment b;
        b.id = static_cast<int>(out.boundaries.size());
        b.cell_a = below;
        b.cell_b = above;
        b.world_y = map.origin.y + y_above * map.resolution;
        b.x0 = map.origin.x + x0 * map.resolution;
        b.x1 = map.origin.x + (x1 + 1) * map.resolution;
        out.boundaries.push_back(b);
        out.cells[static_cast<std::size_t>(below)].upper_boundaries.push_back(b.id);
        out.cells[static_cast<std::size_t>(above)].lower_boundaries.push_back(b.id);
    };

    for (int y = 0; y < map.height; ++y) {
        const auto iv = row_intervals(y);
        std::vector<Active> next;
        next.reserve(iv.size());

        // predecessor cells per interval, successor count per active cell
        std::vector<std::vector<int>> preds(iv.size());  // indices into active
        std::vector<int> succ_count(active.size(), 0);
        for (std::size_t i = 0; i < iv.size(); ++i) {
            for (std::size_t a = 0; a < active.size(); ++a) {
                if (overlaps(iv[i].first, iv[i].second, active[a].x0, active[a].x1)) {
                    preds[i].push_back(static_cast<int>(a));
                    ++succ_count[a];
                }
            }
        }

        for (std::size_t i = 0; i < iv.size(); ++i) {
            const auto [x0, x1] = iv[i];
            if (preds[i].size() == 1 && succ_count[static_cast<std::size_t>(preds[i][0])] == 1) {
                // continuation
                const int cell = active[static_cast<std::size_t>(preds[i][0])].cell;
                out.cells[static_cast<std::size_t>(cell)].spans.push_back({y, x0, x1});
                next.push_back({cell, x0, x1});
            } else {
                // in, split or merge event: open a fresh cell
                const int cell = new_cell(y, x0, x1);
                for (int a : preds[i]) {
                    const Active& pa = active[static_cast<std::size_t>(a)];
                    add_boundary(pa.cell, cell, std::max(x0, pa.x0), std::min(x1, pa.x1), y);
                }
                next.push_back({cell, x0, x1});
            }
        }
        active = std::move(next);

        for (const auto& a : active) {
            for (int x = a.x0; x <= a.x1; ++x) {
                out.cell_index[static_cast<std::size_t>(y) * map.width + x] =
                    static_cast<std::int32_t>(a.cell);
            }
        }
    }

    if (out.cells.empty()) {
        throw DecompositionError("map has no free space to decompose");
    }
    return out;
}

inline const std::vector<BoundarySegment>& shared_boundaries(const CellSet& cells) {
    return cells.boundaries;
}

// Line-oriented debug report: one line per cell and per boundary.
inline std::string decomposition_report(const CellSet& cs) {
    std::string out;
    for (const auto& c : cs.cells) {
        out += "C " + std::to_string(c.id) + " rows " + std::to_string(c.y_first()) + ".." +
               std::to_string(c.y_last()) + " area " + std::to_string(c.area_cells()) + "\n";
    }
    for (const auto& b : cs.boundaries) {
        out += "B " + std::to_string(b.id) + " " + std::to_string(b.cell_a) + "->" +
               std::to_string(b.cell_b) + " y " + detail::format_double(b.world_y) + " x " +
               detail::format_double(b.x0) + ".." + detail::format_double(b.x1) + " len " +
               detail::format_double(b.length()) + "\n";
    }
    return out;
}

} // namespace frsp
