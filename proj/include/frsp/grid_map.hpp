#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "frsp/vec2.hpp"

namespace frsp {

// Axis-aligned rectangle in world meters, half-open on the upper edges.
struct Rect {
    Vec2 lo;
    Vec2 hi;

    bool contains(Vec2 p) const {
        return p.x >= lo.x && p.x < hi.x && p.y >= lo.y && p.y < hi.y;
    }
    Vec2 center() const { return {(lo.x + hi.x) * 0.5, (lo.y + hi.y) * 0.5}; }
    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
};

struct MapParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 2-D occupancy grid. Row 0 is the bottom of the world; world cell (cx, cy)
// owns the half-open square [x, x+res) x [y, y+res). Immutable once built.
struct GridMap {
    int width = 0;   // cells
    int height = 0;  // cells
    double resolution = 1.0;  // meters per cell
    Vec2 origin{0.0, 0.0};    // world position of the corner of cell (0,0)
    std::vector<std::uint8_t> occ;  // row-major by cy, 1 = obstacle

    bool in_bounds(int cx, int cy) const {
        return cx >= 0 && cy >= 0 && cx < width && cy < height;
    }
    bool occupied(int cx, int cy) const {
        return !in_bounds(cx, cy) || occ[static_cast<std::size_t>(cy) * width + cx] != 0;
    }
    void set_occupied(int cx, int cy, bool v) {
        occ[static_cast<std::size_t>(cy) * width + cx] = v ? 1 : 0;
    }

    int cell_x(double wx) const { return static_cast<int>(std::floor((wx - origin.x) / resolution)); }
    int cell_y(double wy) const { return static_cast<int>(std::floor((wy - origin.y) / resolution)); }
    Vec2 cell_center(int cx, int cy) const {
        return {origin.x + (cx + 0.5) * resolution, origin.y + (cy + 0.5) * resolution};
    }

    double width_m() const { return width * resolution; }
    double height_m() const { return height * resolution; }

    bool is_free(Vec2 p) const {
        const int cx = cell_x(p.x);
        const int cy = cell_y(p.y);
        return in_bounds(cx, cy) && !occupied(cx, cy);
    }

    std::size_t occupied_count() const {
        std::size_t n = 0;
        for (auto v : occ) n += v != 0;
        return n;
    }
    std::size_t free_count() const { return occ.size() - occupied_count(); }
};

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Deterministic bounded draws; <random> distributions vary across stdlibs.
inline std::uint32_t rand_below(std::mt19937& rng, std::uint32_t n) {
    return n > 0 ? rng() % n : 0;
}
inline int rand_range(std::mt19937& rng, int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rand_below(rng, static_cast<std::uint32_t>(hi - lo + 1)));
}

} // namespace detail

// Text format: header "W H RES", then H rows of W glyphs ('#' obstacle,
// '.' free). The first glyph row is the top of the map (cy = height-1).
inline GridMap parse_map(std::istream& in, const std::string& source = "<stream>") {
    GridMap m;
    std::string line;
    if (!std::getline(in, line)) {
        throw MapParseError(source + ":1: empty map file");
    }
    {
        std::istringstream hdr(line);
        if (!(hdr >> m.width >> m.height >> m.resolution)) {
            throw MapParseError(source + ":1: malformed header, expected 'W H RES'");
        }
        std::string extra;
        if (hdr >> extra) {
            throw MapParseError(source + ":1: trailing tokens after header");
        }
    }
    if (m.width <= 0 || m.height <= 0 || m.resolution <= 0.0) {
        throw MapParseError(source + ":1: non-positive dimension or resolution");
    }
    m.occ.assign(static_cast<std::size_t>(m.width) * m.height, 0);
    for (int r = 0; r < m.height; ++r) {
        const int line_no = r + 2;
        if (!std::getline(in, line)) {
            throw MapParseError(source + ":" + std::to_string(line_no) + ": unexpected end of file");
        }
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (static_cast<int>(line.size()) != m.width) {
            throw MapParseError(source + ":" + std::to_string(line_no) + ": row has length " +
                                std::to_string(line.size()) + ", expected " + std::to_string(m.width));
        }
        const int cy = m.height - 1 - r;
        for (int cx = 0; cx < m.width; ++cx) {
            const char g = line[static_cast<std::size_t>(cx)];
            if (g == '#') {
                m.set_occupied(cx, cy, true);
            } else if (g != '.') {
                throw MapParseError(source + ":" + std::to_string(line_no) + ": unknown glyph '" +
                                    std::string(1, g) + "'");
            }
        }
    }
    return m;
}

inline GridMap load_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw MapParseError(path + ": cannot open file");
    }
    return parse_map(in, path);
}

inline std::string map_to_text(const GridMap& m) {
    std::string out;
    out.reserve(static_cast<std::size_t>(m.width + 1) * (m.height + 1));
    out += std::to_string(m.width) + " " + std::to_string(m.height) + " " +
           detail::format_double(m.resolution) + "\n";
    for (int cy = m.height - 1; cy >= 0; --cy) {
        for (int cx = 0; cx < m.width; ++cx) {
            out += m.occupied(cx, cy) ? '#' : '.';
        }
        out += '\n';
    }
    return out;
}

inline void save_map(const GridMap& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error(path + ": cannot open for writing");
    }
    out << map_to_text(m);
}

struct MapGenError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MapGenConfig {
    enum class Family { forest, maze };

    Family family = Family::forest;
    std::uint32_t seed = 0;
    double width_m = 40.0;
    double height_m = 60.0;
    double resolution = 1.0;
    double obstacle_density = 0.12;  // forest: fraction of interior cells
    double corridor_width_m = 1.2;   // maze: opening width
    double band_height_m = 6.5;      // start/goal strips at bottom/top

    int width_cells() const { return static_cast<int>(std::lround(width_m / resolution)); }
    int height_cells() const { return static_cast<int>(std::lround(height_m / resolution)); }
    int band_rows() const { return std::max(1, static_cast<int>(std::lround(band_height_m / resolution))); }
};

// Robots spawn in the bottom band and finish in the top band.
inline Rect start_band(const MapGenConfig& cfg) {
    return {{0.0, 0.0}, {cfg.width_m, cfg.band_rows() * cfg.resolution}};
}
inline Rect goal_band(const MapGenConfig& cfg) {
    const double top = cfg.height_cells() * cfg.resolution;
    return {{0.0, top - cfg.band_rows() * cfg.resolution}, {cfg.width_m, top}};
}

// Flood fill over free cells, 4-connected.
inline bool bands_connected(const GridMap& m, const Rect& from, const Rect& to) {
    std::vector<std::uint8_t> seen(m.occ.size(), 0);
    std::queue<std::pair<int, int>> q;
    for (int cy = 0; cy < m.height; ++cy) {
        for (int cx = 0; cx < m.width; ++cx) {
            if (!m.occupied(cx, cy) && from.contains(m.cell_center(cx, cy))) {
                seen[static_cast<std::size_t>(cy) * m.width + cx] = 1;
                q.emplace(cx, cy);
            }
        }
    }
    while (!q.empty()) {
        auto [cx, cy] = q.front();
        q.pop();
        if (to.contains(m.cell_center(cx, cy))) return true;
        static constexpr int dx[4] = {1, -1, 0, 0};
        static constexpr int dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            const int nx = cx + dx[k];
            const int ny = cy + dy[k];
            if (m.in_bounds(nx, ny) && !m.occupied(nx, ny) &&
                !seen[static_cast<std::size_t>(ny) * m.width + nx]) {
                seen[static_cast<std::size_t>(ny) * m.width + nx] = 1;
                q.emplace(nx, ny);
            }
        }
    }
    return false;
}

namespace detail {

// Obstacles are isolated axis-aligned boxes of 1-3 cell extent. A 2-cell
// free halo around every box (and to the side borders) keeps each box a
// clean split/merge feature of the sweep decomposition and leaves >= 1 m
// corridors at 0.5 m resolution. Box rows are drawn mostly from the middle
// stretch of the interior, which concentrates the field into a belt with
// real bottlenecks instead of uniform clutter.
inline GridMap generate_forest(const MapGenConfig& cfg, std::mt19937& rng) {
    GridMap m;
    m.width = cfg.width_cells();
    m.height = cfg.height_cells();
    m.resolution = cfg.resolution;
    m.occ.assign(static_cast<std::size_t>(m.width) * m.height, 0);

    const int band = cfg.band_rows();
    const int margin = 2;
    const int y_lo = band + margin;
    const int y_hi = m.height - band - margin - 1;  // inclusive row range for boxes
    const int x_lo = margin;
    const int x_hi = m.width - margin - 1;
    if (y_hi - y_lo < 3 || x_hi - x_lo < 3) {
        throw MapGenError("forest: map too small for bands and margins");
    }

    const int belt_lo = y_lo + (y_hi - y_lo) / 4;
    const int belt_hi = y_hi - (y_hi - y_lo) / 4;
    const std::size_t interior_cells =
        static_cast<std::size_t>(y_hi - y_lo + 1) * (x_hi - x_lo + 1);
    const auto target = static_cast<std::size_t>(cfg.obstacle_density * interior_cells);

    std::size_t placed = 0;
    std::size_t attempts = 0;
    const std::size_t max_attempts = 200 * (target + 1);
    while (placed < target && attempts < max_attempts) {
        ++attempts;
        const int w = rand_range(rng, 1, 3);
        const int h = rand_range(rng, 1, 3);
        const bool in_belt = rand_below(rng, 4) != 0;  // three of four boxes
        const int row_lo = in_belt ? belt_lo : y_lo;
        const int row_hi = in_belt ? belt_hi : y_hi;
        const int bx = rand_range(rng, x_lo, x_hi - w + 1);
        const int by = rand_range(rng, row_lo, std::max(row_lo, row_hi - h + 1));
        bool ok = true;
        for (int cy = by - 2; cy <= by + h + 1 && ok; ++cy) {
            for (int cx = bx - 2; cx <= bx + w + 1 && ok; ++cx) {
                if (m.in_bounds(cx, cy) && m.occupied(cx, cy)) ok = false;
            }
        }
        if (!ok) continue;
        for (int cy = by; cy < by + h; ++cy) {
            for (int cx = bx; cx < bx + w; ++cx) {
                m.set_occupied(cx, cy, true);
            }
        }
        placed += static_cast<std::size_t>(w) * h;
    }
    return m;
}

// Horizontal walls with 2-3 corridor-wide openings, recursively subdividing
// the vertical extent. Two properties matter for the downstream network:
// walls perpendicular to the travel axis keep routes monotone, and at least
// two openings per wall force a sweep split so each gate becomes a cell
// boundary with its own capacity (a single gate is a mere narrowing and
// would be invisible to the decomposition).
inline GridMap generate_maze(const MapGenConfig& cfg, std::mt19937& rng) {
    GridMap m;
    m.width = cfg.width_cells();
    m.height = cfg.height_cells();
    m.resolution = cfg.resolution;
    m.occ.assign(static_cast<std::size_t>(m.width) * m.height, 0);

    const int band = cfg.band_rows();
    const int corridor = std::max(2, static_cast<int>(std::lround(cfg.corridor_width_m / cfg.resolution)));
    const int min_band_rows = std::max(4, corridor);

    struct Span { int y0, y1; };
    std::vector<Span> stack{{band + min_band_rows, m.height - band - min_band_rows - 1}};
    while (!stack.empty()) {
        const Span s = stack.back();
        stack.pop_back();
        if (s.y1 - s.y0 < min_band_rows) continue;
        const int wall_y = rand_range(rng, s.y0, s.y1);
        for (int cx = 0; cx < m.width; ++cx) m.set_occupied(cx, wall_y, true);

        const int want = rand_range(rng, 2, 3);
        std::vector<int> gaps;
        for (int g = 0; g < want; ++g) {
            for (int tries = 0; tries < 32; ++tries) {
                const int gx = rand_range(rng, 1, m.width - corridor - 1);
                bool clash = false;
                for (int a : gaps) {
                    if (gx < a + 2 * corridor && a < gx + 2 * corridor) clash = true;
                }
                if (!clash) {
                    gaps.push_back(gx);
                    break;
                }
            }
        }
        if (gaps.size() < 2) {  // evenly spaced fallback, never fewer than two gates
            gaps = {m.width / 3 - corridor / 2, 2 * m.width / 3 - corridor / 2};
        }
        for (int gx : gaps) {
            for (int cx = gx; cx < gx + corridor; ++cx) m.set_occupied(cx, wall_y, false);
        }
        stack.push_back({s.y0, wall_y - min_band_rows});
        stack.push_back({wall_y + min_band_rows, s.y1});
    }
    return m;
}

} // namespace detail

inline GridMap generate_map(const MapGenConfig& cfg) {
    if (cfg.width_cells() <= 0 || cfg.height_cells() <= 0 || cfg.resolution <= 0.0) {
        throw MapGenError("invalid map dimensions");
    }
    for (int retry = 0; retry < 8; ++retry) {
        std::mt19937 rng(cfg.seed + 0x9e3779b9u * static_cast<std::uint32_t>(retry));
        GridMap m = cfg.family == MapGenConfig::Family::forest ? detail::generate_forest(cfg, rng)
                                                               : detail::generate_maze(cfg, rng);
        if (bands_connected(m, start_band(cfg), goal_band(cfg))) {
            return m;
        }
    }
    throw MapGenError("map generation failed to connect start and goal bands");
}

} // namespace frsp
