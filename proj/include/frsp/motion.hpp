#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "frsp/grid_map.hpp"
#include "frsp/vec2.hpp"

namespace frsp {

struct RobotState {
    int id = -1;
    Vec2 position;
    Vec2 velocity;
    bool arrived = false;
};

struct MotionLimits {
    double v_max = 3.0;
    double r_min = 0.4;
    double rvo_time_horizon = 2.0;
    double rvo_neighbor_radius = 3.0;
    int max_neighbors = 10;

    // Disc agents of radius r_min/2 make the pairwise constraint
    // |p_i - p_j| >= r_min; the solver works with a 20% inflated radius so
    // discrete-time slack eats into the margin, not into r_min.
    double body_radius() const { return 0.5 * r_min; }
    double solver_radius() const { return 0.6 * r_min; }
};

// Single-integrator step: p(t+h) = p(t) + h v(t).
inline RobotState integrate(const RobotState& s, Vec2 v, double h) {
    RobotState out = s;
    out.position = s.position + v * h;
    out.velocity = v;
    return out;
}

// Preferred velocity: full speed toward the target, proportional within the
// final step so the robot lands on it instead of overshooting.
inline Vec2 preferred_velocity(Vec2 position, Vec2 target, double v_max, double h) {
    const Vec2 to = target - position;
    const double d = to.norm();
    if (d < 1e-12) return {0.0, 0.0};
    return to * (std::min(v_max, d / h) / d);
}

namespace detail {

constexpr double kRvoEpsilon = 1e-10;
constexpr double kObstacleHorizon = 0.3;   // seconds of braking distance to walls
constexpr double kContactRecovery = 0.5;   // seconds to reopen a violated margin

// Directed line; the feasible half-plane is on its left.
struct OrcaLine {
    Vec2 point;
    Vec2 direction;
};

inline bool linear_program1(const std::vector<OrcaLine>& lines, std::size_t line_no, double radius,
                            Vec2 opt_velocity, bool direction_opt, Vec2& result) {
    const double dot = lines[line_no].point.dot(lines[line_no].direction);
    const double discriminant = dot * dot + radius * radius - lines[line_no].point.norm_sq();
    if (discriminant < 0.0) return false;  // max-speed circle misses the line

    const double sqrt_d = std::sqrt(discriminant);
    double t_left = -dot - sqrt_d;
    double t_right = -dot + sqrt_d;

    for (std::size_t i = 0; i < line_no; ++i) {
        const double denominator = lines[line_no].direction.det(lines[i].direction);
        const double numerator = lines[i].direction.det(lines[line_no].point - lines[i].point);
        if (std::abs(denominator) <= kRvoEpsilon) {
            if (numerator < 0.0) return false;  // parallel, fully infeasible
            continue;
        }
        const double t = numerator / denominator;
        if (denominator >= 0.0) {
            t_right = std::min(t_right, t);
        } else {
            t_left = std::max(t_left, t);
        }
        if (t_left > t_right) return false;
    }

    double t;
    if (direction_opt) {
        t = opt_velocity.dot(lines[line_no].direction) > 0.0 ? t_right : t_left;
    } else {
        t = lines[line_no].direction.dot(opt_velocity - lines[line_no].point);
        t = std::clamp(t, t_left, t_right);
    }
    result = lines[line_no].point + lines[line_no].direction * t;
    return true;
}

inline std::size_t linear_program2(const std::vector<OrcaLine>& lines, double radius,
                                   Vec2 opt_velocity, bool direction_opt, Vec2& result) {
    if (direction_opt) {
        result = opt_velocity * radius;  // opt_velocity is a unit direction
    } else if (opt_velocity.norm_sq() > radius * radius) {
        result = opt_velocity.normalized() * radius;
    } else {
        result = opt_velocity;
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].direction.det(lines[i].point - result) > 0.0) {
            const Vec2 saved = result;
            if (!linear_program1(lines, i, radius, opt_velocity, direction_opt, result)) {
                result = saved;
                return i;
            }
        }
    }
    return lines.size();
}

// Infeasible case: back off the agent constraints to the least-penetrating
// velocity while keeping obstacle constraints hard.
inline void linear_program3(const std::vector<OrcaLine>& lines, std::size_t num_obst_lines,
                            std::size_t begin_line, double radius, Vec2& result) {
    double distance = 0.0;
    for (std::size_t i = begin_line; i < lines.size(); ++i) {
        if (lines[i].direction.det(lines[i].point - result) > distance) {
            std::vector<OrcaLine> proj(lines.begin(),
                                       lines.begin() + static_cast<std::ptrdiff_t>(num_obst_lines));
            for (std::size_t j = num_obst_lines; j < i; ++j) {
                OrcaLine line;
                const double determinant = lines[i].direction.det(lines[j].direction);
                if (std::abs(determinant) <= kRvoEpsilon) {
                    if (lines[i].direction.dot(lines[j].direction) > 0.0) continue;
                    line.point = (lines[i].point + lines[j].point) * 0.5;
                } else {
                    line.point = lines[i].point +
                                 lines[i].direction *
                                     (lines[j].direction.det(lines[i].point - lines[j].point) /
                                      determinant);
                }
                line.direction = (lines[j].direction - lines[i].direction).normalized();
                proj.push_back(line);
            }
            const Vec2 saved = result;
            if (linear_program2(proj, radius,
                                Vec2{-lines[i].direction.y, lines[i].direction.x}, true,
                                result) < proj.size()) {
                result = saved;
            }
            distance = lines[i].direction.det(lines[i].point - result);
        }
    }
}

// Half-plane n . v >= bound encoded as an ORCA line.
inline OrcaLine half_plane(Vec2 n, double bound) {
    return {n * bound, {n.y, -n.x}};
}

// Velocity constraints against every occupied cell rectangle near the
// agent: approach speed toward a wall is capped so the gap closes no faster
// than it can within the obstacle horizon. Keeps the agent clear of cells
// by its body radius under explicit Euler stepping.
inline void obstacle_lines(const GridMap& map, Vec2 p, double body_radius, double scan_radius,
                           std::vector<OrcaLine>& out) {
    const double res = map.resolution;
    const int cx0 = static_cast<int>(std::floor((p.x - map.origin.x - scan_radius) / res));
    const int cx1 = static_cast<int>(std::floor((p.x - map.origin.x + scan_radius) / res));
    const int cy0 = static_cast<int>(std::floor((p.y - map.origin.y - scan_radius) / res));
    const int cy1 = static_cast<int>(std::floor((p.y - map.origin.y + scan_radius) / res));
    for (int cy = cy0; cy <= cy1; ++cy) {
        for (int cx = cx0; cx <= cx1; ++cx) {
            if (!map.occupied(cx, cy)) continue;  // out-of-bounds counts as occupied
            // closest point of the cell rectangle
            const double rx0 = map.origin.x + cx * res;
            const double ry0 = map.origin.y + cy * res;
            const Vec2 q{std::clamp(p.x, rx0, rx0 + res), std::clamp(p.y, ry0, ry0 + res)};
            const Vec2 away = p - q;
            const double d = away.norm();
            if (d > scan_radius) continue;
            Vec2 n;
            if (d > 1e-9) {
                n = away / d;
            } else {
                // degenerate: centre inside the cell, push outward from it
                n = (p - Vec2{rx0 + 0.5 * res, ry0 + 0.5 * res}).normalized();
                if (n.norm_sq() == 0.0) n = {0.0, 1.0};
            }
            const double bound = -(d - body_radius) / kObstacleHorizon;
            out.push_back(half_plane(n, bound));
        }
    }
}

struct NeighborHash {
    double cell = 3.0;
    int nx = 1, ny = 1;
    Vec2 origin;
    std::vector<std::vector<int>> buckets;

    void build(const std::vector<RobotState>& all, double radius, Vec2 lo, Vec2 hi) {
        cell = std::max(radius, 1e-3);
        origin = lo;
        nx = std::max(1, static_cast<int>(std::ceil((hi.x - lo.x) / cell)));
        ny = std::max(1, static_cast<int>(std::ceil((hi.y - lo.y) / cell)));
        buckets.assign(static_cast<std::size_t>(nx) * ny, {});
        for (std::size_t i = 0; i < all.size(); ++i) {
            buckets[index_of(all[i].position)].push_back(static_cast<int>(i));
        }
    }
    std::size_t index_of(Vec2 p) const {
        const int bx = std::clamp(static_cast<int>((p.x - origin.x) / cell), 0, nx - 1);
        const int by = std::clamp(static_cast<int>((p.y - origin.y) / cell), 0, ny - 1);
        return static_cast<std::size_t>(by) * nx + bx;
    }
    template <typename F>
    void for_near(Vec2 p, F&& f) const {
        const int bx = std::clamp(static_cast<int>((p.x - origin.x) / cell), 0, nx - 1);
        const int by = std::clamp(static_cast<int>((p.y - origin.y) / cell), 0, ny - 1);
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int gx = bx + dx, gy = by + dy;
                if (gx < 0 || gy < 0 || gx >= nx || gy >= ny) continue;
                for (int i : buckets[static_cast<std::size_t>(gy) * nx + gx]) f(i);
            }
        }
    }
};

} // namespace detail

// Watches per-robot progress and hands a wedged robot a temporary sidestep
// target. Dense reciprocal crowds can settle into a static arch where every
// agent's feasible cone is empty except for zero velocity; no velocity-space
// rule breaks that, so the escape happens at the target level. Deterministic:
// spoke choice is a pure function of robot id and stall count.
class StallEscape {
public:
    StallEscape(std::size_t n, double h)
        : h_(h), window_ticks_(static_cast<int>(std::lround(0.7 / h))), state_(n) {}

    // call once per tick before rvo_step; overrides targets of stalled robots
    std::vector<Vec2> filter(const std::vector<RobotState>& all, const std::vector<Vec2>& targets,
                             const GridMap& map) {
        std::vector<Vec2> out = targets;
        ++tick_;
        for (std::size_t i = 0; i < all.size(); ++i) {
            PerRobot& st = state_[i];
            if (all[i].arrived) {
                st.escaping = false;
                continue;
            }
            if (st.escaping) {
                if (tick_ >= st.escape_end || dist(all[i].position, st.escape_target) < 0.3) {
                    st.escaping = false;
                    st.anchor = all[i].position;
                    st.anchor_tick = tick_;
                } else {
                    out[i] = st.escape_target;
                    continue;
                }
            }
            if (tick_ - st.anchor_tick >= window_ticks_) {
                const bool near_goal = dist(all[i].position, targets[i]) < 0.6;
                if (!near_goal && dist(all[i].position, st.anchor) < 0.05) {
                    ++st.stall_count;
                    st.escape_target = pick_spoke(all[i], targets[i], map, st.stall_count);
                    st.escape_end = tick_ + static_cast<int>(std::lround(0.6 / h_));
                    st.escaping = true;
                    out[i] = st.escape_target;
                }
                st.anchor = all[i].position;
                st.anchor_tick = tick_;
            }
        }
        return out;
    }

    int total_escapes() const {
        int n = 0;
        for (const auto& st : state_) n += st.stall_count;
        return n;
    }

private:
    struct PerRobot {
        Vec2 anchor;
        int anchor_tick = 0;
        bool escaping = false;
        Vec2 escape_target;
        int escape_end = 0;
        int stall_count = 0;
    };

    Vec2 pick_spoke(const RobotState& s, Vec2 target, const GridMap& map, int salt) const {
        const Vec2 fwd = (target - s.position).normalized();
        static constexpr double spokes[] = {90, -90, 150, -150, 45, -45, 180};
        const auto n_spokes = static_cast<std::uint32_t>(std::size(spokes));
        const auto start = (static_cast<std::uint32_t>(s.id) * 2654435761u +
                            static_cast<std::uint32_t>(salt) * 40503u) %
                           n_spokes;
        for (std::uint32_t k = 0; k < n_spokes; ++k) {
            const double deg = spokes[(start + k) % n_spokes];
            const double a = deg * 0.017453292519943295;
            const Vec2 dir{fwd.x * std::cos(a) - fwd.y * std::sin(a),
                           fwd.x * std::sin(a) + fwd.y * std::cos(a)};
            const Vec2 cand = s.position + dir * 1.2;
            if (map.is_free(cand)) return cand;
        }
        return s.position;  // boxed in; hold and wait
    }

    double h_;
    int window_ticks_;
    int tick_ = 0;
    std::vector<PerRobot> state_;
};

// One reciprocal-avoidance step: returns the velocity for every robot given
// an immutable snapshot of all states. Neighbors are processed in a fixed
// (distance, id) order and the symmetry dither is a pure function of
// (id, tick), so the result is deterministic.
inline std::vector<Vec2> rvo_step(const std::vector<RobotState>& all,
                                  const std::vector<Vec2>& targets, const GridMap& obstacles,
                                  const MotionLimits& lim, double h, std::uint32_t tick = 0) {
    std::vector<Vec2> velocities(all.size(), Vec2{0.0, 0.0});
    if (all.empty()) return velocities;

    Vec2 lo = all[0].position, hi = all[0].position;
    for (const auto& s : all) {
        lo.x = std::min(lo.x, s.position.x);
        lo.y = std::min(lo.y, s.position.y);
        hi.x = std::max(hi.x, s.position.x);
        hi.y = std::max(hi.y, s.position.y);
    }
    detail::NeighborHash hash;
    hash.build(all, lim.rvo_neighbor_radius, lo, hi);

    const double obstacle_scan =
        lim.body_radius() + lim.v_max * detail::kObstacleHorizon + 2.0 * obstacles.resolution;
    const double inv_horizon = 1.0 / lim.rvo_time_horizon;
    const double radius = lim.solver_radius();

    std::vector<std::pair<double, int>> near;
    std::vector<detail::OrcaLine> lines;
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (all[i].arrived) continue;  // parked robots keep zero velocity
        const RobotState& self = all[i];

        lines.clear();
        detail::obstacle_lines(obstacles, self.position, lim.body_radius() * 1.05, obstacle_scan,
                               lines);
        const std::size_t num_obst_lines = lines.size();

        near.clear();
        hash.for_near(self.position, [&](int j) {
            if (j == static_cast<int>(i)) return;
            const double d2 = dist_sq(all[static_cast<std::size_t>(j)].position, self.position);
            if (d2 < lim.rvo_neighbor_radius * lim.rvo_neighbor_radius) near.emplace_back(d2, j);
        });
        std::sort(near.begin(), near.end());
        if (static_cast<int>(near.size()) > lim.max_neighbors) {
            near.resize(static_cast<std::size_t>(lim.max_neighbors));
        }

        for (auto [d2, j] : near) {
            const RobotState& other = all[static_cast<std::size_t>(j)];
            const Vec2 rel_pos = other.position - self.position;
            const Vec2 rel_vel = self.velocity - other.velocity;
            const double dist_sq_ij = rel_pos.norm_sq();
            const double combined = 2.0 * radius;
            const double combined_sq = combined * combined;

            detail::OrcaLine line;
            Vec2 u;
            if (dist_sq_ij > combined_sq) {
                const Vec2 w = rel_vel - rel_pos * inv_horizon;
                const double w_len_sq = w.norm_sq();
                const double dot1 = w.dot(rel_pos);
                if (dot1 < 0.0 && dot1 * dot1 > combined_sq * w_len_sq) {
                    // project on the cut-off circle
                    const double w_len = std::sqrt(w_len_sq);
                    const Vec2 unit_w = w / w_len;
                    line.direction = {unit_w.y, -unit_w.x};
                    u = unit_w * (combined * inv_horizon - w_len);
                } else {
                    // project on the nearer leg of the velocity obstacle
                    const double leg = std::sqrt(dist_sq_ij - combined_sq);
                    if (rel_pos.det(w) > 0.0) {
                        line.direction = Vec2{rel_pos.x * leg - rel_pos.y * combined,
                                              rel_pos.x * combined + rel_pos.y * leg} /
                                         dist_sq_ij;
                    } else {
                        line.direction = Vec2{rel_pos.x * leg + rel_pos.y * combined,
                                              -rel_pos.x * combined + rel_pos.y * leg} /
                                         -dist_sq_ij;
                    }
                    const double dot2 = rel_vel.dot(line.direction);
                    u = line.direction * dot2 - rel_vel;
                }
            } else {
                // margin already violated: cap the approach component so the
                // gap reopens over the recovery horizon. A plain half-plane
                // on the approach speed cannot be tunnelled through by fast
                // crossing velocities, and it leaves tangential motion free
                // so contact clusters still shear apart.
                const double d = std::sqrt(dist_sq_ij);
                const Vec2 n = d > 1e-9 ? rel_pos / d
                                        : (self.id < other.id ? Vec2{0.0, 1.0} : Vec2{0.0, -1.0});
                const double sep_rate = (combined - d) / detail::kContactRecovery;
                const double excess = rel_vel.dot(n) + sep_rate;  // beyond the allowed approach
                u = n * -excess;
                line.direction = n.perp();
            }
            // reciprocity: each agent takes half the correction
            line.point = self.velocity + u * 0.5;
            lines.push_back(line);
        }

        Vec2 pref = preferred_velocity(self.position, targets[i], lim.v_max, h);
        if (!lines.empty()) {
            // tiny deterministic dither; perfectly symmetric crowds otherwise
            // freeze at mutual contact
            const std::uint32_t hsh =
                (static_cast<std::uint32_t>(self.id) * 2654435761u) ^ (tick * 2246822519u);
            const double ang = (hsh >> 8) * (6.283185307179586 / 16777216.0);
            const double mag = 1e-3 * lim.v_max * ((hsh & 0xffu) / 255.0);
            pref += Vec2{std::cos(ang), std::sin(ang)} * mag;
        }
        Vec2 result;
        const std::size_t fail =
            detail::linear_program2(lines, lim.v_max, pref, false, result);
        if (fail < lines.size()) {
            detail::linear_program3(lines, num_obst_lines, fail, lim.v_max, result);
            // the compromise velocity violates somebody's margin; taking it
            // slower keeps the accumulated penetration shallow
            result = result * 0.6;
        }
        velocities[i] = result;
    }
    return velocities;
}

} // namespace frsp
