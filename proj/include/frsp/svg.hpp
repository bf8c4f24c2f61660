#pragma once

#include <fstream>
#include <string>

#include "frsp/decompose.hpp"
#include "frsp/network.hpp"
#include "frsp/sim.hpp"

namespace frsp {

// SVG snapshot: obstacles as one rect per occupied cell, cell boundaries,
// PathNodes as blue circles, PathPos as red circles, one trace polyline per
// robot. Pass nullptr to skip a layer.
inline std::string render_svg(const GridMap& map, const CellSet* cells, const NetGraph* net,
                              const std::vector<TrajectorySample>* trajectory) {
    const double s = 12.0;  // pixels per meter
    const double w = map.width_m() * s;
    const double h = map.height_m() * s;
    const auto X = [&](double x) { return (x - map.origin.x) * s; };
    const auto Y = [&](double y) { return h - (y - map.origin.y) * s; };  // y up

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::format_double(w) +
           "\" height=\"" + detail::format_double(h) + "\" viewBox=\"0 0 " +
           detail::format_double(w) + " " + detail::format_double(h) + "\">\n";

    for (int cy = 0; cy < map.height; ++cy) {
        for (int cx = 0; cx < map.width; ++cx) {
            if (!map.occupied(cx, cy)) continue;
            out += "<rect class=\"obstacle\" x=\"" +
                   detail::format_double(X(map.origin.x + cx * map.resolution)) + "\" y=\"" +
                   detail::format_double(Y(map.origin.y + (cy + 1) * map.resolution)) +
                   "\" width=\"" + detail::format_double(map.resolution * s) + "\" height=\"" +
                   detail::format_double(map.resolution * s) + "\" fill=\"#333\"/>\n";
        }
    }

    if (cells != nullptr) {
        for (const auto& b : cells->boundaries) {
            out += "<line class=\"boundary\" x1=\"" + detail::format_double(X(b.x0)) + "\" y1=\"" +
                   detail::format_double(Y(b.world_y)) + "\" x2=\"" +
                   detail::format_double(X(b.x1)) + "\" y2=\"" +
                   detail::format_double(Y(b.world_y)) +
                   "\" stroke=\"#2a8\" stroke-width=\"1\"/>\n";
        }
    }

    if (net != nullptr) {
        for (const auto& l : net->links) {
            const Vec2 a = net->nodes[static_cast<std::size_t>(l.start)].position;
            const Vec2 b = net->nodes[static_cast<std::size_t>(l.end)].position;
            out += "<line class=\"link\" x1=\"" + detail::format_double(X(a.x)) + "\" y1=\"" +
                   detail::format_double(Y(a.y)) + "\" x2=\"" + detail::format_double(X(b.x)) +
                   "\" y2=\"" + detail::format_double(Y(b.y)) +
                   "\" stroke=\"#99c\" stroke-width=\"0.5\"/>\n";
        }
        for (const auto& p : net->positions) {
            out += "<circle class=\"pathpos\" cx=\"" + detail::format_double(X(p.position.x)) +
                   "\" cy=\"" + detail::format_double(Y(p.position.y)) +
                   "\" r=\"2\" fill=\"#d33\"/>\n";
        }
        for (const auto& n : net->nodes) {
            out += "<circle class=\"node\" cx=\"" + detail::format_double(X(n.position.x)) +
                   "\" cy=\"" + detail::format_double(Y(n.position.y)) +
                   "\" r=\"3.5\" fill=\"#36c\"/>\n";
        }
    }

    if (trajectory != nullptr && !trajectory->empty()) {
        const std::size_t robots = trajectory->front().positions.size();
        for (std::size_t r = 0; r < robots; ++r) {
            out += "<polyline class=\"trace\" fill=\"none\" stroke=\"hsl(" +
                   std::to_string((r * 47) % 360) + ",70%,45%)\" stroke-width=\"1\" points=\"";
            for (const auto& sample : *trajectory) {
                out += detail::format_double(X(sample.positions[r].x)) + "," +
                       detail::format_double(Y(sample.positions[r].y)) + " ";
            }
            out += "\"/>\n";
        }
    }

    out += "</svg>\n";
    return out;
}

inline void write_svg(const std::string& path, const std::string& svg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error(path + ": cannot open for writing");
    }
    out << svg;
}

} // namespace frsp
