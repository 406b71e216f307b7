#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "gpilot/pipeline.hpp"

namespace gpilot::pipeline {

namespace {

void line(Frame& f, int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0);
    const int dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1;
    const int sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        f.plot(x0, y0, c);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void rectangle(Frame& f, const BoundingBox& b, Rgb c) {
    const int x1 = b.right() - 1;
    const int y1 = b.bottom() - 1;
    line(f, b.x, b.y, x1, b.y, c);
    line(f, b.x, y1, x1, y1, c);
    line(f, b.x, b.y, b.x, y1, c);
    line(f, x1, b.y, x1, y1, c);
}

void circle(Frame& f, int cx, int cy, int r, Rgb c) {
    int x = r;
    int y = 0;
    int err = 1 - r;
    while (x >= y) {
        for (auto [px, py] : {std::pair{x, y}, {y, x}, {-y, x}, {-x, y}, {-x, -y}, {-y, -x}, {y, -x}, {x, -y}})
            f.plot(cx + px, cy + py, c);
        ++y;
        if (err < 0) {
            err += 2 * y + 1;
        } else {
            --x;
            err += 2 * (y - x) + 1;
        }
    }
}

// Liang-Barsky clip of the segment to the frame; false when fully outside.
bool clip(const Frame& f, double& x0, double& y0, double& x1, double& y1) {
    double t0 = 0.0;
    double t1 = 1.0;
    const double dx = x1 - x0;
    const double dy = y1 - y0;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {x0, f.width() - 1 - x0, y0, f.height() - 1 - y0};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0) {
            if (q[i] < 0) return false;
            continue;
        }
        const double t = q[i] / p[i];
        if (p[i] < 0) t0 = std::max(t0, t);
        else t1 = std::min(t1, t);
    }
    if (t0 > t1) return false;
    const double ax = x0 + t0 * dx, ay = y0 + t0 * dy;
    x1 = x0 + t1 * dx;
    y1 = y0 + t1 * dy;
    x0 = ax;
    y0 = ay;
    return true;
}

void arrow(Frame& f, PixelCoord from, PixelCoord to, Rgb c) {
    double x0 = from.x, y0 = from.y, x1 = to.x, y1 = to.y;
    if (!clip(f, x0, y0, x1, y1)) return;
    const int ex = static_cast<int>(std::lround(x1));
    const int ey = static_cast<int>(std::lround(y1));
    line(f, static_cast<int>(std::lround(x0)), static_cast<int>(std::lround(y0)), ex, ey, c);
    const double len = std::hypot(to.x - from.x, to.y - from.y);
    if (len == 0) return;
    const double ux = (to.x - from.x) / len;
    const double uy = (to.y - from.y) / len;
    const double head = std::min(10.0, len / 3.0);
    for (double side : {1.0, -1.0}) {
        const double hx = ex - head * (ux * 0.866 - side * uy * 0.5);
        const double hy = ey - head * (uy * 0.866 + side * ux * 0.5);
        line(f, ex, ey, static_cast<int>(std::lround(hx)), static_cast<int>(std::lround(hy)), c);
    }
}

}  // namespace

Frame annotate(const Frame& frame, const FrameReport& report, const hand::AnchorParams& anchor_params) {
    Frame out = frame;
    if (!report.user_box) return out;
    const auto& box = *report.user_box;
    rectangle(out, box, color::box);
    const auto a = hand::anchors(box, anchor_params);
    const auto& cmd = report.command;
    const int size = std::max(4, box.width / 8);
    switch (cmd.kind) {
        case command::CommandKind::Planar: {
            const PixelCoord tip{a.shoulder_center.x + static_cast<int>(std::lround(cmd.vector.x)),
                                 a.shoulder_center.y + static_cast<int>(std::lround(cmd.vector.y))};
            arrow(out, a.shoulder_center, tip, color::command);
            break;
        }
        case command::CommandKind::Depth: {
            const auto [x, y] = a.shoulder_center;
            if (cmd.vector.z < 0) {
                line(out, x - size, y - size, x + size, y + size, color::command);
                line(out, x - size, y + size, x + size, y - size, color::command);
            } else {
                circle(out, x, y, size / 2, color::command);
            }
            break;
        }
        case command::CommandKind::None:
            break;
    }
    return out;
}

}  // namespace gpilot::pipeline
