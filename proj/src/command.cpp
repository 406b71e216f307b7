#include "gpilot/command.hpp"

#include <algorithm>
#include <cmath>

namespace gpilot::command {

void push_frame(StateBuffers& buffers, const hand::HandDetection& detection) {
    using hand::HandKind;
    buffers.out.push_back(detection.kind == HandKind::StretchedOut ? detection.vector : PixelCoord{});
    buffers.front.push_back(detection.kind == HandKind::FrontOfBody ? detection.vector : PixelCoord{});
    while (buffers.out.size() > buffers.capacity) buffers.out.pop_front();
    while (buffers.front.size() > buffers.capacity) buffers.front.pop_front();
}

PilotCommand generate_command(const StateBuffers& buffers, const CommandParams& params) {
    PilotCommand cmd;
    int n_out = 0;
    double sum_x = 0.0;
    double sum_y = 0.0;
    for (const auto& p : buffers.out) {
        if (p.is_zero()) continue;
        ++n_out;
        sum_x += p.x;
        sum_y += p.y;
    }
    if (n_out > params.min_count) {
        cmd.kind = CommandKind::Planar;
        cmd.vector = {sum_x / n_out, sum_y / n_out, 0.0};
        if (std::abs(cmd.vector.y) > std::abs(params.lambda4 * cmd.vector.x)) cmd.vector.x = 0.0;
        return cmd;
    }

    int n_higher = 0;
    int n_lower = 0;
    for (const auto& p : buffers.front) {
        if (p.y < 0) ++n_higher;
        if (p.y > 0) ++n_lower;
    }
    if (n_higher > params.min_count) {
        cmd.kind = CommandKind::Depth;
        cmd.vector.z = -1.0;
    } else if (n_lower > params.min_count) {
        cmd.kind = CommandKind::Depth;
        cmd.vector.z = 1.0;
    }
    return cmd;
}

void set_magnitude(PilotCommand& cmd, int user_box_width) {
    if (cmd.kind != CommandKind::Planar || user_box_width <= 0) {
        cmd.magnitude_norm = 0.0;
        return;
    }
    cmd.magnitude_norm = std::hypot(cmd.vector.x, cmd.vector.y) / user_box_width;
}

double speed_norm(const PilotCommand& cmd) {
    switch (cmd.kind) {
        case CommandKind::Planar: return std::min(1.0, cmd.magnitude_norm);
        case CommandKind::Depth: return 0.5;
        case CommandKind::None: break;
    }
    return 0.0;
}

const char* to_string(CommandKind kind) {
    switch (kind) {
        case CommandKind::Planar: return "planar";
        case CommandKind::Depth: return "depth";
        case CommandKind::None: break;
    }
    return "none";
}

bool RateLimiter::admit(std::uint32_t t) {
    if (last_ && t - *last_ < interval_) return false;
    last_ = t;
    return true;
}

std::vector<std::size_t> rate_limit(std::span<const std::uint32_t> timestamps_ms, std::uint32_t min_interval_ms) {
    RateLimiter limiter(min_interval_ms);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < timestamps_ms.size(); ++i)
        if (limiter.admit(timestamps_ms[i])) out.push_back(i);
    return out;
}

}  // namespace gpilot::command
