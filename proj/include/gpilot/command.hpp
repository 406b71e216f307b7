#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "gpilot/geometry.hpp"
#include "gpilot/hand.hpp"

namespace gpilot::command {

/// Sliding windows of the latest per-frame hand vectors; (0,0) marks a frame
/// without a hand of that kind.
struct StateBuffers {
    std::size_t capacity = 60;
    std::deque<PixelCoord> out;
    std::deque<PixelCoord> front;

    void clear() {
        out.clear();
        front.clear();
    }
};

void push_frame(StateBuffers& buffers, const hand::HandDetection& detection);

enum class CommandKind { None, Planar, Depth };

/// Direction in camera coordinates: x image-right, y image-down (negative is
/// up), z depth with +1 "go further" and -1 "come closer".
struct PilotCommand {
    CommandKind kind = CommandKind::None;
    Vec3 vector;
    double magnitude_norm = 0.0;  // |planar vector| / user box width

    friend bool operator==(const PilotCommand&, const PilotCommand&) = default;
};

struct CommandParams {
    double lambda4 = 0.5;  // snap to vertical when |y| > |lambda4 * x|
    int min_count = 30;    // frames needed, strictly more than this
};

PilotCommand generate_command(const StateBuffers& buffers, const CommandParams& params = {});

/// Fills magnitude_norm for a planar command.
void set_magnitude(PilotCommand& cmd, int user_box_width);

/// Fraction of the maximum speed: min(1, magnitude_norm) for planar,
/// 0.5 for depth, 0 for none.
double speed_norm(const PilotCommand& cmd);

const char* to_string(CommandKind kind);

/// Passes a command only when at least min_interval has elapsed since the
/// previous one it passed; rejected commands are dropped.
class RateLimiter {
public:
    explicit RateLimiter(std::uint32_t min_interval_ms = 600) : interval_(min_interval_ms) {}

    bool admit(std::uint32_t timestamp_ms);
    void reset() { last_.reset(); }
    std::uint32_t interval_ms() const { return interval_; }

private:
    std::uint32_t interval_;
    std::optional<std::uint32_t> last_;
};

/// Indices of the timestamps a fresh RateLimiter would admit.
std::vector<std::size_t> rate_limit(std::span<const std::uint32_t> timestamps_ms, std::uint32_t min_interval_ms = 600);

}  // namespace gpilot::command
