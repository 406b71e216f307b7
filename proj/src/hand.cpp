#include "gpilot/hand.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gpilot::hand {

BodyAnchors anchors(const BoundingBox& box, const AnchorParams& params) {
    BodyAnchors a;
    a.body_center = box.center();
    a.shoulder_center = {a.body_center.x, box.y + static_cast<int>(std::lround(params.shoulder_height * box.height))};
    a.hand_side = std::max(1, static_cast<int>(std::lround(params.hand_side_ratio * box.width)));
    return a;
}

SkinCounter::SkinCounter(const skin::SkinMask& mask, const BoundingBox& user_box, bool outside)
    : region_(mask.region), user_box_(user_box), outside_(outside),
      sums_(static_cast<std::size_t>(mask.region.width + 1) * (mask.region.height + 1), 0) {
    const int w = region_.width;
    for (int j = 0; j < region_.height; ++j) {
        int row = 0;
        for (int i = 0; i < w; ++i) {
            const int x = region_.x + i;
            const int y = region_.y + j;
            const int bit = (mask.bits[static_cast<std::size_t>(j) * w + i] != 0 && selected(x, y)) ? 1 : 0;
            row += bit;
            sums_[static_cast<std::size_t>(j + 1) * (w + 1) + i + 1] = sums_[static_cast<std::size_t>(j) * (w + 1) + i + 1] + row;
        }
    }
    total_ = sums_.back();
}

bool SkinCounter::selected(int x, int y) const { return user_box_.contains(x, y) != outside_; }

int SkinCounter::count_square(int x, int y, int side) const {
    const int half = side / 2;
    const BoundingBox sq = intersect({x - half, y - half, side, side}, region_);
    if (sq.empty()) return 0;
    const int w = region_.width + 1;
    const auto at = [&](int i, int j) { return sums_[static_cast<std::size_t>(j - region_.y) * w + (i - region_.x)]; };
    return at(sq.right(), sq.bottom()) - at(sq.x, sq.bottom()) - at(sq.right(), sq.y) + at(sq.x, sq.y);
}

HandDetection detect_stretched_hand(const BoundingBox& user_box, const skin::SkinMask& mask, const BodyAnchors& a,
                                    const HandParams& params) {
    const SkinCounter counter(mask, user_box, true);
    if (counter.total() <= params.min_skin) return {};

    const auto& r = mask.region;
    double best = -std::numeric_limits<double>::infinity();
    PixelCoord best_p{};
    for (int y = r.y; y < r.bottom(); ++y) {
        for (int x = r.x; x < r.right(); ++x) {
            if (!mask.bits[static_cast<std::size_t>(y - r.y) * r.width + (x - r.x)] || !counter.selected(x, y)) continue;
            const double dist = std::abs(a.shoulder_center.x - x) + params.lambda2 * (a.shoulder_center.y - y);
            const double s = dist + params.lambda1 * counter.count_square(x, y, a.hand_side);
            if (s > best) {
                best = s;
                best_p = {x, y};
            }
        }
    }
    return {HandKind::StretchedOut, best_p - a.shoulder_center, best};
}

HandDetection detect_front_hand(const BoundingBox& user_box, const skin::SkinMask& mask, const BodyAnchors& a,
                                const HandParams& params) {
    const SkinCounter counter(mask, user_box, false);
    if (counter.total() == 0) return {};

    const auto& r = mask.region;
    double best = -std::numeric_limits<double>::infinity();
    PixelCoord best_p{};
    int best_skin = 0;
    for (int y = r.y; y < r.bottom(); ++y) {
        for (int x = r.x; x < r.right(); ++x) {
            if (!mask.bits[static_cast<std::size_t>(y - r.y) * r.width + (x - r.x)] || !counter.selected(x, y)) continue;
            const int skin = counter.count_square(x, y, a.hand_side);
            const double s = -std::abs(a.body_center.x - x) + params.lambda3 * skin;
            if (s > best) {
                best = s;
                best_p = {x, y};
                best_skin = skin;
            }
        }
    }
    const int offset = std::abs(a.body_center.x - best_p.x);
    // A hand exactly on the body center is neither above nor below it.
    if (offset < user_box.width / params.front_offset_divisor && best_skin > params.min_skin &&
        best_p != a.body_center)
        return {HandKind::FrontOfBody, best_p - a.body_center, best};
    return {};
}

HandDetection detect_hands(const BoundingBox& user_box, const skin::SkinMask& mask, const BodyAnchors& a,
                           const HandParams& params) {
    auto out = detect_stretched_hand(user_box, mask, a, params);
    if (out.kind != HandKind::None) return out;
    return detect_front_hand(user_box, mask, a, params);
}

const char* to_string(HandKind kind) {
    switch (kind) {
        case HandKind::StretchedOut: return "out";
        case HandKind::FrontOfBody: return "front";
        case HandKind::None: break;
    }
    return "none";
}

}  // namespace gpilot::hand
