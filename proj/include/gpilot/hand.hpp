#pragma once

#include "gpilot/geometry.hpp"
#include "gpilot/skin.hpp"

namespace gpilot::hand {

struct BodyAnchors {
    PixelCoord shoulder_center;  // between the shoulders; origin of pointing vectors
    PixelCoord body_center;      // center of the user box; origin of front-of-body vectors
    int hand_side = 1;           // side of the square used to count skin around a candidate
};

struct AnchorParams {
    double shoulder_height = 0.20;  // fraction of box height below the box top
    double hand_side_ratio = 0.25;  // of box width
};

BodyAnchors anchors(const BoundingBox& user_box, const AnchorParams& params = {});

enum class HandKind { None, StretchedOut, FrontOfBody };

struct HandDetection {
    HandKind kind = HandKind::None;
    PixelCoord vector;  // relative to the kind's anchor; zero when kind == None
    double score = 0.0;
};

struct HandParams {
    double lambda1 = 0.5;    // skin-count weight, stretched-out search
    double lambda2 = 0.2;    // vertical weight of the distance term
    double lambda3 = 0.013;  // skin-count weight, front-of-body search
    int min_skin = 30;       // counts must exceed this
    double front_offset_divisor = 5.0;  // horizontal offset must stay below width / divisor
};

/// Skin pixels of `mask` inside the square of side `side` centered on (x, y),
/// restricted to pixels strictly outside (outside=true) or inside user_box.
/// Exposed so tests can compare against direct counting.
class SkinCounter {
public:
    SkinCounter(const skin::SkinMask& mask, const BoundingBox& user_box, bool outside);

    int total() const { return total_; }
    bool selected(int x, int y) const;
    int count_square(int x, int y, int side) const;

private:
    BoundingBox region_;
    BoundingBox user_box_;
    bool outside_;
    int total_ = 0;
    std::vector<int> sums_;  // (w+1) x (h+1) summed-area table of the selected bits
};

HandDetection detect_stretched_hand(const BoundingBox& user_box, const skin::SkinMask& mask,
                                    const BodyAnchors& anchors, const HandParams& params = {});

HandDetection detect_front_hand(const BoundingBox& user_box, const skin::SkinMask& mask, const BodyAnchors& anchors,
                                const HandParams& params = {});

/// Stretched-out first; front-of-body only when no stretched-out hand is found.
HandDetection detect_hands(const BoundingBox& user_box, const skin::SkinMask& mask, const BodyAnchors& anchors,
                           const HandParams& params = {});

const char* to_string(HandKind kind);

}  // namespace gpilot::hand
