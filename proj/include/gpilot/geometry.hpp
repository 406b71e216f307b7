#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <ostream>

namespace gpilot {

/// Integer pixel position, origin top-left, y grows downward. Used both for
/// absolute frame positions and for relative vectors between two positions.
struct PixelCoord {
    int x = 0;
    int y = 0;

    friend constexpr PixelCoord operator+(PixelCoord a, PixelCoord b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr PixelCoord operator-(PixelCoord a, PixelCoord b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr bool operator==(PixelCoord, PixelCoord) = default;

    constexpr bool is_zero() const { return x == 0 && y == 0; }
};

inline std::ostream& operator<<(std::ostream& os, PixelCoord p) {
    return os << '(' << p.x << ',' << p.y << ')';
}

/// Axis-aligned pixel rectangle covering columns [x, x+width) and rows [y, y+height).
struct BoundingBox {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    constexpr int right() const { return x + width; }
    constexpr int bottom() const { return y + height; }
    constexpr long area() const { return static_cast<long>(width) * height; }
    constexpr bool empty() const { return width <= 0 || height <= 0; }
    constexpr bool contains(int px, int py) const {
        return px >= x && px < x + width && py >= y && py < y + height;
    }
    constexpr bool contains(PixelCoord p) const { return contains(p.x, p.y); }
    constexpr PixelCoord center() const { return {x + width / 2, y + height / 2}; }

    friend constexpr bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const BoundingBox& b) {
    return os << '(' << b.x << ',' << b.y << ',' << b.width << ',' << b.height << ')';
}

constexpr BoundingBox intersect(const BoundingBox& a, const BoundingBox& b) {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.right(), b.right());
    const int y1 = std::min(a.bottom(), b.bottom());
    if (x1 <= x0 || y1 <= y0) return {x0, y0, 0, 0};
    return {x0, y0, x1 - x0, y1 - y0};
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
    const auto inter = intersect(a, b);
    if (inter.empty()) return 0.0;
    const double i = static_cast<double>(inter.area());
    return i / (static_cast<double>(a.area()) + static_cast<double>(b.area()) - i);
}

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return a * s; }
    friend constexpr bool operator==(Vec3, Vec3) = default;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

}  // namespace gpilot
