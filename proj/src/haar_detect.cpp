#include <algorithm>
#include <cmath>
#include <numeric>

#include "gpilot/haar.hpp"

namespace gpilot::haar {

IntegralImage::IntegralImage(const GrayImage& image)
    : width_(image.width), height_(image.height),
      sums_(static_cast<std::size_t>(image.width + 1) * (image.height + 1), 0),
      squared_(sums_.size(), 0) {
    for (int y = 0; y < height_; ++y) {
        std::int64_t row = 0;
        std::int64_t row_sq = 0;
        for (int x = 0; x < width_; ++x) {
            const std::int64_t v = image.at(x, y);
            row += v;
            row_sq += v * v;
            sums_[index(x + 1, y + 1)] = sums_[index(x + 1, y)] + row;
            squared_[index(x + 1, y + 1)] = squared_[index(x + 1, y)] + row_sq;
        }
    }
}

IntegralImage integral(const GrayImage& image) { return IntegralImage(image); }

namespace {

int round_to_int(double v) { return static_cast<int>(std::lround(v)); }

constexpr double kMinStddev = 1.0;

}  // namespace

ScaledCascade::ScaledCascade(const Cascade& c, double s)
    : cascade(&c), scale(s), window_width(round_to_int(c.window_width * s)),
      window_height(round_to_int(c.window_height * s)) {
    norm_rect = {round_to_int(s), round_to_int(s), round_to_int((c.window_width - 2) * s),
                 round_to_int((c.window_height - 2) * s)};
    const double inv_area = 1.0 / static_cast<double>(norm_rect.area());

    features.reserve(c.features.size());
    for (const auto& f : c.features) {
        Feature sf;
        double base_balance = 0.0;
        for (const auto& r : f.rects) {
            BoundingBox scaled{round_to_int(r.rect.x * s), round_to_int(r.rect.y * s),
                               round_to_int(r.rect.width * s), round_to_int(r.rect.height * s)};
            scaled.width = std::max(1, std::min(scaled.width, window_width - scaled.x));
            scaled.height = std::max(1, std::min(scaled.height, window_height - scaled.y));
            sf.rects.push_back({scaled, r.weight * inv_area});
            base_balance += r.weight * static_cast<double>(r.rect.area());
        }
        // Rounding breaks the zero-sum property of balanced features; restore
        // it through the first rectangle's weight.
        if (std::abs(base_balance) < 1e-6) {
            double rest = 0.0;
            for (std::size_t k = 1; k < sf.rects.size(); ++k)
                rest += sf.rects[k].weight * static_cast<double>(sf.rects[k].rect.area());
            sf.rects[0].weight = -rest / static_cast<double>(sf.rects[0].rect.area());
        }
        features.push_back(std::move(sf));
    }
}

bool ScaledCascade::normalization(std::int64_t sum, std::int64_t squared_sum, double& stddev) const {
    const double area = static_cast<double>(norm_rect.area());
    const double mean = static_cast<double>(sum) / area;
    const double var = static_cast<double>(squared_sum) / area - mean * mean;
    if (!(var >= kMinStddev * kMinStddev)) return false;
    stddev = std::sqrt(var);
    return true;
}

bool ScaledCascade::evaluate(const IntegralImage& ii, int x, int y) const {
    const BoundingBox nr{x + norm_rect.x, y + norm_rect.y, norm_rect.width, norm_rect.height};
    double stddev = 0.0;
    if (!normalization(ii.rect_sum(nr), ii.rect_squared_sum(nr), stddev)) return false;

    for (const auto& stage : cascade->stages) {
        double stage_sum = 0.0;
        for (const auto& stump : stage.stumps) {
            double value = 0.0;
            for (const auto& r : features[static_cast<std::size_t>(stump.feature)].rects) {
                const BoundingBox at{x + r.rect.x, y + r.rect.y, r.rect.width, r.rect.height};
                value += r.weight * static_cast<double>(ii.rect_sum(at));
            }
            stage_sum += value < stump.threshold * stddev ? stump.left : stump.right;
        }
        if (stage_sum < stage.threshold) return false;
    }
    return true;
}

std::vector<BoundingBox> detect_raw(const Cascade& cascade, const GrayImage& image, const DetectParams& params) {
    std::vector<BoundingBox> hits;
    if (image.width < cascade.window_width || image.height < cascade.window_height) return hits;
    const IntegralImage ii(image);

    double s = std::max(1.0, static_cast<double>(params.min_window) / cascade.window_width);
    for (;; s *= params.scale_step) {
        const ScaledCascade sc(cascade, s);
        if (sc.window_width > image.width || sc.window_height > image.height) break;
        const int step = std::max(params.min_step, round_to_int(s));
        for (int y = 0; y + sc.window_height <= image.height; y += step)
            for (int x = 0; x + sc.window_width <= image.width; x += step)
                if (sc.evaluate(ii, x, y)) hits.push_back({x, y, sc.window_width, sc.window_height});
        if (params.scale_step <= 1.0) break;
    }
    return hits;
}

namespace {

bool similar(const BoundingBox& a, const BoundingBox& b, double eps) {
    const double delta = eps * (std::min(a.width, b.width) + std::min(a.height, b.height)) * 0.5;
    return std::abs(a.x - b.x) <= delta && std::abs(a.y - b.y) <= delta &&
           std::abs(a.right() - b.right()) <= delta && std::abs(a.bottom() - b.bottom()) <= delta;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

void sort_largest_first(std::vector<BoundingBox>& boxes) {
    std::stable_sort(boxes.begin(), boxes.end(), [](const BoundingBox& a, const BoundingBox& b) {
        if (a.area() != b.area()) return a.area() > b.area();
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
}

}  // namespace

std::vector<BoundingBox> group_rectangles(const std::vector<BoundingBox>& raw, int min_neighbors, double eps) {
    if (min_neighbors <= 0) {
        auto out = raw;
        sort_largest_first(out);
        return out;
    }

    std::vector<std::size_t> parent(raw.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (std::size_t i = 0; i < raw.size(); ++i)
        for (std::size_t j = i + 1; j < raw.size(); ++j)
            if (similar(raw[i], raw[j], eps)) parent[find_root(parent, i)] = find_root(parent, j);

    struct Cluster {
        double x = 0, y = 0, w = 0, h = 0;
        int n = 0;
    };
    std::vector<Cluster> clusters;
    std::vector<long> slot(raw.size(), -1);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto root = find_root(parent, i);
        if (slot[root] < 0) {
            slot[root] = static_cast<long>(clusters.size());
            clusters.emplace_back();
        }
        auto& c = clusters[static_cast<std::size_t>(slot[root])];
        c.x += raw[i].x;
        c.y += raw[i].y;
        c.w += raw[i].width;
        c.h += raw[i].height;
        ++c.n;
    }

    std::vector<BoundingBox> averaged;
    std::vector<int> counts;
    for (const auto& c : clusters) {
        averaged.push_back({static_cast<int>(std::lround(c.x / c.n)), static_cast<int>(std::lround(c.y / c.n)),
                            static_cast<int>(std::lround(c.w / c.n)), static_cast<int>(std::lround(c.h / c.n))});
        counts.push_back(c.n);
    }

    std::vector<BoundingBox> out;
    for (std::size_t i = 0; i < averaged.size(); ++i) {
        if (counts[i] < min_neighbors) continue;
        const auto& r1 = averaged[i];
        bool nested = false;
        for (std::size_t j = 0; j < averaged.size() && !nested; ++j) {
            if (j == i || counts[j] < min_neighbors) continue;
            const auto& r2 = averaged[j];
            const int dx = static_cast<int>(std::lround(r2.width * eps));
            const int dy = static_cast<int>(std::lround(r2.height * eps));
            nested = r1.x >= r2.x - dx && r1.y >= r2.y - dy && r1.right() <= r2.right() + dx &&
                     r1.bottom() <= r2.bottom() + dy && r1.area() < r2.area() && counts[j] >= counts[i];
        }
        if (!nested) out.push_back(r1);
    }
    sort_largest_first(out);
    return out;
}

std::vector<BoundingBox> detect_faces(const Cascade& cascade, const Frame& frame, const DetectParams& params) {
    const auto raw = detect_raw(cascade, to_gray(frame), params);
    return group_rectangles(raw, params.min_neighbors, params.group_eps);
}

BoundingBox user_box_from_face(const BoundingBox& face, int frame_width, int frame_height, const BodyRatios& ratios) {
    const double cx = face.x + face.width / 2.0;
    const double w = ratios.width * face.width;
    const double h = ratios.height * face.height;
    const BoundingBox body{static_cast<int>(std::lround(cx - w / 2.0)), face.y, static_cast<int>(std::lround(w)),
                           static_cast<int>(std::lround(h))};
    return intersect(body, {0, 0, frame_width, frame_height});
}

}  // namespace gpilot::haar
