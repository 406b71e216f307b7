#include "gpilot/skin.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "gpilot/errors.hpp"

namespace gpilot::skin {

SkinModel::SkinModel(int bins_per_channel, std::vector<float> table) : bins_(bins_per_channel), table_(std::move(table)) {
    if (bins_ < 1 || bins_ > 256 || (bins_ & (bins_ - 1)) != 0)
        throw ContractError("bins per channel must be a power of two in [1, 256]");
    if (table_.size() != static_cast<std::size_t>(bins_) * bins_ * bins_)
        throw ContractError("skin table length must be bins^3");
    for (float p : table_)
        if (!(p >= 0.0f && p <= 1.0f)) throw ContractError("skin probabilities must lie in [0, 1]");
}

SkinModel train_skin_model(std::span<const Rgb> skin, std::span<const Rgb> nonskin, int bins) {
    if (skin.empty() || nonskin.empty()) throw ContractError("skin and non-skin sample lists must be non-empty");
    const SkinModel shape(bins, std::vector<float>(static_cast<std::size_t>(bins) * bins * bins, 0.0f));
    std::vector<std::uint64_t> pos(shape.table().size(), 0);
    std::vector<std::uint64_t> neg(shape.table().size(), 0);
    for (const auto& c : skin) ++pos[shape.cell_index(c)];
    for (const auto& c : nonskin) ++neg[shape.cell_index(c)];
    std::vector<float> table(pos.size());
    for (std::size_t i = 0; i < table.size(); ++i)
        table[i] = static_cast<float>(static_cast<double>(pos[i] + 1) / static_cast<double>(pos[i] + neg[i] + 2));
    return SkinModel(bins, std::move(table));
}

namespace {

// Explicit RGB skin rule for uniform daylight; used only to label the
// training samples of the bundled model.
bool rule_says_skin(int r, int g, int b) {
    const int mx = std::max({r, g, b});
    const int mn = std::min({r, g, b});
    return r > 95 && g > 40 && b > 20 && mx - mn > 15 && std::abs(r - g) > 15 && r > g && r > b;
}

}  // namespace

const SkinModel& default_skin_model() {
    static const SkinModel model = [] {
        constexpr int bins = 64;
        constexpr int step = 256 / bins;
        std::vector<std::uint32_t> pos(static_cast<std::size_t>(bins) * bins * bins, 0);
        std::vector<std::uint32_t> total(pos.size(), 0);
        for (int r = 0; r < 256; ++r)
            for (int g = 0; g < 256; ++g)
                for (int b = 0; b < 256; ++b) {
                    const auto idx = (static_cast<std::size_t>(r / step) * bins + g / step) * bins + b / step;
                    ++total[idx];
                    if (rule_says_skin(r, g, b)) ++pos[idx];
                }
        std::vector<float> table(pos.size());
        for (std::size_t i = 0; i < table.size(); ++i)
            table[i] = static_cast<float>(static_cast<double>(pos[i] + 1) / static_cast<double>(total[i] + 2));
        return SkinModel(bins, std::move(table));
    }();
    return model;
}

void write_skin_model(const SkinModel& model, std::ostream& out) {
    out.write("SKN1", 4);
    const auto put_u32 = [&out](std::uint32_t v) {
        const std::array<char, 4> b{static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                                    static_cast<char>(v >> 24)};
        out.write(b.data(), 4);
    };
    put_u32(static_cast<std::uint32_t>(model.bins()));
    for (float p : model.table()) {
        std::uint32_t bits = 0;
        std::memcpy(&bits, &p, sizeof bits);
        put_u32(bits);
    }
    if (!out) throw InputError("skin model: write failed");
}

SkinModel read_skin_model(std::istream& in) {
    std::array<unsigned char, 4> b{};
    const auto get_u32 = [&]() -> std::uint32_t {
        in.read(reinterpret_cast<char*>(b.data()), 4);
        if (in.gcount() != 4) throw TruncationError("skin model: truncated");
        return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    };
    in.read(reinterpret_cast<char*>(b.data()), 4);
    if (in.gcount() != 4 || std::memcmp(b.data(), "SKN1", 4) != 0) throw FormatError("skin model: bad magic");
    const std::uint32_t bins = get_u32();
    if (bins == 0 || bins > 256 || (bins & (bins - 1)) != 0) throw FormatError("skin model: invalid bin count");
    std::vector<float> table(static_cast<std::size_t>(bins) * bins * bins);
    for (auto& p : table) {
        const std::uint32_t bits = get_u32();
        std::memcpy(&p, &bits, sizeof p);
        if (!(p >= 0.0f && p <= 1.0f)) throw FormatError("skin model: probability out of [0, 1]");
    }
    return SkinModel(static_cast<int>(bins), std::move(table));
}

void save_skin_model(const SkinModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    write_skin_model(model, out);
}

SkinModel load_skin_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open skin model " + path.string());
    return read_skin_model(in);
}

std::size_t SkinMask::count() const {
    return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

BoundingBox skin_region(const BoundingBox& user_box, int frame_width, int frame_height, const SkinParams& params) {
    const int side = static_cast<int>(std::lround(params.side_extension * user_box.width));
    const int top = static_cast<int>(std::lround(params.top_extension * user_box.height));
    const BoundingBox extended{user_box.x - side, user_box.y - top, user_box.width + 2 * side, user_box.height + top};
    return intersect(extended, {0, 0, frame_width, frame_height});
}

SkinMask detect_skin(const SkinModel& model, const Frame& frame, const BoundingBox& user_box, const SkinParams& params) {
    SkinMask mask(skin_region(user_box, frame.width(), frame.height(), params));
    const auto& r = mask.region;
    for (int y = r.y; y < r.bottom(); ++y)
        for (int x = r.x; x < r.right(); ++x)
            if (model.probability(frame.at(x, y)) >= params.threshold)
                mask.bits[static_cast<std::size_t>(y - r.y) * r.width + (x - r.x)] = 1;
    return mask;
}

SkinMask erase_body_regions(SkinMask mask, const BoundingBox& user_box, const SkinParams& params) {
    // first row index >= fraction * height, tolerant of 0.55 * 100 = 55.000000000000007
    const auto boundary = [&](double fraction) {
        return user_box.y + static_cast<int>(std::ceil(fraction * user_box.height - 1e-9));
    };
    const auto erase_rows = [&](int y0, int y1) {
        for (int y = y0; y < std::min(y1, user_box.bottom()); ++y)
            for (int x = user_box.x; x < user_box.right(); ++x) mask.set(x, y, 0);
    };
    erase_rows(user_box.y, boundary(params.erase_top));
    erase_rows(boundary(params.erase_bottom), user_box.bottom());
    return mask;
}

SkinDump render_skin_dump(const SkinModel& model, const Frame& frame, const SkinMask& mask) {
    SkinDump d{Frame(frame.width(), frame.height(), frame.timestamp_ms()),
               Frame(frame.width(), frame.height(), frame.timestamp_ms()), frame};
    for (int y = 0; y < frame.height(); ++y)
        for (int x = 0; x < frame.width(); ++x) {
            const auto p = static_cast<std::uint8_t>(std::lround(255.0 * model.probability(frame.at(x, y))));
            d.likelihood.set(x, y, {p, p, p});
            if (mask.at(x, y)) {
                d.mask.set(x, y, {255, 255, 255});
                auto c = frame.at(x, y);
                c.r = 255;
                d.overlay.set(x, y, c);
            }
        }
    return d;
}

}  // namespace gpilot::skin
