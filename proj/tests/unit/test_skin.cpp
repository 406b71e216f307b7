#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"

#include "gpilot/errors.hpp"
#include "gpilot/scene.hpp"
#include "gpilot/skin.hpp"
#include "oracles.hpp"

using namespace gpilot;
using namespace gpilot::skin;

namespace {

SkinMask full_mask(const BoundingBox& region) {
    SkinMask m(region);
    std::fill(m.bits.begin(), m.bits.end(), 1);
    return m;
}

Rgb jitter(std::mt19937_64& rng, Rgb c, int amount) {
    std::uniform_int_distribution<int> d(-amount, amount);
    const auto ch = [&](std::uint8_t v) { return static_cast<std::uint8_t>(std::clamp(v + d(rng), 0, 255)); };
    return {ch(c.r), ch(c.g), ch(c.b)};
}

// A model trained on the renderer palette: skin color against everything else it paints.
SkinModel palette_model(const scene::Palette& p) {
    std::mt19937_64 rng(99);
    std::vector<Rgb> pos, neg;
    for (int i = 0; i < 4000; ++i) {
        pos.push_back(jitter(rng, p.skin, 10));
        for (Rgb c : {p.clothing, p.trousers, p.background, p.face_marks, p.hair}) neg.push_back(jitter(rng, c, 10));
    }
    return train_skin_model(pos, neg, 64);
}

}  // namespace

TEST_CASE("train: separated classes, unseen cells exactly 0.5") {
    const std::vector<Rgb> skin(50, Rgb{200, 120, 100});
    const std::vector<Rgb> non(50, Rgb{0, 0, 255});
    const auto m = train_skin_model(skin, non, 4);
    CHECK(m.bins() == 4);
    CHECK(m.probability({200, 120, 100}) == doctest::Approx(51.0 / 52.0));
    CHECK(m.probability({0, 0, 255}) == doctest::Approx(1.0 / 52.0));
    CHECK(m.probability({128, 128, 128}) == 0.5f);
    int unseen = 0;
    for (float p : m.table()) unseen += p == 0.5f;
    CHECK(unseen == 62);
}

TEST_CASE("train: one pixel of each class in the same cell gives 0.5") {
    const std::vector<Rgb> skin{{10, 10, 10}};
    const std::vector<Rgb> non{{12, 11, 13}};
    CHECK(train_skin_model(skin, non, 8).probability({10, 10, 10}) == 0.5f);
}

TEST_CASE("train: table equals per-cell counting on random labels") {
    std::mt19937_64 rng(1000);
    std::vector<Rgb> skin, non;
    for (int i = 0; i < 1000; ++i) {
        const Rgb c{static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())};
        (rng() % 3 == 0 ? skin : non).push_back(c);
    }
    for (int bins : {2, 4, 8}) {
        const auto m = train_skin_model(skin, non, bins);
        const auto expected = oracle::skin_table(skin, non, bins);
        REQUIRE(m.table().size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) CHECK(m.table()[i] == expected[i]);
    }
}

TEST_CASE("train: empty sample lists and bad bin counts are contract errors") {
    const std::vector<Rgb> some{{1, 2, 3}};
    CHECK_THROWS_AS(train_skin_model({}, some, 4), ContractError);
    CHECK_THROWS_AS(train_skin_model(some, {}, 4), ContractError);
    CHECK_THROWS_AS(train_skin_model(some, some, 6), ContractError);
}

TEST_CASE("lookup: exact table entry of the quantized cell") {
    std::mt19937_64 rng(7);
    const auto& m = default_skin_model();
    CHECK(m.bins() == 64);
    for (int i = 0; i < 500; ++i) {
        const Rgb c{static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())};
        const std::size_t idx = (static_cast<std::size_t>(c.r / 4) * 64 + c.g / 4) * 64 + c.b / 4;
        CHECK(skin_probability(m, c) == m.table()[idx]);
        // Same cell, same answer.
        const Rgb n{static_cast<std::uint8_t>(c.r & ~3), static_cast<std::uint8_t>(c.g | 3), c.b};
        CHECK(skin_probability(m, n) == skin_probability(m, c));
    }
    CHECK(m.cell_index({255, 255, 255}) == m.table().size() - 1);
    for (int bins : {1, 2, 16, 256}) {
        const SkinModel b(bins, std::vector<float>(static_cast<std::size_t>(bins) * bins * bins, 0.25f));
        CHECK(b.cell_index({255, 255, 255}) == b.table().size() - 1);
    }
}

TEST_CASE("default model separates the renderer palette") {
    const scene::Palette p;
    const auto& m = default_skin_model();
    CHECK(m.probability(p.skin) > 0.9f);
    for (Rgb c : {p.clothing, p.trousers, p.background, p.face_marks, p.hair}) CHECK(m.probability(c) < 0.1f);
}

TEST_CASE("model file round trip and errors") {
    std::mt19937_64 rng(5);
    std::vector<Rgb> skin, non;
    for (int i = 0; i < 200; ++i) {
        skin.push_back({static_cast<std::uint8_t>(rng()), 100, 100});
        non.push_back({static_cast<std::uint8_t>(rng()), 10, 200});
    }
    const auto m = train_skin_model(skin, non, 8);
    std::stringstream buf;
    write_skin_model(m, buf);
    const std::string bytes = buf.str();
    CHECK(bytes.size() == 8 + 4 * 512);
    CHECK(bytes.substr(0, 4) == "SKN1");
    CHECK(bytes[4] == 8);
    const auto back = read_skin_model(buf);
    CHECK(back.bins() == 8);
    CHECK(std::equal(back.table().begin(), back.table().end(), m.table().begin()));

    std::istringstream bad_magic("SKN2" + bytes.substr(4));
    CHECK_THROWS_AS(read_skin_model(bad_magic), FormatError);
    std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_skin_model(truncated), TruncationError);
    std::string bad_bins = bytes;
    bad_bins[4] = 3;
    std::istringstream odd(bad_bins);
    CHECK_THROWS_AS(read_skin_model(odd), FormatError);
    std::string bad_value = bytes;
    bad_value[8 + 3] = '\x7f';  // high byte of the first float: a huge value
    std::istringstream big(bad_value);
    CHECK_THROWS_AS(read_skin_model(big), FormatError);
}

TEST_CASE("detect_skin: region extension and clipping") {
    const Frame f(640, 480, 0, Rgb{0, 0, 255});
    const auto m = detect_skin(default_skin_model(), f, {200, 100, 100, 200});
    CHECK(m.region == BoundingBox{100, 0, 300, 300});
    CHECK(m.count() == 0);
    const auto edge = detect_skin(default_skin_model(), f, {0, 300, 80, 200});
    CHECK(edge.region == BoundingBox{0, 200, 160, 280});
    CHECK(edge.bits.size() == 160u * 280u);
}

TEST_CASE("detect_skin: threshold boundary is inclusive and monotone") {
    std::mt19937_64 rng(3);
    Frame f(60, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 60; ++x)
            f.set(x, y, {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())});
    const BoundingBox box{20, 10, 20, 20};
    SkinMask previous;
    for (double t : {0.9, 0.7, 0.5, 0.3, 0.1}) {
        SkinParams p;
        p.threshold = t;
        const auto m = detect_skin(default_skin_model(), f, box, p);
        CHECK(m == detect_skin(default_skin_model(), f, box, p));
        for (int y = m.region.y; y < m.region.bottom(); ++y)
            for (int x = m.region.x; x < m.region.right(); ++x) {
                CHECK(m.at(x, y) == (default_skin_model().probability(f.at(x, y)) >= t ? 1 : 0));
                if (!previous.bits.empty() && previous.at(x, y)) CHECK(m.at(x, y) == 1);
            }
        previous = m;
    }
}

TEST_CASE("detect_skin: rendered figure, model trained on the palette") {
    scene::SceneSpec spec;
    spec.arm = scene::ArmPose::Right;
    spec.arm_angle = 0.3;
    spec.noise_seed = 17;
    const sim::DroneState drone{{0.0, 0.5, 1.3}, std::numbers::pi / 2, {}};
    const auto rendered = scene::render(spec, drone);

    // Label pixels by re-rendering without noise with marker colors.
    auto labels = spec;
    labels.noise_seed.reset();
    labels.palette.skin = {255, 0, 255};
    labels.palette.clothing = {0, 255, 255};
    const auto label = scene::render(labels, drone).frame;

    const auto model = palette_model(spec.palette);
    const auto& box = rendered.truth.body_box;
    const auto mask = detect_skin(model, rendered.frame, box);
    long skin = 0, skin_hit = 0, torso = 0, torso_hit = 0;
    for (int y = mask.region.y; y < mask.region.bottom(); ++y)
        for (int x = mask.region.x; x < mask.region.right(); ++x) {
            const auto c = label.at(x, y);
            if (c == Rgb{255, 0, 255}) {
                ++skin;
                skin_hit += mask.at(x, y);
            } else if (c == Rgb{0, 255, 255}) {
                ++torso;
                torso_hit += mask.at(x, y);
            }
        }
    REQUIRE(skin > 100);
    REQUIRE(torso > 1000);
    CHECK(static_cast<double>(skin_hit) / skin >= 0.90);
    CHECK(static_cast<double>(torso_hit) / torso <= 0.02);
}

TEST_CASE("erase: all-ones mask keeps only rows [0.25h, 0.55h) of the box") {
    const BoundingBox box{50, 20, 40, 100};
    const auto erased = erase_body_regions(full_mask({0, 0, 140, 140}), box);
    for (int y = 0; y < 140; ++y)
        for (int x = 0; x < 140; ++x) {
            const bool inside = box.contains(x, y);
            const int row = y - box.y;
            const int expected = !inside || (row >= 25 && row < 55) ? 1 : 0;
            CHECK(erased.at(x, y) == expected);
        }
}

TEST_CASE("erase: fractional boundaries follow the half-open row intervals") {
    // h = 5: rows with r < 1.25 (0 and 1) and r >= 2.75 (3 and 4) are cleared.
    const BoundingBox box{0, 0, 3, 5};
    const auto erased = erase_body_regions(full_mask(box), box);
    for (int r = 0; r < 5; ++r) CHECK(erased.at(1, r) == (r == 2 ? 1 : 0));
}

TEST_CASE("erase: skin only outside the box is untouched") {
    const BoundingBox box{10, 10, 10, 10};
    SkinMask m({0, 0, 30, 30});
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 30; ++x)
            if (!box.contains(x, y) && (x + y) % 3 == 0) m.set(x, y, 1);
    CHECK(erase_body_regions(m, box) == m);
}

TEST_CASE("erase: a one-row box loses its row") {
    const BoundingBox box{2, 3, 5, 1};
    const auto erased = erase_body_regions(full_mask({0, 0, 10, 10}), box);
    for (int x = 2; x < 7; ++x) CHECK(erased.at(x, 3) == 0);
    CHECK(erased.count() == 95);
}

TEST_CASE("erase is idempotent") {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 20; ++k) {
        SkinMask m({0, 0, 50, 60});
        for (auto& b : m.bits) b = rng() % 2;
        const BoundingBox box{static_cast<int>(rng() % 30), static_cast<int>(rng() % 30), 5 + static_cast<int>(rng() % 20),
                              1 + static_cast<int>(rng() % 30)};
        const auto once = erase_body_regions(m, box);
        CHECK(erase_body_regions(once, box) == once);
    }
}

TEST_CASE("skin dump: overlay R is 255 exactly on mask pixels, frame elsewhere") {
    scene::SceneSpec spec;
    spec.arm = scene::ArmPose::Left;
    spec.noise_seed = 4;
    const auto r = scene::render(spec, {{0.0, 0.5, 1.3}, std::numbers::pi / 2, {}});
    const auto mask = detect_skin(default_skin_model(), r.frame, r.truth.body_box);
    const auto dump = render_skin_dump(default_skin_model(), r.frame, mask);
    long marked = 0;
    for (int y = 0; y < r.frame.height(); ++y)
        for (int x = 0; x < r.frame.width(); ++x) {
            const auto in = r.frame.at(x, y);
            const auto out = dump.overlay.at(x, y);
            if (mask.at(x, y)) {
                ++marked;
                CHECK(out == Rgb{255, in.g, in.b});
                CHECK(dump.mask.at(x, y) == Rgb{255, 255, 255});
            } else {
                CHECK(out == in);
                CHECK(dump.mask.at(x, y) == Rgb{0, 0, 0});
            }
            const auto p = static_cast<std::uint8_t>(std::lround(255.0 * default_skin_model().probability(in)));
            CHECK(dump.likelihood.at(x, y) == Rgb{p, p, p});
        }
    CHECK(marked == static_cast<long>(mask.count()));
    CHECK(marked > 0);
}
