#include <cmath>
#include <array>
#include <complex>
#include <random>

#include "doctest.h"

#include "gpilot/dsst.hpp"
#include "gpilot/errors.hpp"
#include "gpilot/fft.hpp"
#include "oracles.hpp"

using namespace gpilot;
using namespace gpilot::dsst;

namespace {

FloatImage float_image(int w, int h, float fill = 0.0f) {
    return {w, h, std::vector<float>(static_cast<std::size_t>(w) * h, fill)};
}

FeatureMap one_channel(int w, int h, std::vector<double> v) {
    FeatureMap f;
    f.width = w;
    f.height = h;
    f.channels.push_back(std::move(v));
    return f;
}

// Textured square (checker of 4 px cells plus a diagonal gradient) on a flat background.
Frame square_frame(double cx, double cy, double side, std::uint32_t t = 0) {
    Frame f(320, 240, t, Rgb{70, 70, 70});
    const int x0 = static_cast<int>(std::lround(cx - side / 2));
    const int y0 = static_cast<int>(std::lround(cy - side / 2));
    const int n = static_cast<int>(std::lround(side));
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double u = static_cast<double>(x) / n;
            const double v = static_cast<double>(y) / n;
            const bool cell = (static_cast<int>(u * 6) + static_cast<int>(v * 6)) % 2 == 0;
            const auto k = static_cast<std::uint8_t>(std::clamp(120.0 + 80.0 * u - 40.0 * v + (cell ? 40 : -40), 0.0, 255.0));
            f.plot(x0 + x, y0 + y, Rgb{k, k, k});
        }
    return f;
}

double center_x(const BoundingBox& b) { return b.x + b.width / 2.0; }
double center_y(const BoundingBox& b) { return b.y + b.height / 2.0; }

}  // namespace

TEST_CASE("fft2 agrees with a direct DFT and inverts") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1, 1);
    for (const auto& [w, h] : {std::pair{1, 1}, {2, 2}, {5, 3}, {8, 6}, {33, 1}}) {
        std::vector<double> x(static_cast<std::size_t>(w * h));
        std::vector<std::complex<double>> xc(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) xc[i] = x[i] = u(rng);
        const auto X = fft2(x, w, h);
        const auto ref = oracle::dft2(xc, w, h);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(X.data[i] - ref[i]) < 1e-10);
        const auto back = ifft2(X);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back[i] - xc[i]) < 1e-12);
    }
}

TEST_CASE("hann window is symmetric and never zero") {
    for (int n : {1, 2, 7, 32}) {
        const auto w = hann(n);
        for (int k = 0; k < n; ++k) {
            CHECK(w[static_cast<std::size_t>(k)] > 0.0);
            CHECK(w[static_cast<std::size_t>(k)] == doctest::Approx(w[static_cast<std::size_t>(n - 1 - k)]).epsilon(1e-12));
        }
    }
    CHECK(hann(3)[1] == doctest::Approx(1.0));
}

TEST_CASE("features: constant frame gives (c - 0.5) times the cosine window") {
    const Frame frame(40, 30, 0, Rgb{100, 100, 100});
    const auto img = to_float_gray(frame);
    const double c = img.at(0, 0);
    const auto f = extract_features(img, {20.0, 15.0, 24.0, 18.0, 12, 9}, FeatureKind::Gray, true);
    REQUIRE(f.depth() == 1);
    CHECK(f.windowed);
    const auto wx = hann(12);
    const auto wy = hann(9);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 12; ++x)
            CHECK(f.channels[0][static_cast<std::size_t>(y * 12 + x)] ==
                  doctest::Approx((c - 0.5) * wx[static_cast<std::size_t>(x)] * wy[static_cast<std::size_t>(y)]).epsilon(1e-12));
}

TEST_CASE("features: patch fully outside the frame replicates the border pixel") {
    auto img = float_image(10, 8, 0.9f);
    img.data[0] = 0.25f;  // top-left corner
    const auto f = extract_features(img, {-50.0, -40.0, 12.0, 12.0, 6, 6}, FeatureKind::Gray, false);
    for (double v : f.channels[0]) CHECK(v == doctest::Approx(0.25 - 0.5).epsilon(1e-7));
}

TEST_CASE("features: 4x4 ramp without window") {
    auto img = float_image(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) img.data[static_cast<std::size_t>(y * 4 + x)] = static_cast<float>((x + 4 * y) / 16.0);

    // Same resolution: every sample lands on a pixel center.
    const auto same = extract_features(img, {2.0, 2.0, 4.0, 4.0, 4, 4}, FeatureKind::Gray, false);
    for (int i = 0; i < 16; ++i) CHECK(same.channels[0][static_cast<std::size_t>(i)] == doctest::Approx(i / 16.0 - 0.5));

    // Half resolution: 2x2 block means of (x + 4y) / 16, minus 0.5.
    const auto half = extract_features(img, {2.0, 2.0, 4.0, 4.0, 2, 2}, FeatureKind::Gray, false);
    const double expected[4] = {2.5 / 16 - 0.5, 4.5 / 16 - 0.5, 10.5 / 16 - 0.5, 12.5 / 16 - 0.5};
    for (int i = 0; i < 4; ++i) CHECK(half.channels[0][static_cast<std::size_t>(i)] == doctest::Approx(expected[i]));
}

TEST_CASE("features: gradient channels") {
    auto img = float_image(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) img.data[static_cast<std::size_t>(y * 8 + x)] = static_cast<float>(x / 8.0);
    const auto f = extract_features(img, {4.0, 4.0, 8.0, 8.0, 8, 8}, FeatureKind::GrayGradient, false);
    CHECK(f.depth() == 9);
    // A horizontal ramp has orientation 0: all gradient energy in bin 0.
    CHECK(f.channels[1][static_cast<std::size_t>(3 * 8 + 3)] == doctest::Approx(1.0 / 8.0));
    for (int b = 2; b < 9; ++b) CHECK(f.channels[static_cast<std::size_t>(b)][static_cast<std::size_t>(3 * 8 + 3)] == 0.0);
}

TEST_CASE("gaussian response peaks at (w/2, h/2)") {
    const auto g = gaussian_response(7, 4, 1.3);
    Response r{7, 4, g, 0.0};
    CHECK(argmax(r) == PixelCoord{3, 2});
    CHECK(g[2 * 7 + 3] == 1.0);
}

TEST_CASE("train_init: self response peaks at the patch center") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const int w = 8 + static_cast<int>(rng() % 20);
        const int h = 8 + static_cast<int>(rng() % 20);
        const auto f = oracle::random_features(rng, w, h, 1 + static_cast<int>(rng() % 3));
        const auto m = train_init(f, 0.01, 1.0 / 16.0);
        const auto r = score(m, f);
        CHECK(argmax(r) == PixelCoord{w / 2, h / 2});
        CHECK(r.imag_ratio <= 1e-6);
    }
}

TEST_CASE("train_init: 2x2 single channel matches the hand-evaluated closed form") {
    // f = [[a b] [c d]], g = [[p q] [r s]]. For 2x2 grids the DFT is real:
    // X(0,0) = a+b+c+d, X(1,0) = a-b+c-d, X(0,1) = a+b-c-d, X(1,1) = a-b-c+d.
    const double a = 0.3, b = -0.1, c = 0.25, d = 0.05;
    const double p = 0.2, q = 0.1, r = 0.6, s = 1.0;
    const double lambda = 0.01;
    const auto dft = [](double w, double x, double y, double z) {
        return std::array<double, 4>{w + x + y + z, w - x + y - z, w + x - y - z, w - x - y + z};
    };
    const auto F = dft(a, b, c, d);
    const auto G = dft(p, q, r, s);

    const auto m = train_init(one_channel(2, 2, {a, b, c, d}), {p, q, r, s}, lambda);
    const auto H = filter_spectra(m);
    for (int i = 0; i < 4; ++i) {
        const double expected = G[static_cast<std::size_t>(i)] * F[static_cast<std::size_t>(i)] /
                                (F[static_cast<std::size_t>(i)] * F[static_cast<std::size_t>(i)] + lambda);
        CHECK(std::abs(H[0].data[static_cast<std::size_t>(i)] - expected) < 1e-9);
        CHECK(m.denominator[static_cast<std::size_t>(i)] == doctest::Approx(F[static_cast<std::size_t>(i)] * F[static_cast<std::size_t>(i)]).epsilon(1e-12));
    }
}

TEST_CASE("train_init: closed form minimizes the ridge loss against perturbations") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int w = 3 + static_cast<int>(rng() % 4);
        const int h = 3 + static_cast<int>(rng() % 4);
        const auto f = oracle::random_features(rng, w, h, 1 + static_cast<int>(rng() % 3));
        const auto g = gaussian_response(w, h, 1.0);
        const double lambda = 0.01;
        const auto m = train_init(f, g, lambda);
        const auto h_opt = oracle::spatial_filters(filter_spectra(m));
        const double best = oracle::ridge_loss(h_opt, f, g, lambda);
        for (int k = 0; k < 20; ++k) {
            auto h_alt = h_opt;
            const double size = std::pow(10.0, -4.0 + 4.0 * (k % 5) / 4.0);
            for (auto& ch : h_alt)
                for (auto& v : ch) v += size * n(rng);
            CHECK(best <= oracle::ridge_loss(h_alt, f, g, lambda) * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("score: circular shift of the input shifts the peak") {
    std::mt19937_64 rng(9);
    const int w = 16, h = 12;
    const auto f = oracle::random_features(rng, w, h, 1);
    const auto m = train_init(f, 0.01, 1.0 / 16.0);
    auto shifted = f;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            shifted.channels[0][static_cast<std::size_t>(((y + 2) % h) * w + (x + 3) % w)] = f.channels[0][static_cast<std::size_t>(y * w + x)];
    CHECK(argmax(score(m, shifted)) == PixelCoord{w / 2 + 3, h / 2 + 2});
}

TEST_CASE("score: zero features give a zero response") {
    std::mt19937_64 rng(2);
    const auto m = train_init(oracle::random_features(rng, 6, 5, 2), 0.01, 1.0 / 16.0);
    FeatureMap zero = oracle::random_features(rng, 6, 5, 2);
    for (auto& ch : zero.channels) std::fill(ch.begin(), ch.end(), 0.0);
    const auto r = score(m, zero);
    for (double v : r.values) CHECK(v == 0.0);
}

TEST_CASE("score and update reject mismatched feature maps") {
    std::mt19937_64 rng(3);
    const auto m = train_init(oracle::random_features(rng, 6, 5, 1), 0.01, 1.0 / 16.0);
    CHECK_THROWS_AS(score(m, oracle::random_features(rng, 5, 6, 1)), ContractError);
    CHECK_THROWS_AS(update(m, oracle::random_features(rng, 6, 5, 2)), ContractError);
    CHECK_THROWS_AS(train_init(oracle::random_features(rng, 6, 5, 1), 0.0, 0.1), ContractError);
}

TEST_CASE("update: eta = 1 replaces, eta = 0 keeps") {
    std::mt19937_64 rng(5);
    const auto f0 = oracle::random_features(rng, 7, 6, 2);
    const auto f1 = oracle::random_features(rng, 7, 6, 2);

    const auto full = update(train_init(f0, 0.01, 1.0 / 16.0, 1.0), f1);
    const auto fresh = train_init(f1, 0.01, 1.0 / 16.0, 1.0);
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t i = 0; i < full.numerators[l].data.size(); ++i)
            CHECK(full.numerators[l].data[i] == fresh.numerators[l].data[i]);
    CHECK(full.denominator == fresh.denominator);

    const auto base = train_init(f0, 0.01, 1.0 / 16.0, 0.0);
    const auto kept = update(base, f1);
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t i = 0; i < kept.numerators[l].data.size(); ++i)
            CHECK(kept.numerators[l].data[i] == base.numerators[l].data[i]);
    CHECK(kept.denominator == base.denominator);
}

TEST_CASE("update: eta = 0.025 blend of two 2x2 maps by hand") {
    const auto dft = [](double w, double x, double y, double z) {
        return std::array<double, 4>{w + x + y + z, w - x + y - z, w + x - y - z, w - x - y + z};
    };
    const std::array<double, 4> f0{0.3, -0.1, 0.25, 0.05}, f1{-0.2, 0.4, 0.1, 0.0}, g{0.2, 0.1, 0.6, 1.0};
    const double eta = 0.025;
    const auto F0 = dft(f0[0], f0[1], f0[2], f0[3]);
    const auto F1 = dft(f1[0], f1[1], f1[2], f1[3]);
    const auto G = dft(g[0], g[1], g[2], g[3]);

    const auto m0 = train_init(one_channel(2, 2, {f0.begin(), f0.end()}), {g.begin(), g.end()}, 0.01, eta);
    const auto m1 = update(m0, one_channel(2, 2, {f1.begin(), f1.end()}));
    for (std::size_t i = 0; i < 4; ++i) {
        const double a = (1 - eta) * G[i] * F0[i] + eta * G[i] * F1[i];
        const double b = (1 - eta) * F0[i] * F0[i] + eta * F1[i] * F1[i];
        CHECK(std::abs(m1.numerators[0].data[i] - a) < 1e-9);
        CHECK(std::abs(m1.denominator[i] - b) < 1e-9);
    }
}

TEST_CASE("argmax ties go to the smallest row, then column") {
    Response r{3, 3, {0, 1, 0, 1, 0, 1, 0, 0, 0}, 0.0};
    CHECK(argmax(r) == PixelCoord{1, 0});
}

TEST_CASE("tracker: static target drifts at most 1 px over 10 frames") {
    const auto first = square_frame(160, 120, 40);
    auto st = init_tracker(first, {140, 100, 40, 40});
    BoundingBox b{};
    for (int i = 1; i <= 10; ++i) b = track(st, square_frame(160, 120, 40, 40u * i));
    CHECK(std::hypot(center_x(b) - 160, center_y(b) - 120) <= 1.0);
}

TEST_CASE("tracker: square translating 2 px per frame") {
    auto st = init_tracker(square_frame(100, 100, 40), {80, 80, 40, 40});
    for (int i = 1; i <= 30; ++i) {
        const double cx = 100 + 2.0 * i, cy = 100 + 1.0 * i;
        const auto b = track(st, square_frame(cx, cy, 40, 40u * i));
        CHECK(std::hypot(center_x(b) - cx, center_y(b) - cy) <= 2.0);
    }
}

TEST_CASE("tracker: 1% growth per frame recovers the scale") {
    auto st = init_tracker(square_frame(160, 120, 50), {135, 95, 50, 50});
    for (int i = 1; i <= 20; ++i) track(st, square_frame(160, 120, 50 * std::pow(1.01, i), 40u * i));
    CHECK(std::abs(st.scale_factor / std::pow(1.01, 20) - 1.0) <= 0.05);
}

TEST_CASE("tracker: identical sequences give identical boxes") {
    const auto run = [] {
        std::vector<BoundingBox> out;
        auto st = init_tracker(square_frame(100, 100, 40), {80, 80, 40, 40});
        for (int i = 1; i <= 8; ++i) out.push_back(track(st, square_frame(100 + 3 * i, 100, 40, 40u * i)));
        return out;
    };
    CHECK(run() == run());
}

TEST_CASE("tracker: degenerate targets") {
    const auto f = square_frame(100, 100, 40);
    CHECK_THROWS_AS(init_tracker(f, {10, 10, 3, 20}), ContractError);
    TrackerParams p;
    p.min_size = 39.5;
    auto st = init_tracker(f, {80, 80, 40, 40}, p);
    // A shrinking target soon falls below min_size.
    CHECK_THROWS_AS(
        [&] {
            for (int i = 1; i <= 30; ++i) track(st, square_frame(100, 100, 40 * std::pow(0.97, i), 40u * i));
        }(),
        TrackingLostError);
}
