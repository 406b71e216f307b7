#include "gpilot/dsst.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gpilot/errors.hpp"

namespace gpilot::dsst {

FloatImage to_float_gray(const Frame& frame) {
    FloatImage img{frame.width(), frame.height(), {}};
    img.data.resize(static_cast<std::size_t>(frame.width()) * frame.height());
    const auto px = frame.pixels();
    for (std::size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = static_cast<float>((0.299 * px[3 * i] + 0.587 * px[3 * i + 1] + 0.114 * px[3 * i + 2]) / 255.0);
    return img;
}

std::vector<double> hann(int n) {
    std::vector<double> w(static_cast<std::size_t>(std::max(n, 0)));
    for (int k = 0; k < n; ++k) w[static_cast<std::size_t>(k)] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * (k + 1) / (n + 1)));
    return w;
}

namespace {

double bilinear(const FloatImage& img, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
    const double bottom = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
    return top * (1.0 - fy) + bottom * fy;
}

constexpr int kOrientationBins = 8;

void check_same_shape(const FilterModel& model, const FeatureMap& features) {
    if (features.width != model.width || features.height != model.height ||
        static_cast<std::size_t>(features.depth()) != model.numerators.size())
        throw ContractError("feature map dimensions do not match the filter model");
}

std::vector<Spectrum> transform_channels(const FeatureMap& features) {
    std::vector<Spectrum> out;
    out.reserve(features.channels.size());
    for (const auto& ch : features.channels) out.push_back(fft2(ch, features.width, features.height));
    return out;
}

// Channel values for one resampled intensity grid.
std::vector<std::vector<double>> channels_from_intensity(const std::vector<double>& v, int w, int h, FeatureKind kind) {
    std::vector<std::vector<double>> ch;
    std::vector<double> gray(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) gray[i] = v[i] - 0.5;
    ch.push_back(std::move(gray));
    if (kind == FeatureKind::GrayGradient) {
        for (int b = 0; b < kOrientationBins; ++b) ch.emplace_back(v.size(), 0.0);
        auto at = [&](int x, int y) {
            return v[static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
        };
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double gx = 0.5 * (at(x + 1, y) - at(x - 1, y));
                const double gy = 0.5 * (at(x, y + 1) - at(x, y - 1));
                const double mag = std::hypot(gx, gy);
                if (mag == 0.0) continue;
                double angle = std::atan2(gy, gx);
                if (angle < 0) angle += 2.0 * std::numbers::pi;
                const double pos = angle / (2.0 * std::numbers::pi) * kOrientationBins;
                const int lo = static_cast<int>(pos) % kOrientationBins;
                const int hi = (lo + 1) % kOrientationBins;
                const double frac = pos - std::floor(pos);
                const auto idx = static_cast<std::size_t>(y) * w + x;
                ch[static_cast<std::size_t>(1 + lo)][idx] += mag * (1.0 - frac);
                ch[static_cast<std::size_t>(1 + hi)][idx] += mag * frac;
            }
        }
    }
    return ch;
}

}  // namespace

std::vector<double> resample(const FloatImage& image, const Sample& s) {
    if (s.out_width <= 0 || s.out_height <= 0 || !(s.patch_width > 0) || !(s.patch_height > 0))
        throw ContractError("resample: sizes must be positive");
    const double kx = s.patch_width / s.out_width;
    const double ky = s.patch_height / s.out_height;
    const int nx = std::max(1, static_cast<int>(std::ceil(kx - 1e-9)));
    const int ny = std::max(1, static_cast<int>(std::ceil(ky - 1e-9)));
    const double x0 = s.center_x - s.patch_width / 2.0;
    const double y0 = s.center_y - s.patch_height / 2.0;
    const double inv_taps = 1.0 / (nx * ny);

    std::vector<double> tap_x(static_cast<std::size_t>(s.out_width) * nx);
    for (int i = 0; i < s.out_width; ++i)
        for (int m = 0; m < nx; ++m)
            tap_x[static_cast<std::size_t>(i) * nx + m] = x0 + (i + (m + 0.5) / nx) * kx - 0.5;

    std::vector<double> out(static_cast<std::size_t>(s.out_width) * s.out_height);
    for (int j = 0; j < s.out_height; ++j) {
        for (int i = 0; i < s.out_width; ++i) {
            double acc = 0.0;
            for (int n = 0; n < ny; ++n) {
                const double sy = y0 + (j + (n + 0.5) / ny) * ky - 0.5;
                for (int m = 0; m < nx; ++m) acc += bilinear(image, tap_x[static_cast<std::size_t>(i) * nx + m], sy);
            }
            out[static_cast<std::size_t>(j) * s.out_width + i] = acc * inv_taps;
        }
    }
    return out;
}

FeatureMap extract_features(const FloatImage& image, const Sample& sample, FeatureKind kind, bool cosine_window) {
    const auto v = resample(image, sample);
    FeatureMap fm;
    fm.width = sample.out_width;
    fm.height = sample.out_height;
    fm.channels = channels_from_intensity(v, fm.width, fm.height, kind);
    if (cosine_window) {
        const auto wx = hann(fm.width);
        const auto wy = hann(fm.height);
        for (auto& ch : fm.channels)
            for (int y = 0; y < fm.height; ++y)
                for (int x = 0; x < fm.width; ++x) ch[static_cast<std::size_t>(y) * fm.width + x] *= wx[static_cast<std::size_t>(x)] * wy[static_cast<std::size_t>(y)];
        fm.windowed = true;
    }
    return fm;
}

std::vector<double> gaussian_response(int width, int height, double sigma) {
    std::vector<double> g(static_cast<std::size_t>(width) * height);
    const int cx = width / 2;
    const int cy = height / 2;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double d2 = static_cast<double>((x - cx) * (x - cx) + (y - cy) * (y - cy));
            g[static_cast<std::size_t>(y) * width + x] = std::exp(-0.5 * d2 / (sigma * sigma));
        }
    return g;
}

FilterModel train_init(const FeatureMap& features, const std::vector<double>& desired, double lambda, double eta) {
    if (features.depth() < 1) throw ContractError("feature map has no channels");
    if (desired.size() != static_cast<std::size_t>(features.width) * features.height)
        throw ContractError("desired response size does not match the feature map");
    if (!(lambda > 0)) throw ContractError("lambda must be positive");

    FilterModel m;
    m.width = features.width;
    m.height = features.height;
    m.lambda = lambda;
    m.eta = eta;
    m.g_spectrum = fft2(desired, m.width, m.height);
    m.denominator.assign(m.g_spectrum.data.size(), 0.0);
    for (const auto& F : transform_channels(features)) {
        Spectrum A(m.width, m.height);
        for (std::size_t i = 0; i < A.data.size(); ++i) {
            A.data[i] = std::conj(m.g_spectrum.data[i]) * F.data[i];
            m.denominator[i] += std::norm(F.data[i]);
        }
        m.numerators.push_back(std::move(A));
    }
    return m;
}

FilterModel train_init(const FeatureMap& features, double lambda, double sigma_factor, double eta) {
    const double sigma = sigma_factor * std::sqrt(static_cast<double>(features.width) * features.height);
    return train_init(features, gaussian_response(features.width, features.height, sigma), lambda, eta);
}

std::vector<Spectrum> filter_spectra(const FilterModel& model) {
    std::vector<Spectrum> out;
    for (const auto& A : model.numerators) {
        Spectrum H(model.width, model.height);
        for (std::size_t i = 0; i < H.data.size(); ++i) H.data[i] = A.data[i] / (model.denominator[i] + model.lambda);
        out.push_back(std::move(H));
    }
    return out;
}

Response score(const FilterModel& model, const FeatureMap& features) {
    check_same_shape(model, features);
    Spectrum Y(model.width, model.height);
    const auto Z = transform_channels(features);
    for (std::size_t l = 0; l < Z.size(); ++l)
        for (std::size_t i = 0; i < Y.data.size(); ++i) Y.data[i] += std::conj(model.numerators[l].data[i]) * Z[l].data[i];
    for (std::size_t i = 0; i < Y.data.size(); ++i) Y.data[i] /= model.denominator[i] + model.lambda;

    const auto y = ifft2(Y);
    Response r{model.width, model.height, std::vector<double>(y.size()), 0.0};
    double max_re = 0.0;
    double max_im = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        r.values[i] = y[i].real();
        max_re = std::max(max_re, std::abs(y[i].real()));
        max_im = std::max(max_im, std::abs(y[i].imag()));
    }
    r.imag_ratio = max_re > 0.0 ? max_im / max_re : 0.0;
    return r;
}

FilterModel update(const FilterModel& model, const FeatureMap& features) {
    check_same_shape(model, features);
    FilterModel next = model;
    const double eta = model.eta;
    const auto F = transform_channels(features);
    std::vector<double> energy(model.denominator.size(), 0.0);
    for (std::size_t l = 0; l < F.size(); ++l) {
        auto& A = next.numerators[l];
        for (std::size_t i = 0; i < A.data.size(); ++i) {
            A.data[i] = (1.0 - eta) * A.data[i] + eta * (std::conj(model.g_spectrum.data[i]) * F[l].data[i]);
            energy[i] += std::norm(F[l].data[i]);
        }
    }
    for (std::size_t i = 0; i < energy.size(); ++i)
        next.denominator[i] = (1.0 - eta) * next.denominator[i] + eta * energy[i];
    return next;
}

PixelCoord argmax(const Response& response) {
    PixelCoord best{0, 0};
    double best_value = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < response.height; ++y)
        for (int x = 0; x < response.width; ++x) {
            const double v = response.values[static_cast<std::size_t>(y) * response.width + x];
            if (v > best_value) {
                best_value = v;
                best = {x, y};
            }
        }
    return best;
}

// ---------------------------------------------------------------------------
// Tracker

BoundingBox TrackerState::box() const {
    const double w = width();
    const double h = height();
    return {static_cast<int>(std::lround(center_x - w / 2.0)), static_cast<int>(std::lround(center_y - h / 2.0)),
            static_cast<int>(std::lround(w)), static_cast<int>(std::lround(h))};
}

FeatureMap translation_features(const TrackerState& st, const FloatImage& image) {
    const Sample s{st.center_x, st.center_y, st.params.padding * st.width(), st.params.padding * st.height(),
                   st.template_width, st.template_height};
    return extract_features(image, s, st.params.features, true);
}

FeatureMap scale_features(const TrackerState& st, const FloatImage& image) {
    const int count = st.params.scale_count;
    const auto window = hann(count);
    FeatureMap fm;
    fm.width = count;
    fm.height = 1;
    fm.windowed = true;
    for (int n = 0; n < count; ++n) {
        const double s = st.scale_factor * std::pow(st.params.scale_step, n - count / 2);
        const Sample sample{st.center_x, st.center_y, st.base_width * s, st.base_height * s,
                            st.scale_template_width, st.scale_template_height};
        const auto v = resample(image, sample);
        const auto ch = channels_from_intensity(v, sample.out_width, sample.out_height, st.params.features);
        if (fm.channels.empty()) fm.channels.assign(ch.size() * v.size(), std::vector<double>(static_cast<std::size_t>(count)));
        std::size_t k = 0;
        for (const auto& c : ch)
            for (double value : c) fm.channels[k++][static_cast<std::size_t>(n)] = value * window[static_cast<std::size_t>(n)];
    }
    return fm;
}

TrackerState init_tracker(const Frame& frame, const BoundingBox& target, const TrackerParams& params) {
    if (target.width < params.min_size || target.height < params.min_size)
        throw ContractError("initial target must be at least min_size on each side");
    if (params.scale_count < 1 || params.scale_count % 2 == 0) throw ContractError("scale_count must be odd");

    TrackerState st;
    st.params = params;
    st.frame_width = frame.width();
    st.frame_height = frame.height();
    st.base_width = target.width;
    st.base_height = target.height;
    st.center_x = target.x + target.width / 2.0;
    st.center_y = target.y + target.height / 2.0;

    const double pw = params.padding * st.base_width;
    const double ph = params.padding * st.base_height;
    const double z = std::min(1.0, std::sqrt(params.template_area / (pw * ph)));
    st.template_width = std::max(4, static_cast<int>(std::lround(pw * z)));
    st.template_height = std::max(4, static_cast<int>(std::lround(ph * z)));

    const double zs = std::min(1.0, std::sqrt(params.scale_template_area / (st.base_width * st.base_height)));
    st.scale_template_width = std::max(1, static_cast<int>(std::lround(st.base_width * zs)));
    st.scale_template_height = std::max(1, static_cast<int>(std::lround(st.base_height * zs)));

    const auto image = to_float_gray(frame);
    st.translation_model = train_init(translation_features(st, image), params.lambda, params.sigma_factor, params.eta);
    st.scale_model = train_init(scale_features(st, image), gaussian_response(params.scale_count, 1, params.scale_sigma),
                                params.lambda, params.eta);
    return st;
}

BoundingBox track(TrackerState& st, const Frame& frame) {
    if (frame.width() != st.frame_width || frame.height() != st.frame_height)
        throw ContractError("frame size changed during tracking");
    const auto image = to_float_gray(frame);

    // Translation first, at the previous scale.
    const auto t_resp = score(st.translation_model, translation_features(st, image));
    const auto peak = argmax(t_resp);
    const double cell_x = st.params.padding * st.width() / st.template_width;
    const double cell_y = st.params.padding * st.height() / st.template_height;
    st.center_x += (peak.x - st.template_width / 2) * cell_x;
    st.center_y += (peak.y - st.template_height / 2) * cell_y;
    st.center_x = std::clamp(st.center_x, 0.0, static_cast<double>(st.frame_width - 1));
    st.center_y = std::clamp(st.center_y, 0.0, static_cast<double>(st.frame_height - 1));

    // Then scale, around the new center.
    const auto s_resp = score(st.scale_model, scale_features(st, image));
    const auto s_peak = argmax(s_resp);
    st.scale_factor *= std::pow(st.params.scale_step, s_peak.x - st.params.scale_count / 2);
    const double max_scale = std::min(st.frame_width / st.base_width, st.frame_height / st.base_height);
    st.scale_factor = std::min(st.scale_factor, std::max(max_scale, 1e-9));
    if (st.width() < st.params.min_size || st.height() < st.params.min_size)
        throw TrackingLostError("target shrank below " + std::to_string(st.params.min_size) + " px");

    st.translation_model = update(st.translation_model, translation_features(st, image));
    st.scale_model = update(st.scale_model, scale_features(st, image));
    return st.box();
}

}  // namespace gpilot::dsst
