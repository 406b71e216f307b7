#pragma once

#include <complex>
#include <span>
#include <vector>

namespace gpilot {

using Complex = std::complex<double>;

/// Row-major width x height grid of complex values.
struct Spectrum {
    int width = 0;
    int height = 0;
    std::vector<Complex> data;

    Spectrum() = default;
    Spectrum(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h) {}
};

/// Unnormalized forward 2-D DFT of a real grid (a 1-row grid gives the 1-D DFT).
Spectrum fft2(std::span<const double> values, int width, int height);

/// Inverse 2-D DFT including the 1/(width*height) factor.
std::vector<Complex> ifft2(const Spectrum& spectrum);

}  // namespace gpilot
