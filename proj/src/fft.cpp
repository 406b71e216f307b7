#include "gpilot/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "gpilot/errors.hpp"

namespace gpilot {

namespace {

// FFTW planning is not thread-safe while execution is, so plans are created
// once per (size, direction) under a lock and executed on caller buffers.
class PlanCache {
public:
    fftw_plan get(int width, int height, int sign) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_tuple(width, height, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::vector<Complex> in(static_cast<std::size_t>(width) * height);
        std::vector<Complex> out(in.size());
        fftw_plan plan = fftw_plan_dft_2d(height, width, reinterpret_cast<fftw_complex*>(in.data()),
                                          reinterpret_cast<fftw_complex*>(out.data()), sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (plan == nullptr) throw ResourceError("FFTW could not create a plan");
        plans_.emplace(key, plan);
        return plan;
    }

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

}  // namespace

Spectrum fft2(std::span<const double> values, int width, int height) {
    if (width <= 0 || height <= 0 || values.size() != static_cast<std::size_t>(width) * height)
        throw ContractError("fft2: size mismatch");
    std::vector<Complex> in(values.begin(), values.end());
    Spectrum out(width, height);
    fftw_execute_dft(plan_cache().get(width, height, FFTW_FORWARD), reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data.data()));
    return out;
}

std::vector<Complex> ifft2(const Spectrum& spectrum) {
    std::vector<Complex> in = spectrum.data;
    std::vector<Complex> out(in.size());
    fftw_execute_dft(plan_cache().get(spectrum.width, spectrum.height, FFTW_BACKWARD),
                     reinterpret_cast<fftw_complex*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
    const double norm = 1.0 / static_cast<double>(out.size());
    for (auto& v : out) v *= norm;
    return out;
}

}  // namespace gpilot
