#include "fso/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "fso/error.hpp"

namespace fso {

struct Fft2d::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    ~Plans() {
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
    }
};

namespace {

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<Fft2d::Plans>>& plan_cache() {
    static std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<Fft2d::Plans>> cache;
    return cache;
}
}  // namespace

Fft2d::Fft2d(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    if (rows == 0 || cols == 0) throw DimensionError("zero-size FFT");
    std::lock_guard lock(plan_mutex());
    auto& slot = plan_cache()[{rows, cols}];
    if (!slot) {
        auto plans = std::make_unique<Plans>();
        auto* buf = fftw_alloc_complex(rows * cols);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        plans->fwd = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf,
                                      FFTW_FORWARD, flags);
        plans->bwd = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf,
                                      FFTW_BACKWARD, flags);
        fftw_free(buf);
        slot = std::move(plans);
    }
    plans_ = slot.get();
}

void Fft2d::forward(std::span<cplx> data) const {
    if (data.size() != rows_ * cols_) throw DimensionError("FFT buffer size mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plans_->fwd, p, p);
}

void Fft2d::inverse(std::span<cplx> data) const {
    if (data.size() != rows_ * cols_) throw DimensionError("FFT buffer size mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plans_->bwd, p, p);
    const double scale = 1.0 / static_cast<double>(rows_ * cols_);
    for (auto& v : data) v *= scale;
}

}  // namespace fso
