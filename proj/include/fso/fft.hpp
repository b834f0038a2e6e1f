#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace fso {

using cplx = std::complex<double>;

/// In-place 2-D complex DFT on row-major data, backed by FFTW.
///
/// Plans are created with FFTW_ESTIMATE so the chosen algorithm (and therefore
/// every output bit) does not depend on timing measurements. Plans are cached
/// per shape and shared; the cache is guarded for concurrent callers.
class Fft2d {
public:
    Fft2d(std::size_t rows, std::size_t cols);

    /// X[k] = sum_n x[n] exp(-2 pi i k n / N).
    void forward(std::span<cplx> data) const;
    /// Inverse transform including the 1/(rows*cols) factor.
    void inverse(std::span<cplx> data) const;

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    struct Plans;

private:
    std::size_t rows_;
    std::size_t cols_;
    const Plans* plans_;
};

/// Signed DFT frequency index of bin k for a transform of length n.
inline long fft_index(std::size_t k, std::size_t n) {
    return k < (n + 1) / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

}  // namespace fso
