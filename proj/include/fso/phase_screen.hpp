#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace fso {

/// Real phase map (radians) on a rows x cols grid with square cells.
///
/// Screens are immutable values. A frozen-flow translation produces a new
/// screen that shares the untranslated origin and records the cumulative
/// displacement, so successive translations compose exactly.
class PhaseScreen {
public:
    PhaseScreen() = default;
    PhaseScreen(std::size_t rows, std::size_t cols, double spacing_m, double r0_m,
                std::uint64_t seed, std::vector<double> phase);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double spacing_m() const noexcept { return spacing_m_; }
    double r0_m() const noexcept { return r0_m_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::span<const double> phase() const noexcept { return phase_; }
    double at(std::size_t row, std::size_t col) const { return phase_[row * cols_ + col]; }

    /// Cumulative frozen-flow displacement from the origin screen, in cells.
    double shift_x_cells() const noexcept { return shift_x_; }
    double shift_y_cells() const noexcept { return shift_y_; }
    const std::shared_ptr<const std::vector<double>>& origin() const noexcept { return origin_; }

    /// Screen with the same origin translated by a new cumulative displacement.
    PhaseScreen with_displacement(std::vector<double> phase, double shift_x_cells,
                                  double shift_y_cells) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    double spacing_m_ = 0.0;
    double r0_m_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<double> phase_;
    std::shared_ptr<const std::vector<double>> origin_;
    double shift_x_ = 0.0;
    double shift_y_ = 0.0;
};

}  // namespace fso
