#include "fso/phase_screen.hpp"

#include <utility>

#include "fso/error.hpp"

namespace fso {

PhaseScreen::PhaseScreen(std::size_t rows, std::size_t cols, double spacing_m, double r0_m,
                         std::uint64_t seed, std::vector<double> phase)
    : rows_(rows), cols_(cols), spacing_m_(spacing_m), r0_m_(r0_m), seed_(seed),
      phase_(std::move(phase)) {
    if (phase_.size() != rows * cols) throw DimensionError("phase screen size mismatch");
    if (!(spacing_m > 0.0)) throw ParameterError("phase screen spacing must be positive");
    origin_ = std::make_shared<const std::vector<double>>(phase_);
}

PhaseScreen PhaseScreen::with_displacement(std::vector<double> phase, double shift_x_cells,
                                           double shift_y_cells) const {
    if (phase.size() != rows_ * cols_) throw DimensionError("phase screen size mismatch");
    PhaseScreen out = *this;
    out.phase_ = std::move(phase);
    out.shift_x_ = shift_x_cells;
    out.shift_y_ = shift_y_cells;
    return out;
}

}  // namespace fso
