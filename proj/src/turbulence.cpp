#include "fso/turbulence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "fso/error.hpp"
#include "fso/fft.hpp"
#include "fso/log.hpp"
#include "fso/rng.hpp"

namespace fso {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEarthRadius = 6371.0e3;
constexpr double kGeoAltitude = 35786.0e3;

// Smallest 2^a 3^b 5^c >= n.
std::size_t smooth_size(std::size_t n) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t p2 = 1; p2 < 2 * n + 2; p2 *= 2)
        for (std::size_t p3 = p2; p3 < 2 * n + 2; p3 *= 3)
            for (std::size_t p5 = p3; p5 < 2 * n + 2; p5 *= 5)
                if (p5 >= n) best = std::min(best, p5);
    return best;
}

}  // namespace

void AtmosphereProfile::validate() const {
    if (layers.empty()) throw ParameterError("profile has no layers");
    double sum = 0.0;
    for (const auto& l : layers) {
        if (!(l.cn2_weight >= 0.0)) throw ParameterError("Cn2 weights must be >= 0");
        if (!(l.distance_to_next_m >= 0.0)) throw ParameterError("layer distances must be >= 0");
        sum += l.cn2_weight;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ParameterError("Cn2 weights must sum to 1");
    if (!(total_r0_m > 0.0)) throw ParameterError("r0 must be positive");
    if (!(inner_scale_m > 0.0)) throw ParameterError("inner scale must be positive");
    if (!(outer_scale_m > inner_scale_m)) throw ParameterError("outer scale must exceed inner scale");
    if (!(elevation_deg > 0.0 && elevation_deg <= 90.0))
        throw ParameterError("elevation must be in (0, 90] degrees");
    if (!std::isfinite(wind_speed_mps)) throw ParameterError("wind speed must be finite");
}

double AtmosphereProfile::layer_r0(std::size_t i) const {
    const double w = layers.at(i).cn2_weight;
    if (w <= 0.0 || std::isinf(total_r0_m)) return std::numeric_limits<double>::infinity();
    return total_r0_m * std::pow(w, -3.0 / 5.0);
}

double AtmosphereProfile::slant_distance(std::size_t i) const {
    double d = 0.0;
    for (std::size_t k = i; k < layers.size(); ++k) d += layers[k].distance_to_next_m;
    return d;
}

AtmosphereProfile make_layered_profile(std::vector<double> altitudes_m, std::vector<double> weights,
                                       double total_r0_m, double outer_scale_m,
                                       double inner_scale_m, double wind_speed_mps,
                                       double elevation_deg) {
    if (altitudes_m.size() != weights.size() || altitudes_m.empty())
        throw ParameterError("layer altitudes and weights must be non-empty and equally long");
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(wsum > 0.0)) throw ParameterError("Cn2 weights must have a positive sum");
    std::vector<std::size_t> order(altitudes_m.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return altitudes_m[a] > altitudes_m[b]; });
    const double sin_el = std::sin(elevation_deg * kPi / 180.0);
    AtmosphereProfile p;
    p.total_r0_m = total_r0_m;
    p.outer_scale_m = outer_scale_m;
    p.inner_scale_m = inner_scale_m;
    p.wind_speed_mps = wind_speed_mps;
    p.elevation_deg = elevation_deg;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const double alt = altitudes_m[order[k]];
        if (alt < 0.0) throw ParameterError("layer altitude must be >= 0");
        const double below = k + 1 < order.size() ? altitudes_m[order[k + 1]] : 0.0;
        p.layers.push_back({alt, weights[order[k]] / wsum, (alt - below) / sin_el});
    }
    p.validate();
    return p;
}

double scale_r0_to_wavelength(double r0_m, double reference_wavelength_m, double wavelength_m) {
    return r0_m * std::pow(wavelength_m / reference_wavelength_m, 6.0 / 5.0);
}

double geo_slant_range_m(double elevation_deg) {
    const double e = elevation_deg * kPi / 180.0;
    const double rs = kEarthRadius + kGeoAltitude;
    const double c = kEarthRadius * std::cos(e);
    return std::sqrt(rs * rs - c * c) - kEarthRadius * std::sin(e);
}

double von_karman_psd(double kappa, double r0_m, double outer_scale_m, double inner_scale_m) {
    if (!(kappa >= 0.0)) throw ParameterError("spatial frequency must be >= 0");
    if (!(r0_m > 0.0) || !(outer_scale_m > 0.0) || !(inner_scale_m > 0.0))
        throw ParameterError("PSD parameters must be positive");
    const double k0 = 2.0 * kPi / outer_scale_m;
    const double km = 5.92 / inner_scale_m;
    const double coeff = 0.023 * std::pow(2.0 * kPi, 5.0 / 3.0);
    return coeff * std::pow(r0_m, -5.0 / 3.0) * std::pow(kappa * kappa + k0 * k0, -11.0 / 6.0) *
           std::exp(-(kappa * kappa) / (km * km));
}

PhaseScreen synth_phase_screen(const ScreenGeometry& g, double r0_m, double outer_scale_m,
                               double inner_scale_m, std::uint64_t seed,
                               const ScreenOptions& options) {
    if (g.rows == 0 || g.cols == 0) throw DimensionError("zero-size phase screen");
    if (!(g.spacing_m > 0.0)) throw ParameterError("screen spacing must be positive");
    if (!(r0_m > 0.0)) throw ParameterError("r0 must be positive");
    if (options.subharmonic_levels < 0) throw ParameterError("subharmonic levels must be >= 0");
    if (options.explicit_rings < 1) throw ParameterError("explicit rings must be >= 1");
    if (r0_m / g.spacing_m < 4.0) {
        std::ostringstream msg;
        msg << "phase screen spacing " << g.spacing_m << " m gives fewer than 4 samples per r0 ("
            << r0_m << " m)";
        warn(msg.str());
    }
    const std::size_t rows = g.rows;
    const std::size_t cols = g.cols;
    const double dx = g.spacing_m;
    const double dkx = 2.0 * kPi / (static_cast<double>(cols) * dx);
    const double dky = 2.0 * kPi / (static_cast<double>(rows) * dx);
    const bool explicit_low = options.subharmonic_levels > 0;
    const long rings = options.explicit_rings;

    RandomStream rng(seed, "phase-screen");
    std::vector<cplx> spectrum(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const long ir = fft_index(r, rows);
        const double ky = static_cast<double>(ir) * dky;
        for (std::size_t c = 0; c < cols; ++c) {
            const long ic = fft_index(c, cols);
            if (ir == 0 && ic == 0) continue;
            if (explicit_low && std::abs(ir) <= rings && std::abs(ic) <= rings) continue;
            const double kx = static_cast<double>(ic) * dkx;
            const double amp = std::sqrt(
                von_karman_psd(std::hypot(kx, ky), r0_m, outer_scale_m, inner_scale_m) * dkx * dky);
            const double a = rng.normal();
            const double b = rng.normal();
            spectrum[r * cols + c] = amp * cplx(a, b);
        }
    }
    Fft2d(rows, cols).inverse(spectrum);
    const double scale = static_cast<double>(rows * cols);
    std::vector<double> phase(rows * cols);
    for (std::size_t i = 0; i < phase.size(); ++i) phase[i] = spectrum[i].real() * scale;
    spectrum.clear();
    spectrum.shrink_to_fit();

    if (explicit_low) {
        RandomStream low = rng.substream("low-order");
        std::vector<cplx> ex(cols);
        std::vector<cplx> ey(rows);
        for (int level = 0; level <= options.subharmonic_levels; ++level) {
            const double cx = dkx / std::pow(3.0, level);
            const double cy = dky / std::pow(3.0, level);
            const int span = level == 0 ? static_cast<int>(rings) : 1;
            for (int j = -span; j <= span; ++j) {
                for (int i = -span; i <= span; ++i) {
                    if (i == 0 && j == 0) continue;
                    const double kx = (i + low.uniform(-0.5, 0.5)) * cx;
                    const double ky = (j + low.uniform(-0.5, 0.5)) * cy;
                    const double amp = std::sqrt(
                        von_karman_psd(std::hypot(kx, ky), r0_m, outer_scale_m, inner_scale_m) *
                        cx * cy);
                    const double a = low.normal();
                    const double b = low.normal();
                    const cplx coeff = amp * cplx(a, b);
                    for (std::size_t c = 0; c < cols; ++c)
                        ex[c] = std::polar(1.0, kx * (static_cast<double>(c) -
                                                      static_cast<double>(cols / 2)) * dx);
                    for (std::size_t r = 0; r < rows; ++r)
                        ey[r] = coeff * std::polar(1.0, ky * (static_cast<double>(r) -
                                                              static_cast<double>(rows / 2)) * dx);
                    for (std::size_t r = 0; r < rows; ++r) {
                        const cplx yr = ey[r];
                        double* row = phase.data() + r * cols;
                        for (std::size_t c = 0; c < cols; ++c)
                            row[c] += yr.real() * ex[c].real() - yr.imag() * ex[c].imag();
                    }
                }
            }
        }
    }

    const double mean = std::accumulate(phase.begin(), phase.end(), 0.0) / static_cast<double>(phase.size());
    for (auto& v : phase) v -= mean;
    return PhaseScreen(rows, cols, dx, r0_m, seed, std::move(phase));
}

namespace {

std::vector<double> roll(const std::vector<double>& src, std::size_t rows, std::size_t cols,
                         long sx, long sy) {
    std::vector<double> out(src.size());
    const long R = static_cast<long>(rows);
    const long C = static_cast<long>(cols);
    for (long r = 0; r < R; ++r) {
        const long rs = ((r - sy) % R + R) % R;
        for (long c = 0; c < C; ++c) {
            const long cs = ((c - sx) % C + C) % C;
            out[static_cast<std::size_t>(r * C + c)] = src[static_cast<std::size_t>(rs * C + cs)];
        }
    }
    return out;
}

std::vector<double> fourier_shift(const std::vector<double>& src, std::size_t rows,
                                  std::size_t cols, double sx, double sy) {
    std::vector<cplx> buf(src.begin(), src.end());
    Fft2d fft(rows, cols);
    fft.forward(buf);
    std::vector<cplx> fx(cols), fy(rows);
    for (std::size_t c = 0; c < cols; ++c) {
        const long k = fft_index(c, cols);
        fx[c] = (cols % 2 == 0 && k == -static_cast<long>(cols / 2))
                    ? cplx(std::cos(kPi * sx), 0.0)
                    : std::polar(1.0, -2.0 * kPi * static_cast<double>(k) * sx / static_cast<double>(cols));
    }
    for (std::size_t r = 0; r < rows; ++r) {
        const long k = fft_index(r, rows);
        fy[r] = (rows % 2 == 0 && k == -static_cast<long>(rows / 2))
                    ? cplx(std::cos(kPi * sy), 0.0)
                    : std::polar(1.0, -2.0 * kPi * static_cast<double>(k) * sy / static_cast<double>(rows));
    }
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) buf[r * cols + c] *= fy[r] * fx[c];
    fft.inverse(buf);
    std::vector<double> out(src.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = buf[i].real();
    return out;
}

}  // namespace

PhaseScreen evolve_frozen_flow(const PhaseScreen& screen, WindVector wind, double dt_s) {
    if (!std::isfinite(dt_s) || !std::isfinite(wind.vx_mps) || !std::isfinite(wind.vy_mps))
        throw ParameterError("wind and time step must be finite");
    const double sx = screen.shift_x_cells() + wind.vx_mps * dt_s / screen.spacing_m();
    const double sy = screen.shift_y_cells() + wind.vy_mps * dt_s / screen.spacing_m();
    if (sx == screen.shift_x_cells() && sy == screen.shift_y_cells()) return screen;
    const auto& origin = *screen.origin();
    std::vector<double> phase;
    if (sx == std::floor(sx) && sy == std::floor(sy))
        phase = roll(origin, screen.rows(), screen.cols(), static_cast<long>(sx), static_cast<long>(sy));
    else
        phase = fourier_shift(origin, screen.rows(), screen.cols(), sx, sy);
    return screen.with_displacement(std::move(phase), sx, sy);
}

double structure_function(const PhaseScreen& screen, std::size_t lag) {
    const std::size_t rows = screen.rows();
    const std::size_t cols = screen.cols();
    if (lag == 0) return 0.0;
    if (lag >= rows || lag >= cols) throw ParameterError("lag exceeds screen size");
    auto p = screen.phase();
    double sx = 0.0, sy = 0.0;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c + lag < cols; ++c) {
            const double d = p[r * cols + c + lag] - p[r * cols + c];
            sx += d * d;
        }
    for (std::size_t r = 0; r + lag < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const double d = p[(r + lag) * cols + c] - p[r * cols + c];
            sy += d * d;
        }
    return 0.5 * (sx / static_cast<double>(rows * (cols - lag)) +
                  sy / static_cast<double>((rows - lag) * cols));
}

ComplexFieldGrid fraunhofer_field(const ComplexFieldGrid& tx, double range_m) {
    if (!(range_m > 0.0)) throw ParameterError("range must be positive");
    tx.require_finite();
    const auto& g = tx.geometry();
    const std::size_t n = g.n;
    const double lz = tx.wavelength_m() * range_m;
    const double dx = g.spacing_m();
    // Kernel K[o][i] = exp(-i 2 pi x_o xi_i / (lambda z)), identical along both axes.
    std::vector<cplx> kernel(n * n);
    for (std::size_t o = 0; o < n; ++o)
        for (std::size_t i = 0; i < n; ++i)
            kernel[o * n + i] = std::polar(1.0, -2.0 * kPi * g.coord(o) * g.coord(i) / lz);
    // Row pass over non-empty transmit rows, then column pass.
    std::vector<cplx> partial(n * n);
    std::vector<bool> active(n, false);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c)
            if (tx.at(r, c) != cplx{}) {
                active[r] = true;
                break;
            }
        if (!active[r]) continue;
        for (std::size_t o = 0; o < n; ++o) {
            cplx acc{};
            const cplx* k = kernel.data() + o * n;
            for (std::size_t c = 0; c < n; ++c) acc += k[c] * tx.at(r, c);
            partial[r * n + o] = acc;
        }
    }
    ComplexFieldGrid out(g, tx.wavelength_m());
    const cplx pre = cplx(0.0, -1.0) / lz * (dx * dx);
    for (std::size_t ro = 0; ro < n; ++ro) {
        const cplx* k = kernel.data() + ro * n;
        for (std::size_t co = 0; co < n; ++co) {
            cplx acc{};
            for (std::size_t r = 0; r < n; ++r)
                if (active[r]) acc += k[r] * partial[r * n + co];
            const double x = g.coord(co), y = g.coord(ro);
            out.at(ro, co) = pre * acc * std::polar(1.0, kPi * (x * x + y * y) / lz);
        }
    }
    return out;
}

ComplexFieldGrid truncated_gaussian(const GridGeometry& g, double wavelength_m, double waist_m,
                                    double aperture_diameter_m, double power_w) {
    if (!(waist_m > 0.0)) throw ParameterError("beam waist must be positive");
    if (!(power_w > 0.0)) throw ParameterError("transmit power must be positive");
    auto f = ComplexFieldGrid::sample(g, wavelength_m, [&](double x, double y) {
        return cplx(std::exp(-(x * x + y * y) / (waist_m * waist_m)), 0.0);
    });
    f = apply_aperture(f, aperture_diameter_m);
    const double p = total_power(f);
    return std::sqrt(power_w / p) * f;
}

std::uint64_t layer_seed(std::uint64_t seed, std::size_t layer) {
    return RandomStream(seed, "turbulence-layer", layer).next_u64();
}

TurbulentChannel::TurbulentChannel(AtmosphereProfile profile, const ComplexFieldGrid& tx,
                                   ChannelOptions options)
    : profile_(std::move(profile)), options_(options), top_(tx.geometry(), tx.wavelength_m()) {
    profile_.validate();
    if (!(options_.frame_rate_hz > 0.0)) throw ParameterError("frame rate must be positive");
    const auto& g = tx.geometry();
    const double range_to_top =
        geo_slant_range_m(profile_.elevation_deg) - profile_.slant_distance(0);
    top_ = fraunhofer_field(tx, range_to_top);

    const std::size_t n = g.n;
    const double shift = std::abs(profile_.wind_speed_mps) / options_.frame_rate_hz / g.spacing_m();
    const double travel = shift * static_cast<double>(options_.n_frames > 0 ? options_.n_frames - 1 : 0);
    const std::size_t needed = n + static_cast<std::size_t>(std::ceil(travel)) + 2;
    strip_cols_ = std::min(smooth_size(needed), options_.max_strip_factor * n);
    strip_cols_ = std::max(strip_cols_, n);

    for (std::size_t i = 0; i < profile_.layers.size(); ++i) {
        const double r0 = profile_.layer_r0(i);
        if (std::isinf(r0)) {
            strips_.emplace_back();
        } else {
            strips_.push_back(synth_phase_screen({n, strip_cols_, g.spacing_m()}, r0,
                                                 profile_.outer_scale_m, profile_.inner_scale_m,
                                                 layer_seed(options_.seed, i), options_.screens));
        }
        const double d = profile_.layers[i].distance_to_next_m;
        if (!fso::sampling_bound_satisfied(g, tx.wavelength_m(), d)) sampling_ok_ = false;
        gaps_.push_back(std::make_unique<Propagator>(g, tx.wavelength_m(), d));
    }
}

std::vector<double> TurbulentChannel::layer_window(std::size_t layer, std::size_t i) const {
    const auto& strip = strips_.at(layer);
    const std::size_t n = top_.n();
    std::vector<double> out(n * n, 0.0);
    if (strip.rows() == 0) return out;
    const double t = static_cast<double>(i) / options_.frame_rate_hz;
    const double s = profile_.wind_speed_mps * t / strip.spacing_m();
    const double fl = std::floor(s);
    const double frac = s - fl;
    const long L = static_cast<long>(strip_cols_);
    const long base = static_cast<long>(std::fmod(fl, static_cast<double>(L)));
    auto p = strip.phase();
    for (std::size_t c = 0; c < n; ++c) {
        // Pattern moves toward +x: the window samples the strip at x - s.
        const long p0 = ((static_cast<long>(c) - base - 1) % L + L) % L;
        const long p1 = (p0 + 1) % L;
        for (std::size_t r = 0; r < n; ++r) {
            const double a = p[r * strip_cols_ + static_cast<std::size_t>(p0)];
            const double b = p[r * strip_cols_ + static_cast<std::size_t>(p1)];
            out[r * n + c] = frac * a + (1.0 - frac) * b;
        }
    }
    return out;
}

ComplexFieldGrid TurbulentChannel::frame(std::size_t i) const {
    ComplexFieldGrid u = top_;
    auto s = u.samples();
    for (std::size_t k = 0; k < strips_.size(); ++k) {
        if (strips_[k].rows() != 0) {
            const auto phi = layer_window(k, i);
            for (std::size_t j = 0; j < s.size(); ++j) s[j] *= std::polar(1.0, phi[j]);
        }
        gaps_[k]->apply(s);
    }
    return apply_aperture(u, options_.rx_aperture_m);
}

std::vector<ComplexFieldGrid> build_time_series(const AtmosphereProfile& profile,
                                                const ComplexFieldGrid& tx, std::size_t n_frames,
                                                double frame_rate_hz, std::uint64_t seed,
                                                const ChannelOptions& base) {
    ChannelOptions opt = base;
    opt.frame_rate_hz = frame_rate_hz;
    opt.seed = seed;
    opt.n_frames = std::max(opt.n_frames, n_frames);
    TurbulentChannel channel(profile, tx, opt);
    std::vector<ComplexFieldGrid> frames;
    frames.reserve(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) frames.push_back(channel.frame(i));
    return frames;
}

}  // namespace fso
