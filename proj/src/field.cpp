#include "fso/field.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "fso/error.hpp"
#include "fso/log.hpp"

namespace fso {

void validate_geometry(const GridGeometry& g) {
    if (g.n == 0) throw DimensionError("zero-size grid");
    if (!std::has_single_bit(g.n) || g.n < 64)
        throw DimensionError("grid size must be a power of two >= 64, got " + std::to_string(g.n));
    if (!(g.extent_m > 0.0) || !std::isfinite(g.extent_m))
        throw ParameterError("grid extent must be positive");
}

ComplexFieldGrid::ComplexFieldGrid(GridGeometry geometry, double wavelength_m)
    : geometry_(geometry), wavelength_m_(wavelength_m) {
    validate_geometry(geometry_);
    if (!(wavelength_m > 0.0)) throw ParameterError("wavelength must be positive");
    samples_.assign(geometry_.n * geometry_.n, cplx{});
}

ComplexFieldGrid::ComplexFieldGrid(GridGeometry geometry, double wavelength_m,
                                   std::vector<cplx> samples)
    : geometry_(geometry), wavelength_m_(wavelength_m), samples_(std::move(samples)) {
    validate_geometry(geometry_);
    if (!(wavelength_m > 0.0)) throw ParameterError("wavelength must be positive");
    if (samples_.size() != geometry_.n * geometry_.n)
        throw DimensionError("sample count does not match grid");
}

ComplexFieldGrid ComplexFieldGrid::sample(GridGeometry geometry, double wavelength_m,
                                          const std::function<cplx(double, double)>& f) {
    ComplexFieldGrid out(geometry, wavelength_m);
    const std::size_t n = geometry.n;
    for (std::size_t r = 0; r < n; ++r) {
        const double y = geometry.coord(r);
        for (std::size_t c = 0; c < n; ++c) out.samples_[r * n + c] = f(geometry.coord(c), y);
    }
    return out;
}

void ComplexFieldGrid::require_finite() const {
    for (const auto& v : samples_)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw InvalidFieldError("non-finite sample");
}

ComplexFieldGrid operator*(cplx a, const ComplexFieldGrid& f) {
    ComplexFieldGrid out = f;
    for (auto& v : out.samples()) v *= a;
    return out;
}

ComplexFieldGrid operator+(const ComplexFieldGrid& a, const ComplexFieldGrid& b) {
    if (a.geometry() != b.geometry()) throw DimensionError("field geometries differ");
    ComplexFieldGrid out = a;
    auto dst = out.samples();
    auto src = b.samples();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    return out;
}

bool sampling_bound_satisfied(const GridGeometry& g, double wavelength_m, double distance_m) {
    const double dx = g.spacing_m();
    return dx * dx >= wavelength_m * distance_m / static_cast<double>(g.n);
}

Propagator::Propagator(const GridGeometry& g, double wavelength_m, double distance_m)
    : geometry_(g), wavelength_m_(wavelength_m), distance_m_(distance_m), fft_(g.n, g.n) {
    validate_geometry(g);
    if (!(distance_m >= 0.0) || !std::isfinite(distance_m))
        throw ParameterError("propagation distance must be finite and >= 0");
    const std::size_t n = g.n;
    const double df = 1.0 / g.extent_m;
    const double inv_lambda = 1.0 / wavelength_m;
    const double inv_lambda2 = inv_lambda * inv_lambda;
    transfer_.resize(n * n);
    for (std::size_t r = 0; r < n; ++r) {
        const double fy = static_cast<double>(fft_index(r, n)) * df;
        for (std::size_t c = 0; c < n; ++c) {
            const double fx = static_cast<double>(fft_index(c, n)) * df;
            const double f2 = fx * fx + fy * fy;
            if (f2 >= inv_lambda2) {
                transfer_[r * n + c] = 0.0;
                continue;
            }
            // 2 pi d (sqrt(1/l^2 - f^2) - 1/l), written without cancellation.
            const double phase =
                -2.0 * std::numbers::pi * distance_m * f2 / (inv_lambda + std::sqrt(inv_lambda2 - f2));
            transfer_[r * n + c] = std::polar(1.0, phase);
        }
    }
}

void Propagator::apply(std::span<cplx> samples) const {
    if (distance_m_ == 0.0) return;
    fft_.forward(samples);
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] *= transfer_[i];
    fft_.inverse(samples);
}

namespace {

void apply_edge_absorber(ComplexFieldGrid& field, double fraction) {
    const std::size_t n = field.n();
    const double width = std::max(1.0, fraction * static_cast<double>(n));
    std::vector<double> taper(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::min(static_cast<double>(i), static_cast<double>(n - 1 - i));
        if (d < width) taper[i] = 0.5 - 0.5 * std::cos(std::numbers::pi * d / width);
    }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) field.at(r, c) *= taper[r] * taper[c];
}

}  // namespace

ComplexFieldGrid angular_spectrum_propagate(const ComplexFieldGrid& field, double distance_m,
                                            const PropagationOptions& options) {
    field.require_finite();
    if (!(distance_m >= 0.0)) throw ParameterError("propagation distance must be >= 0");
    if (distance_m == 0.0) return field;
    if (options.check_sampling &&
        !sampling_bound_satisfied(field.geometry(), field.wavelength_m(), distance_m)) {
        std::ostringstream msg;
        msg << "angular spectrum propagation over " << distance_m
            << " m violates dx^2 >= lambda d / N (dx=" << field.spacing_m() << " m, N=" << field.n()
            << ")";
        warn(msg.str());
    }
    ComplexFieldGrid out = field;
    if (options.edge_absorber) apply_edge_absorber(out, options.absorber_fraction);
    Propagator(field.geometry(), field.wavelength_m(), distance_m).apply(out.samples());
    return out;
}

ComplexFieldGrid apply_phase_screen(const ComplexFieldGrid& field, const PhaseScreen& screen) {
    if (screen.rows() != field.n() || screen.cols() != field.n())
        throw DimensionError("phase screen is not the field grid size");
    if (std::abs(screen.spacing_m() - field.spacing_m()) > 1e-12 * field.spacing_m())
        throw DimensionError("phase screen spacing differs from field spacing");
    ComplexFieldGrid out = field;
    auto s = out.samples();
    auto phi = screen.phase();
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= std::polar(1.0, phi[i]);
    return out;
}

ComplexFieldGrid apply_aperture(const ComplexFieldGrid& field, double diameter_m) {
    if (!(diameter_m > 0.0)) throw ParameterError("aperture diameter must be positive");
    if (diameter_m > field.extent_m() * (1.0 + 1e-12))
        throw ParameterError("aperture diameter exceeds grid extent");
    const double r2max = 0.25 * diameter_m * diameter_m;
    ComplexFieldGrid out = field;
    const auto& g = field.geometry();
    for (std::size_t r = 0; r < g.n; ++r) {
        const double y = g.coord(r);
        for (std::size_t c = 0; c < g.n; ++c) {
            const double x = g.coord(c);
            if (x * x + y * y > r2max) out.at(r, c) = 0.0;
        }
    }
    return out;
}

double total_power(const ComplexFieldGrid& field) {
    double sum = 0.0;
    for (const auto& v : field.samples()) sum += std::norm(v);
    const double dx = field.spacing_m();
    return sum * dx * dx;
}

cplx inner_product(const ComplexFieldGrid& a, const ComplexFieldGrid& b) {
    if (a.geometry() != b.geometry()) throw DimensionError("field geometries differ");
    auto sa = a.samples();
    auto sb = b.samples();
    cplx sum{};
    for (std::size_t i = 0; i < sa.size(); ++i) sum += std::conj(sa[i]) * sb[i];
    const double dx = a.spacing_m();
    return sum * (dx * dx);
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
    static_assert(sizeof(T) == 8);
    std::uint64_t bits;
    std::memcpy(&bits, &value, 8);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

template <typename T>
T get_le(std::istream& in) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw InvalidFieldError("truncated field block");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    T value;
    std::memcpy(&value, &bits, 8);
    return value;
}

}  // namespace

void write_field_binary(const ComplexFieldGrid& field, std::ostream& out) {
    put_le<std::int64_t>(out, static_cast<std::int64_t>(field.n()));
    put_le<double>(out, field.extent_m());
    put_le<double>(out, field.wavelength_m());
    for (const auto& v : field.samples()) {
        put_le<double>(out, v.real());
        put_le<double>(out, v.imag());
    }
}

ComplexFieldGrid read_field_binary(std::istream& in) {
    const auto n = get_le<std::int64_t>(in);
    if (n <= 0 || n > (1 << 16)) throw InvalidFieldError("bad grid size in field block");
    GridGeometry g{static_cast<std::size_t>(n), get_le<double>(in)};
    const double lambda = get_le<double>(in);
    std::vector<cplx> samples(g.n * g.n);
    for (auto& v : samples) {
        const double re = get_le<double>(in);
        const double im = get_le<double>(in);
        v = {re, im};
    }
    return ComplexFieldGrid(g, lambda, std::move(samples));
}

void write_field_csv(const ComplexFieldGrid& field, std::ostream& out) {
    out << "row,col,re,im\n";
    char buf[96];
    for (std::size_t r = 0; r < field.n(); ++r)
        for (std::size_t c = 0; c < field.n(); ++c) {
            const auto v = field.at(r, c);
            std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g\n", r, c, v.real(), v.imag());
            out << buf;
        }
}

}  // namespace fso
