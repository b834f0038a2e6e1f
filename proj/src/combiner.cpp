#include "fso/combiner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "fso/error.hpp"

namespace fso {

namespace {
constexpr double kPi = std::numbers::pi;
}

double to_db(double ratio) { return 10.0 * std::log10(ratio); }

CombinerTopology CombinerTopology::balanced_tree(std::size_t n_inputs, double pic_insertion_loss_db,
                                                 double demux_insertion_loss_db, bool variable_ratio) {
    if (n_inputs == 0) throw ParameterError("combiner needs at least one input");
    if (!(pic_insertion_loss_db >= 0.0) || !(demux_insertion_loss_db >= 0.0))
        throw ParameterError("insertion losses must be >= 0 dB");
    CombinerTopology t;
    t.n_inputs_ = n_inputs;
    t.pic_loss_db_ = pic_insertion_loss_db;
    t.demux_loss_db_ = demux_insertion_loss_db;
    t.variable_ratio_ = variable_ratio;
    // Returns (reference, depth).
    std::function<std::pair<int, std::size_t>(std::size_t, std::size_t)> build =
        [&](std::size_t lo, std::size_t hi) -> std::pair<int, std::size_t> {
        if (hi - lo == 1) return {-1 - static_cast<int>(lo), 0};
        const std::size_t mid = lo + (hi - lo + 1) / 2;
        const auto l = build(lo, mid);
        const auto r = build(mid, hi);
        t.elements_.push_back({l.first, r.first});
        return {static_cast<int>(t.elements_.size()) - 1, std::max(l.second, r.second) + 1};
    };
    t.depth_ = build(0, n_inputs).second;
    return t;
}

double CombinerTopology::loss_factor() const noexcept {
    return std::pow(10.0, -total_loss_db() / 10.0);
}

CombinerTopology CombinerTopology::lossless() const {
    CombinerTopology t = *this;
    t.pic_loss_db_ = 0.0;
    t.demux_loss_db_ = 0.0;
    return t;
}

CombinerState state_from_actuators(const CombinerTopology& topology, std::span<const double> x) {
    if (x.size() != topology.n_actuators()) throw DimensionError("actuator vector size mismatch");
    const std::size_t ne = topology.n_elements();
    CombinerState s;
    s.phase_commands.resize(ne);
    s.split_ratios.resize(ne);
    if (topology.variable_ratio()) s.common_phases.assign(ne, 0.0);
    for (std::size_t e = 0; e < ne; ++e) {
        if (topology.variable_ratio()) {
            const double phi = 0.5 * (x[2 * e + 1] - 0.5 * kPi);
            const double c = std::cos(phi);
            const double sn = std::sin(phi);
            s.split_ratios[e] = c * c;
            // The e^{i phi} factor keeps the element 2 pi periodic in psi.
            const double sign_c = c < 0.0 ? kPi : 0.0;
            s.common_phases[e] = phi + sign_c;
            s.phase_commands[e] = x[2 * e] + (sn < 0.0 ? kPi : 0.0) - sign_c;
        } else {
            s.phase_commands[e] = x[e];
            s.split_ratios[e] = 0.5;
        }
    }
    return s;
}

std::vector<double> actuators_from_state(const CombinerTopology& topology, const CombinerState& s) {
    const std::size_t ne = topology.n_elements();
    if (s.phase_commands.size() != ne || s.split_ratios.size() != ne ||
        (!s.common_phases.empty() && s.common_phases.size() != ne))
        throw DimensionError("state size does not match topology");
    std::vector<double> x(topology.n_actuators());
    if (!topology.variable_ratio()) {
        for (std::size_t e = 0; e < ne; ++e) x[e] = s.phase_commands[e];
        return x;
    }
    // With psi in [pi/2, 3 pi/2] an element adds the common phase phi. The
    // extra output phase of every element relative to s is carried up the
    // tree and cancelled in the parent's phase command.
    std::vector<double> extra(ne, 0.0);
    auto extra_of = [&](int ref) { return ref >= 0 ? extra[static_cast<std::size_t>(ref)] : 0.0; };
    const auto& els = topology.elements();
    for (std::size_t e = 0; e < ne; ++e) {
        const double rho = std::clamp(s.split_ratios[e], 0.0, 1.0);
        const double phi = std::acos(std::sqrt(rho));
        const double dl = extra_of(els[e].left);
        const double dr = extra_of(els[e].right);
        const double chi = s.common_phases.empty() ? 0.0 : s.common_phases[e];
        x[2 * e] = s.phase_commands[e] - (dr - dl);
        x[2 * e + 1] = 0.5 * kPi + 2.0 * phi;
        extra[e] = dl + phi - chi;
    }
    return x;
}

CombineResult combine(std::span<const cplx> inputs, const CombinerTopology& topology,
                      const CombinerState& state) {
    if (inputs.size() != topology.n_inputs()) throw DimensionError("input count does not match topology");
    const std::size_t ne = topology.n_elements();
    if (state.phase_commands.size() != ne || state.split_ratios.size() != ne ||
        (!state.common_phases.empty() && state.common_phases.size() != ne))
        throw DimensionError("state size does not match topology");
    for (const auto& v : inputs)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw InvalidFieldError("non-finite combiner input");
    CombineResult res;
    res.monitor_powers.resize(ne);
    if (ne == 0) {
        res.output = inputs[0] * std::sqrt(topology.loss_factor());
        return res;
    }
    std::vector<cplx> out(ne);
    auto value = [&](int ref) { return ref >= 0 ? out[static_cast<std::size_t>(ref)] : inputs[static_cast<std::size_t>(-1 - ref)]; };
    const auto& els = topology.elements();
    for (std::size_t e = 0; e < ne; ++e) {
        const double rho = state.split_ratios[e];
        if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterError("split ratio outside [0, 1]");
        const double th = state.phase_commands[e];
        if (!std::isfinite(th)) throw ParameterError("non-finite phase command");
        out[e] = std::sqrt(rho) * value(els[e].left) +
                 std::sqrt(1.0 - rho) * value(els[e].right) * std::polar(1.0, th);
        if (!state.common_phases.empty()) out[e] *= std::polar(1.0, state.common_phases[e]);
        res.monitor_powers[e] = std::norm(out[e]);
    }
    res.output = out.back() * std::sqrt(topology.loss_factor());
    return res;
}

CombinerState optimal_state(std::span<const cplx> inputs, const CombinerTopology& topology) {
    if (inputs.size() != topology.n_inputs()) throw DimensionError("input count does not match topology");
    const std::size_t ne = topology.n_elements();
    CombinerState s;
    s.phase_commands.resize(ne);
    s.split_ratios.resize(ne);
    std::vector<cplx> out(ne);
    auto value = [&](int ref) { return ref >= 0 ? out[static_cast<std::size_t>(ref)] : inputs[static_cast<std::size_t>(-1 - ref)]; };
    const auto& els = topology.elements();
    for (std::size_t e = 0; e < ne; ++e) {
        const cplx a = value(els[e].left);
        const cplx b = value(els[e].right);
        const double pa = std::norm(a), pb = std::norm(b);
        double rho = 0.5;
        if (topology.variable_ratio()) rho = (pa + pb) > 0.0 ? pa / (pa + pb) : 0.5;
        double th = (pa > 0.0 && pb > 0.0) ? std::arg(a) - std::arg(b) : 0.0;
        th = std::fmod(th, 2.0 * kPi);
        if (th < 0.0) th += 2.0 * kPi;
        s.split_ratios[e] = rho;
        s.phase_commands[e] = th;
        out[e] = std::sqrt(rho) * a + std::sqrt(1.0 - rho) * b * std::polar(1.0, th);
    }
    return s;
}

double ideal_combined_power(const ModeCoefficients& coeffs, std::size_t n_modes) {
    return coeffs.captured_power(n_modes);
}

std::vector<double> mm_coupling_efficiency_series(const std::vector<ModeCoefficients>& series,
                                                  std::size_t n_modes, bool lossless,
                                                  const CombinerTopology& topology) {
    std::vector<double> out;
    out.reserve(series.size());
    const double loss = lossless ? 1.0 : topology.loss_factor();
    for (const auto& c : series) {
        if (!(c.total_power > 0.0)) throw UndefinedEfficiencyError("frame with zero aperture power");
        out.push_back(ideal_combined_power(c, n_modes) / c.total_power * loss);
    }
    return out;
}

EfficiencySummary summarize_efficiency(std::span<const double> efficiency) {
    if (efficiency.empty()) throw ParameterError("empty efficiency trace");
    EfficiencySummary s;
    double sum = 0.0, sum_db = 0.0, mx = 0.0, mn = INFINITY;
    for (double v : efficiency) {
        sum += v;
        sum_db += to_db(v);
        mx = std::max(mx, v);
        mn = std::min(mn, v);
    }
    s.mean = sum / static_cast<double>(efficiency.size());
    s.mean_fraction_db = to_db(s.mean);
    s.mean_db = sum_db / static_cast<double>(efficiency.size());
    s.max_db = to_db(mx);
    s.min_db = to_db(mn);
    return s;
}

}  // namespace fso
