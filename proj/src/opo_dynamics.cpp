#include "opo/opo_dynamics.hpp"

#include "opo/errors.hpp"
#include "opo/fft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

namespace opo::dynamics {

using std::numbers::pi;

namespace {

constexpr double kPlanck = 6.62607015e-34;
constexpr double kLightSpeed = 299792458.0;

std::size_t index(JointMode m)
{
    return static_cast<std::size_t>(m);
}

} // namespace

std::string_view to_string(JointMode m)
{
    switch (m) {
    case JointMode::AmplitudeDifference:
        return "amplitude_difference";
    case JointMode::PhaseSum:
        return "phase_sum";
    case JointMode::AmplitudeSum:
        return "amplitude_sum";
    case JointMode::PhaseDifference:
        return "phase_difference";
    }
    return "unknown";
}

JointMode parse_mode(std::string_view name)
{
    for (auto m : kAllModes) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw std::invalid_argument("unknown joint mode '" + std::string(name) + "'");
}

double TechnicalNoise::psd(double f_hz) const
{
    const double f = std::abs(f_hz);
    if (level_at_corner == 0.0 || f > corner_hz) {
        return 0.0;
    }
    if (f == 0.0) {
        return slope > 0.0 ? std::numeric_limits<double>::infinity() : level_at_corner;
    }
    return level_at_corner * std::pow(corner_hz / f, slope);
}

void TechnicalNoise::validate() const
{
    if (!(corner_hz > 0.0) || !(level_at_corner >= 0.0) || !(slope >= 0.0)) {
        throw DomainError("pump technical noise needs corner_hz > 0, level_at_corner >= 0, slope >= 0");
    }
}

double OpoParams::tech_coupling(JointMode m) const
{
    switch (m) {
    case JointMode::AmplitudeSum:
    case JointMode::PhaseSum:
        return 1.0;
    case JointMode::AmplitudeDifference:
        return pump_imbalance * pump_imbalance;
    case JointMode::PhaseDifference:
        return 0.0;
    }
    return 0.0;
}

void OpoParams::validate() const
{
    if (!(sigma > 1.0)) {
        throw BelowThreshold("sigma must exceed 1 for above-threshold operation, got " + std::to_string(sigma));
    }
    if (!(gamma_c > 0.0) || !std::isfinite(gamma_c)) {
        throw DomainError("gamma_c must be positive");
    }
    if (!(eta_esc > 0.0 && eta_esc <= 1.0)) {
        throw DomainError("eta_esc must lie in (0, 1]");
    }
    if (!(d_quantum >= 0.0) || !(tech_drift_span_hz >= 0.0)) {
        throw DomainError("d_quantum and tech_drift_span_hz must be >= 0");
    }
    if (!(drift_correlation_s > 0.0)) {
        throw DomainError("drift_correlation_s must be positive");
    }
    if (!(reference_sigma > 1.0) || !(reference_power_w > 0.0) || !(wavelength_m > 0.0)) {
        throw DomainError("mean-field calibration needs reference_sigma > 1 and positive power/wavelength");
    }
    pump_noise.validate();
    for (auto m : kAllModes) {
        const auto& mp = mode(m);
        if (!(mp.relaxation_rate > 0.0) || !(mp.noise_strength > 0.0)) {
            throw DomainError(std::string("mode ") + std::string(to_string(m)) +
                              " needs positive relaxation_rate and noise_strength");
        }
    }
}

OpoParams OpoParams::uncalibrated_defaults()
{
    OpoParams p;
    p.gamma_c = 2.0 * pi * 4.0e6;
    p.eta_esc = 0.9;
    p.sigma = std::sqrt(1.05);
    p.d_quantum = 0.02;
    p.tech_drift_span_hz = 150e3;
    p.drift_correlation_s = 1.0;
    p.pump_noise = {1.5e6, 0.0, 2.0};
    for (auto& m : p.modes) {
        m = {p.gamma_c, p.gamma_c};
    }
    return p;
}

ModeParams mode_for_depth(double depth, double relaxation_rate, double gamma_c)
{
    if (!(depth <= 1.0) || !std::isfinite(depth)) {
        throw DomainError("squeezing depth must be finite and <= 1, got " + std::to_string(depth));
    }
    if (!(relaxation_rate > 0.0) || !(gamma_c > 0.0)) {
        throw DomainError("mode_for_depth needs positive rates");
    }
    const double y = relaxation_rate * (1.0 + std::sqrt(1.0 - depth)) / 2.0;
    return {relaxation_rate, y * y / gamma_c};
}

double mode_depth(const OpoParams& p, JointMode m)
{
    const auto& mp = p.mode(m);
    const double gq = p.gamma_c * mp.noise_strength;
    const double r = mp.relaxation_rate;
    return 4.0 * (r * std::sqrt(gq) - gq) / (r * r);
}

double depth_for_target(double s_out, double omega, double relaxation_rate, double eta_esc)
{
    const double x = omega / relaxation_rate;
    return (1.0 - s_out) * (1.0 + x * x) / eta_esc;
}

double photon_energy(double wavelength_m)
{
    return kPlanck * kLightSpeed / wavelength_m;
}

MeanField steady_state(const OpoParams& p)
{
    if (!(p.sigma > 1.0)) {
        throw BelowThreshold("below threshold: sigma = " + std::to_string(p.sigma) + " <= 1");
    }
    const double e = photon_energy(p.wavelength_m);
    const double scale = p.reference_power_w / (e * (p.reference_sigma - 1.0));
    MeanField mf;
    mf.photon_flux = scale * (p.sigma - 1.0);
    mf.alpha = std::sqrt(mf.photon_flux);
    mf.power_w = mf.photon_flux * e;
    return mf;
}

double output_psd(const OpoParams& p, JointMode m, double omega)
{
    const auto& mp = p.mode(m);
    const double r = mp.relaxation_rate;
    const double gq = p.gamma_c * mp.noise_strength;
    const double cavity = 4.0 * p.eta_esc * (gq - std::sqrt(gq) * r) / (r * r + omega * omega);
    const double coupling = p.tech_coupling(m);
    const double tech = coupling > 0.0 ? coupling * p.pump_noise.psd(omega / (2.0 * pi)) : 0.0;
    return 1.0 + cavity + tech;
}

spectral::NoiseSpectrum analytic_spectrum(JointMode m, const OpoParams& p, std::span<const double> omega)
{
    if (index(m) >= kModeCount) {
        throw std::invalid_argument("unknown joint mode id");
    }
    spectral::NoiseSpectrum s;
    s.freq_hz.reserve(omega.size());
    s.psd.reserve(omega.size());
    for (double w : omega) {
        if (!(w > 0.0)) {
            throw DomainError("analytic_spectrum needs a positive frequency grid");
        }
        s.freq_hz.push_back(w / (2.0 * pi));
        s.psd.push_back(output_psd(p, m, w));
    }
    return s;
}

double phase_diffusion_variance(double d_quantum, double t)
{
    if (t < 0.0) {
        throw DomainError("phase_diffusion_variance: negative time");
    }
    return 2.0 * d_quantum * t;
}

TrajectoryNoise::TrajectoryNoise(std::uint64_t seed, std::uint64_t trajectory)
    : input_(seed, trajectory, Channel::CavityInput), loss_(seed, trajectory, Channel::LossPort),
      phase_(seed, trajectory, Channel::PhaseDiffusion), drift_(seed, trajectory, Channel::FrequencyDrift),
      pump_(seed, trajectory, Channel::PumpNoise), init_(seed, trajectory, Channel::InitialState)
{
}

NoiseDraws TrajectoryNoise::draw(Scheme scheme)
{
    NoiseDraws d;
    for (std::size_t k = 0; k < kModeCount; ++k) {
        d.input[k] = input_.normal();
        d.loss[k] = loss_.normal();
        if (scheme == Scheme::ExactOu) {
            d.input_orth[k] = input_.normal();
        }
    }
    d.phase = phase_.normal();
    d.drift = drift_.normal();
    return d;
}

TwoModeFluctuationState stationary_state(const OpoParams& p, NoiseStream& rng)
{
    TwoModeFluctuationState s;
    for (auto m : kAllModes) {
        const auto& mp = p.mode(m);
        s[m] = std::sqrt(mp.noise_strength / mp.relaxation_rate) * rng.normal();
    }
    s.drift = 2.0 * pi * p.tech_drift_span_hz * rng.normal();
    return s;
}

TwoModeFluctuationState step_phase(const TwoModeFluctuationState& s, const OpoParams& p, double dt,
                                   double phase_draw, double drift_draw, double actuation)
{
    TwoModeFluctuationState n = s;
    n.phi_diff = s.phi_diff + (s.drift + actuation) * dt + std::sqrt(2.0 * p.d_quantum * dt) * phase_draw;
    const double b = std::exp(-dt / p.drift_correlation_s);
    n.drift = b * s.drift + 2.0 * pi * p.tech_drift_span_hz * std::sqrt(1.0 - b * b) * drift_draw;
    n.t = s.t + dt;
    return n;
}

TwoModeFluctuationState step(const TwoModeFluctuationState& s, const OpoParams& p, double dt,
                             const NoiseDraws& draws, double actuation, Scheme scheme)
{
    if (!(dt > 0.0) || dt > p.max_dt() * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "step size " << dt << " s outside (0, " << p.max_dt() << "] s (0.05/gamma_c)";
        throw StepSizeError(msg.str());
    }
    TwoModeFluctuationState n = step_phase(s, p, dt, draws.phase, draws.drift, actuation);
    const double port_in = std::sqrt(p.eta_esc);
    const double port_loss = std::sqrt(1.0 - p.eta_esc);
    for (std::size_t k = 0; k < kModeCount; ++k) {
        const auto& mp = p.modes[k];
        const double r = mp.relaxation_rate;
        const double g = std::sqrt(2.0 * mp.noise_strength);
        if (scheme == Scheme::EulerMaruyama) {
            const double sdt = std::sqrt(dt);
            n.quad[k] = s.quad[k] - r * s.quad[k] * dt +
                        g * sdt * (port_in * draws.input[k] + port_loss * draws.loss[k]);
        } else {
            // exact OU transition; the input-port integral is drawn jointly with dW_in
            const double a = std::exp(-r * dt);
            const double cov = (1.0 - a) / r;
            const double var = (1.0 - a * a) / (2.0 * r);
            const double in = cov / std::sqrt(dt) * draws.input[k] +
                              std::sqrt(std::max(0.0, var - cov * cov / dt)) * draws.input_orth[k];
            const double loss = std::sqrt(var) * draws.loss[k];
            n.quad[k] = a * s.quad[k] + g * (port_in * in + port_loss * loss);
        }
    }
    n[JointMode::AmplitudeDifference] += p.backaction * actuation * dt;
    return n;
}

std::array<double, kModeCount> output_sample(const TwoModeFluctuationState& before,
                                             const TwoModeFluctuationState& after,
                                             const NoiseDraws& draws, const OpoParams& p, double dt)
{
    const double c = std::sqrt(2.0 * p.gamma_c * p.eta_esc * dt);
    std::array<double, kModeCount> out{};
    for (std::size_t k = 0; k < kModeCount; ++k) {
        out[k] = c * 0.5 * (before.quad[k] + after.quad[k]) - draws.input[k];
    }
    return out;
}

OutputTrace output_field(const IntracavityRecord& record, const OpoParams& p)
{
    OutputTrace out;
    out.dt = record.dt;
    out.mean = steady_state(p);
    out.beat_hz = p.frequency_difference_hz;
    const std::size_t n = record.draws.size();
    if (record.states.size() != n + 1) {
        throw ShapeMismatch("intracavity record needs one more state than draws");
    }
    for (auto& q : out.quad) {
        q.resize(n);
    }
    out.phi_diff.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto o = output_sample(record.states[i], record.states[i + 1], record.draws[i], p, record.dt);
        for (std::size_t k = 0; k < kModeCount; ++k) {
            out.quad[k][i] = o[k];
        }
        out.phi_diff[i] = record.states[i].phi_diff;
    }
    return out;
}

void add_pump_noise(OutputTrace& trace, const OpoParams& p, NoiseStream& rng)
{
    const std::size_t n = trace.size();
    if (n < 2 || p.pump_noise.level_at_corner == 0.0) {
        return;
    }
    std::vector<double> white(n);
    for (auto& x : white) {
        x = rng.normal();
    }
    auto spec = fft::forward_real(white);
    const double df = 1.0 / (static_cast<double>(n) * trace.dt);
    spec[0] = 0.0;
    for (std::size_t k = 1; k < spec.size(); ++k) {
        spec[k] *= std::sqrt(p.pump_noise.psd(static_cast<double>(k) * df));
    }
    auto shaped = fft::inverse_real(spec, n);
    for (auto& x : shaped) {
        x /= static_cast<double>(n);
    }
    for (auto m : kAllModes) {
        const double c = std::sqrt(p.tech_coupling(m));
        if (c == 0.0) {
            continue;
        }
        auto& q = trace[m];
        for (std::size_t i = 0; i < n; ++i) {
            q[i] += c * shaped[i];
        }
    }
}

namespace {

double resolve_dt(const OpoParams& p, const SimulationOptions& opts)
{
    return opts.dt > 0.0 ? opts.dt : p.default_dt();
}

} // namespace

OutputTrace simulate_output(const OpoParams& p, const SimulationOptions& opts, const Controller& controller)
{
    p.validate();
    const double dt = resolve_dt(p, opts);
    TrajectoryNoise noise(opts.seed, opts.trajectory);

    OutputTrace out;
    out.dt = dt;
    out.mean = steady_state(p);
    out.beat_hz = p.frequency_difference_hz;
    for (auto& q : out.quad) {
        q.resize(opts.samples);
    }
    if (opts.record_phase) {
        out.phi_diff.resize(opts.samples);
    }

    auto state = stationary_state(p, noise.init());
    for (std::size_t i = 0; i < opts.samples; ++i) {
        const auto draws = noise.draw(opts.scheme);
        const double act = controller ? controller(state, dt) : 0.0;
        const auto next = step(state, p, dt, draws, act, opts.scheme);
        const auto o = output_sample(state, next, draws, p, dt);
        for (std::size_t k = 0; k < kModeCount; ++k) {
            out.quad[k][i] = o[k];
        }
        if (opts.record_phase) {
            out.phi_diff[i] = state.phi_diff;
        }
        state = next;
    }
    if (opts.technical_noise) {
        add_pump_noise(out, p, noise.pump());
    }
    return out;
}

IntracavityRecord simulate_intracavity(const OpoParams& p, const SimulationOptions& opts)
{
    p.validate();
    const double dt = resolve_dt(p, opts);
    TrajectoryNoise noise(opts.seed, opts.trajectory);
    IntracavityRecord rec;
    rec.dt = dt;
    rec.states.reserve(opts.samples + 1);
    rec.draws.reserve(opts.samples);
    rec.states.push_back(stationary_state(p, noise.init()));
    for (std::size_t i = 0; i < opts.samples; ++i) {
        rec.draws.push_back(noise.draw(opts.scheme));
        rec.states.push_back(step(rec.states.back(), p, dt, rec.draws.back(), 0.0, opts.scheme));
    }
    return rec;
}

} // namespace opo::dynamics
