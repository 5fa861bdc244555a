#include "opo/servo.hpp"

#include "opo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace opo::servo {

using std::numbers::pi;

double wrap_phase(double x)
{
    double r = std::remainder(x, 2.0 * pi);
    if (r <= -pi) {
        r += 2.0 * pi;
    }
    return r;
}

double phase_detector(double phi_diff, double t, double beat_hz, double reference_hz)
{
    // difference first: both carriers are ~1e8 Hz
    return wrap_phase(phi_diff + 2.0 * pi * (beat_hz - reference_hz) * t);
}

void ServoLoop::validate() const
{
    if (!(kp >= 0.0) || !(ki >= 0.0)) {
        throw DomainError("servo gains must be >= 0");
    }
    if (!(actuator_limit > 0.0)) {
        throw DomainError("actuator_limit must be positive");
    }
    if (!std::isfinite(integrator)) {
        throw DomainError("servo integrator is not finite");
    }
}

ServoLoop ServoLoop::pdll_defaults()
{
    ServoLoop loop;
    loop.reference_hz = 161.827324e6;
    loop.kp = 2.0 * pi * 100e3;
    loop.ki = loop.kp * loop.kp / 4.0;
    loop.actuator_limit = 2.0 * pi * 5e6;
    return loop;
}

double loop_step(ServoLoop& loop, double error, double dt)
{
    if (!loop.engaged) {
        return 0.0;
    }
    const double raw = -(loop.kp * error + loop.ki * loop.integrator);
    const double out = std::clamp(raw, -loop.actuator_limit, loop.actuator_limit);
    loop.saturated = out != raw;
    if (!loop.saturated) {
        loop.integrator += error * dt;
    }
    return out;
}

bool discrete_stable(double kp, double ki, double dt)
{
    // e' = (1 - kp dt) e - ki dt I,  I' = I + dt e  (Jury conditions)
    const double a = kp * dt;
    const double b = ki * dt * dt;
    if (ki == 0.0) {
        return a > 0.0 && a < 2.0;
    }
    return b < a && b < 4.0 - 2.0 * a && a > 0.0;
}

void check_stability(const ServoLoop& loop, double dt)
{
    loop.validate();
    if (!loop.engaged) {
        return;
    }
    if (!discrete_stable(loop.kp, loop.ki, dt)) {
        std::ostringstream msg;
        msg << "servo unstable: kp=" << loop.kp << " rad/s, ki=" << loop.ki << " rad/s^2 at dt=" << dt
            << " s (kp*dt=" << loop.kp * dt << ", need kp*dt < 2 and ki*dt < kp)";
        throw ServoUnstable(msg.str());
    }
}

dynamics::Controller make_pdll_controller(ServoLoop& loop, double beat_hz)
{
    return [&loop, beat_hz](const dynamics::TwoModeFluctuationState& s, double dt) {
        return loop_step(loop, phase_detector(s.phi_diff, s.t, beat_hz, loop.reference_hz), dt);
    };
}

std::optional<double> suppression_orders(double unlocked_hz, double locked_hz)
{
    if (unlocked_hz > 0.0 && locked_hz > 0.0) {
        return std::log10(unlocked_hz / locked_hz);
    }
    return std::nullopt;
}

double gated_frequency_rms(std::span<const double> phase, double dt, double gate_s)
{
    const auto lag = static_cast<std::size_t>(std::llround(gate_s / dt));
    if (lag == 0 || phase.size() <= lag) {
        throw InsufficientSamples("gated frequency needs a record longer than the " +
                                  std::to_string(gate_s) + " s gate");
    }
    double sum = 0.0;
    const std::size_t n = phase.size() - lag;
    const double tau = static_cast<double>(lag) * dt;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = (phase[i + lag] - phase[i]) / (2.0 * pi * tau);
        sum += f * f;
    }
    return std::sqrt(sum / static_cast<double>(n));
}

LockRun run_locked(const dynamics::OpoParams& p, ServoLoop loop, double duration, const LockOptions& opts)
{
    if (!(duration > 0.0) || !(opts.dt > 0.0) || !(opts.gate_s > 0.0) || opts.settle_s < 0.0) {
        throw DomainError("run_locked needs positive duration, dt and gate");
    }
    check_stability(loop, opts.dt);

    NoiseStream phase_rng(opts.seed, opts.trajectory, Channel::PhaseDiffusion);
    NoiseStream drift_rng(opts.seed, opts.trajectory, Channel::FrequencyDrift);
    NoiseStream detector_rng(opts.seed, opts.trajectory, Channel::ElectronicNoise);

    dynamics::TwoModeFluctuationState locked;
    locked.phi_diff = opts.initial_phase;
    if (opts.stationary_start) {
        locked.drift = 2.0 * pi * p.tech_drift_span_hz * drift_rng.normal();
    }
    auto free_running = locked;

    const auto settle_steps = static_cast<std::size_t>(std::llround(opts.settle_s / opts.dt));
    const auto run_steps = static_cast<std::size_t>(std::llround(duration / opts.dt));
    const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opts.gate_s / (10.0 * opts.dt))));

    std::vector<double> locked_phase;
    std::vector<double> free_phase;
    LockRun run;
    if (opts.record_every > 0) {
        run.record_dt = static_cast<double>(opts.record_every) * opts.dt;
    }

    double err2 = 0.0;
    long slips = 0;
    long last_cycle = 0;
    for (std::size_t i = 0; i < settle_steps + run_steps; ++i) {
        double err = wrap_phase(locked.phi_diff);
        if (opts.detector_noise_rms > 0.0) {
            err += opts.detector_noise_rms * detector_rng.normal();
        }
        const double act = loop_step(loop, err, opts.dt);
        const double zp = phase_rng.normal();
        const double zd = drift_rng.normal();
        free_running = dynamics::step_phase(free_running, p, opts.dt, zp, zd, 0.0);
        locked = dynamics::step_phase(locked, p, opts.dt, zp, zd, act);
        if (!std::isfinite(locked.phi_diff) || !std::isfinite(loop.integrator)) {
            std::ostringstream msg;
            msg << "servo unstable: phase diverged with kp=" << loop.kp << ", ki=" << loop.ki;
            throw ServoUnstable(msg.str());
        }
        if (i < settle_steps) {
            continue;
        }
        const std::size_t k = i - settle_steps;
        const double e = wrap_phase(locked.phi_diff);
        err2 += e * e;
        const long cycle = std::lround(locked.phi_diff / (2.0 * pi));
        if (k == 0) {
            last_cycle = cycle;
        } else if (cycle != last_cycle) {
            slips += std::labs(cycle - last_cycle);
            last_cycle = cycle;
        }
        if (k % stride == 0) {
            locked_phase.push_back(locked.phi_diff);
            free_phase.push_back(free_running.phi_diff);
        }
        if (opts.record_every > 0 && k % opts.record_every == 0) {
            run.phi_diff.push_back(locked.phi_diff);
        }
    }

    auto& rep = run.report;
    rep.residual_phase_rms = std::sqrt(err2 / static_cast<double>(std::max<std::size_t>(run_steps, 1)));
    const double sample_dt = static_cast<double>(stride) * opts.dt;
    rep.residual_freq_error_hz = gated_frequency_rms(locked_phase, sample_dt, opts.gate_s);
    rep.free_running_freq_error_hz = gated_frequency_rms(free_phase, sample_dt, opts.gate_s);
    rep.cycle_slips = slips;
    rep.locked = loop.engaged && slips == 0 && rep.residual_phase_rms < 0.5;
    rep.suppression_orders = suppression_orders(rep.free_running_freq_error_hz, rep.residual_freq_error_hz);
    return run;
}

std::vector<std::complex<double>> beat_envelope(std::span<const double> phi)
{
    std::vector<std::complex<double>> out(phi.size());
    std::transform(phi.begin(), phi.end(), out.begin(), [](double x) { return std::polar(1.0, x); });
    return out;
}

std::vector<double> beat_waveform(std::span<const double> phi, double dt, double if_hz)
{
    std::vector<double> out(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double ph = std::fmod(2.0 * pi * if_hz * static_cast<double>(i) * dt, 2.0 * pi);
        out[i] = std::cos(ph + phi[i]);
    }
    return out;
}

LoPhaseProcess qll_hold(double theta_target, double jitter_rms, double dt, std::size_t samples,
                        double correlation_s, NoiseStream& rng)
{
    if (jitter_rms < 0.0) {
        throw DomainError("jitter_rms must be >= 0");
    }
    LoPhaseProcess out{dt, std::vector<double>(samples, theta_target)};
    if (jitter_rms == 0.0 || samples == 0) {
        return out;
    }
    const double b = std::exp(-dt / correlation_s);
    const double kick = jitter_rms * std::sqrt(1.0 - b * b);
    double x = jitter_rms * rng.normal();
    for (auto& th : out.theta) {
        th = theta_target + x;
        x = b * x + kick * rng.normal();
    }
    return out;
}

LoPhaseProcess qll_scan(double theta_start, double theta_stop, double turning_time_s, double dt,
                        std::size_t samples)
{
    if (!(turning_time_s > 0.0)) {
        throw DomainError("scan turning time must be positive");
    }
    LoPhaseProcess out{dt, std::vector<double>(samples)};
    for (std::size_t i = 0; i < samples; ++i) {
        const double u = std::fmod(static_cast<double>(i) * dt, 2.0 * turning_time_s) / turning_time_s;
        const double tri = u <= 1.0 ? u : 2.0 - u;
        out.theta[i] = theta_start + (theta_stop - theta_start) * tri;
    }
    return out;
}

std::vector<double> cll_detuning(const CavityLock& cll, double dt, std::size_t samples, NoiseStream& rng)
{
    std::vector<double> out(samples, 0.0);
    if (cll.detuning_jitter_rms <= 0.0) {
        return out;
    }
    const double b = std::exp(-dt / cll.correlation_s);
    double x = cll.detuning_jitter_rms * rng.normal();
    for (auto& d : out) {
        d = x;
        x = b * x + cll.detuning_jitter_rms * std::sqrt(1.0 - b * b) * rng.normal();
    }
    return out;
}

} // namespace opo::servo
