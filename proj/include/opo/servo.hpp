#pragma once

// Classical locks: the phase-difference lock (PDLL) on the twin-beam beat
// note, the LO quadrature lock/scan (QLL) and an idealized cavity lock (CLL).

#include "opo/opo_dynamics.hpp"
#include "opo/rng.hpp"

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace opo::servo {

/// Wraps to (-pi, pi].
double wrap_phase(double x);

/// Phase error between the beat (phi_diff + 2 pi beat_hz t) and the reference
/// 2 pi reference_hz t, wrapped to (-pi, pi].
double phase_detector(double phi_diff, double t, double beat_hz, double reference_hz);

struct ServoLoop {
    double reference_hz = 161.827324e6;
    double kp = 0.0;         ///< rad/s per rad
    double ki = 0.0;         ///< rad/s^2 per rad
    double integrator = 0.0; ///< accumulated error, rad s
    double actuator_limit = std::numeric_limits<double>::infinity(); ///< rad/s
    bool engaged = true;
    bool saturated = false;

    void validate() const;
    void reset()
    {
        integrator = 0.0;
        saturated = false;
    }

    /// PI gains giving ~100 kHz unity-gain bandwidth, critically damped.
    static ServoLoop pdll_defaults();
};

/// PI law: actuation = -(kp e + ki integral(e)), clamped to the actuator limit.
/// The integrator is frozen while the output is clamped. Returns 0 when
/// disengaged.
double loop_step(ServoLoop& loop, double error, double dt);

/// Stability of the sampled PI loop acting on a pure integrator.
bool discrete_stable(double kp, double ki, double dt);

/// Throws ServoUnstable naming the gains when the sampled loop is unstable.
void check_stability(const ServoLoop& loop, double dt);

/// Closes the PDLL around the full OPO model. The loop is captured by reference.
dynamics::Controller make_pdll_controller(ServoLoop& loop, double beat_hz);

struct LockReport {
    bool locked = false;
    double residual_phase_rms = 0.0;        ///< rad, after settling
    double residual_freq_error_hz = 0.0;    ///< rms gated beat frequency error
    double free_running_freq_error_hz = 0.0; ///< same realization without actuation
    std::optional<double> suppression_orders;
    long cycle_slips = 0;
};

/// log10(unlocked/locked) when both are positive.
std::optional<double> suppression_orders(double unlocked_hz, double locked_hz);

struct LockOptions {
    double dt = 1e-6;
    double settle_s = 0.1;
    double gate_s = 1.0; ///< frequency-counter gate (1/RBW of the beat-note analyzer)
    std::uint64_t seed = 0;
    std::uint64_t trajectory = 0;
    bool stationary_start = true; ///< draw the initial wander from its stationary law
    double initial_phase = 0.0;
    std::size_t record_every = 0; ///< 0 disables the phase record
    double detector_noise_rms = 0.0; ///< additive phase-detector noise, rad per sample
};

struct LockRun {
    double record_dt = 0.0;
    std::vector<double> phi_diff; ///< beat phase relative to the reference, decimated
    LockReport report;
};

/// Simulates the phase difference under the PDLL for `duration` seconds after
/// settling. Statistics exclude the settling window.
LockRun run_locked(const dynamics::OpoParams& p, ServoLoop loop, double duration, const LockOptions& opts);

/// RMS of (phi(t + gate) - phi(t)) / (2 pi gate) over all start samples.
double gated_frequency_rms(std::span<const double> phase, double dt, double gate_s);

/// Complex baseband of the beat note, exp(i phi).
std::vector<std::complex<double>> beat_envelope(std::span<const double> phi);

/// Real mixer output at an intermediate frequency, cos(2 pi if_hz t + phi).
std::vector<double> beat_waveform(std::span<const double> phi, double dt, double if_hz);

struct LoPhaseProcess {
    double dt = 0.0;
    std::vector<double> theta;
};

/// LO phase held at theta_target with Ornstein-Uhlenbeck jitter of the given rms.
LoPhaseProcess qll_hold(double theta_target, double jitter_rms, double dt, std::size_t samples,
                        double correlation_s, NoiseStream& rng);

/// Triangular scan from theta_start to theta_stop, reversing at turning_time_s.
LoPhaseProcess qll_scan(double theta_start, double theta_stop, double turning_time_s, double dt,
                        std::size_t samples);

/// Ideal cavity lock with optional residual detuning jitter (rad/s).
struct CavityLock {
    double detuning_jitter_rms = 0.0;
    double correlation_s = 1e-3;
};

std::vector<double> cll_detuning(const CavityLock& cll, double dt, std::size_t samples, NoiseStream& rng);

} // namespace opo::servo
