#pragma once

// Linearized above-threshold OPO as four independent joint quadrature modes,
// each an Ornstein-Uhlenbeck process observed through the output coupler,
// plus the undamped signal/idler phase difference.
//
// For a mode with relaxation rate r and input-noise strength q the intracavity
// fluctuation obeys
//     du = -r u dt + sqrt(2q) [ sqrt(eta_esc) dW_in + sqrt(1-eta_esc) dW_loss ]
// and the output quadrature is sqrt(2 gamma_c eta_esc) u - xi_in. Its spectrum is
//     S(W) = 1 - eta_esc K / (1 + (W/r)^2),  K = 4 (r sqrt(gamma_c q) - gamma_c q) / r^2
// so q = r^2/gamma_c is vacuum (K = 0), K > 0 squeezed and K < 0 anti-squeezed.

#include "opo/rng.hpp"
#include "opo/spectral.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace opo::dynamics {

enum class JointMode : std::size_t {
    AmplitudeDifference = 0, ///< (dA_{1,0} - dA_{2,0}) / sqrt2
    PhaseSum = 1,            ///< (dA_{1,pi/2} + dA_{2,pi/2}) / sqrt2
    AmplitudeSum = 2,        ///< (dA_{1,0} + dA_{2,0}) / sqrt2
    PhaseDifference = 3,     ///< (dA_{1,pi/2} - dA_{2,pi/2}) / sqrt2
};

inline constexpr std::size_t kModeCount = 4;
inline constexpr std::array<JointMode, kModeCount> kAllModes{
    JointMode::AmplitudeDifference, JointMode::PhaseSum, JointMode::AmplitudeSum,
    JointMode::PhaseDifference};

std::string_view to_string(JointMode m);
/// Accepts the snake_case names used in configs and CSV headers.
JointMode parse_mode(std::string_view name);

/// Pump technical noise as seen in SNL units: level_at_corner * (corner/f)^slope
/// for 0 < f <= corner, zero above.
struct TechnicalNoise {
    double corner_hz = 1.5e6;
    double level_at_corner = 0.0;
    double slope = 2.0;

    double psd(double f_hz) const;
    void validate() const;
};

struct ModeParams {
    double relaxation_rate = 0.0; ///< r, 1/s
    double noise_strength = 0.0;  ///< q, 1/s
};

struct OpoParams {
    double gamma_c = 0.0;          ///< signal cavity HWHM, rad/s
    double eta_esc = 1.0;          ///< escape efficiency
    double sigma = 1.0;            ///< pump amplitude ratio, sigma^2 = P/P_th
    double d_quantum = 0.0;        ///< phase-difference diffusion, rad^2/s
    double tech_drift_span_hz = 0; ///< rms frequency-difference wander when unlocked
    double drift_correlation_s = 1.0;
    double frequency_difference_hz = 161.827324e6;
    TechnicalNoise pump_noise;
    double pump_imbalance = 0.0; ///< amplitude coupling of pump noise into the difference mode
    double backaction = 0.0;     ///< PDLL actuation fed into the amplitude difference, 1/rad
    double wavelength_m = 1064e-9;
    double reference_power_w = 2.8e-3; ///< per-beam power at reference_sigma
    double reference_sigma = 1.0246950765959599; ///< sqrt(1.05)
    std::array<ModeParams, kModeCount> modes{};

    const ModeParams& mode(JointMode m) const { return modes[static_cast<std::size_t>(m)]; }
    ModeParams& mode(JointMode m) { return modes[static_cast<std::size_t>(m)]; }

    /// Power coupling of pump technical noise into each output channel.
    double tech_coupling(JointMode m) const;

    /// Largest explicit step, 0.05 / gamma_c.
    double max_dt() const { return 0.05 / gamma_c; }
    double default_dt() const { return 0.02 / gamma_c; }

    void validate() const;

    /// Operating point of the phase-locked OPO with every mode at vacuum.
    static OpoParams uncalibrated_defaults();
};

/// Mode parameters giving squeezing depth K (K <= 1) at relaxation rate r.
ModeParams mode_for_depth(double depth, double relaxation_rate, double gamma_c);
double mode_depth(const OpoParams& p, JointMode m);

/// Depth K that places the output spectrum at `s_out` for angular frequency omega.
double depth_for_target(double s_out, double omega, double relaxation_rate, double eta_esc);

struct MeanField {
    double photon_flux = 0.0; ///< photons/s per beam
    double alpha = 0.0;       ///< sqrt(photon_flux)
    double power_w = 0.0;
};

double photon_energy(double wavelength_m);

/// Per-beam mean field; photon flux grows as (sigma - 1), scaled so that
/// reference_sigma gives reference_power_w. Throws BelowThreshold for sigma <= 1.
MeanField steady_state(const OpoParams& p);

/// Closed-form output PSD of one joint mode (SNL units) at angular frequency omega,
/// including pump technical noise.
double output_psd(const OpoParams& p, JointMode m, double omega);

/// analytic output spectrum on an angular-frequency grid (reported in Hz).
spectral::NoiseSpectrum analytic_spectrum(JointMode m, const OpoParams& p, std::span<const double> omega);

/// Variance of a free phase diffusion after time t, 2 D t.
double phase_diffusion_variance(double d_quantum, double t);

struct TwoModeFluctuationState {
    std::array<double, kModeCount> quad{}; ///< intracavity joint-mode fluctuations
    double phi_diff = 0.0;                 ///< unwrapped phase difference, rad
    double drift = 0.0;                    ///< technical angular-frequency wander, rad/s
    double t = 0.0;

    double operator[](JointMode m) const { return quad[static_cast<std::size_t>(m)]; }
    double& operator[](JointMode m) { return quad[static_cast<std::size_t>(m)]; }
};

/// Standard-normal draws consumed by one step.
struct NoiseDraws {
    std::array<double, kModeCount> input{};      ///< output-coupler vacuum, dW_in / sqrt(dt)
    std::array<double, kModeCount> input_orth{}; ///< exact scheme only
    std::array<double, kModeCount> loss{};
    double phase = 0.0;
    double drift = 0.0;
};

enum class Scheme { EulerMaruyama, ExactOu };

/// Per-trajectory substreams.
class TrajectoryNoise {
public:
    TrajectoryNoise(std::uint64_t seed, std::uint64_t trajectory);

    NoiseDraws draw(Scheme scheme);
    NoiseStream& pump() { return pump_; }
    NoiseStream& init() { return init_; }

private:
    NoiseStream input_;
    NoiseStream loss_;
    NoiseStream phase_;
    NoiseStream drift_;
    NoiseStream pump_;
    NoiseStream init_;
};

/// Stationary initial state (quadratures at q/r, drift at its stationary spread).
TwoModeFluctuationState stationary_state(const OpoParams& p, NoiseStream& rng);

/// Advances the phase difference and its technical wander only. `actuation`
/// is the servo's differential phase-rate correction (rad/s).
TwoModeFluctuationState step_phase(const TwoModeFluctuationState& s, const OpoParams& p, double dt,
                                   double phase_draw, double drift_draw, double actuation = 0.0);

/// One step of the full model. Requires dt <= max_dt() (StepSizeError).
TwoModeFluctuationState step(const TwoModeFluctuationState& s, const OpoParams& p, double dt,
                             const NoiseDraws& draws, double actuation = 0.0,
                             Scheme scheme = Scheme::EulerMaruyama);

/// Output quadratures over one step (trapezoidal average of the intracavity
/// field minus the reflected input), unit variance at SNL.
std::array<double, kModeCount> output_sample(const TwoModeFluctuationState& before,
                                             const TwoModeFluctuationState& after,
                                             const NoiseDraws& draws, const OpoParams& p, double dt);

/// Field quadratures at the output coupler, time-aligned, one sample per step.
struct OutputTrace {
    double dt = 0.0;
    std::array<std::vector<double>, kModeCount> quad;
    std::vector<double> phi_diff;
    MeanField mean;
    double beat_hz = 0.0;

    const std::vector<double>& operator[](JointMode m) const { return quad[static_cast<std::size_t>(m)]; }
    std::vector<double>& operator[](JointMode m) { return quad[static_cast<std::size_t>(m)]; }
    std::size_t size() const { return quad[0].size(); }
    double duration() const { return static_cast<double>(size()) * dt; }
};

/// States s_0..s_n and the draws that produced each transition.
struct IntracavityRecord {
    double dt = 0.0;
    std::vector<TwoModeFluctuationState> states;
    std::vector<NoiseDraws> draws;
};

OutputTrace output_field(const IntracavityRecord& record, const OpoParams& p);

/// Adds FFT-shaped pump technical noise to every coupled channel.
void add_pump_noise(OutputTrace& trace, const OpoParams& p, NoiseStream& rng);

/// Returns a phase-rate actuation for the current state; used to close the PDLL.
using Controller = std::function<double(const TwoModeFluctuationState&, double dt)>;

struct SimulationOptions {
    double dt = 0.0; ///< 0 selects OpoParams::default_dt()
    std::size_t samples = 0;
    Scheme scheme = Scheme::EulerMaruyama;
    bool technical_noise = true;
    bool record_phase = true;
    std::uint64_t seed = 0;
    std::uint64_t trajectory = 0;
};

OutputTrace simulate_output(const OpoParams& p, const SimulationOptions& opts,
                            const Controller& controller = {});

IntracavityRecord simulate_intracavity(const OpoParams& p, const SimulationOptions& opts);

} // namespace opo::dynamics
