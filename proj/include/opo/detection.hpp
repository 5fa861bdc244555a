#pragma once

// Measurement models for the twin beams: LO synthesis, mode-cleaner
// filtering, direct and polarization-rotated intensity-difference detection,
// and double balanced homodyne detection.
//
// Photocurrent traces are in ideal-detector SNL units: a quantum efficiency
// eta detector looking at shot-noise-limited light reads eta, and the
// electronic floor adds floor_psd() on top.

#include "opo/opo_dynamics.hpp"
#include "opo/rng.hpp"
#include "opo/spectral.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace opo::detection {

struct LocalOscillator {
    double carrier_hz = 0.0; ///< offset from the laser frequency
    double amplitude = 0.0;  ///< beta, sqrt(photons/s)
    double phase = 0.0;      ///< theta relative to the matching OPO beam, rad
};

/// AOM up- and down-shifted copies of the laser at +/- aom_drive_hz.
std::pair<LocalOscillator, LocalOscillator> synthesize_lo_pair(double aom_drive_hz, double amplitude,
                                                               double theta1 = 0.0, double theta2 = 0.0);

struct ModeCleaner {
    double hwhm_hz = 170e3;
    double fsr_hz = 0.0;

    /// Lorentzian transmission around the nearest resonance.
    double transmission(double offset_hz) const;

    /// FSR of Omega/(3 pi) in angular terms, i.e. 2/3 of the AOM drive in Hz,
    /// so that carriers at +/- drive both resonate.
    static ModeCleaner for_aom(double aom_drive_hz, double hwhm_hz);
};

struct ResonanceCheck {
    bool resonant = false;
    long multiple = 0;
    double residual_hz = 0.0;
};

/// Whether f2 - f1 is an integer number of FSRs within one HWHM.
ResonanceCheck mode_cleaner_resonance_check(const ModeCleaner& mc, double f1_hz, double f2_hz);

struct DetectionChain {
    double eta = 0.95;
    double c1 = 0.986;
    double c2 = 0.928;
    double rho = 2.8 / 6.5;
    double electronic_noise_db = -15.0; ///< relative to the ideal-detector SNL; -inf disables

    double floor_psd() const;
    double eta1() const { return c1 * c1; }
    double eta2() const { return c2 * c2; }
    void validate() const;

    static DetectionChain experiment_defaults() { return {}; }
    /// Unit efficiencies and contrasts, no electronic noise.
    static DetectionChain ideal(double rho);
};

/// One OPO beam after the PBS: amplitude and phase quadrature fluctuations
/// (dA_{j,0}, dA_{j,pi/2}), mean amplitude, optical carrier offset and slow
/// mean phase.
struct BeamTrace {
    double dt = 0.0;
    std::vector<double> amplitude;
    std::vector<double> phase;
    std::vector<double> mean_phase; ///< may be empty (zero)
    double alpha = 0.0;
    double carrier_hz = 0.0;

    std::size_t size() const { return amplitude.size(); }
};

/// Splits joint modes into the two beams; carriers at +/- beat/2 and the
/// phase difference shared symmetrically.
std::pair<BeamTrace, BeamTrace> split_beams(const dynamics::OutputTrace& out);

/// A beam with the same mean field but vacuum fluctuations.
BeamTrace vacuum_like(const BeamTrace& b, NoiseStream& rng);

/// Substreams for detector-side vacuum and electronic noise.
struct DetectionNoise {
    DetectionNoise(std::uint64_t seed, std::uint64_t trajectory);

    NoiseStream loss;
    NoiseStream mismatch;
    NoiseStream lo_vacuum;
    NoiseStream electronic;
};

/// Intensity-difference current after rotating both polarizations by `angle`
/// before the PBS. angle = 0 is direct detection, pi/4 the SNL calibration.
std::vector<double> polarization_rotated_difference(const BeamTrace& b1, const BeamTrace& b2, double angle,
                                                    const DetectionChain& chain, DetectionNoise& noise);

/// Each beam on its own photodiode, currents subtracted.
std::vector<double> direct_detect_difference(const BeamTrace& b1, const BeamTrace& b2,
                                             const DetectionChain& chain, DetectionNoise& noise);

/// Polarizations rotated by 45 degrees: each diode sees half of each beam and
/// the difference current reads the shot-noise level of both beams.
std::vector<double> snl_calibrate_45deg(const BeamTrace& b1, const BeamTrace& b2,
                                        const DetectionChain& chain, DetectionNoise& noise);

/// Electronic noise alone (beams blocked).
std::vector<double> electronic_floor_trace(std::size_t samples, const DetectionChain& chain,
                                           DetectionNoise& noise);

/// Photocurrent sum of the two balanced homodyne detectors,
///   di+ = beta (dA_{1,theta1} + dA_{2,theta2}) + alpha (dB_1 + dB_2),
/// with contrast C_j on the signal-LO interference and efficiency eta as loss.
/// Per-sample LO phases override lo.phase when given. Throws HeterodyneLeakage
/// if an LO is detuned from its beam by more than tolerance_hz.
std::vector<double> bhd_sum_current(const BeamTrace& b1, const BeamTrace& b2, const LocalOscillator& lo1,
                                    const LocalOscillator& lo2, const DetectionChain& chain,
                                    DetectionNoise& noise, std::span<const double> theta1 = {},
                                    std::span<const double> theta2 = {}, double tolerance_hz = 1e3);

/// Closed-form PSD of bhd_sum_current for joint-mode output PSDs `mode_psd`
/// (indexed by JointMode) at fixed LO phases.
double bhd_sum_psd_model(const std::array<double, dynamics::kModeCount>& mode_psd, double theta1,
                         double theta2, const DetectionChain& chain, double alpha, double beta);

/// Shot-noise level of the homodyne sum (vacuum signal, same LO and OPO power).
double bhd_snl_psd(const DetectionChain& chain);

/// Zero-span noise power at center_hz while theta1 follows `scan` and theta2
/// follows `hold`, normalized by snl_level.
spectral::ZeroSpanTrace quadrature_scan_trace(const BeamTrace& b1, const BeamTrace& b2,
                                              const LocalOscillator& lo1, const LocalOscillator& lo2,
                                              const DetectionChain& chain, DetectionNoise& noise,
                                              std::span<const double> scan, std::span<const double> hold,
                                              double center_hz, const spectral::AnalyzerSettings& settings,
                                              double snl_level);

} // namespace opo::detection
