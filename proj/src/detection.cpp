#include "opo/detection.hpp"

#include "opo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <numbers>
#include <sstream>

namespace opo::detection {

using dynamics::JointMode;
using std::numbers::pi;
using std::numbers::sqrt2;

std::pair<LocalOscillator, LocalOscillator> synthesize_lo_pair(double aom_drive_hz, double amplitude,
                                                               double theta1, double theta2)
{
    return {LocalOscillator{+aom_drive_hz, amplitude, theta1}, LocalOscillator{-aom_drive_hz, amplitude, theta2}};
}

double ModeCleaner::transmission(double offset_hz) const
{
    const double n = std::round(offset_hz / fsr_hz);
    const double d = (offset_hz - n * fsr_hz) / hwhm_hz;
    return 1.0 / (1.0 + d * d);
}

ModeCleaner ModeCleaner::for_aom(double aom_drive_hz, double hwhm_hz)
{
    return {hwhm_hz, 2.0 * aom_drive_hz / 3.0};
}

ResonanceCheck mode_cleaner_resonance_check(const ModeCleaner& mc, double f1_hz, double f2_hz)
{
    if (!(mc.fsr_hz > 0.0)) {
        throw DomainError("mode cleaner FSR must be positive");
    }
    const double sep = f2_hz - f1_hz;
    ResonanceCheck r;
    r.multiple = std::lround(sep / mc.fsr_hz);
    r.residual_hz = sep - static_cast<double>(r.multiple) * mc.fsr_hz;
    r.resonant = std::abs(r.residual_hz) <= mc.hwhm_hz;
    return r;
}

double DetectionChain::floor_psd() const
{
    if (!std::isfinite(electronic_noise_db)) {
        return 0.0;
    }
    return std::pow(10.0, electronic_noise_db / 10.0);
}

void DetectionChain::validate() const
{
    auto in_unit = [](double x) { return x > 0.0 && x <= 1.0; };
    if (!in_unit(eta)) {
        throw DomainError("eta must lie in (0, 1]");
    }
    if (!in_unit(c1) || !in_unit(c2)) {
        throw DomainError("fringe contrasts must lie in (0, 1]");
    }
    if (!(rho >= 0.0) || !std::isfinite(rho)) {
        throw DomainError("rho must be finite and >= 0");
    }
    if (std::isnan(electronic_noise_db) || electronic_noise_db == std::numeric_limits<double>::infinity()) {
        throw DomainError("electronic_noise_db must be finite or -inf");
    }
}

DetectionChain DetectionChain::ideal(double rho)
{
    return {1.0, 1.0, 1.0, rho, -std::numeric_limits<double>::infinity()};
}

std::pair<BeamTrace, BeamTrace> split_beams(const dynamics::OutputTrace& out)
{
    const auto& up = out[JointMode::AmplitudeSum];
    const auto& um = out[JointMode::AmplitudeDifference];
    const auto& vp = out[JointMode::PhaseSum];
    const auto& vm = out[JointMode::PhaseDifference];
    const std::size_t n = out.size();

    BeamTrace b1;
    BeamTrace b2;
    for (auto* b : {&b1, &b2}) {
        b->dt = out.dt;
        b->alpha = out.mean.alpha;
        b->amplitude.resize(n);
        b->phase.resize(n);
    }
    b1.carrier_hz = +0.5 * out.beat_hz;
    b2.carrier_hz = -0.5 * out.beat_hz;
    for (std::size_t i = 0; i < n; ++i) {
        b1.amplitude[i] = (up[i] + um[i]) / sqrt2;
        b2.amplitude[i] = (up[i] - um[i]) / sqrt2;
        b1.phase[i] = (vp[i] + vm[i]) / sqrt2;
        b2.phase[i] = (vp[i] - vm[i]) / sqrt2;
    }
    if (out.phi_diff.size() == n) {
        b1.mean_phase.resize(n);
        b2.mean_phase.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            b1.mean_phase[i] = 0.5 * out.phi_diff[i];
            b2.mean_phase[i] = -0.5 * out.phi_diff[i];
        }
    }
    return {std::move(b1), std::move(b2)};
}

BeamTrace vacuum_like(const BeamTrace& b, NoiseStream& rng)
{
    BeamTrace v = b;
    for (std::size_t i = 0; i < v.size(); ++i) {
        v.amplitude[i] = rng.normal();
        v.phase[i] = rng.normal();
    }
    return v;
}

DetectionNoise::DetectionNoise(std::uint64_t seed, std::uint64_t trajectory)
    : loss(seed, trajectory, Channel::DetectorLoss), mismatch(seed, trajectory, Channel::ModeMismatch),
      lo_vacuum(seed, trajectory, Channel::LoVacuum), electronic(seed, trajectory, Channel::ElectronicNoise)
{
}

namespace {

void require_aligned(const BeamTrace& b1, const BeamTrace& b2)
{
    if (b1.size() != b2.size() || b1.phase.size() != b1.size() || b2.phase.size() != b2.size()) {
        throw ShapeMismatch("beam traces have mismatched lengths");
    }
    if (b1.dt != b2.dt) {
        throw ShapeMismatch("beam traces have different sample intervals");
    }
}

double mean_phase_at(const BeamTrace& b, std::size_t i)
{
    return b.mean_phase.empty() ? 0.0 : b.mean_phase[i];
}

} // namespace

std::vector<double> polarization_rotated_difference(const BeamTrace& b1, const BeamTrace& b2, double angle,
                                                    const DetectionChain& chain, DetectionNoise& noise)
{
    require_aligned(b1, b2);
    chain.validate();
    const std::size_t n = b1.size();
    const double eta = chain.eta;
    const double keep = std::sqrt(eta);
    const double lost = std::sqrt(1.0 - eta);
    const double floor = std::sqrt(chain.floor_psd());
    const double c2a = std::cos(2.0 * angle);
    const double s2a = std::sin(2.0 * angle);
    const double norm = std::sqrt(b1.alpha * b1.alpha + b2.alpha * b2.alpha);
    const double dw = 2.0 * pi * (b1.carrier_hz - b2.carrier_hz);

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        // photodiode loss mixes in fresh vacuum per quadrature
        const double a1 = keep * b1.amplitude[i] + lost * noise.loss.normal();
        const double p1 = keep * b1.phase[i] + lost * noise.loss.normal();
        const double a2 = keep * b2.amplitude[i] + lost * noise.loss.normal();
        const double p2 = keep * b2.phase[i] + lost * noise.loss.normal();

        double x = c2a * (b1.alpha * a1 - b2.alpha * a2);
        if (s2a != 0.0) {
            // beat term Re(a1 a2*) at the carrier separation
            const double psi = std::fmod(dw * static_cast<double>(i) * b1.dt, 2.0 * pi) +
                               mean_phase_at(b1, i) - mean_phase_at(b2, i);
            const double c = std::cos(psi);
            const double s = std::sin(psi);
            x += s2a * (b2.alpha * (c * a1 + s * p1) + b1.alpha * (c * a2 - s * p2));
        }
        out[i] = keep * x / norm + floor * noise.electronic.normal();
    }
    return out;
}

std::vector<double> direct_detect_difference(const BeamTrace& b1, const BeamTrace& b2,
                                             const DetectionChain& chain, DetectionNoise& noise)
{
    return polarization_rotated_difference(b1, b2, 0.0, chain, noise);
}

std::vector<double> snl_calibrate_45deg(const BeamTrace& b1, const BeamTrace& b2,
                                        const DetectionChain& chain, DetectionNoise& noise)
{
    return polarization_rotated_difference(b1, b2, pi / 4.0, chain, noise);
}

std::vector<double> electronic_floor_trace(std::size_t samples, const DetectionChain& chain,
                                           DetectionNoise& noise)
{
    const double floor = std::sqrt(chain.floor_psd());
    std::vector<double> out(samples);
    for (auto& x : out) {
        x = floor * noise.electronic.normal();
    }
    return out;
}

std::vector<double> bhd_sum_current(const BeamTrace& b1, const BeamTrace& b2, const LocalOscillator& lo1,
                                    const LocalOscillator& lo2, const DetectionChain& chain,
                                    DetectionNoise& noise, std::span<const double> theta1,
                                    std::span<const double> theta2, double tolerance_hz)
{
    require_aligned(b1, b2);
    chain.validate();
    for (const auto& [lo, b, name] : {std::tuple{&lo1, &b1, "1"}, std::tuple{&lo2, &b2, "2"}}) {
        const double detuning = lo->carrier_hz - b->carrier_hz;
        if (std::abs(detuning) > tolerance_hz) {
            std::ostringstream msg;
            msg << "heterodyne leakage: LO " << name << " is detuned by " << detuning
                << " Hz from its OPO beam (tolerance " << tolerance_hz << " Hz)";
            throw HeterodyneLeakage(msg.str());
        }
    }
    const std::size_t n = b1.size();
    if ((!theta1.empty() && theta1.size() != n) || (!theta2.empty() && theta2.size() != n)) {
        throw ShapeMismatch("LO phase series must match the beam length");
    }

    const double eta = chain.eta;
    const double keep = std::sqrt(eta);
    const double lost = std::sqrt(1.0 - eta);
    const double floor = std::sqrt(chain.floor_psd());
    const std::array<const BeamTrace*, 2> beams{&b1, &b2};
    const std::array<const LocalOscillator*, 2> los{&lo1, &lo2};
    const std::array<std::span<const double>, 2> thetas{theta1, theta2};
    const std::array<double, 2> contrast{chain.c1, chain.c2};
    double power = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
        power += los[j]->amplitude * los[j]->amplitude + beams[j]->alpha * beams[j]->alpha;
    }
    const double norm = std::sqrt(power);

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 2; ++j) {
            const auto& b = *beams[j];
            const double beta = los[j]->amplitude;
            const double th = thetas[j].empty() ? los[j]->phase : thetas[j][i];
            const double quad = std::cos(th) * b.amplitude[i] + std::sin(th) * b.phase[i];
            const double c = contrast[j];
            const double signal = c * quad + std::sqrt(1.0 - c * c) * noise.mismatch.normal();
            const double interference = beta * signal + b.alpha * noise.lo_vacuum.normal();
            const double side = std::sqrt(beta * beta + b.alpha * b.alpha);
            sum += keep * (keep * interference + lost * side * noise.loss.normal());
        }
        out[i] = sum / norm + floor * noise.electronic.normal();
    }
    return out;
}

double bhd_sum_psd_model(const std::array<double, dynamics::kModeCount>& mode_psd, double theta1,
                         double theta2, const DetectionChain& chain, double alpha, double beta)
{
    const auto s = [&](JointMode m) { return mode_psd[static_cast<std::size_t>(m)]; };
    const double k1c = beta * chain.c1 * std::cos(theta1);
    const double k2c = beta * chain.c2 * std::cos(theta2);
    const double k1s = beta * chain.c1 * std::sin(theta1);
    const double k2s = beta * chain.c2 * std::sin(theta2);
    const double signal = 0.5 * (s(JointMode::AmplitudeSum) * (k1c + k2c) * (k1c + k2c) +
                                 s(JointMode::AmplitudeDifference) * (k1c - k2c) * (k1c - k2c) +
                                 s(JointMode::PhaseSum) * (k1s + k2s) * (k1s + k2s) +
                                 s(JointMode::PhaseDifference) * (k1s - k2s) * (k1s - k2s));
    const double mismatch = beta * beta * (2.0 - chain.eta1() - chain.eta2());
    const double total = 2.0 * (beta * beta + alpha * alpha);
    const double eta = chain.eta;
    return eta * (eta * (signal + mismatch + 2.0 * alpha * alpha) + (1.0 - eta) * total) / total +
           chain.floor_psd();
}

double bhd_snl_psd(const DetectionChain& chain)
{
    return chain.eta + chain.floor_psd();
}

spectral::ZeroSpanTrace quadrature_scan_trace(const BeamTrace& b1, const BeamTrace& b2,
                                              const LocalOscillator& lo1, const LocalOscillator& lo2,
                                              const DetectionChain& chain, DetectionNoise& noise,
                                              std::span<const double> scan, std::span<const double> hold,
                                              double center_hz, const spectral::AnalyzerSettings& settings,
                                              double snl_level)
{
    const auto current = bhd_sum_current(b1, b2, lo1, lo2, chain, noise, scan, hold);
    auto z = spectral::zero_span(current, b1.dt, center_hz, settings);
    spectral::attach_snl(z, snl_level);
    z.theta_rad.resize(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
        const auto i = std::min(scan.size() - 1, static_cast<std::size_t>(z.time_s[k] / b1.dt));
        z.theta_rad[k] = scan[i];
    }
    return z;
}

} // namespace opo::detection
