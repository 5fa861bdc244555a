#pragma once

// Spectrum-analyzer emulation. Power spectral densities are normalized so
// that unit-variance white noise reads 1 at every frequency, i.e. a trace
// expressed in SNL units yields a PSD in SNL units.

#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace opo::spectral {

enum class Window { Hann, Rectangular };

Window parse_window(std::string_view name);
std::string to_string(Window w);

/// Periodic window of length n.
std::vector<double> make_window(Window w, std::size_t n);

/// Equivalent noise bandwidth in bins, n * sum(w^2) / (sum w)^2.
double enbw_bins(std::span<const double> w);

/// Closed form ENBW in bins for a periodic window: 1.5 (Hann), 1 (rectangular).
double analytic_enbw_bins(Window w);

struct AnalyzerSettings {
    double rbw_hz = 100e3;
    double vbw_hz = std::numeric_limits<double>::infinity();
    double f_start_hz = 0.0;
    double f_stop_hz = std::numeric_limits<double>::infinity();
    std::optional<double> center_hz; ///< set for zero-span operation
    int averages = 1;
    Window window = Window::Hann;
    double point_spacing_hz = 0.0; ///< 0 keeps the native bin spacing

    void validate() const;
    bool zero_span() const { return center_hz.has_value(); }

    /// Segment length whose window ENBW equals rbw_hz.
    std::size_t segment_length(double dt) const;
    /// FFT length after zero padding to honor point_spacing_hz.
    std::size_t fft_length(double dt) const;
    /// Segments are advanced by half a segment.
    std::size_t hop(double dt) const { return segment_length(dt) / 2; }
    /// Shortest trace that supplies `averages` segments.
    double min_duration(double dt) const;
};

/// Number of half-overlapping segments available in n samples.
std::size_t max_averages(std::size_t n_samples, double dt, const AnalyzerSettings& s);

struct NoiseSpectrum {
    std::vector<double> freq_hz;
    std::vector<double> psd;
    std::vector<double> db_rel_snl; ///< empty until a reference is attached
    std::vector<bool> below_floor;
    bool has_reference = false;

    std::size_t size() const { return freq_hz.size(); }
    bool empty() const { return freq_hz.empty(); }
};

/// Welch estimate using exactly `settings.averages` half-overlapping segments.
/// VBW is a first-order low-pass on the detected power across consecutive
/// segments. Throws InsufficientSamples naming the minimum duration.
NoiseSpectrum welch_psd(std::span<const double> trace, double dt, const AnalyzerSettings& settings);

/// Two-sided estimate for a complex envelope, frequencies ascending from -fs/2.
NoiseSpectrum welch_psd(std::span<const std::complex<double>> trace, double dt,
                        const AnalyzerSettings& settings);

struct SpectrumEstimate {
    NoiseSpectrum mean;
    std::vector<double> std_error; ///< standard error of the mean PSD per bin
    std::size_t count = 0;
};

/// Linear average of spectra on a shared grid, with per-bin standard error
/// from the spread between members. Reduction order is the input order.
SpectrumEstimate average_spectra(std::span<const NoiseSpectrum> spectra);

/// Pointwise signal/snl in dB; attaches the reference. Points whose signal is
/// within 3 dB of `floor_psd` are flagged in below_floor.
NoiseSpectrum relative_to_snl(const NoiseSpectrum& signal, const NoiseSpectrum& snl,
                              double floor_psd = 0.0);

/// Mean PSD over bins with f_lo <= f <= f_hi.
double band_average(const NoiseSpectrum& s, double f_lo, double f_hi);

struct ZeroSpanTrace {
    std::vector<double> time_s;
    std::vector<double> power;
    std::vector<double> db_rel_snl;
    std::vector<double> theta_rad;

    std::size_t size() const { return time_s.size(); }
};

/// Power in rbw around center_hz versus time (segment centers), VBW-smoothed.
ZeroSpanTrace zero_span(std::span<const double> trace, double dt, double center_hz,
                        const AnalyzerSettings& settings);

/// Divides by a flat SNL level and fills db_rel_snl.
void attach_snl(ZeroSpanTrace& z, double snl_level);

} // namespace opo::spectral
