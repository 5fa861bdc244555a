#include "opo/spectral.hpp"

#include "opo/errors.hpp"
#include "opo/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace opo::spectral {

using std::numbers::pi;

Window parse_window(std::string_view name)
{
    if (name == "hann") {
        return Window::Hann;
    }
    if (name == "rectangular") {
        return Window::Rectangular;
    }
    throw std::invalid_argument("unknown window '" + std::string(name) + "'");
}

std::string to_string(Window w)
{
    return w == Window::Hann ? "hann" : "rectangular";
}

std::vector<double> make_window(Window w, std::size_t n)
{
    std::vector<double> out(n, 1.0);
    if (w == Window::Hann) {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(n));
        }
    }
    return out;
}

double enbw_bins(std::span<const double> w)
{
    double s1 = 0.0;
    double s2 = 0.0;
    for (double x : w) {
        s1 += x;
        s2 += x * x;
    }
    return static_cast<double>(w.size()) * s2 / (s1 * s1);
}

double analytic_enbw_bins(Window w)
{
    return w == Window::Hann ? 1.5 : 1.0;
}

void AnalyzerSettings::validate() const
{
    if (!(rbw_hz > 0.0) || !std::isfinite(rbw_hz)) {
        throw std::invalid_argument("rbw_hz must be positive");
    }
    if (!(vbw_hz > 0.0)) {
        throw std::invalid_argument("vbw_hz must be positive");
    }
    if (averages < 1) {
        throw std::invalid_argument("averages must be >= 1");
    }
    if (f_stop_hz < f_start_hz) {
        throw std::invalid_argument("span stop below start");
    }
    if (point_spacing_hz < 0.0) {
        throw std::invalid_argument("point_spacing_hz must be >= 0");
    }
}

std::size_t AnalyzerSettings::segment_length(double dt) const
{
    const double n = analytic_enbw_bins(window) / (rbw_hz * dt);
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(n)));
}

std::size_t AnalyzerSettings::fft_length(double dt) const
{
    const std::size_t n = segment_length(dt);
    if (point_spacing_hz <= 0.0) {
        return n;
    }
    const auto padded = static_cast<std::size_t>(std::ceil(1.0 / (point_spacing_hz * dt) - 1e-9));
    return std::max(n, padded);
}

double AnalyzerSettings::min_duration(double dt) const
{
    const std::size_t n = segment_length(dt);
    return static_cast<double>(n + (averages - 1) * (n / 2)) * dt;
}

std::size_t max_averages(std::size_t n_samples, double dt, const AnalyzerSettings& s)
{
    const std::size_t n = s.segment_length(dt);
    if (n_samples < n) {
        return 0;
    }
    return 1 + (n_samples - n) / (n / 2);
}

namespace {

double vbw_coefficient(const AnalyzerSettings& s, double hop_time)
{
    if (!std::isfinite(s.vbw_hz)) {
        return 1.0;
    }
    return 1.0 - std::exp(-2.0 * pi * s.vbw_hz * hop_time);
}

void require_samples(std::size_t n_samples, double dt, const AnalyzerSettings& s)
{
    if (max_averages(n_samples, dt, s) < static_cast<std::size_t>(s.averages)) {
        std::ostringstream msg;
        msg << "trace of " << n_samples * dt << " s is too short: rbw " << s.rbw_hz << " Hz with "
            << s.averages << " averages needs at least " << s.min_duration(dt) << " s";
        throw InsufficientSamples(msg.str());
    }
}

// Accumulates VBW-filtered periodograms and returns their mean.
class VideoAverager {
public:
    VideoAverager(std::size_t bins, double coeff) : state_(bins), sum_(bins, 0.0), coeff_(coeff) {}

    void push(const std::vector<double>& p)
    {
        if (count_ == 0) {
            state_ = p;
        } else {
            for (std::size_t k = 0; k < p.size(); ++k) {
                state_[k] += coeff_ * (p[k] - state_[k]);
            }
        }
        for (std::size_t k = 0; k < p.size(); ++k) {
            sum_[k] += state_[k];
        }
        ++count_;
    }

    std::vector<double> mean() const
    {
        std::vector<double> m(sum_.size());
        for (std::size_t k = 0; k < m.size(); ++k) {
            m[k] = sum_[k] / static_cast<double>(count_);
        }
        return m;
    }

private:
    std::vector<double> state_;
    std::vector<double> sum_;
    double coeff_;
    std::size_t count_ = 0;
};

} // namespace

NoiseSpectrum welch_psd(std::span<const double> trace, double dt, const AnalyzerSettings& settings)
{
    settings.validate();
    require_samples(trace.size(), dt, settings);

    const std::size_t n = settings.segment_length(dt);
    const std::size_t nfft = settings.fft_length(dt);
    const std::size_t hop = n / 2;
    const auto w = make_window(settings.window, n);
    const double w2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
    const std::size_t bins = nfft / 2 + 1;

    VideoAverager video(bins, vbw_coefficient(settings, static_cast<double>(hop) * dt));
    std::vector<double> seg(nfft, 0.0);
    std::vector<double> power(bins);
    for (int a = 0; a < settings.averages; ++a) {
        const std::size_t off = static_cast<std::size_t>(a) * hop;
        for (std::size_t i = 0; i < n; ++i) {
            seg[i] = w[i] * trace[off + i];
        }
        const auto spec = fft::forward_real(seg);
        for (std::size_t k = 0; k < bins; ++k) {
            power[k] = std::norm(spec[k]) / w2;
        }
        video.push(power);
    }

    const auto mean = video.mean();
    NoiseSpectrum out;
    const double df = 1.0 / (static_cast<double>(nfft) * dt);
    for (std::size_t k = 0; k < bins; ++k) {
        const double f = static_cast<double>(k) * df;
        if (f >= settings.f_start_hz && f <= settings.f_stop_hz) {
            out.freq_hz.push_back(f);
            out.psd.push_back(mean[k]);
        }
    }
    return out;
}

NoiseSpectrum welch_psd(std::span<const std::complex<double>> trace, double dt,
                        const AnalyzerSettings& settings)
{
    settings.validate();
    require_samples(trace.size(), dt, settings);

    const std::size_t n = settings.segment_length(dt);
    const std::size_t nfft = settings.fft_length(dt);
    const std::size_t hop = n / 2;
    const auto w = make_window(settings.window, n);
    const double w2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);

    VideoAverager video(nfft, vbw_coefficient(settings, static_cast<double>(hop) * dt));
    std::vector<std::complex<double>> seg(nfft);
    std::vector<double> power(nfft);
    for (int a = 0; a < settings.averages; ++a) {
        const std::size_t off = static_cast<std::size_t>(a) * hop;
        for (std::size_t i = 0; i < n; ++i) {
            seg[i] = w[i] * trace[off + i];
        }
        const auto spec = fft::forward(seg);
        for (std::size_t k = 0; k < nfft; ++k) {
            power[k] = std::norm(spec[k]) / w2;
        }
        video.push(power);
    }

    const auto mean = video.mean();
    NoiseSpectrum out;
    const double df = 1.0 / (static_cast<double>(nfft) * dt);
    const std::size_t half = nfft / 2;
    // ascending: bins half+1 .. nfft-1 are negative, then 0 .. half
    for (std::size_t j = 0; j < nfft; ++j) {
        const std::size_t k = (j + half + 1) % nfft;
        const double f = (k > half ? static_cast<double>(k) - static_cast<double>(nfft)
                                   : static_cast<double>(k)) * df;
        if (f >= settings.f_start_hz && f <= settings.f_stop_hz) {
            out.freq_hz.push_back(f);
            out.psd.push_back(mean[k]);
        }
    }
    return out;
}

SpectrumEstimate average_spectra(std::span<const NoiseSpectrum> spectra)
{
    SpectrumEstimate est;
    if (spectra.empty()) {
        return est;
    }
    const std::size_t bins = spectra.front().size();
    for (const auto& s : spectra) {
        if (s.size() != bins || s.freq_hz != spectra.front().freq_hz) {
            throw ShapeMismatch("average_spectra: spectra have different grids");
        }
    }
    est.count = spectra.size();
    est.mean.freq_hz = spectra.front().freq_hz;
    est.mean.psd.assign(bins, 0.0);
    est.std_error.assign(bins, 0.0);
    const double m = static_cast<double>(spectra.size());
    for (const auto& s : spectra) {
        for (std::size_t k = 0; k < bins; ++k) {
            est.mean.psd[k] += s.psd[k];
        }
    }
    for (auto& p : est.mean.psd) {
        p /= m;
    }
    if (spectra.size() > 1) {
        for (const auto& s : spectra) {
            for (std::size_t k = 0; k < bins; ++k) {
                const double d = s.psd[k] - est.mean.psd[k];
                est.std_error[k] += d * d;
            }
        }
        for (auto& e : est.std_error) {
            e = std::sqrt(e / (m - 1.0) / m);
        }
    }
    return est;
}

NoiseSpectrum relative_to_snl(const NoiseSpectrum& signal, const NoiseSpectrum& snl, double floor_psd)
{
    if (signal.size() != snl.size()) {
        throw ShapeMismatch("relative_to_snl: frequency grids differ in length");
    }
    NoiseSpectrum out = signal;
    out.db_rel_snl.resize(signal.size());
    out.below_floor.assign(signal.size(), false);
    for (std::size_t k = 0; k < signal.size(); ++k) {
        const double f1 = signal.freq_hz[k];
        const double f2 = snl.freq_hz[k];
        if (std::abs(f1 - f2) > 1e-9 * std::max(1.0, std::abs(f1))) {
            throw ShapeMismatch("relative_to_snl: frequency grids differ at bin " + std::to_string(k));
        }
        out.db_rel_snl[k] = 10.0 * std::log10(signal.psd[k] / snl.psd[k]);
        out.below_floor[k] = floor_psd > 0.0 && signal.psd[k] < 2.0 * floor_psd;
    }
    out.has_reference = true;
    return out;
}

double band_average(const NoiseSpectrum& s, double f_lo, double f_hi)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.freq_hz[k] >= f_lo && s.freq_hz[k] <= f_hi) {
            sum += s.psd[k];
            ++n;
        }
    }
    if (n == 0) {
        throw std::invalid_argument("band_average: no bins between " + std::to_string(f_lo) + " and " +
                                    std::to_string(f_hi) + " Hz");
    }
    return sum / static_cast<double>(n);
}

ZeroSpanTrace zero_span(std::span<const double> trace, double dt, double center_hz,
                        const AnalyzerSettings& settings)
{
    settings.validate();
    const double nyquist = 0.5 / dt;
    if (!(center_hz >= 0.0 && center_hz < nyquist)) {
        throw std::out_of_range("zero_span: center " + std::to_string(center_hz) +
                                " Hz outside [0, " + std::to_string(nyquist) + ") Hz");
    }
    const std::size_t n = settings.segment_length(dt);
    const std::size_t hop = n / 2;
    const auto w = make_window(settings.window, n);
    const double w2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
    std::vector<double> wc(n);
    std::vector<double> ws(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ph = 2.0 * pi * center_hz * static_cast<double>(i) * dt;
        wc[i] = w[i] * std::cos(ph);
        ws[i] = w[i] * std::sin(ph);
    }

    ZeroSpanTrace out;
    if (trace.size() < n) {
        return out;
    }
    const double coeff = vbw_coefficient(settings, static_cast<double>(hop) * dt);
    double video = 0.0;
    for (std::size_t off = 0; off + n <= trace.size(); off += hop) {
        double re = 0.0;
        double im = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            re += wc[i] * trace[off + i];
            im += ws[i] * trace[off + i];
        }
        const double p = (re * re + im * im) / w2;
        video = out.power.empty() ? p : video + coeff * (p - video);
        out.time_s.push_back((static_cast<double>(off) + 0.5 * static_cast<double>(n)) * dt);
        out.power.push_back(video);
    }
    return out;
}

void attach_snl(ZeroSpanTrace& z, double snl_level)
{
    if (!(snl_level > 0.0)) {
        throw DomainError("SNL level must be positive");
    }
    z.db_rel_snl.resize(z.power.size());
    for (std::size_t i = 0; i < z.power.size(); ++i) {
        z.power[i] /= snl_level;
        z.db_rel_snl[i] = 10.0 * std::log10(z.power[i]);
    }
}

} // namespace opo::spectral
