#include "opo/scenario.hpp"

#include "opo/csv.hpp"
#include "opo/errors.hpp"
#include "opo/model_core.hpp"
#include "opo/runner.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

namespace opo::harness {

using dynamics::JointMode;
using std::numbers::pi;

ModelPrediction predict(const Scenario& s)
{
    const auto p = s.opo.params();
    const auto chain = s.detection.chain();
    const double omega = 2.0 * pi * s.analysis_hz;
    std::array<double, dynamics::kModeCount> psd{};
    for (auto m : dynamics::kAllModes) {
        psd[static_cast<std::size_t>(m)] = dynamics::output_psd(p, m, omega);
    }
    const double eta = chain.eta;
    const double e = chain.floor_psd();
    const double s_out = psd[static_cast<std::size_t>(JointMode::AmplitudeDifference)];

    ModelPrediction m;
    m.s_minus_db = core::variance_to_db((eta * (eta * s_out + 1.0 - eta) + e) / (eta + e));
    const double bhd = detection::bhd_sum_psd_model(psd, pi / 2, pi / 2, chain, std::sqrt(chain.rho), 1.0);
    m.s_plus_raw_db = core::variance_to_db(bhd / detection::bhd_snl_psd(chain));
    m.s_plus_corrected_db = core::correct_squeezing(
        core::CorrectionInputs::from_contrasts(m.s_plus_raw_db, chain.rho, chain.eta, chain.c1, chain.c2));
    m.s_plus_rho_only_db = core::correct_squeezing(core::CorrectionInputs::rho_only(m.s_plus_raw_db, chain.rho));
    m.duan_simon = core::duan_simon(m.s_minus_db, m.s_plus_rho_only_db);
    return m;
}

double ScanFit::operator()(double theta) const
{
    return coeff[0] + coeff[1] * std::cos(theta) + coeff[2] * std::sin(theta) + coeff[3] * std::cos(2.0 * theta) +
           coeff[4] * std::sin(2.0 * theta);
}

ScanFit fit_scan(std::span<const double> theta, std::span<const double> power)
{
    if (theta.size() != power.size()) {
        throw ShapeMismatch("scan fit needs one theta per power sample");
    }
    if (theta.size() < 5) {
        throw InsufficientSamples("scan fit needs at least 5 points");
    }
    const auto n = static_cast<Eigen::Index>(theta.size());
    Eigen::MatrixXd a(n, 5);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = theta[static_cast<std::size_t>(i)];
        a.row(i) << 1.0, std::cos(t), std::sin(t), std::cos(2.0 * t), std::sin(2.0 * t);
        y(i) = power[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(y);

    ScanFit fit;
    for (int k = 0; k < 5; ++k) {
        fit.coeff[static_cast<std::size_t>(k)] = c(k);
    }
    constexpr int grid = 20000;
    fit.min_value = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= grid; ++k) {
        const double t = pi * k / grid;
        const double v = fit(t);
        if (v < fit.min_value) {
            fit.min_value = v;
            fit.theta_min = t;
        }
    }
    return fit;
}

double RunReport::value(std::string_view key) const
{
    for (const auto& [k, v] : headline) {
        if (k == key) {
            return v;
        }
    }
    throw std::out_of_range("no headline value named " + std::string(key));
}

namespace {

using Headline = std::vector<std::pair<std::string, double>>;

std::size_t sample_count(const Scenario& s, double dt)
{
    return static_cast<std::size_t>(std::llround(s.duration_s / dt));
}

spectral::AnalyzerSettings settings_for(const Scenario& s, std::size_t n, double dt)
{
    auto a = s.analyzer.settings();
    if (s.analyzer.averages == 0) {
        a.averages = static_cast<int>(std::max<std::size_t>(1, spectral::max_averages(n, dt, a)));
    }
    return a;
}

/// Linear interpolation of a PSD at f, with the standard error interpolated alike.
struct Point {
    double value = 0.0;
    double std_error = std::numeric_limits<double>::quiet_NaN();
};

Point interpolate(const spectral::SpectrumEstimate& est, double f)
{
    const auto& sp = est.mean;
    if (sp.size() < 2 || f < sp.freq_hz.front() || f > sp.freq_hz.back()) {
        throw InsufficientSamples("analysis frequency lies outside the analyzer span");
    }
    const auto hi = static_cast<std::size_t>(std::upper_bound(sp.freq_hz.begin(), sp.freq_hz.end(), f) -
                                             sp.freq_hz.begin());
    const std::size_t j = std::min(hi, sp.size() - 1);
    const std::size_t i = j - 1;
    const double w = (f - sp.freq_hz[i]) / (sp.freq_hz[j] - sp.freq_hz[i]);
    Point p;
    p.value = (1.0 - w) * sp.psd[i] + w * sp.psd[j];
    if (est.count >= 2) {
        p.std_error = (1.0 - w) * est.std_error[i] + w * est.std_error[j];
    }
    return p;
}

struct Reading {
    double db = 0.0;
    double stderr_db = 0.0;
};

/// Ratio of two estimates at f in dB, with first-order error propagation.
Reading reading_at(const spectral::SpectrumEstimate& num, const spectral::SpectrumEstimate& den, double f)
{
    const auto a = interpolate(num, f);
    const auto b = interpolate(den, f);
    const double ra = a.std_error / a.value;
    const double rb = b.std_error / b.value;
    return {core::variance_to_db(a.value / b.value), 10.0 / std::log(10.0) * std::sqrt(ra * ra + rb * rb)};
}

double safe_correct(const core::CorrectionInputs& in)
{
    try {
        return core::correct_squeezing(in);
    } catch (const UnphysicalCorrection&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

dynamics::OutputTrace simulate(const Scenario& s, const dynamics::OpoParams& p, std::size_t t)
{
    dynamics::SimulationOptions o;
    o.dt = s.sample_dt();
    o.samples = sample_count(s, o.dt);
    o.scheme = s.scheme;
    o.technical_noise = s.technical_noise;
    o.record_phase = true;
    o.seed = s.seed;
    o.trajectory = t;
    if (!s.servo.engaged) {
        return dynamics::simulate_output(p, o);
    }
    auto loop = s.servo.pdll();
    return dynamics::simulate_output(p, o, servo::make_pdll_controller(loop, p.frequency_difference_hz));
}

/// LO pair resonant with the beams, with rho = alpha^2 / beta^2.
std::pair<detection::LocalOscillator, detection::LocalOscillator> lo_pair(const Scenario& s,
                                                                          detection::BeamTrace& b1,
                                                                          detection::BeamTrace& b2)
{
    double beta = 1.0;
    if (s.detection.rho > 0.0) {
        beta = b1.alpha / std::sqrt(s.detection.rho);
    } else {
        b1.alpha = 0.0;
        b2.alpha = 0.0;
    }
    return detection::synthesize_lo_pair(s.detection.aom_drive_hz, beta, pi / 2, pi / 2);
}

std::vector<spectral::NoiseSpectrum> column(const std::vector<std::vector<spectral::NoiseSpectrum>>& rows,
                                            std::size_t k)
{
    std::vector<spectral::NoiseSpectrum> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        out.push_back(r[k]);
    }
    return out;
}

spectral::NoiseSpectrum flat_reference(const spectral::NoiseSpectrum& like, double level)
{
    spectral::NoiseSpectrum ref = like;
    std::fill(ref.psd.begin(), ref.psd.end(), level);
    ref.db_rel_snl.clear();
    ref.below_floor.clear();
    ref.has_reference = false;
    return ref;
}

struct Output {
    std::filesystem::path dir;
    std::string stem;
    std::vector<std::filesystem::path> written;

    template <class Data>
    void csv(const std::string& suffix, const Data& d)
    {
        const auto path = dir / (stem + suffix + ".csv");
        csv::emit_csv(path, d);
        written.push_back(path);
    }
    void report(const Headline& h)
    {
        const auto path = dir / (stem + "_report.csv");
        csv::emit_report_csv(path, h);
        written.push_back(path);
    }
};

Headline run_beatnote(const Scenario& s, const RunOptions& opts, Output& out)
{
    const auto p = s.opo.params();
    const auto loop = s.servo.pdll();
    servo::check_stability(loop, s.servo.dt_s);

    auto a = s.analyzer.settings();
    const double span = std::max(std::abs(a.f_start_hz), std::abs(a.f_stop_hz));
    std::size_t stride = 1;
    if (std::isfinite(span) && span > 0.0) {
        stride = std::max<std::size_t>(1, static_cast<std::size_t>(1.0 / (2.5 * span * s.servo.dt_s)));
    }

    struct Result {
        servo::LockReport report;
        spectral::NoiseSpectrum beat;
    };
    const auto results = runner::run_ensemble<Result>(s.trajectories, opts.workers, [&](std::size_t t) {
        servo::LockOptions o;
        o.dt = s.servo.dt_s;
        o.settle_s = s.servo.settle_s;
        o.gate_s = s.servo.gate_s;
        o.seed = s.seed;
        o.trajectory = t;
        o.record_every = stride;
        o.detector_noise_rms = s.servo.loop_noise_rms;
        auto run = servo::run_locked(p, loop, s.duration_s, o);
        const auto env = servo::beat_envelope(run.phi_diff);
        auto settings = a;
        if (s.analyzer.averages == 0) {
            settings.averages =
                static_cast<int>(std::max<std::size_t>(1, spectral::max_averages(env.size(), run.record_dt, a)));
        }
        return Result{run.report, spectral::welch_psd(std::span<const std::complex<double>>(env), run.record_dt,
                                                      settings)};
    });

    std::vector<spectral::NoiseSpectrum> beats;
    double locked = 0.0;
    double free = 0.0;
    double rms = 0.0;
    double slips = 0.0;
    bool all_locked = true;
    for (const auto& r : results) {
        beats.push_back(r.beat);
        locked += r.report.residual_freq_error_hz;
        free += r.report.free_running_freq_error_hz;
        rms += r.report.residual_phase_rms;
        slips += static_cast<double>(r.report.cycle_slips);
        all_locked = all_locked && r.report.locked;
    }
    const double n = static_cast<double>(results.size());
    locked /= n;
    free /= n;
    rms /= n;

    auto beat = spectral::average_spectra(beats).mean;
    double peak = 0.0;
    for (double v : beat.psd) {
        peak = std::max(peak, v);
    }
    std::size_t above = 0;
    for (double v : beat.psd) {
        above += v >= 0.5 * peak ? 1 : 0;
    }
    const double spacing = beat.size() > 1 ? beat.freq_hz[1] - beat.freq_hz[0] : 0.0;
    beat.db_rel_snl.resize(beat.size());
    for (std::size_t i = 0; i < beat.size(); ++i) {
        beat.freq_hz[i] += loop.reference_hz;
        beat.db_rel_snl[i] = 10.0 * std::log10(beat.psd[i]);
    }
    out.csv("", beat);

    const auto orders = servo::suppression_orders(free, locked);
    return {
        {"pdll_engaged", loop.engaged ? 1.0 : 0.0},
        {"locked", all_locked && loop.engaged ? 1.0 : 0.0},
        {"lock_residual_hz", locked},
        {"free_running_error_hz", free},
        {"suppression_orders", orders.value_or(std::numeric_limits<double>::quiet_NaN())},
        {"residual_phase_rms_rad", rms},
        {"cycle_slips", slips},
        {"beat_linewidth_hz", static_cast<double>(above) * spacing},
    };
}

Headline run_intensity_diff(const Scenario& s, const RunOptions& opts, Output& out)
{
    const auto p = s.opo.params();
    const auto chain = s.detection.chain();
    const double dt = s.sample_dt();
    const auto settings = settings_for(s, sample_count(s, dt), dt);

    const auto rows = runner::run_ensemble<std::vector<spectral::NoiseSpectrum>>(
        s.trajectories, opts.workers, [&](std::size_t t) {
            const auto trace = simulate(s, p, t);
            const auto [b1, b2] = detection::split_beams(trace);
            detection::DetectionNoise noise(s.seed, t);
            const auto direct = detection::direct_detect_difference(b1, b2, chain, noise);
            const auto snl = detection::snl_calibrate_45deg(b1, b2, chain, noise);
            const auto floor = detection::electronic_floor_trace(b1.size(), chain, noise);
            return std::vector<spectral::NoiseSpectrum>{spectral::welch_psd(direct, dt, settings),
                                                        spectral::welch_psd(snl, dt, settings),
                                                        spectral::welch_psd(floor, dt, settings)};
        });

    const auto direct = spectral::average_spectra(column(rows, 0));
    const auto snl = spectral::average_spectra(column(rows, 1));
    const auto floor = spectral::average_spectra(column(rows, 2));
    const double floor_psd = chain.floor_psd();
    const auto rel = spectral::relative_to_snl(direct.mean, snl.mean, floor_psd);
    const auto snl_rel = spectral::relative_to_snl(snl.mean, flat_reference(snl.mean, chain.eta + floor_psd));
    const auto floor_rel = spectral::relative_to_snl(floor.mean, snl.mean);
    out.csv("", rel);
    out.csv("_snl", snl_rel);
    out.csv("_electronic", floor_rel);

    const auto minus = reading_at(direct, snl, s.analysis_hz);
    double flatness = 0.0;
    for (double v : snl_rel.db_rel_snl) {
        flatness = std::max(flatness, std::abs(v));
    }
    return {
        {"analysis_hz", s.analysis_hz},
        {"s_minus_db", minus.db},
        {"s_minus_stderr_db", minus.stderr_db},
        {"s_minus_model_db", predict(s).s_minus_db},
        {"snl_max_deviation_db", flatness},
        {"electronic_floor_db", reading_at(floor, snl, s.analysis_hz).db},
    };
}

Headline run_phase_sum_scan(const Scenario& s, const RunOptions& opts, Output& out)
{
    const auto p = s.opo.params();
    const auto chain = s.detection.chain();
    const double dt = s.sample_dt();
    const std::size_t n = sample_count(s, dt);
    auto settings = s.analyzer.settings();
    settings.center_hz = s.analysis_hz;

    struct Result {
        spectral::ZeroSpanTrace scan;
        double snl = 0.0;
    };
    const auto results = runner::run_ensemble<Result>(s.trajectories, opts.workers, [&](std::size_t t) {
        const auto trace = simulate(s, p, t);
        auto [b1, b2] = detection::split_beams(trace);
        const auto [lo1, lo2] = lo_pair(s, b1, b2);
        detection::DetectionNoise noise(s.seed, t);
        NoiseStream qll(s.seed, t, Channel::QuadratureLock);
        const auto scan = servo::qll_scan(s.servo.scan_start_rad, s.servo.scan_stop_rad, s.duration_s, dt, n);
        const auto hold = servo::qll_hold(pi / 2, s.servo.qll_jitter_rad, dt, n, s.servo.qll_correlation_s, qll);
        Result r;
        r.scan = detection::quadrature_scan_trace(b1, b2, lo1, lo2, chain, noise, scan.theta, hold.theta,
                                                  s.analysis_hz, settings, 1.0);
        NoiseStream vac(s.seed, t, Channel::ShotNoiseReference);
        const auto v1 = detection::vacuum_like(b1, vac);
        const auto v2 = detection::vacuum_like(b2, vac);
        const auto sn = detection::bhd_sum_current(v1, v2, lo1, lo2, chain, noise);
        const auto z = spectral::zero_span(sn, dt, s.analysis_hz, settings);
        for (double v : z.power) {
            r.snl += v;
        }
        r.snl /= static_cast<double>(z.size());
        return r;
    });

    spectral::ZeroSpanTrace avg = results.front().scan;
    double snl = 0.0;
    for (std::size_t k = 0; k < avg.size(); ++k) {
        double sum = 0.0;
        for (const auto& r : results) {
            sum += r.scan.power[k];
        }
        avg.power[k] = sum / static_cast<double>(results.size());
    }
    for (const auto& r : results) {
        snl += r.snl;
    }
    snl /= static_cast<double>(results.size());
    spectral::attach_snl(avg, snl);
    out.csv("", avg);

    const auto fit = fit_scan(avg.theta_rad, avg.power);
    return {
        {"snl_psd", snl},
        {"theta_min_rad", fit.theta_min},
        {"min_db", core::variance_to_db(fit.min_value)},
        {"db_at_theta0", core::variance_to_db(fit(0.0))},
        {"s_plus_raw_model_db", predict(s).s_plus_raw_db},
    };
}

Headline run_entanglement_report(const Scenario& s, const RunOptions& opts, Output& out)
{
    const auto p = s.opo.params();
    const auto chain = s.detection.chain();
    const double dt = s.sample_dt();
    const std::size_t n = sample_count(s, dt);
    const auto settings = settings_for(s, n, dt);

    const auto rows = runner::run_ensemble<std::vector<spectral::NoiseSpectrum>>(
        s.trajectories, opts.workers, [&](std::size_t t) {
            const auto trace = simulate(s, p, t);
            auto [b1, b2] = detection::split_beams(trace);
            detection::DetectionNoise noise(s.seed, t);
            const auto direct = detection::direct_detect_difference(b1, b2, chain, noise);
            const auto snl45 = detection::snl_calibrate_45deg(b1, b2, chain, noise);

            const auto [lo1, lo2] = lo_pair(s, b1, b2);
            NoiseStream qll(s.seed, t, Channel::QuadratureLock);
            const auto th1 = servo::qll_hold(pi / 2, s.servo.qll_jitter_rad, dt, n, s.servo.qll_correlation_s, qll);
            const auto th2 = servo::qll_hold(pi / 2, s.servo.qll_jitter_rad, dt, n, s.servo.qll_correlation_s, qll);
            const auto bhd = detection::bhd_sum_current(b1, b2, lo1, lo2, chain, noise, th1.theta, th2.theta);
            NoiseStream vac(s.seed, t, Channel::ShotNoiseReference);
            const auto v1 = detection::vacuum_like(b1, vac);
            const auto v2 = detection::vacuum_like(b2, vac);
            const auto bhd_sn = detection::bhd_sum_current(v1, v2, lo1, lo2, chain, noise, th1.theta, th2.theta);
            return std::vector<spectral::NoiseSpectrum>{
                spectral::welch_psd(direct, dt, settings), spectral::welch_psd(snl45, dt, settings),
                spectral::welch_psd(bhd, dt, settings), spectral::welch_psd(bhd_sn, dt, settings)};
        });

    const auto direct = spectral::average_spectra(column(rows, 0));
    const auto snl45 = spectral::average_spectra(column(rows, 1));
    const auto bhd = spectral::average_spectra(column(rows, 2));
    const auto bhd_sn = spectral::average_spectra(column(rows, 3));
    const double floor_psd = chain.floor_psd();
    const auto minus = spectral::relative_to_snl(direct.mean, snl45.mean, floor_psd);
    const auto plus = spectral::relative_to_snl(bhd.mean, bhd_sn.mean, floor_psd);
    out.csv("_s_minus", minus);
    out.csv("_s_plus", plus);

    const auto m = reading_at(direct, snl45, s.analysis_hz);
    const auto r = reading_at(bhd, bhd_sn, s.analysis_hz);
    const double s_minus = m.db;
    const double raw = r.db;
    const double full = safe_correct(core::CorrectionInputs::from_contrasts(raw, chain.rho, chain.eta, chain.c1, chain.c2));
    const double rho_only = safe_correct(core::CorrectionInputs::rho_only(raw, chain.rho));
    const auto model = predict(s);
    return {
        {"analysis_hz", s.analysis_hz},
        {"s_minus_db", s_minus},
        {"s_minus_stderr_db", m.stderr_db},
        {"s_plus_raw_db", raw},
        {"s_plus_raw_stderr_db", r.stderr_db},
        {"s_plus_corrected_db", full},
        {"s_plus_corrected_rho_only_db", rho_only},
        {"duan_simon", core::duan_simon(s_minus, rho_only)},
        {"duan_simon_full_correction", core::duan_simon(s_minus, full)},
        {"s_minus_model_db", model.s_minus_db},
        {"s_plus_raw_model_db", model.s_plus_raw_db},
        {"s_plus_corrected_model_db", model.s_plus_corrected_db},
        {"s_plus_rho_only_model_db", model.s_plus_rho_only_db},
        {"duan_simon_model", model.duan_simon},
    };
}

Headline run_calibrate(const Scenario& s, Output& out)
{
    const Scenario c = calibrated(s);
    const auto p = c.opo.params();
    const auto a = c.analyzer.settings();
    const double step = a.point_spacing_hz > 0.0 ? a.point_spacing_hz : a.rbw_hz;
    const double stop = std::isfinite(a.f_stop_hz) ? a.f_stop_hz : 10.0 * c.opo.cavity_hwhm_hz;
    std::vector<double> omega;
    for (double f = a.f_start_hz; f <= stop * (1.0 + 1e-12); f += step) {
        omega.push_back(2.0 * pi * f);
    }
    for (auto m : dynamics::kAllModes) {
        auto sp = dynamics::analytic_spectrum(m, p, omega);
        sp.db_rel_snl.resize(sp.size());
        for (std::size_t i = 0; i < sp.size(); ++i) {
            sp.db_rel_snl[i] = core::variance_to_db(sp.psd[i]);
        }
        out.csv("_" + std::string(dynamics::to_string(m)), sp);
    }
    const auto ini = out.dir / (out.stem + ".ini");
    std::ofstream os(ini, std::ios::binary | std::ios::trunc);
    os << serialize_scenario(c);
    if (!os.flush()) {
        throw std::runtime_error("write failed for " + ini.string());
    }
    out.written.push_back(ini);

    const auto model = predict(c);
    const auto depth = [&](JointMode m) { return c.opo.depth[static_cast<std::size_t>(m)]; };
    return {
        {"amplitude_difference_depth", depth(JointMode::AmplitudeDifference)},
        {"phase_sum_depth", depth(JointMode::PhaseSum)},
        {"s_minus_model_db", model.s_minus_db},
        {"s_plus_raw_model_db", model.s_plus_raw_db},
        {"s_plus_corrected_model_db", model.s_plus_corrected_db},
        {"s_plus_rho_only_model_db", model.s_plus_rho_only_db},
        {"duan_simon_model", model.duan_simon},
    };
}

} // namespace

RunReport run(const Scenario& s, const RunOptions& opts)
{
    s.validate();
    const auto start = std::chrono::steady_clock::now();
    std::error_code ec;
    std::filesystem::create_directories(opts.out_dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory " + opts.out_dir.string() + ": " + ec.message());
    }

    Output out{opts.out_dir, std::string(to_string(s.name)), {}};
    Headline headline;
    switch (s.name) {
    case ScenarioName::Beatnote:
        headline = run_beatnote(s, opts, out);
        break;
    case ScenarioName::IntensityDiff:
        headline = run_intensity_diff(s, opts, out);
        break;
    case ScenarioName::PhaseSumScan:
        headline = run_phase_sum_scan(s, opts, out);
        break;
    case ScenarioName::EntanglementReport:
        headline = run_entanglement_report(s, opts, out);
        break;
    case ScenarioName::Calibrate:
        headline = run_calibrate(s, out);
        break;
    }
    out.report(headline);

    RunReport r;
    r.scenario = s;
    r.headline = std::move(headline);
    r.csv_paths = std::move(out.written);
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

RunReport run(const std::filesystem::path& config, const RunOptions& opts)
{
    return run(load_scenario(config), opts);
}

void print_report(std::ostream& os, const RunReport& r)
{
    os << "scenario: " << to_string(r.scenario.name) << "\n";
    os << "seed: " << r.scenario.seed << "\n";
    os << "trajectories: " << r.scenario.trajectories << "\n";
    for (const auto& [k, v] : r.headline) {
        os << "  " << k << " = " << csv::format_double(v) << "\n";
    }
    for (const auto& p : r.csv_paths) {
        os << "wrote " << p.string() << "\n";
    }
    os << "wall time: " << r.wall_time_s << " s\n";
}

} // namespace opo::harness
