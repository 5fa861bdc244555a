#pragma once

// Scenario configuration, validation and execution for the command-line
// runner. One scenario per config file; sections mirror the module names.

#include "opo/detection.hpp"
#include "opo/opo_dynamics.hpp"
#include "opo/servo.hpp"
#include "opo/spectral.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace opo::harness {

enum class ScenarioName { Beatnote, IntensityDiff, PhaseSumScan, EntanglementReport, Calibrate };

std::string_view to_string(ScenarioName n);
ScenarioName parse_scenario_name(std::string_view s);

/// OPO parameters in configuration units (Hz, pump ratio, squeezing depth).
struct OpoConfig {
    double cavity_hwhm_hz = 4e6;
    double escape_efficiency = 0.9;
    double pump_ratio = 1.05; ///< P / P_th
    double phase_diffusion_rad2_per_s = 0.02;
    double drift_span_hz = 150e3;
    double drift_correlation_s = 1.0;
    double frequency_difference_hz = 161.827324e6;
    double pump_noise_corner_hz = 1.5e6;
    double pump_noise_level = 10.0;
    double pump_noise_slope = 2.0;
    double pump_imbalance = 0.1;
    double backaction = 0.0;
    double wavelength_m = 1064e-9;
    double reference_power_w = 2.8e-3;
    double reference_pump_ratio = 1.05;
    std::array<double, dynamics::kModeCount> depth{}; ///< K per joint mode, indexed by JointMode
    std::array<double, dynamics::kModeCount> rate_hz{4e6, 4e6, 4e6, 4e6};

    dynamics::OpoParams params() const;
    bool operator==(const OpoConfig&) const = default;
};

struct ChainConfig {
    double eta = 0.95;
    double c1 = 0.986;
    double c2 = 0.928;
    double rho = 2.8 / 6.5;
    double electronic_noise_db = -15.0;
    double aom_drive_hz = 80.913662e6;
    std::array<double, 2> mode_cleaner_hwhm_hz{160e3, 170e3};
    double mode_cleaner_fsr_hz = 53.942441e6;

    detection::DetectionChain chain() const;
    bool operator==(const ChainConfig&) const = default;
};

struct ServoConfig {
    bool engaged = true;
    double reference_hz = 161.827324e6;
    double kp = 2.0 * std::numbers::pi * 100e3;
    double ki = kp * kp / 4.0;
    double actuator_limit = 2.0 * std::numbers::pi * 5e6;
    double dt_s = 1e-6;
    double settle_s = 0.1;
    double gate_s = 1.0;
    double loop_noise_rms = 0.0;
    double qll_jitter_rad = 0.0;
    double qll_correlation_s = 1e-4;
    double scan_start_rad = 0.0;
    double scan_stop_rad = std::numbers::pi;

    servo::ServoLoop pdll() const;
    bool operator==(const ServoConfig&) const = default;
};

struct AnalyzerConfig {
    double rbw_hz = 100e3;
    double vbw_hz = std::numeric_limits<double>::infinity();
    double f_start_hz = 100e3;
    double f_stop_hz = 10e6;
    int averages = 0; ///< 0 uses every segment the trace supplies
    spectral::Window window = spectral::Window::Hann;
    double point_spacing_hz = 0.0;

    spectral::AnalyzerSettings settings() const;
    bool operator==(const AnalyzerConfig&) const = default;
};

struct Scenario {
    ScenarioName name = ScenarioName::EntanglementReport;
    std::uint64_t seed = 1;
    double duration_s = 1e-3; ///< per trajectory
    std::size_t trajectories = 8;
    double dt_s = 0.0;        ///< 0 selects 0.02 / gamma_c
    double analysis_hz = 1.7e6;
    double target_s_minus_db = -3.0;
    double target_raw_s_plus_db = -0.9;
    dynamics::Scheme scheme = dynamics::Scheme::EulerMaruyama;
    bool technical_noise = true;
    OpoConfig opo;
    ChainConfig detection;
    ServoConfig servo;
    AnalyzerConfig analyzer;

    void validate() const;
    double sample_dt() const;
    bool operator==(const Scenario&) const = default;
};

/// Defaults with the squeezing depths calibrated to the reference readings.
Scenario experiment_defaults();

/// Depth of the amplitude-difference mode giving target_s_minus_db on direct
/// detection at analysis_hz, through the configured chain and pump noise.
double calibrate_difference_depth(const Scenario& s);
/// Depth of the phase-sum mode giving target_raw_s_plus_db on the homodyne sum
/// at theta1 = theta2 = pi/2 through the configured chain.
double calibrate_phase_sum_depth(const Scenario& s);
/// Both calibrations applied; anti-squeezed modes are left unchanged.
Scenario calibrated(Scenario s);

/// Closed-form readings implied by a scenario at its analysis frequency.
struct ModelPrediction {
    double s_minus_db = 0.0;         ///< direct detection over the 45 degree SNL
    double s_plus_raw_db = 0.0;      ///< homodyne sum at theta1 = theta2 = pi/2 over its SNL
    double s_plus_corrected_db = 0.0;
    double s_plus_rho_only_db = 0.0;
    double duan_simon = 0.0;         ///< from s_minus_db and s_plus_rho_only_db
};

ModelPrediction predict(const Scenario& s);

/// Least-squares fit of a quadrature scan on {1, cos t, sin t, cos 2t, sin 2t}.
struct ScanFit {
    std::array<double, 5> coeff{};
    double theta_min = 0.0; ///< location of the fitted minimum in [0, pi]
    double min_value = 0.0;

    double operator()(double theta) const;
};

ScanFit fit_scan(std::span<const double> theta, std::span<const double> power);

/// Parses config text. Errors are ConfigError with line and field names.
Scenario parse_scenario(std::string_view text, std::string_view origin = "<config>");
Scenario load_scenario(const std::filesystem::path& path);
std::string serialize_scenario(const Scenario& s);

struct RunOptions {
    std::filesystem::path out_dir = ".";
    unsigned workers = 0;
};

struct RunReport {
    Scenario scenario;
    std::vector<std::pair<std::string, double>> headline;
    std::vector<std::filesystem::path> csv_paths;
    double wall_time_s = 0.0;

    double value(std::string_view key) const;
};

RunReport run(const Scenario& s, const RunOptions& opts);
RunReport run(const std::filesystem::path& config, const RunOptions& opts);

void print_report(std::ostream& os, const RunReport& r);

} // namespace opo::harness
