#include "opo/scenario.hpp"

#include "opo/csv.hpp"
#include "opo/errors.hpp"
#include "opo/model_core.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace opo::harness {

using dynamics::JointMode;
using std::numbers::pi;

namespace {

constexpr std::array<std::pair<ScenarioName, std::string_view>, 5> kNames{{
    {ScenarioName::Beatnote, "beatnote"},
    {ScenarioName::IntensityDiff, "intensity_diff"},
    {ScenarioName::PhaseSumScan, "phase_sum_scan"},
    {ScenarioName::EntanglementReport, "entanglement_report"},
    {ScenarioName::Calibrate, "calibrate"},
}};

} // namespace

std::string_view to_string(ScenarioName n)
{
    for (const auto& [k, v] : kNames) {
        if (k == n) {
            return v;
        }
    }
    return "unknown";
}

ScenarioName parse_scenario_name(std::string_view s)
{
    for (const auto& [k, v] : kNames) {
        if (v == s) {
            return k;
        }
    }
    throw ConfigError("unknown scenario '" + std::string(s) +
                      "' (expected beatnote, intensity_diff, phase_sum_scan, entanglement_report or calibrate)");
}

dynamics::OpoParams OpoConfig::params() const
{
    dynamics::OpoParams p = dynamics::OpoParams::uncalibrated_defaults();
    p.gamma_c = 2.0 * pi * cavity_hwhm_hz;
    p.eta_esc = escape_efficiency;
    p.sigma = std::sqrt(pump_ratio);
    p.d_quantum = phase_diffusion_rad2_per_s;
    p.tech_drift_span_hz = drift_span_hz;
    p.drift_correlation_s = drift_correlation_s;
    p.frequency_difference_hz = frequency_difference_hz;
    p.pump_noise = {pump_noise_corner_hz, pump_noise_level, pump_noise_slope};
    p.pump_imbalance = pump_imbalance;
    p.backaction = backaction;
    p.wavelength_m = wavelength_m;
    p.reference_power_w = reference_power_w;
    p.reference_sigma = std::sqrt(reference_pump_ratio);
    for (std::size_t i = 0; i < dynamics::kModeCount; ++i) {
        p.modes[i] = dynamics::mode_for_depth(depth[i], 2.0 * pi * rate_hz[i], p.gamma_c);
    }
    return p;
}

detection::DetectionChain ChainConfig::chain() const
{
    return {eta, c1, c2, rho, electronic_noise_db};
}

servo::ServoLoop ServoConfig::pdll() const
{
    servo::ServoLoop loop;
    loop.reference_hz = reference_hz;
    loop.kp = kp;
    loop.ki = ki;
    loop.actuator_limit = actuator_limit;
    loop.engaged = engaged;
    return loop;
}

spectral::AnalyzerSettings AnalyzerConfig::settings() const
{
    spectral::AnalyzerSettings a;
    a.rbw_hz = rbw_hz;
    a.vbw_hz = vbw_hz;
    a.f_start_hz = f_start_hz;
    a.f_stop_hz = f_stop_hz;
    a.averages = std::max(1, averages);
    a.window = window;
    a.point_spacing_hz = point_spacing_hz;
    return a;
}

double Scenario::sample_dt() const
{
    return dt_s > 0.0 ? dt_s : 0.02 / (2.0 * pi * opo.cavity_hwhm_hz);
}

void Scenario::validate() const
{
    auto fail = [](const std::string& what) { throw ConfigError(what); };
    auto nested = [](std::string_view section, auto&& check) {
        try {
            check();
        } catch (const ServoUnstable&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(std::string(section) + ": " + e.what());
        }
    };

    if (trajectories < 1) {
        fail("scenario.trajectories must be >= 1");
    }
    if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
        fail("scenario.duration_s must be positive and finite");
    }
    if (!(dt_s >= 0.0) || !std::isfinite(dt_s)) {
        fail("scenario.dt_s must be >= 0 (0 selects the default step)");
    }
    if (!(analysis_hz > 0.0) || !std::isfinite(analysis_hz)) {
        fail("scenario.analysis_hz must be positive");
    }
    if (!std::isfinite(target_s_minus_db) || !std::isfinite(target_raw_s_plus_db)) {
        fail("scenario calibration targets must be finite");
    }

    nested("opo-dynamics", [&] {
        for (std::size_t i = 0; i < dynamics::kModeCount; ++i) {
            if (!(opo.rate_hz[i] > 0.0)) {
                throw DomainError(std::string(dynamics::to_string(dynamics::kAllModes[i])) +
                                  "_rate_hz must be positive");
            }
        }
        const auto p = opo.params();
        p.validate();
        if (name != ScenarioName::Beatnote && name != ScenarioName::Calibrate && sample_dt() > p.max_dt()) {
            std::ostringstream msg;
            msg << "scenario.dt_s = " << sample_dt() << " s exceeds the stable step 0.05/gamma_c = " << p.max_dt()
                << " s";
            throw StepSizeError(msg.str());
        }
    });
    nested("detection-chain", [&] {
        detection.chain().validate();
        if (!(detection.aom_drive_hz > 0.0)) {
            throw DomainError("aom_drive_hz must be positive");
        }
        if (!(detection.mode_cleaner_fsr_hz > 0.0) || !(detection.mode_cleaner_hwhm_hz[0] > 0.0) ||
            !(detection.mode_cleaner_hwhm_hz[1] > 0.0)) {
            throw DomainError("mode cleaner FSR and HWHM must be positive");
        }
    });
    nested("servo-loops", [&] {
        servo.pdll().validate();
        if (!(servo.dt_s > 0.0) || !(servo.settle_s >= 0.0) || !(servo.gate_s > 0.0)) {
            throw DomainError("dt_s and gate_s must be positive, settle_s >= 0");
        }
        if (!(servo.loop_noise_rms >= 0.0) || !(servo.qll_jitter_rad >= 0.0) || !(servo.qll_correlation_s > 0.0)) {
            throw DomainError("loop noise and QLL jitter must be >= 0 with a positive correlation time");
        }
    });
    nested("spectral-analysis", [&] {
        if (analyzer.averages < 0) {
            throw std::invalid_argument("averages must be >= 0 (0 uses every available segment)");
        }
        analyzer.settings().validate();
    });
}

double calibrate_difference_depth(const Scenario& s)
{
    const auto p = s.opo.params();
    const auto chain = s.detection.chain();
    const double eta = chain.eta;
    const double e = chain.floor_psd();
    const double reading = core::db_to_variance(s.target_s_minus_db);
    // reading = (eta (eta S + 1 - eta) + e) / (eta + e), solved for the output PSD S
    const double s_out = (reading * (eta + e) - e - eta * (1.0 - eta)) / (eta * eta);
    const double tech = p.tech_coupling(JointMode::AmplitudeDifference) * p.pump_noise.psd(s.analysis_hz);
    const auto& mode = p.mode(JointMode::AmplitudeDifference);
    return dynamics::depth_for_target(s_out - tech, 2.0 * pi * s.analysis_hz, mode.relaxation_rate, p.eta_esc);
}

double calibrate_phase_sum_depth(const Scenario& s)
{
    const auto p = s.opo.params();
    const auto chain = s.detection.chain();
    const double omega = 2.0 * pi * s.analysis_hz;
    std::array<double, dynamics::kModeCount> psd{};
    for (auto m : dynamics::kAllModes) {
        psd[static_cast<std::size_t>(m)] = dynamics::output_psd(p, m, omega);
    }
    const double alpha = std::sqrt(chain.rho);
    const double beta = 1.0;
    const auto at = [&](double v) {
        psd[static_cast<std::size_t>(JointMode::PhaseSum)] = v;
        return detection::bhd_sum_psd_model(psd, pi / 2, pi / 2, chain, alpha, beta);
    };
    // the homodyne reading is affine in the phase-sum PSD
    const double offset = at(0.0);
    const double slope = at(1.0) - offset;
    const double target = core::db_to_variance(s.target_raw_s_plus_db) * detection::bhd_snl_psd(chain);
    const double s_out = (target - offset) / slope;
    const double tech = p.tech_coupling(JointMode::PhaseSum) * p.pump_noise.psd(s.analysis_hz);
    const auto& mode = p.mode(JointMode::PhaseSum);
    return dynamics::depth_for_target(s_out - tech, omega, mode.relaxation_rate, p.eta_esc);
}

Scenario calibrated(Scenario s)
{
    auto& depth = s.opo.depth;
    depth[static_cast<std::size_t>(JointMode::AmplitudeDifference)] = calibrate_difference_depth(s);
    depth[static_cast<std::size_t>(JointMode::PhaseSum)] = calibrate_phase_sum_depth(s);
    for (double k : depth) {
        if (!(k <= 1.0)) {
            throw DomainError("calibration target needs a squeezing depth above 1 (unreachable)");
        }
    }
    return s;
}

Scenario experiment_defaults()
{
    Scenario s;
    s.opo.depth[static_cast<std::size_t>(JointMode::AmplitudeSum)] = -3.0;
    s.opo.depth[static_cast<std::size_t>(JointMode::PhaseDifference)] = -3.0;
    return calibrated(s);
}

// ---------------------------------------------------------------------------
// text format

namespace {

std::string fmt(double x) { return csv::format_double(x); }

double to_double(std::string_view v)
{
    double x = 0.0;
    const auto* first = v.data();
    const auto* last = v.data() + v.size();
    if (!v.empty() && *first == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, x);
    if (res.ec != std::errc() || res.ptr != last) {
        throw std::invalid_argument("expected a number, got '" + std::string(v) + "'");
    }
    return x;
}

std::uint64_t to_uint(std::string_view v)
{
    std::uint64_t x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw std::invalid_argument("expected a non-negative integer, got '" + std::string(v) + "'");
    }
    return x;
}

bool to_bool(std::string_view v)
{
    if (v == "true" || v == "yes" || v == "on" || v == "1") {
        return true;
    }
    if (v == "false" || v == "no" || v == "off" || v == "0") {
        return false;
    }
    throw std::invalid_argument("expected true or false, got '" + std::string(v) + "'");
}

std::string_view scheme_name(dynamics::Scheme s)
{
    return s == dynamics::Scheme::ExactOu ? "exact_ou" : "euler_maruyama";
}

dynamics::Scheme to_scheme(std::string_view v)
{
    if (v == "euler_maruyama") {
        return dynamics::Scheme::EulerMaruyama;
    }
    if (v == "exact_ou") {
        return dynamics::Scheme::ExactOu;
    }
    throw std::invalid_argument("expected euler_maruyama or exact_ou, got '" + std::string(v) + "'");
}

struct Field {
    std::string section;
    std::string key;
    std::function<void(Scenario&, std::string_view)> set;
    std::function<std::string(const Scenario&)> get;
};

Field number(std::string section, std::string key, double Scenario::*outer)
{
    return {std::move(section), std::move(key), [outer](Scenario& s, std::string_view v) { s.*outer = to_double(v); },
            [outer](const Scenario& s) { return fmt(s.*outer); }};
}

template <class Sub>
Field number(std::string section, std::string key, Sub Scenario::*sub, double Sub::*member)
{
    return {std::move(section), std::move(key),
            [sub, member](Scenario& s, std::string_view v) { (s.*sub).*member = to_double(v); },
            [sub, member](const Scenario& s) { return fmt((s.*sub).*member); }};
}

template <class Sub>
Field flag(std::string section, std::string key, Sub Scenario::*sub, bool Sub::*member)
{
    return {std::move(section), std::move(key),
            [sub, member](Scenario& s, std::string_view v) { (s.*sub).*member = to_bool(v); },
            [sub, member](const Scenario& s) { return std::string((s.*sub).*member ? "true" : "false"); }};
}

const std::vector<Field>& fields()
{
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        const std::string sc = "scenario";
        f.push_back({sc, "name", [](Scenario& s, std::string_view v) { s.name = parse_scenario_name(v); },
                     [](const Scenario& s) { return std::string(to_string(s.name)); }});
        f.push_back({sc, "seed", [](Scenario& s, std::string_view v) { s.seed = to_uint(v); },
                     [](const Scenario& s) { return std::to_string(s.seed); }});
        f.push_back(number(sc, "duration_s", &Scenario::duration_s));
        f.push_back({sc, "trajectories", [](Scenario& s, std::string_view v) { s.trajectories = to_uint(v); },
                     [](const Scenario& s) { return std::to_string(s.trajectories); }});
        f.push_back(number(sc, "dt_s", &Scenario::dt_s));
        f.push_back(number(sc, "analysis_hz", &Scenario::analysis_hz));
        f.push_back(number(sc, "target_s_minus_db", &Scenario::target_s_minus_db));
        f.push_back(number(sc, "target_raw_s_plus_db", &Scenario::target_raw_s_plus_db));
        f.push_back({sc, "scheme", [](Scenario& s, std::string_view v) { s.scheme = to_scheme(v); },
                     [](const Scenario& s) { return std::string(scheme_name(s.scheme)); }});
        f.push_back({sc, "technical_noise", [](Scenario& s, std::string_view v) { s.technical_noise = to_bool(v); },
                     [](const Scenario& s) { return std::string(s.technical_noise ? "true" : "false"); }});

        const std::string od = "opo-dynamics";
        const auto o = &Scenario::opo;
        f.push_back(number(od, "cavity_hwhm_hz", o, &OpoConfig::cavity_hwhm_hz));
        f.push_back(number(od, "escape_efficiency", o, &OpoConfig::escape_efficiency));
        f.push_back(number(od, "pump_ratio", o, &OpoConfig::pump_ratio));
        f.push_back(number(od, "phase_diffusion_rad2_per_s", o, &OpoConfig::phase_diffusion_rad2_per_s));
        f.push_back(number(od, "drift_span_hz", o, &OpoConfig::drift_span_hz));
        f.push_back(number(od, "drift_correlation_s", o, &OpoConfig::drift_correlation_s));
        f.push_back(number(od, "frequency_difference_hz", o, &OpoConfig::frequency_difference_hz));
        f.push_back(number(od, "pump_noise_corner_hz", o, &OpoConfig::pump_noise_corner_hz));
        f.push_back(number(od, "pump_noise_level", o, &OpoConfig::pump_noise_level));
        f.push_back(number(od, "pump_noise_slope", o, &OpoConfig::pump_noise_slope));
        f.push_back(number(od, "pump_imbalance", o, &OpoConfig::pump_imbalance));
        f.push_back(number(od, "backaction", o, &OpoConfig::backaction));
        f.push_back(number(od, "wavelength_m", o, &OpoConfig::wavelength_m));
        f.push_back(number(od, "reference_power_w", o, &OpoConfig::reference_power_w));
        f.push_back(number(od, "reference_pump_ratio", o, &OpoConfig::reference_pump_ratio));
        for (std::size_t i = 0; i < dynamics::kModeCount; ++i) {
            const std::string mode(dynamics::to_string(dynamics::kAllModes[i]));
            f.push_back({od, mode + "_depth", [i](Scenario& s, std::string_view v) { s.opo.depth[i] = to_double(v); },
                         [i](const Scenario& s) { return fmt(s.opo.depth[i]); }});
            f.push_back({od, mode + "_rate_hz",
                         [i](Scenario& s, std::string_view v) { s.opo.rate_hz[i] = to_double(v); },
                         [i](const Scenario& s) { return fmt(s.opo.rate_hz[i]); }});
        }

        const std::string sl = "servo-loops";
        const auto l = &Scenario::servo;
        f.push_back(flag(sl, "pdll_engaged", l, &ServoConfig::engaged));
        f.push_back(number(sl, "pdll_reference_hz", l, &ServoConfig::reference_hz));
        f.push_back(number(sl, "pdll_kp", l, &ServoConfig::kp));
        f.push_back(number(sl, "pdll_ki", l, &ServoConfig::ki));
        f.push_back(number(sl, "pdll_actuator_limit", l, &ServoConfig::actuator_limit));
        f.push_back(number(sl, "pdll_dt_s", l, &ServoConfig::dt_s));
        f.push_back(number(sl, "pdll_settle_s", l, &ServoConfig::settle_s));
        f.push_back(number(sl, "pdll_gate_s", l, &ServoConfig::gate_s));
        f.push_back(number(sl, "pdll_loop_noise_rms", l, &ServoConfig::loop_noise_rms));
        f.push_back(number(sl, "qll_jitter_rad", l, &ServoConfig::qll_jitter_rad));
        f.push_back(number(sl, "qll_correlation_s", l, &ServoConfig::qll_correlation_s));
        f.push_back(number(sl, "scan_start_rad", l, &ServoConfig::scan_start_rad));
        f.push_back(number(sl, "scan_stop_rad", l, &ServoConfig::scan_stop_rad));

        const std::string dc = "detection-chain";
        const auto d = &Scenario::detection;
        f.push_back(number(dc, "eta", d, &ChainConfig::eta));
        f.push_back(number(dc, "contrast_1", d, &ChainConfig::c1));
        f.push_back(number(dc, "contrast_2", d, &ChainConfig::c2));
        f.push_back(number(dc, "rho", d, &ChainConfig::rho));
        f.push_back(number(dc, "electronic_noise_db", d, &ChainConfig::electronic_noise_db));
        f.push_back(number(dc, "aom_drive_hz", d, &ChainConfig::aom_drive_hz));
        for (std::size_t j = 0; j < 2; ++j) {
            f.push_back({dc, "mode_cleaner_" + std::to_string(j + 1) + "_hwhm_hz",
                         [j](Scenario& s, std::string_view v) { s.detection.mode_cleaner_hwhm_hz[j] = to_double(v); },
                         [j](const Scenario& s) { return fmt(s.detection.mode_cleaner_hwhm_hz[j]); }});
        }
        f.push_back(number(dc, "mode_cleaner_fsr_hz", d, &ChainConfig::mode_cleaner_fsr_hz));

        const std::string sa = "spectral-analysis";
        const auto a = &Scenario::analyzer;
        f.push_back(number(sa, "rbw_hz", a, &AnalyzerConfig::rbw_hz));
        f.push_back(number(sa, "vbw_hz", a, &AnalyzerConfig::vbw_hz));
        f.push_back(number(sa, "f_start_hz", a, &AnalyzerConfig::f_start_hz));
        f.push_back(number(sa, "f_stop_hz", a, &AnalyzerConfig::f_stop_hz));
        f.push_back({sa, "averages",
                     [](Scenario& s, std::string_view v) {
                         const auto n = to_uint(v);
                         if (n > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
                             throw std::invalid_argument("averages out of range");
                         }
                         s.analyzer.averages = static_cast<int>(n);
                     },
                     [](const Scenario& s) { return std::to_string(s.analyzer.averages); }});
        f.push_back({sa, "window",
                     [](Scenario& s, std::string_view v) { s.analyzer.window = spectral::parse_window(v); },
                     [](const Scenario& s) { return spectral::to_string(s.analyzer.window); }});
        f.push_back(number(sa, "point_spacing_hz", a, &AnalyzerConfig::point_spacing_hz));
        return f;
    }();
    return table;
}

/// Line number of each "section.key" and section header, for diagnostics.
std::map<std::string, int> line_index(std::string_view text)
{
    std::map<std::string, int> lines;
    std::string section;
    int n = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++n;
        const auto b = raw.find_first_not_of(" \t\r");
        if (b == std::string::npos || raw[b] == ';' || raw[b] == '#') {
            continue;
        }
        const auto e = raw.find_last_not_of(" \t\r");
        const std::string line = raw.substr(b, e - b + 1);
        if (line.front() == '[' && line.back() == ']') {
            section = line.substr(1, line.size() - 2);
            lines.emplace("[" + section + "]", n);
            continue;
        }
        const auto eq = line.find('=');
        if (eq != std::string::npos) {
            auto key = line.substr(0, eq);
            key.erase(key.find_last_not_of(" \t") + 1);
            lines.emplace(section + "." + key, n);
        }
    }
    return lines;
}

std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

} // namespace

Scenario parse_scenario(std::string_view text, std::string_view origin)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in{std::string(text)};
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string(origin) + ":" + std::to_string(e.line()) + ": " + e.message());
    }

    const auto lines = line_index(text);
    auto where = [&](const std::string& id) {
        const auto it = lines.find(id);
        return std::string(origin) + (it != lines.end() ? ":" + std::to_string(it->second) : "") + ": ";
    };

    auto known = [](const std::string& section) {
        return std::any_of(fields().begin(), fields().end(), [&](const Field& f) { return f.section == section; });
    };
    // the ptree drops sections without keys
    for (const auto& [id, line] : lines) {
        if (id.front() == '[' && !known(id.substr(1, id.size() - 2))) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(line) + ": unknown section " + id);
        }
    }

    Scenario s = experiment_defaults();
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError(where(section) + "key '" + section + "' outside of any section");
        }
        if (!known(section)) {
            throw ConfigError(where("[" + section + "]") + "unknown section [" + section + "]");
        }
        for (const auto& [key, node] : body) {
            const std::string id = section + "." + key;
            const auto it = std::find_if(fields().begin(), fields().end(),
                                         [&](const Field& f) { return f.section == section && f.key == key; });
            if (it == fields().end()) {
                throw ConfigError(where(id) + "unknown field " + id);
            }
            try {
                it->set(s, trim(node.data()));
            } catch (const std::exception& e) {
                throw ConfigError(where(id) + id + ": " + e.what());
            }
        }
    }
    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read config " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str(), path.string());
}

std::string serialize_scenario(const Scenario& s)
{
    std::ostringstream os;
    std::string section;
    for (const auto& f : fields()) {
        if (f.section != section) {
            if (!section.empty()) {
                os << '\n';
            }
            section = f.section;
            os << '[' << section << "]\n";
        }
        os << f.key << " = " << f.get(s) << '\n';
    }
    return os.str();
}

} // namespace opo::harness
