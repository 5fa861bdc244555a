#include "opo/detection.hpp"
#include "opo/errors.hpp"
#include "opo/model_core.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace opo::detection;
using opo::dynamics::JointMode;
using opo::dynamics::OpoParams;
using std::numbers::pi;

namespace {

constexpr double beat = 161.827324e6;

double variance(const std::vector<double>& x)
{
    double m = 0.0;
    for (double v : x) {
        m += v;
    }
    m /= double(x.size());
    double s = 0.0;
    for (double v : x) {
        s += (v - m) * (v - m);
    }
    return s / double(x.size());
}

OpoParams squeezed()
{
    auto p = OpoParams::uncalibrated_defaults();
    using opo::dynamics::mode_for_depth;
    p.mode(JointMode::AmplitudeDifference) = mode_for_depth(0.7, p.gamma_c, p.gamma_c);
    p.mode(JointMode::PhaseSum) = mode_for_depth(0.6, p.gamma_c, p.gamma_c);
    p.mode(JointMode::AmplitudeSum) = mode_for_depth(-3.0, p.gamma_c, p.gamma_c);
    p.mode(JointMode::PhaseDifference) = mode_for_depth(-3.0, p.gamma_c, p.gamma_c);
    return p;
}

opo::dynamics::OutputTrace simulate(const OpoParams& p, std::size_t n, std::uint64_t seed)
{
    opo::dynamics::SimulationOptions o;
    o.dt = p.max_dt();
    o.samples = n;
    o.scheme = opo::dynamics::Scheme::ExactOu;
    o.technical_noise = false;
    o.seed = seed;
    return opo::dynamics::simulate_output(p, o);
}

} // namespace

TEST_CASE("mode cleaner passes both AOM-shifted carriers")
{
    const double drive = beat / 2;
    const auto mc = ModeCleaner::for_aom(drive, 170e3);
    CHECK(mc.fsr_hz == doctest::Approx(53.942441e6).epsilon(1e-8));
    const auto ok = mode_cleaner_resonance_check(mc, -drive, drive);
    CHECK(ok.resonant);
    CHECK(ok.multiple == 3);
    CHECK(std::abs(ok.residual_hz) < 1.0);

    const auto off = mode_cleaner_resonance_check(mc, 0.0, 1.5 * mc.fsr_hz);
    CHECK_FALSE(off.resonant);

    CHECK(mc.transmission(0.0) == doctest::Approx(1.0));
    CHECK(mc.transmission(170e3) == doctest::Approx(0.5));
    CHECK(mc.transmission(mc.fsr_hz) == doctest::Approx(1.0));
    CHECK(mc.transmission(mc.fsr_hz / 2) < 1e-4);

    const auto [lo1, lo2] = synthesize_lo_pair(drive, 3.0, 0.1, 0.2);
    CHECK(lo1.carrier_hz == doctest::Approx(drive));
    CHECK(lo2.carrier_hz == doctest::Approx(-drive));
    CHECK(lo1.amplitude == 3.0);
    CHECK(lo2.phase == 0.2);
}

TEST_CASE("chain defaults and validation")
{
    const auto c = DetectionChain::experiment_defaults();
    CHECK(c.floor_psd() == doctest::Approx(std::pow(10.0, -1.5)));
    CHECK(c.eta1() == doctest::Approx(0.986 * 0.986));
    CHECK(DetectionChain::ideal(0.4).floor_psd() == 0.0);
    CHECK(bhd_snl_psd(c) == doctest::Approx(0.95 + std::pow(10.0, -1.5)));
    DetectionChain bad;
    bad.eta = 0.0;
    CHECK_THROWS_AS(bad.validate(), opo::DomainError);
    bad = c;
    bad.c2 = 1.2;
    CHECK_THROWS_AS(bad.validate(), opo::DomainError);
}

TEST_CASE("shot-noise-limited beams read eta plus the floor")
{
    const auto p = OpoParams::uncalibrated_defaults();
    const auto out = simulate(p, 200000, 1);
    auto [b1, b2] = split_beams(out);
    CHECK(b1.carrier_hz == doctest::Approx(beat / 2));
    CHECK(b2.carrier_hz == doctest::Approx(-beat / 2));
    CHECK(b1.alpha == doctest::Approx(out.mean.alpha));

    const auto chain = DetectionChain::experiment_defaults();
    DetectionNoise n1(5, 0);
    CHECK(variance(direct_detect_difference(b1, b2, chain, n1)) ==
          doctest::Approx(chain.eta + chain.floor_psd()).epsilon(0.02));
    CHECK(variance(electronic_floor_trace(200000, chain, n1)) == doctest::Approx(chain.floor_psd()).epsilon(0.02));

    auto faint = chain;
    faint.eta = 1e-6;
    CHECK(variance(direct_detect_difference(b1, b2, faint, n1)) ==
          doctest::Approx(chain.floor_psd()).epsilon(0.02));
}

TEST_CASE("polarization rotation of twin beams")
{
    const auto p = squeezed();
    const auto out = simulate(p, 200000, 2);
    const auto [b1, b2] = split_beams(out);
    const auto chain = DetectionChain::experiment_defaults();

    DetectionNoise na(9, 0);
    DetectionNoise nb(9, 0);
    const auto direct = direct_detect_difference(b1, b2, chain, na);
    const auto quarter = polarization_rotated_difference(b1, b2, pi / 2, chain, nb);
    REQUIRE(direct.size() == quarter.size());
    // loss and floor enter with the same sign, the signal flips
    DetectionNoise nc(9, 0);
    auto zero_floor = chain;
    zero_floor.electronic_noise_db = -INFINITY;
    zero_floor.eta = 1.0;
    const auto d0 = direct_detect_difference(b1, b2, zero_floor, nc);
    DetectionNoise nd(9, 0);
    const auto q0 = polarization_rotated_difference(b1, b2, pi / 2, zero_floor, nd);
    for (std::size_t i = 0; i < 1000; ++i) {
        CHECK(q0[i] == doctest::Approx(-d0[i]).epsilon(1e-9));
    }

    DetectionNoise ne(9, 0);
    const auto snl = snl_calibrate_45deg(b1, b2, chain, ne);
    CHECK(variance(snl) == doctest::Approx(chain.eta + chain.floor_psd()).epsilon(0.03));
    CHECK(variance(direct) < variance(snl));
}

TEST_CASE("vacuum homodyne sum reads shot noise")
{
    const auto p = OpoParams::uncalibrated_defaults();
    const auto out = simulate(p, 200000, 3);
    auto [b1, b2] = split_beams(out);
    b1.alpha = 0.0;
    b2.alpha = 0.0;
    const auto [lo1, lo2] = synthesize_lo_pair(beat / 2, 1e8, pi / 2, pi / 2);
    DetectionNoise n(4, 0);
    const auto ideal = DetectionChain::ideal(0.0);
    CHECK(variance(bhd_sum_current(b1, b2, lo1, lo2, ideal, n)) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("homodyne sum spectrum matches its closed form")
{
    const auto p = squeezed();
    const auto out = simulate(p, 1000000, 4);
    auto [b1, b2] = split_beams(out);
    const auto chain = DetectionChain::experiment_defaults();
    const double beta = b1.alpha / std::sqrt(chain.rho);
    const auto [lo1, lo2] = synthesize_lo_pair(beat / 2, beta, pi / 2, pi / 2);
    DetectionNoise n(6, 0);
    const auto current = bhd_sum_current(b1, b2, lo1, lo2, chain, n);

    opo::spectral::AnalyzerSettings a;
    a.rbw_hz = 1e6;
    a.averages = int(opo::spectral::max_averages(current.size(), out.dt, a));
    a.f_start_hz = 1e6;
    a.f_stop_hz = 6e6;
    const auto spec = opo::spectral::welch_psd(current, out.dt, a);
    REQUIRE(spec.size() >= 5);
    double ratio = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        std::array<double, opo::dynamics::kModeCount> psd{};
        for (auto m : opo::dynamics::kAllModes) {
            psd[std::size_t(m)] = opo::dynamics::output_psd(p, m, 2 * pi * spec.freq_hz[k]);
        }
        const double model = bhd_sum_psd_model(psd, pi / 2, pi / 2, chain, b1.alpha, beta);
        CHECK(spec.psd[k] == doctest::Approx(model).epsilon(0.12));
        ratio += spec.psd[k] / model;
    }
    CHECK(ratio / double(spec.size()) == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("lower fringe contrast pulls the homodyne reading towards shot noise")
{
    const auto p = squeezed();
    std::array<double, opo::dynamics::kModeCount> psd{};
    for (auto m : opo::dynamics::kAllModes) {
        psd[std::size_t(m)] = opo::dynamics::output_psd(p, m, 2 * pi * 1.7e6);
    }
    auto chain = DetectionChain::ideal(0.0);
    double last = 0.0;
    for (double c : {1.0, 0.97, 0.93, 0.85}) {
        chain.c1 = c;
        chain.c2 = c;
        const double rel = bhd_sum_psd_model(psd, pi / 2, pi / 2, chain, 0.0, 1.0) / bhd_snl_psd(chain);
        CHECK(rel < 1.0);
        CHECK(rel > last);
        last = rel;
    }
    chain.c1 = chain.c2 = 1.0;
    CHECK(bhd_sum_psd_model(psd, pi / 2, pi / 2, chain, 0.0, 1.0) ==
          doctest::Approx(psd[std::size_t(JointMode::PhaseSum)]));
}

TEST_CASE("homodyne input checks")
{
    const auto p = OpoParams::uncalibrated_defaults();
    const auto out = simulate(p, 1000, 5);
    auto [b1, b2] = split_beams(out);
    const auto chain = DetectionChain::experiment_defaults();
    DetectionNoise n(1, 0);
    auto [lo1, lo2] = synthesize_lo_pair(beat / 2, 1e8);
    auto detuned = lo2;
    detuned.carrier_hz += 1e6;
    CHECK_THROWS_AS(bhd_sum_current(b1, b2, lo1, detuned, chain, n), opo::HeterodyneLeakage);
    auto short_beam = b2;
    short_beam.amplitude.resize(500);
    short_beam.phase.resize(500);
    CHECK_THROWS_AS(bhd_sum_current(b1, short_beam, lo1, lo2, chain, n), opo::ShapeMismatch);
    const std::vector<double> theta(10, 0.0);
    CHECK_THROWS_AS(bhd_sum_current(b1, b2, lo1, lo2, chain, n, theta), opo::ShapeMismatch);
}
