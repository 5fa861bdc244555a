#include "opo/errors.hpp"
#include "opo/model_core.hpp"

#include <doctest.h>

#include <cmath>

using namespace opo::core;

namespace {
constexpr double kRho = 2.8 / 6.5;
}

TEST_CASE("decibel conversions")
{
    CHECK(db_to_variance(0.0) == doctest::Approx(1.0));
    CHECK(db_to_variance(-3.0) == doctest::Approx(0.501187).epsilon(1e-6));
    CHECK(variance_to_db(0.8128) == doctest::Approx(-0.900).epsilon(1e-3));
    CHECK(variance_to_db(db_to_variance(-1.35)) == doctest::Approx(-1.35));
    CHECK_THROWS_AS(variance_to_db(0.0), opo::DomainError);
    CHECK(db_to_std_ratio(-3.0) == doctest::Approx(0.70795).epsilon(1e-4));
    CHECK(db_to_std_ratio(-1.35) == doctest::Approx(0.85605).epsilon(1e-4));
}

TEST_CASE("Duan-Simon sum of joint variances")
{
    CHECK(duan_simon(-3.0, -1.35) == doctest::Approx(1.234012).epsilon(1e-6));
    CHECK(duan_simon(0.0, 0.0) == doctest::Approx(kSeparabilityBound));
    CHECK(duan_simon(3.0, -3.0) > 2.0);

    const auto r = SqueezingReport::from_db(-3.0, -1.35);
    CHECK(r.inseparable());
    CHECK(r.squeezed_state_entangled());
    CHECK(r.delta_minus == doctest::Approx(0.70795).epsilon(1e-4));
    CHECK_FALSE(SqueezingReport::from_db(-3.0, 0.5).squeezed_state_entangled());
    CHECK(squeezed_state_entangled(-0.1, -0.1));
    CHECK_FALSE(squeezed_state_entangled(-0.1, 0.0));
}

TEST_CASE("raw squeezing from variances")
{
    CHECK(raw_squeezing_db(0.5, 1.0) == doctest::Approx(-3.0103).epsilon(1e-4));
    CHECK(raw_squeezing_db(2.0, 2.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(raw_squeezing_db(-1.0, 1.0), opo::DomainError);
}

TEST_CASE("squeezing correction at the reference operating point")
{
    const auto full = correct_squeezing(CorrectionInputs::from_contrasts(-0.9, kRho, 0.95, 0.986, 0.928));
    CHECK(full == doctest::Approx(-1.557828).epsilon(1e-6));
    const auto ideal = correct_squeezing(CorrectionInputs::rho_only(-0.9, kRho));
    CHECK(ideal == doctest::Approx(-1.353681).epsilon(1e-6));
    CHECK(correct_squeezing(CorrectionInputs::rho_only(-0.5, 1.0)) == doctest::Approx(-1.065146).epsilon(1e-6));
}

TEST_CASE("correction is the identity without masking or loss")
{
    for (double s : {-6.0, -2.0, -0.3, 0.0, 1.5}) {
        CHECK(correct_squeezing(CorrectionInputs::rho_only(s, 0.0)) == doctest::Approx(s));
    }
}

TEST_CASE("correction deepens monotonically with the power ratio")
{
    double prev = correct_squeezing(CorrectionInputs::rho_only(-0.9, 0.0));
    for (double rho = 0.1; rho <= 1.0; rho += 0.1) {
        const double s = correct_squeezing(CorrectionInputs::rho_only(-0.9, rho));
        CHECK(s < prev);
        prev = s;
    }
}

TEST_CASE("forward model inverts the correction")
{
    const auto in = CorrectionInputs::from_contrasts(0.0, kRho, 0.95, 0.986, 0.928);
    for (double t : {-4.0, -1.35, -0.2}) {
        auto probe = in;
        probe.s_exp_db = predict_raw_squeezing(t, in);
        CHECK(correct_squeezing(probe) == doctest::Approx(t).epsilon(1e-9));
    }
    CHECK(predict_raw_squeezing(-1.35, CorrectionInputs::rho_only(0.0, kRho)) ==
          doctest::Approx(-0.897682).epsilon(1e-6));
}

TEST_CASE("unphysical raw readings are rejected")
{
    // rho-only: the log argument vanishes at 10 log10(rho / (1 + rho)) = -5.213 dB
    CHECK_NOTHROW(correct_squeezing(CorrectionInputs::rho_only(-5.2, kRho)));
    CHECK_THROWS_AS(correct_squeezing(CorrectionInputs::rho_only(-5.3, kRho)), opo::UnphysicalCorrection);
}

TEST_CASE("correction inputs are validated")
{
    CHECK_THROWS_AS(correct_squeezing(CorrectionInputs::from_contrasts(-0.9, -0.1, 0.95, 1, 1)), opo::DomainError);
    CHECK_THROWS_AS(correct_squeezing(CorrectionInputs::from_contrasts(-0.9, kRho, 0.0, 1, 1)), opo::DomainError);
    CHECK_THROWS_AS(correct_squeezing(CorrectionInputs::from_contrasts(-0.9, kRho, 0.95, 1.2, 1)), opo::DomainError);
    CHECK_THROWS_AS(correct_squeezing(CorrectionInputs::rho_only(NAN, kRho)), opo::DomainError);
}
