#include "opo/model_core.hpp"

#include "opo/errors.hpp"

#include <cmath>
#include <string>

namespace opo::core {

namespace {

void require_finite(double x, const char* what)
{
    if (!std::isfinite(x)) {
        throw DomainError(std::string(what) + " must be finite");
    }
}

void require_efficiency(double x, const char* what)
{
    if (!(x > 0.0 && x <= 1.0)) {
        throw DomainError(std::string(what) + " must lie in (0, 1], got " + std::to_string(x));
    }
}

} // namespace

double db_to_variance(double db)
{
    require_finite(db, "decibel value");
    return std::pow(10.0, db / 10.0);
}

double variance_to_db(double variance)
{
    if (!(variance > 0.0) || !std::isfinite(variance)) {
        throw DomainError("variance must be positive and finite");
    }
    return 10.0 * std::log10(variance);
}

double db_to_std_ratio(double s_db)
{
    require_finite(s_db, "squeezing");
    return std::pow(10.0, s_db / 20.0);
}

double duan_simon(double s_minus_db, double s_plus_db)
{
    require_finite(s_minus_db, "amplitude-difference squeezing");
    require_finite(s_plus_db, "phase-sum squeezing");
    return std::pow(10.0, s_minus_db / 10.0) + std::pow(10.0, s_plus_db / 10.0);
}

bool squeezed_state_entangled(double s_minus_db, double s_plus_db)
{
    return db_to_std_ratio(s_minus_db) < 1.0 && db_to_std_ratio(s_plus_db) < 1.0;
}

double raw_squeezing_db(double signal_variance, double snl_variance)
{
    if (!(signal_variance > 0.0) || !(snl_variance > 0.0)) {
        throw DomainError("raw squeezing needs positive signal and SNL variances");
    }
    require_finite(signal_variance, "signal variance");
    require_finite(snl_variance, "SNL variance");
    return 10.0 * std::log10(signal_variance / snl_variance);
}

CorrectionInputs CorrectionInputs::from_contrasts(double s_exp_db, double rho, double eta,
                                                  double c1, double c2)
{
    return {s_exp_db, rho, eta, c1 * c1, c2 * c2};
}

CorrectionInputs CorrectionInputs::rho_only(double s_exp_db, double rho)
{
    return {s_exp_db, rho, 1.0, 1.0, 1.0};
}

void CorrectionInputs::validate() const
{
    require_finite(s_exp_db, "s_exp_db");
    require_finite(rho, "rho");
    if (rho < 0.0) {
        throw DomainError("rho must be >= 0");
    }
    require_efficiency(eta, "eta");
    require_efficiency(eta1, "eta1");
    require_efficiency(eta2, "eta2");
}

namespace {

struct CorrectionCoefficients {
    double a;
    double b;
};

CorrectionCoefficients coefficients(const CorrectionInputs& in)
{
    const double eff = in.eta * (in.eta1 + in.eta2);
    const double lo_loss = in.rho * (1.0 - in.eta);
    return {2.0 * (in.rho + 1.0) * (lo_loss + 1.0) / eff,
            (2.0 * (in.rho + 1.0) + (in.eta1 + in.eta2) * (lo_loss - in.eta)) / eff};
}

} // namespace

double correct_squeezing(const CorrectionInputs& in)
{
    in.validate();
    const auto [a, b] = coefficients(in);
    const double arg = a * std::pow(10.0, in.s_exp_db / 10.0) - b;
    if (!(arg > 0.0)) {
        throw UnphysicalCorrection("unphysical correction: log argument " + std::to_string(arg) +
                                   " <= 0 for S_exp=" + std::to_string(in.s_exp_db) +
                                   " dB, rho=" + std::to_string(in.rho));
    }
    return 10.0 * std::log10(arg);
}

double predict_raw_squeezing(double true_db, const CorrectionInputs& in)
{
    CorrectionInputs probe = in;
    probe.s_exp_db = 0.0;
    probe.validate();
    require_finite(true_db, "true squeezing");
    const auto [a, b] = coefficients(probe);
    return 10.0 * std::log10((std::pow(10.0, true_db / 10.0) + b) / a);
}

SqueezingReport SqueezingReport::from_db(double s_minus_db, double s_plus_db)
{
    SqueezingReport r;
    r.s_minus_db = s_minus_db;
    r.s_plus_db = s_plus_db;
    r.delta_minus = db_to_std_ratio(s_minus_db);
    r.delta_plus = db_to_std_ratio(s_plus_db);
    r.duan_simon = core::duan_simon(s_minus_db, s_plus_db);
    return r;
}

} // namespace opo::core
