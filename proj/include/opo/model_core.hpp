#pragma once

// Quadrature conventions and closed-form squeezing / entanglement figures.
//
// Quadrature fluctuations are dA_{j,theta} = e^{-i theta} da_j + e^{i theta} da_j^dag,
// so vacuum (and coherent-state) variance of any single-mode quadrature is 1.
// All spectra in this library are normalized to that shot-noise limit (SNL).
// Decibel values use the decimal log; internal math stays in linear variance.

namespace opo::core {

inline constexpr double kSnlVariance = 1.0;

/// 10^(db/10).
double db_to_variance(double db);
/// 10 log10(variance); variance must be > 0.
double variance_to_db(double variance);

/// Noise standard deviation relative to SNL, 10^(s/20).
double db_to_std_ratio(double s_db);

/// Sum of the variances of (A1-A2)/sqrt2 at theta=0 and (A1+A2)/sqrt2 at
/// theta=pi/2. Values below 2 certify inseparability.
double duan_simon(double s_minus_db, double s_plus_db);

inline constexpr double kSeparabilityBound = 2.0;

/// Both conjugate joint quadratures strictly below SNL.
bool squeezed_state_entangled(double s_minus_db, double s_plus_db);

/// 10 log10(signal / snl); both variances must be positive.
double raw_squeezing_db(double signal_variance, double snl_variance);

struct CorrectionInputs {
    double s_exp_db = 0.0; ///< raw measured squeezing
    double rho = 0.0;      ///< OPO/LO power ratio per beam
    double eta = 1.0;      ///< photodiode quantum efficiency
    double eta1 = 1.0;     ///< squared fringe contrast of BHD 1
    double eta2 = 1.0;     ///< squared fringe contrast of BHD 2

    static CorrectionInputs from_contrasts(double s_exp_db, double rho, double eta,
                                           double c1, double c2);
    /// Only the power ratio is accounted for.
    static CorrectionInputs rho_only(double s_exp_db, double rho);

    void validate() const;
};

/// Corrects raw phase-sum squeezing for LO shot-noise masking by the bright
/// OPO beams, detector efficiency and fringe contrast:
///
///   S = 10 log10( A 10^(S_exp/10) - B )
///   A = 2(rho+1)[rho(1-eta)+1] / (eta(eta1+eta2))
///   B = [2(rho+1) + (eta1+eta2)(rho(1-eta)-eta)] / (eta(eta1+eta2))
///
/// Throws UnphysicalCorrection when the log argument is not positive.
double correct_squeezing(const CorrectionInputs& in);

/// Inverse of correct_squeezing: the raw value that the same formula maps to
/// `true_db`. s_exp_db in `in` is ignored.
double predict_raw_squeezing(double true_db, const CorrectionInputs& in);

struct SqueezingReport {
    double s_minus_db = 0.0;
    double s_plus_db = 0.0;
    double delta_minus = 1.0;
    double delta_plus = 1.0;
    double duan_simon = 2.0;

    static SqueezingReport from_db(double s_minus_db, double s_plus_db);
    bool squeezed_state_entangled() const { return delta_minus < 1.0 && delta_plus < 1.0; }
    bool inseparable() const { return duan_simon < kSeparabilityBound; }
};

} // namespace opo::core
