#pragma once

#include "opo/spectral.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace opo::csv {

/// freq_hz,psd_snl,db_rel_snl
void write_spectrum(std::ostream& os, const spectral::NoiseSpectrum& s);
/// time_s,power_snl,db_rel_snl,theta_rad
void write_zero_span(std::ostream& os, const spectral::ZeroSpanTrace& z);

/// File variants; errors are std::runtime_error naming the path.
void emit_csv(const std::filesystem::path& path, const spectral::NoiseSpectrum& s);
void emit_csv(const std::filesystem::path& path, const spectral::ZeroSpanTrace& z);

/// key,value rows in the given order.
void emit_report_csv(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, double>>& rows);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

} // namespace opo::csv
