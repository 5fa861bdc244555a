#include "opo/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace opo::csv {

std::string format_double(double x)
{
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_spectrum(std::ostream& os, const spectral::NoiseSpectrum& s)
{
    os << "freq_hz,psd_snl,db_rel_snl\n";
    for (std::size_t i = 0; i < s.freq_hz.size(); ++i) {
        const double db = i < s.db_rel_snl.size() ? s.db_rel_snl[i] : std::nan("");
        os << format_double(s.freq_hz[i]) << ',' << format_double(s.psd[i]) << ',' << format_double(db) << '\n';
    }
}

void write_zero_span(std::ostream& os, const spectral::ZeroSpanTrace& z)
{
    os << "time_s,power_snl,db_rel_snl,theta_rad\n";
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double db = i < z.db_rel_snl.size() ? z.db_rel_snl[i] : std::nan("");
        const double th = i < z.theta_rad.size() ? z.theta_rad[i] : std::nan("");
        os << format_double(z.time_s[i]) << ',' << format_double(z.power[i]) << ',' << format_double(db) << ','
           << format_double(th) << '\n';
    }
}

namespace {

template <class Data, class Writer>
void emit(const std::filesystem::path& path, const Data& d, Writer write)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    write(os, d);
    os.flush();
    if (!os) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

} // namespace

void emit_csv(const std::filesystem::path& path, const spectral::NoiseSpectrum& s)
{
    emit(path, s, write_spectrum);
}

void emit_csv(const std::filesystem::path& path, const spectral::ZeroSpanTrace& z)
{
    emit(path, z, write_zero_span);
}

void emit_report_csv(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, double>>& rows)
{
    emit(path, rows, [](std::ostream& os, const auto& r) {
        os << "key,value\n";
        for (const auto& [k, v] : r) {
            os << k << ',' << format_double(v) << '\n';
        }
    });
}

} // namespace opo::csv
