#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace opo::fft {

/// Forward real-to-complex DFT, unnormalized. Output has n/2+1 bins.
std::vector<std::complex<double>> forward_real(std::span<const double> in);

/// Forward complex DFT, unnormalized, n bins.
std::vector<std::complex<double>> forward(std::span<const std::complex<double>> in);

/// Inverse of forward_real for a length-n real signal, unnormalized.
std::vector<double> inverse_real(std::span<const std::complex<double>> half_spectrum, std::size_t n);

} // namespace opo::fft
