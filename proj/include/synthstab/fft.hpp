#pragma once

#include <complex>
#include <span>
#include <vector>

namespace synthstab {

/// Forward DFT of a real series, X_k = sum_j x_j exp(-2 pi i j k / n),
/// all n bins, any length.
std::vector<std::complex<double>> fft_real(std::span<const double> x);

}  // namespace synthstab
