#include "synthstab/fft.hpp"

#include <unsupported/Eigen/FFT>

namespace synthstab {

std::vector<std::complex<double>> fft_real(std::span<const double> x) {
    if (x.empty()) return {};
    Eigen::FFT<double> engine;
    engine.ClearFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<double> in(x.begin(), x.end());
    std::vector<std::complex<double>> out;
    engine.fwd(out, in);
    return out;
}

}  // namespace synthstab
