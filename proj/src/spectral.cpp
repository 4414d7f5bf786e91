#include "subcycle/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <numbers>

namespace subcycle::spectral {

namespace {

// Eigen::FFT caches twiddle tables per instance and is not safe to share.
Eigen::FFT<double>& engine() {
    thread_local Eigen::FFT<double> fft;
    return fft;
}

}  // namespace

Spectrum forward(const Eigen::ArrayXd& x) {
    Spectrum X(x.size());
    engine().fwd(X.data(), x.data(), x.size());
    return X;
}

Eigen::ArrayXd inverse_real(const Spectrum& X) {
    Spectrum tmp(X.size());
    engine().inv(tmp.data(), X.data(), X.size());
    return tmp.real();
}

Eigen::ArrayXd bin_frequencies(Eigen::Index n, double dt) {
    Eigen::ArrayXd nu(n);
    const double df = 1.0 / (static_cast<double>(n) * dt);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index signed_k = (2 * k < n) ? k : k - n;
        nu[k] = static_cast<double>(signed_k) * df;
    }
    return nu;
}

Eigen::ArrayXd angular_frequencies(Eigen::Index n, double dt) {
    Eigen::ArrayXd w = 2.0 * std::numbers::pi * bin_frequencies(n, dt);
    if (n % 2 == 0) w[n / 2] = 0.0;
    return w;
}

}  // namespace subcycle::spectral
