#pragma once

#include <Eigen/Core>

#include <complex>

namespace subcycle::spectral {

using Spectrum = Eigen::ArrayXcd;

/// Full-length DFT of a real series, X_k = sum_j x_j exp(-2 pi i jk/n).
Spectrum forward(const Eigen::ArrayXd& x);

/// Inverse of forward(); the imaginary residue is discarded.
Eigen::ArrayXd inverse_real(const Spectrum& X);

/// Angular frequency of each DFT bin in FFT order; the Nyquist bin of an
/// even-length grid is set to zero so derivatives of real input stay real.
Eigen::ArrayXd angular_frequencies(Eigen::Index n, double dt);

/// Frequency (Hz) of each DFT bin in FFT order, Nyquist bin signed negative.
Eigen::ArrayXd bin_frequencies(Eigen::Index n, double dt);

}  // namespace subcycle::spectral
