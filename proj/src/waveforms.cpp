#include "subcycle/waveforms.hpp"

#include "subcycle/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace subcycle {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kPi = std::numbers::pi;
constexpr double kEdgeLeakage = 1e-6;

void check_edges(const Series& field, const char* what) {
    const double peak = field.abs().maxCoeff();
    if (peak == 0.0) return;
    const double edge = std::max(std::abs(field[0]), std::abs(field[field.size() - 1]));
    if (edge > kEdgeLeakage * peak) {
        throw std::invalid_argument(std::string(what) +
                                    ": envelope leaks to the grid edges (edge/peak = " +
                                    std::to_string(edge / peak) + "), enlarge the grid");
    }
}

}  // namespace

TimeGrid::TimeGrid(double t0, double dt, Eigen::Index n) : t0_(t0), dt_(dt), n_(n) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("TimeGrid: dt must be positive");
    if (n < 8) throw std::invalid_argument("TimeGrid: need at least 8 samples");
    if (!std::isfinite(t0)) throw std::invalid_argument("TimeGrid: t0 must be finite");
}

Series TimeGrid::times() const {
    Series t(n_);
    for (Eigen::Index k = 0; k < n_; ++k) t[k] = time(k);
    return t;
}

Eigen::Index TimeGrid::nearest_index(double t) const {
    const double pos = (t - t0_) / dt_;
    if (!(pos >= -0.5) || !(pos <= static_cast<double>(n_) - 0.5)) {
        throw std::out_of_range("time " + std::to_string(t) + " s lies outside the grid");
    }
    const auto k = static_cast<Eigen::Index>(std::llround(pos));
    return std::clamp<Eigen::Index>(k, 0, n_ - 1);
}

TimeGrid make_grid(double t0, double dt, Eigen::Index n) { return TimeGrid(t0, dt, n); }

void ProbeParams::validate() const {
    if (!(duration > 0.0)) throw std::invalid_argument("probe duration must be positive");
    if (!(waist > 0.0)) throw std::invalid_argument("probe waist must be positive");
    if (!(dx_n >= 1.0)) throw std::invalid_argument("probe index must be >= 1");
}

void CrystalParams::validate() const {
    if (!(n >= 1.0)) throw std::invalid_argument("crystal refractive index must be >= 1");
    if (!(length > 0.0)) throw std::invalid_argument("crystal length must be positive");
    if (!std::isfinite(d_eff)) throw std::invalid_argument("crystal d_eff must be finite");
}

CoherentTransient synthesize_transient(const TimeGrid& grid, double pump_energy, double cep,
                                       double center_freq, double env_fwhm, double gain) {
    if (!(env_fwhm > 0.0)) throw std::invalid_argument("envelope FWHM must be positive");
    if (!(center_freq >= 0.0) || center_freq >= grid.nyquist()) {
        throw std::invalid_argument("carrier frequency not resolved by the grid (< 2 samples per cycle)");
    }

    // Fold cep into [0, 2pi) and pull out a sign for the upper half, so that
    // cep and cep + pi evaluate the same cosine and differ only by negation.
    double phase = std::fmod(cep, 2.0 * kPi);
    if (phase < 0.0) phase += 2.0 * kPi;
    double sign = 1.0;
    if (phase >= kPi) {
        phase -= kPi;
        sign = -1.0;
    }

    const double amplitude = sign * gain * pump_energy;
    const double w0 = 2.0 * kPi * center_freq;
    Series field(grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        const double t = grid.time(k);
        const double x = t / env_fwhm;
        field[k] = amplitude * std::exp(-2.0 * kLn2 * x * x) * std::cos(w0 * t + phase);
    }
    check_edges(field, "synthesize_transient");
    return CoherentTransient{grid, std::move(field), center_freq, cep, pump_energy};
}

CoherentTransient optical_rectification(const TimeGrid& grid, double pump_env_fwhm,
                                        double pump_energy, double gain) {
    if (!(pump_env_fwhm > 0.0)) throw std::invalid_argument("pump FWHM must be positive");

    // I(t) = exp(-a t^2), I'' = (4 a^2 t^2 - 2a) I. Its amplitude spectrum
    // nu^2 exp(-pi^2 nu^2 / a) peaks at nu = sqrt(a)/pi.
    const double a = 4.0 * kLn2 / (pump_env_fwhm * pump_env_fwhm);
    const double peak_freq = std::sqrt(a) / kPi;
    if (1.0 / (peak_freq * grid.dt()) < 8.0) {
        throw std::invalid_argument("optical_rectification: grid too coarse (< 8 samples per cycle)");
    }

    const double scale = gain * pump_energy;
    Series field(grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        const double t = grid.time(k);
        const double second = (4.0 * a * a * t * t - 2.0 * a) * std::exp(-a * t * t);
        field[k] = scale * second / (-2.0 * a);
    }
    check_edges(field, "optical_rectification");
    return CoherentTransient{grid, std::move(field), peak_freq, 0.0, pump_energy};
}

Series time_derivative(const Series& series, const TimeGrid& grid, DerivativeMode mode) {
    if (series.size() != grid.size()) throw std::invalid_argument("time_derivative: size mismatch");
    const Eigen::Index n = series.size();
    const double dt = grid.dt();

    if (mode == DerivativeMode::Spectral) {
        spectral::Spectrum X = spectral::forward(series);
        const Eigen::ArrayXd w = spectral::angular_frequencies(n, dt);
        X *= std::complex<double>(0.0, 1.0) * w.cast<std::complex<double>>();
        return spectral::inverse_real(X);
    }

    // Second-order central differences, second-order one-sided at the ends.
    Series d(n);
    for (Eigen::Index k = 1; k + 1 < n; ++k) d[k] = (series[k + 1] - series[k - 1]) / (2.0 * dt);
    d[0] = (-3.0 * series[0] + 4.0 * series[1] - series[2]) / (2.0 * dt);
    d[n - 1] = (3.0 * series[n - 1] - 4.0 * series[n - 2] + series[n - 3]) / (2.0 * dt);
    return d;
}

double spectral_centroid(const Series& series, const TimeGrid& grid) {
    const spectral::Spectrum X = spectral::forward(series);
    const Eigen::ArrayXd nu = spectral::bin_frequencies(series.size(), grid.dt());
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index k = 1; k < series.size(); ++k) {
        if (nu[k] <= 0.0) continue;
        const double mag = std::abs(X[k]);
        num += nu[k] * mag;
        den += mag;
    }
    if (den == 0.0) throw std::invalid_argument("spectral_centroid: zero spectrum");
    return num / den;
}

CoherentTransient TransientTemplate::synthesize(double pump_energy, double gain) const {
    switch (kind) {
        case Kind::Rectification: {
            CoherentTransient tr = optical_rectification(grid, env_fwhm, pump_energy, gain);
            if (cep != 0.0) {
                // Only the sign of the rectified field is controllable (pump polarization).
                const double c = std::cos(cep);
                tr.field *= (c >= 0.0 ? 1.0 : -1.0);
                tr.cep = cep;
            }
            return tr;
        }
        case Kind::GaussianCarrier:
        default:
            return synthesize_transient(grid, pump_energy, cep, center_freq, env_fwhm, gain);
    }
}

}  // namespace subcycle
