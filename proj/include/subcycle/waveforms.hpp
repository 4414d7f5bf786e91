#pragma once

#include <Eigen/Core>

#include <string>

namespace subcycle {

using Series = Eigen::ArrayXd;

/// Uniform sampling axis t_k = t0 + k*dt shared by every field quantity
/// (generation time, co-moving time and probe delay all live on one).
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double t0, double dt, Eigen::Index n);

    double t0() const { return t0_; }
    double dt() const { return dt_; }
    Eigen::Index size() const { return n_; }

    double time(Eigen::Index k) const { return t0_ + static_cast<double>(k) * dt_; }
    Series times() const;

    double span() const { return static_cast<double>(n_ - 1) * dt_; }
    double end() const { return time(n_ - 1); }
    double nyquist() const { return 0.5 / dt_; }

    /// Index of the sample closest to t; throws if t lies outside [t0, end].
    Eigen::Index nearest_index(double t) const;

    /// Same sampling, origin moved by `offset`.
    TimeGrid shifted(double offset) const { return TimeGrid(t0_ + offset, dt_, n_); }

    friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
        return a.t0_ == b.t0_ && a.dt_ == b.dt_ && a.n_ == b.n_;
    }

private:
    double t0_ = 0.0;
    double dt_ = 1.0;
    Eigen::Index n_ = 8;
};

TimeGrid make_grid(double t0, double dt, Eigen::Index n);

/// Classical mid-infrared field E_THz(t_k) (V/m) with its generation metadata.
struct CoherentTransient {
    TimeGrid grid;
    Series field;
    double center_freq = 0.0;  // Hz
    double cep = 0.0;          // rad
    double pump_energy = 0.0;  // J
};

/// Probe pulse: intensity FWHM, focal waist and the index used for dz = c*dt/index.
struct ProbeParams {
    double duration = 5.8e-15;
    double waist = 3.6e-6;
    double dx_n = 2.6;

    void validate() const;
};

struct CrystalParams {
    double d_eff = -54e-12;  // m/V, negative by convention (see README)
    double n = 2.7;
    double length = 16e-6;   // m
    std::string label = "GaSe";

    void validate() const;
};

enum class DerivativeMode { Spectral, FiniteDifference };

/// E(t) = gain * pump_energy * exp(-2 ln2 (t/env_fwhm)^2) * cos(2 pi center_freq t + cep).
///
/// The carrier is evaluated so that cep and cep + pi produce bit-exact negations.
/// Throws std::invalid_argument if the envelope leaks to the grid edges
/// (|E| > 1e-6 max|E|) or if the carrier is not resolved with 2 samples per cycle.
CoherentTransient synthesize_transient(const TimeGrid& grid, double pump_energy, double cep,
                                       double center_freq, double env_fwhm, double gain);

/// Single-cycle transient proportional to the second time derivative of a
/// Gaussian pump intensity envelope with the given FWHM; peak |E| = gain * pump_energy.
CoherentTransient optical_rectification(const TimeGrid& grid, double pump_env_fwhm,
                                        double pump_energy, double gain);

/// d/dt on the grid. Spectral mode treats the series as periodic over the grid.
Series time_derivative(const Series& series, const TimeGrid& grid,
                       DerivativeMode mode = DerivativeMode::Spectral);

/// Amplitude-weighted mean frequency sum(nu |X(nu)|) / sum(|X(nu)|) over positive bins.
double spectral_centroid(const Series& series, const TimeGrid& grid);

/// Recipe for a transient family whose scale (gain) is fixed later by calibration.
struct TransientTemplate {
    enum class Kind { GaussianCarrier, Rectification };

    TimeGrid grid;
    Kind kind = Kind::GaussianCarrier;
    double center_freq = 44e12;
    double cep = 0.0;
    double env_fwhm = 90e-15;  // field envelope FWHM, or pump intensity FWHM for Rectification

    CoherentTransient synthesize(double pump_energy, double gain) const;
};

}  // namespace subcycle
