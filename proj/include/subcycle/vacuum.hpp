#pragma once

#include "subcycle/constants.hpp"
#include "subcycle/waveforms.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace subcycle {

/// Four-dimensional space-time segment sampled by the probe.
struct SpaceTimeSegment {
    double dx_dy = 0.0;  // m^2
    double dz = 0.0;     // m
    double dt = 0.0;     // s
};

/// rms vacuum field together with the segment it refers to. Constructors
/// guarantee delta_e_vac^2 * eps0 * dx_dy * dz * dt == hbar.
struct VacuumStats {
    double delta_e_vac = 0.0;  // V/m
    SpaceTimeSegment segment;
};

/// How the probe intensity FWHM is turned into the effective duration dt of the segment.
enum class WidthConvention {
    Fwhm,      // dt = FWHM
    Rms,       // dt = intensity standard deviation = FWHM / (2 sqrt(2 ln 2))
    Integral,  // dt = integral(I) / I_peak = FWHM * sqrt(pi / (4 ln 2))
};

double effective_duration(const ProbeParams& probe, WidthConvention convention);

/// Delta E_vac = sqrt(hbar / (eps0 * pi w^2 * dz * dt)) with dz = c dt / probe.dx_n.
VacuumStats vacuum_amplitude(const ProbeParams& probe, const PhysConstants& consts = kCodata,
                             WidthConvention convention = WidthConvention::Fwhm);

/// Wraps an externally calibrated rms vacuum field. The segment keeps the default
/// probe cross-section and length; its duration is solved from the invariant.
VacuumStats make_reference_vacuum(double delta_e_vac, const PhysConstants& consts = kCodata);

/// Relative deviation of delta_e_vac^2 eps0 dxdy dz dt from hbar.
double segment_invariant_error(const VacuumStats& stats, const PhysConstants& consts = kCodata);

using EnsembleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// M realizations (rows) of a field sampled on `grid` (columns), V/m.
struct FieldEnsemble {
    TimeGrid grid;
    EnsembleMatrix realizations;
    std::uint64_t seed = 0;
    double target_rms = 0.0;

    Eigen::Index count() const { return realizations.rows(); }

    Eigen::ArrayXd column_mean() const;
    /// Unbiased (M - 1) sample standard deviation of every column.
    Eigen::ArrayXd column_std() const;
};

/// Stationary Gaussian vacuum realizations with a flat spectrum on [0, band_limit].
///
/// Row r is drawn from stream r of CounterRng(seed, .) as independent Gaussian
/// cosine/sine amplitudes of every DFT bin with frequency <= band_limit; the bin
/// variances are set so the per-sample standard deviation is exactly
/// stats.delta_e_vac. Output is identical for any `threads`.
FieldEnsemble sample_vacuum_ensemble(const TimeGrid& grid, const VacuumStats& stats, Eigen::Index count,
                                     std::uint64_t seed, double band_limit, unsigned threads = 0);

// Flat binary layout: 8-byte magic "SQVENS01", uint64 M, uint64 n, float64 dt,
// float64 t0, then M*n float64 samples row-major. All little-endian.
void write_ensemble_binary(const FieldEnsemble& ensemble, std::ostream& out);
FieldEnsemble read_ensemble_binary(std::istream& in);

/// CSV with a t_fs column followed by one E_Vcm column per realization (M <= 64).
void write_ensemble_csv(const FieldEnsemble& ensemble, std::ostream& out);

}  // namespace subcycle
