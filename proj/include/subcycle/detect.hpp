#pragma once

#include "subcycle/squeeze.hpp"
#include "subcycle/vacuum.hpp"
#include "subcycle/waveforms.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace subcycle {

struct DetectionParams {
    double delta_e_sn = 8100.0;  // V/m (81 V/cm)
    long samples_per_point = 100000;
    ProbeParams probe;
    std::uint64_t seed = 1;
    /// Fraction of the generated state that survives to the detector; the rest is
    /// replaced by bare vacuum: var = eta var_rms + (1 - eta) var_vac.
    double eta = 1.0;
    /// Smear the variance pattern with the probe intensity envelope before sampling.
    bool convolve_noise = true;
    unsigned threads = 0;

    void validate() const;
};

enum class RdnMode { AnalyticExact, AnalyticLinearized, MonteCarlo };

std::string to_string(RdnMode mode);

struct RdnTrace {
    TimeGrid delays;
    Series rdn;
    Series rdn_stderr;
    RdnMode mode = RdnMode::AnalyticExact;
};

struct CoherentReadout {
    TimeGrid delays;
    Series field;  // V/m
};

// ---- Relative differential noise -------------------------------------------------
// These work on scalars and on Eigen arrays alike.

/// [sqrt(SN^2 + rms^2) - sqrt(SN^2 + vac^2)] / sqrt(SN^2 + vac^2)
template <typename T>
auto rdn_exact(const T& delta_e_rms, double delta_e_vac, double delta_e_sn) {
    using std::sqrt;
    const double ref = std::sqrt(delta_e_sn * delta_e_sn + delta_e_vac * delta_e_vac);
    return (sqrt(delta_e_sn * delta_e_sn + delta_e_rms * delta_e_rms) - ref) / ref;
}

/// (rms - vac) vac / SN^2; overshoots rdn_exact by O((rms - vac)^2).
template <typename T>
auto rdn_linearized(const T& delta_e_rms, double delta_e_vac, double delta_e_sn) {
    return (delta_e_rms - delta_e_vac) * (delta_e_vac / (delta_e_sn * delta_e_sn));
}

inline double rdn_exact(double delta_e_rms, const VacuumStats& vac, const DetectionParams& det) {
    return rdn_exact(delta_e_rms, vac.delta_e_vac, det.delta_e_sn);
}

inline double rdn_linearized(double delta_e_rms, const VacuumStats& vac, const DetectionParams& det) {
    return rdn_linearized(delta_e_rms, vac.delta_e_vac, det.delta_e_sn);
}

/// sqrt(SN^2 + vac^2) / SN - 1: share of the total readout noise due to bare vacuum.
double vacuum_fraction(const DetectionParams& det, const VacuumStats& vac);

// ---- Probe sampling --------------------------------------------------------------

/// Weighted average of `series` under a normalized Gaussian intensity envelope of
/// FWHM probe.duration centered at `delay` (truncated to the grid).
double probe_convolve(const Series& series, const TimeGrid& grid, const ProbeParams& probe, double delay);

/// probe_convolve evaluated at every grid sample.
Series probe_convolve_all(const Series& series, const TimeGrid& grid, const ProbeParams& probe);

CoherentReadout coherent_readout(const CoherentTransient& transient, const DetectionParams& det);

/// Detected noise amplitude at each delay: eta-mixing with bare vacuum, then
/// (optionally) probe smearing of the variance.
Series detected_noise(const SqueezingProfile& profile, const VacuumStats& vacuum, const DetectionParams& det);

RdnTrace rdn_trace_analytic(const SqueezingProfile& profile, const VacuumStats& vacuum,
                            const DetectionParams& det, bool linearized = false);

/// Two-channel lock-in statistic. For delay k, channel x draws M samples
/// N(0, rms_k^2) + N(0, SN^2) and channel y draws N(0, vac^2) + N(0, SN^2), both
/// from stream k of the seeded counter RNG. The estimate is the ratio of
/// sample standard deviations minus one, corrected for the finite-M chi bias of
/// both numerator and reciprocal denominator so its expectation is exact.
RdnTrace simulate_lockin_rdn(const SqueezingProfile& profile, const VacuumStats& vacuum,
                             const DetectionParams& det);

struct LockinPoint {
    double rdn = 0.0;
    double std_error = 0.0;
};

/// Single delay of simulate_lockin_rdn for a given detected rms value and stream id.
LockinPoint lockin_point(double detected_rms, double delta_e_vac, double delta_e_sn, long samples,
                         std::uint64_t seed, std::uint64_t stream);

void write_rdn_csv(const RdnTrace& trace, std::ostream& out,
                   const std::vector<std::pair<std::string, std::string>>& provenance = {});
void write_readout_csv(const CoherentReadout& readout, std::ostream& out,
                       const std::vector<std::pair<std::string, std::string>>& provenance = {});

}  // namespace subcycle
