#pragma once

#include "subcycle/detect.hpp"
#include "subcycle/squeeze.hpp"
#include "subcycle/vacuum.hpp"

#include <iosfwd>
#include <utility>
#include <vector>

namespace subcycle {

struct SweepPoint {
    double pump_energy = 0.0;  // J
    double rdn_max = 0.0;
    double rdn_min = 0.0;
    double stderr_max = 0.0;
    double stderr_min = 0.0;
};

struct FitResult {
    double g = 0.0;             // 1/J, in-crystal f_extreme = +-g E_pump
    double eta = 1.0;           // surviving fraction of the squeezed state
    double residual_rms = 0.0;  // rms of the (weighted) residuals
    double corr_g_eta = 0.0;    // correlation coefficient of the two estimates
    double sigma_g = 0.0;
    double sigma_eta = 0.0;
    std::vector<double> energies;
    std::vector<double> squeezing_curve;  // 1 - exp(-g E) per input energy

    /// In-crystal squeezing 1 - exp(-g E) at an arbitrary energy.
    double squeezing_at(double pump_energy) const;
};

struct AsymmetryMetric {
    double pump_energy = 0.0;
    double value = 0.0;  // rdn_max + rdn_min
};

/// (rdn_max, rdn_min) of a state squeezed to exp(+-g E) Delta E_vac inside the
/// crystal and then mixed with bare vacuum: var = eta var_sq + (1 - eta) var_vac.
std::pair<double, double> forward_model(double g, double eta, double pump_energy, const VacuumStats& vacuum,
                                        const DetectionParams& det);

/// Weighted least-squares estimate of (g, eta) from both branches.
///
/// Parameters are searched as (log g E_max, theta) with eta = sin^2 theta, by
/// Levenberg-Marquardt from a fixed 4 x 3 grid of starts; the lowest cost wins.
/// Weights are 1/stderr^2 when every stderr is positive, uniform otherwise.
FitResult fit_sweep(const std::vector<SweepPoint>& points, const VacuumStats& vacuum, const DetectionParams& det);

/// rdn_max + rdn_min per point, sorted by energy.
std::vector<AsymmetryMetric> asymmetry_series(std::vector<SweepPoint> points);

/// max_t |rms+(t) rms-(t) / vac^2 - 1| for patterns generated by CEP-flipped transients.
double product_invariant_check(const SqueezingProfile& plus, const SqueezingProfile& minus,
                               const VacuumStats& vacuum);

void write_sweep_csv(const std::vector<SweepPoint>& points, std::ostream& out,
                     const std::vector<std::pair<std::string, std::string>>& provenance = {});
std::vector<SweepPoint> read_sweep_csv(std::istream& in);

}  // namespace subcycle
