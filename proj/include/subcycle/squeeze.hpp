#pragma once

#include "subcycle/constants.hpp"
#include "subcycle/vacuum.hpp"
#include "subcycle/waveforms.hpp"

#include <Eigen/Core>

namespace subcycle {

/// Time-local squeezing factor f(t) and, once filled, Delta E_rms(t) = e^f Delta E_vac.
struct SqueezingProfile {
    TimeGrid grid;
    Series f;
    Series delta_e_rms;  // empty until analytic_noise() or a measured pattern fills it
    double max_abs_f = 0.0;
    CrystalParams crystal;
    double pump_energy = 0.0;
    double cep = 0.0;

    bool has_noise() const { return delta_e_rms.size() == f.size(); }
};

/// f(t) = d_eff l / (n c) * dE/dt.
SqueezingProfile squeezing_factor(const CoherentTransient& transient, const CrystalParams& crystal,
                                  DerivativeMode mode = DerivativeMode::Spectral,
                                  const PhysConstants& consts = kCodata);

/// Gain (field per pump energy) for which min_t f(t) equals target_f_min at the
/// given pump energy, found by bisection to 1e-12 relative bracket width.
double calibrate_gain(double target_f_min, double at_pump_energy, const TransientTemplate& tmpl,
                      const CrystalParams& crystal, DerivativeMode mode = DerivativeMode::Spectral,
                      const PhysConstants& consts = kCodata);

/// Fills delta_e_rms = exp(f) * vacuum.delta_e_vac.
SqueezingProfile analytic_noise(SqueezingProfile profile, const VacuumStats& vacuum);

enum class PropagationMethod { Analytic, TimeDomain, Spectral };

struct PropagationConfig {
    int z_steps = 256;
    bool include_second_term = false;
    PropagationMethod method = PropagationMethod::TimeDomain;
    DerivativeMode derivative = DerivativeMode::Spectral;
    unsigned threads = 0;
};

/// Propagates every realization of `input` through the generation crystal in the
/// frame co-moving with the transient,
///     d(dE)/dz = d/(n c) [ (dE_THz/dt) dE + E_THz d(dE)/dt ],
/// with the transient fully formed and z-independent. TimeDomain marches the
/// equation above with midpoint (RK2) steps; Spectral marches the Fourier
/// coefficients with the right-hand side evaluated as a convolution of spectra;
/// Analytic applies the closed form exp(f(t)) (second term dropped).
///
/// Column k of the output belongs to the same co-moving time as column k of the
/// input; the output grid is the input grid delayed by the transit time n l / c.
/// Throws NumericalError when the total ensemble energy grows beyond
/// exp(2 max|f|) (step too coarse) or turns non-finite.
FieldEnsemble propagate_numeric(const CoherentTransient& transient, const CrystalParams& crystal,
                                const FieldEnsemble& input, const PropagationConfig& cfg,
                                const PhysConstants& consts = kCodata);

/// Pockels-effect view of the same modulation.
struct VelocityProfile {
    TimeGrid grid;
    Series delta_n;          // r n^3 E_THz with r = -d_eff / n^4
    Series v_loc;            // c / (n + delta_n)
    Series dv_dt;            // d v_loc / dt
    Series f_from_velocity;  // -(l/c) d n/dt
};

VelocityProfile pockels_velocity(const CoherentTransient& transient, const CrystalParams& crystal,
                                 DerivativeMode mode = DerivativeMode::Spectral,
                                 const PhysConstants& consts = kCodata);

struct NoiseExtrema {
    Eigen::Index index_max = 0;
    Eigen::Index index_min = 0;
    double t_max = 0.0;
    double t_min = 0.0;
    double rms_max = 0.0;
    double rms_min = 0.0;
};

/// Arg-extrema of Delta E_rms on the grid, earliest sample on ties.
/// Throws std::invalid_argument for a constant pattern.
NoiseExtrema extrema_of_noise(const SqueezingProfile& profile);

}  // namespace subcycle
