#include "subcycle/squeeze.hpp"

#include "subcycle/parallel.hpp"
#include "subcycle/spectral.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace subcycle {

namespace {

using Complex = std::complex<double>;

double min_f(const TransientTemplate& tmpl, double energy, double gain, const CrystalParams& crystal,
             DerivativeMode mode, const PhysConstants& consts) {
    return squeezing_factor(tmpl.synthesize(energy, gain), crystal, mode, consts).f.minCoeff();
}

double energy_of(const EnsembleMatrix& m) { return m.squaredNorm(); }

}  // namespace

SqueezingProfile squeezing_factor(const CoherentTransient& transient, const CrystalParams& crystal,
                                  DerivativeMode mode, const PhysConstants& consts) {
    crystal.validate();
    const double coeff = crystal.d_eff * crystal.length / (crystal.n * consts.c);
    SqueezingProfile p;
    p.grid = transient.grid;
    p.f = coeff * time_derivative(transient.field, transient.grid, mode);
    p.max_abs_f = p.f.abs().maxCoeff();
    p.crystal = crystal;
    p.pump_energy = transient.pump_energy;
    p.cep = transient.cep;
    return p;
}

double calibrate_gain(double target_f_min, double at_pump_energy, const TransientTemplate& tmpl,
                      const CrystalParams& crystal, DerivativeMode mode, const PhysConstants& consts) {
    if (!(target_f_min < 0.0)) throw std::invalid_argument("calibration target f_min must be negative");
    if (!(at_pump_energy > 0.0)) throw std::invalid_argument("calibration pump energy must be positive");

    double lo = 0.0;
    double hi = 1.0;
    int doublings = 0;
    while (min_f(tmpl, at_pump_energy, hi, crystal, mode, consts) > target_f_min) {
        lo = hi;
        hi *= 2.0;
        if (++doublings > 2000) throw NumericalError("calibrate_gain: template produces no negative f");
    }
    while (hi - lo > 1e-12 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (min_f(tmpl, at_pump_energy, mid, crystal, mode, consts) > target_f_min) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

SqueezingProfile analytic_noise(SqueezingProfile profile, const VacuumStats& vacuum) {
    profile.delta_e_rms = profile.f.exp() * vacuum.delta_e_vac;
    return profile;
}

FieldEnsemble propagate_numeric(const CoherentTransient& transient, const CrystalParams& crystal,
                                const FieldEnsemble& input, const PropagationConfig& cfg,
                                const PhysConstants& consts) {
    crystal.validate();
    if (!(input.grid == transient.grid)) {
        throw std::invalid_argument("propagate_numeric: ensemble grid differs from transient grid");
    }
    if (cfg.z_steps < 1) throw std::invalid_argument("propagate_numeric: z_steps must be >= 1");

    const TimeGrid& grid = transient.grid;
    const Eigen::Index n = grid.size();
    const Eigen::Index m = input.count();
    const double kappa = crystal.d_eff / (crystal.n * consts.c);
    const double dz = crystal.length / cfg.z_steps;
    const double transit = crystal.n * crystal.length / consts.c;

    FieldEnsemble out{grid.shifted(transit), EnsembleMatrix(m, n), input.seed, input.target_rms};

    const Series f = squeezing_factor(transient, crystal, cfg.derivative, consts).f;
    const double max_abs_f = f.abs().maxCoeff();

    if (cfg.method == PropagationMethod::Analytic) {
        const Eigen::RowVectorXd gain = f.exp().matrix().transpose();
        for (Eigen::Index r = 0; r < m; ++r) out.realizations.row(r) = input.realizations.row(r).cwiseProduct(gain);
        return out;
    }

    const Series drive = kappa * transient.field;  // kappa * E
    const Series slope = f / crystal.length;        // kappa * dE/dt

    if (cfg.method == PropagationMethod::TimeDomain) {
        auto rhs = [&](const Series& y) -> Series {
            Series r = slope * y;
            if (cfg.include_second_term) r += drive * time_derivative(y, grid, cfg.derivative);
            return r;
        };
        parallel_for(static_cast<std::size_t>(m), cfg.threads, [&](std::size_t i) {
            const auto row = static_cast<Eigen::Index>(i);
            Series y = input.realizations.row(row).transpose().array();
            for (int s = 0; s < cfg.z_steps; ++s) {
                const Series k1 = rhs(y);
                const Series k2 = rhs(y + 0.5 * dz * k1);
                y += dz * k2;
            }
            out.realizations.row(row) = y.matrix().transpose();
        });
    } else {
        // Fourier-space march: dY/dz = i w FT[kappa E y] (full form), or
        // FT[(kappa dE/dt) y] with the slope itself taken spectrally.
        const Eigen::ArrayXcd iw =
            Complex(0.0, 1.0) * spectral::angular_frequencies(n, grid.dt()).cast<Complex>();
        const Series spectral_slope = spectral::inverse_real(iw * spectral::forward(drive));
        auto rhs = [&](const spectral::Spectrum& Y) -> spectral::Spectrum {
            const Series y = spectral::inverse_real(Y);
            if (cfg.include_second_term) return iw * spectral::forward(drive * y);
            return spectral::forward(spectral_slope * y);
        };
        parallel_for(static_cast<std::size_t>(m), cfg.threads, [&](std::size_t i) {
            const auto row = static_cast<Eigen::Index>(i);
            spectral::Spectrum Y = spectral::forward(input.realizations.row(row).transpose().array());
            for (int s = 0; s < cfg.z_steps; ++s) {
                const spectral::Spectrum k1 = rhs(Y);
                const spectral::Spectrum k2 = rhs(Y + (0.5 * dz) * k1);
                Y += dz * k2;
            }
            out.realizations.row(row) = spectral::inverse_real(Y).matrix().transpose();
        });
    }

    const double e_in = energy_of(input.realizations);
    const double e_out = energy_of(out.realizations);
    if (!std::isfinite(e_out)) throw NumericalError("propagate_numeric: non-finite field, increase z_steps");
    // d/dz |y|^2 = 2 kappa E' y^2 without the transport term and kappa E' y^2 with it
    // (integration by parts), so the exact solution respects exp(growth * max|f|).
    const double growth = cfg.include_second_term ? 1.0 : 2.0;
    if (e_out > e_in * std::exp(growth * max_abs_f) * (1.0 + 1e-9)) {
        throw NumericalError("propagate_numeric: ensemble energy grew by " + std::to_string(e_out / e_in) +
                             " beyond the exp(" + std::to_string(growth) + " max|f|) bound; increase z_steps or refine the time grid (z_steps = " +
                             std::to_string(cfg.z_steps) + ")");
    }
    return out;
}

VelocityProfile pockels_velocity(const CoherentTransient& transient, const CrystalParams& crystal,
                                 DerivativeMode mode, const PhysConstants& consts) {
    crystal.validate();
    const double n = crystal.n;
    const double r = -crystal.d_eff / (n * n * n * n);
    VelocityProfile v;
    v.grid = transient.grid;
    v.delta_n = r * n * n * n * transient.field;
    if ((v.delta_n.abs() >= n).any()) {
        throw NumericalError("pockels_velocity: |delta n| >= n, weak-modulation model breaks down");
    }
    v.v_loc = consts.c / (n + v.delta_n);
    const Series dn_dt = time_derivative(v.delta_n, transient.grid, mode);
    v.dv_dt = -consts.c * dn_dt / (n + v.delta_n).square();
    v.f_from_velocity = -(crystal.length / consts.c) * dn_dt;
    return v;
}

NoiseExtrema extrema_of_noise(const SqueezingProfile& profile) {
    if (!profile.has_noise()) throw std::invalid_argument("extrema_of_noise: profile has no noise pattern");
    NoiseExtrema e;
    e.rms_max = profile.delta_e_rms.maxCoeff(&e.index_max);
    e.rms_min = profile.delta_e_rms.minCoeff(&e.index_min);
    if (e.rms_max == e.rms_min) throw std::invalid_argument("extrema_of_noise: no extrema in a constant pattern");
    e.t_max = profile.grid.time(e.index_max);
    e.t_min = profile.grid.time(e.index_min);
    return e;
}

}  // namespace subcycle
