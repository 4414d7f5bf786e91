#include "subcycle/detect.hpp"

#include "subcycle/io.hpp"
#include "subcycle/parallel.hpp"
#include "subcycle/rng.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace subcycle {

namespace {

// E[s] / sigma for the unbiased sample standard deviation with nu = M - 1.
double c4(double nu) { return std::sqrt(2.0 / nu) * std::exp(std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu)); }

// sigma * E[1 / s].
double inverse_bias(double nu) {
    return std::sqrt(0.5 * nu) * std::exp(std::lgamma(0.5 * (nu - 1.0)) - std::lgamma(0.5 * nu));
}

// Welford accumulator, so long lock-in records need no buffer.
struct RunningStd {
    double mean = 0.0;
    double m2 = 0.0;
    long count = 0;

    void push(double x) {
        ++count;
        const double d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (x - mean);
    }
    double std() const { return std::sqrt(m2 / static_cast<double>(count - 1)); }
};

}  // namespace

void DetectionParams::validate() const {
    if (!(delta_e_sn > 0.0)) throw std::invalid_argument("shot-noise field must be positive");
    if (samples_per_point < 100) throw std::invalid_argument("samples_per_point must be >= 100");
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0, 1]");
    probe.validate();
}

std::string to_string(RdnMode mode) {
    switch (mode) {
        case RdnMode::AnalyticLinearized: return "analytic_linearized";
        case RdnMode::MonteCarlo: return "monte_carlo";
        case RdnMode::AnalyticExact: break;
    }
    return "analytic_exact";
}

double vacuum_fraction(const DetectionParams& det, const VacuumStats& vac) {
    const double sn = det.delta_e_sn;
    return std::sqrt(sn * sn + vac.delta_e_vac * vac.delta_e_vac) / sn - 1.0;
}

double probe_convolve(const Series& series, const TimeGrid& grid, const ProbeParams& probe, double delay) {
    if (series.size() != grid.size()) throw std::invalid_argument("probe_convolve: size mismatch");
    if (probe.duration < grid.dt()) throw std::invalid_argument("probe_convolve: probe shorter than grid step");
    if (!(delay >= grid.t0() && delay <= grid.end())) {
        throw std::out_of_range("probe_convolve: delay outside grid support");
    }
    const double a = 4.0 * std::numbers::ln2 / (probe.duration * probe.duration);
    const double reach = 5.0 * probe.duration;
    const auto lo = static_cast<Eigen::Index>(std::max(0.0, std::floor((delay - reach - grid.t0()) / grid.dt())));
    const auto hi = std::min<Eigen::Index>(grid.size() - 1,
                                           static_cast<Eigen::Index>(std::ceil((delay + reach - grid.t0()) / grid.dt())));
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index k = lo; k <= hi; ++k) {
        const double s = grid.time(k) - delay;
        const double w = std::exp(-a * s * s);
        num += w * series[k];
        den += w;
    }
    return num / den;
}

Series probe_convolve_all(const Series& series, const TimeGrid& grid, const ProbeParams& probe) {
    Series out(grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k) out[k] = probe_convolve(series, grid, probe, grid.time(k));
    return out;
}

CoherentReadout coherent_readout(const CoherentTransient& transient, const DetectionParams& det) {
    return CoherentReadout{transient.grid, probe_convolve_all(transient.field, transient.grid, det.probe)};
}

Series detected_noise(const SqueezingProfile& profile, const VacuumStats& vacuum, const DetectionParams& det) {
    if (!profile.has_noise()) throw std::invalid_argument("detected_noise: profile has no noise pattern");
    const double vac2 = vacuum.delta_e_vac * vacuum.delta_e_vac;
    Series var = det.eta * profile.delta_e_rms.square() + (1.0 - det.eta) * vac2;
    if (det.convolve_noise) var = probe_convolve_all(var, profile.grid, det.probe);
    return var.sqrt();
}

RdnTrace rdn_trace_analytic(const SqueezingProfile& profile, const VacuumStats& vacuum,
                            const DetectionParams& det, bool linearized) {
    const Series rms = detected_noise(profile, vacuum, det);
    RdnTrace t;
    t.delays = profile.grid;
    t.mode = linearized ? RdnMode::AnalyticLinearized : RdnMode::AnalyticExact;
    t.rdn = linearized ? Series(rdn_linearized(rms, vacuum.delta_e_vac, det.delta_e_sn))
                       : Series(rdn_exact(rms, vacuum.delta_e_vac, det.delta_e_sn));
    t.rdn_stderr = Series::Zero(rms.size());
    return t;
}

LockinPoint lockin_point(double detected_rms, double delta_e_vac, double delta_e_sn, long samples,
                         std::uint64_t seed, std::uint64_t stream) {
    if (samples < 100) throw std::invalid_argument("lock-in statistic needs >= 100 samples per point");
    CounterRng rng(seed, stream);
    RunningStd x;
    RunningStd y;
    for (long i = 0; i < samples; ++i) x.push(detected_rms * rng.normal() + delta_e_sn * rng.normal());
    for (long i = 0; i < samples; ++i) y.push(delta_e_vac * rng.normal() + delta_e_sn * rng.normal());

    const double nu = static_cast<double>(samples - 1);
    const double k4 = c4(nu);
    const double kinv = inverse_bias(nu);
    const double ratio = (x.std() / k4) / (y.std() * kinv);
    // Var(R)/R^2 = E[s_x^2] E[1/s_y^2] / (E[s_x] E[1/s_y])^2 - 1
    const double rel_var = (nu / (nu - 2.0)) / (k4 * k4 * kinv * kinv) - 1.0;
    return LockinPoint{ratio - 1.0, std::abs(ratio) * std::sqrt(rel_var)};
}

RdnTrace simulate_lockin_rdn(const SqueezingProfile& profile, const VacuumStats& vacuum,
                             const DetectionParams& det) {
    det.validate();
    const Series rms = detected_noise(profile, vacuum, det);
    RdnTrace t;
    t.delays = profile.grid;
    t.mode = RdnMode::MonteCarlo;
    t.rdn.resize(rms.size());
    t.rdn_stderr.resize(rms.size());
    parallel_for(static_cast<std::size_t>(rms.size()), det.threads, [&](std::size_t k) {
        const auto i = static_cast<Eigen::Index>(k);
        const LockinPoint p =
            lockin_point(rms[i], vacuum.delta_e_vac, det.delta_e_sn, det.samples_per_point, det.seed, k);
        t.rdn[i] = p.rdn;
        t.rdn_stderr[i] = p.std_error;
    });
    return t;
}

void write_rdn_csv(const RdnTrace& trace, std::ostream& out,
                   const std::vector<std::pair<std::string, std::string>>& provenance) {
    io::write_comment_header(out, provenance);
    out << "t_D_fs,RDN,RDN_stderr,mode\n";
    const std::string mode = to_string(trace.mode);
    for (Eigen::Index k = 0; k < trace.rdn.size(); ++k) {
        out << io::fmt12(trace.delays.time(k) / units::fs) << ',' << io::fmt12(trace.rdn[k]) << ','
            << io::fmt12(trace.rdn_stderr[k]) << ',' << mode << '\n';
    }
}

void write_readout_csv(const CoherentReadout& readout, std::ostream& out,
                       const std::vector<std::pair<std::string, std::string>>& provenance) {
    io::write_comment_header(out, provenance);
    out << "t_D_fs,E_Vcm\n";
    for (Eigen::Index k = 0; k < readout.field.size(); ++k) {
        out << io::fmt12(readout.delays.time(k) / units::fs) << ',' << io::fmt12(readout.field[k] / units::V_per_cm)
            << '\n';
    }
}

}  // namespace subcycle
