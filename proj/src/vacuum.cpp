#include "subcycle/vacuum.hpp"

#include "subcycle/io.hpp"
#include "subcycle/parallel.hpp"
#include "subcycle/rng.hpp"
#include "subcycle/spectral.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace subcycle {

namespace {

constexpr char kMagic[8] = {'S', 'Q', 'V', 'E', 'N', 'S', '0', '1'};

}  // namespace

double effective_duration(const ProbeParams& probe, WidthConvention convention) {
    switch (convention) {
        case WidthConvention::Rms:
            return probe.duration / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
        case WidthConvention::Integral:
            return probe.duration * std::sqrt(std::numbers::pi / (4.0 * std::numbers::ln2));
        case WidthConvention::Fwhm:
            break;
    }
    return probe.duration;
}

VacuumStats vacuum_amplitude(const ProbeParams& probe, const PhysConstants& consts,
                             WidthConvention convention) {
    probe.validate();
    SpaceTimeSegment seg;
    seg.dt = effective_duration(probe, convention);
    seg.dz = consts.c * seg.dt / probe.dx_n;
    seg.dx_dy = std::numbers::pi * probe.waist * probe.waist;
    const double e = std::sqrt(consts.hbar / (consts.eps0 * seg.dx_dy * seg.dz * seg.dt));
    return VacuumStats{e, seg};
}

VacuumStats make_reference_vacuum(double delta_e_vac, const PhysConstants& consts) {
    if (!(delta_e_vac > 0.0) || !std::isfinite(delta_e_vac)) {
        throw std::invalid_argument("reference vacuum field must be positive");
    }
    const ProbeParams probe;
    SpaceTimeSegment seg;
    seg.dx_dy = std::numbers::pi * probe.waist * probe.waist;
    seg.dz = consts.c * probe.duration / probe.dx_n;
    seg.dt = consts.hbar / (consts.eps0 * delta_e_vac * delta_e_vac * seg.dx_dy * seg.dz);
    return VacuumStats{delta_e_vac, seg};
}

double segment_invariant_error(const VacuumStats& s, const PhysConstants& consts) {
    const double lhs = s.delta_e_vac * s.delta_e_vac * consts.eps0 * s.segment.dx_dy * s.segment.dz *
                       s.segment.dt;
    return std::abs(lhs / consts.hbar - 1.0);
}

Eigen::ArrayXd FieldEnsemble::column_mean() const {
    return realizations.colwise().mean().transpose().array();
}

Eigen::ArrayXd FieldEnsemble::column_std() const {
    const Eigen::Index m = realizations.rows();
    if (m < 2) throw std::invalid_argument("column_std needs at least two realizations");
    const Eigen::RowVectorXd mean = realizations.colwise().mean();
    Eigen::ArrayXd var = Eigen::ArrayXd::Zero(realizations.cols());
    for (Eigen::Index r = 0; r < m; ++r) {
        var += (realizations.row(r) - mean).array().square().transpose();
    }
    return (var / static_cast<double>(m - 1)).sqrt();
}

FieldEnsemble sample_vacuum_ensemble(const TimeGrid& grid, const VacuumStats& stats, Eigen::Index count,
                                     std::uint64_t seed, double band_limit, unsigned threads) {
    if (count < 2) throw std::invalid_argument("vacuum ensemble needs at least 2 realizations");
    if (!(band_limit > 0.0) || band_limit >= grid.nyquist()) {
        throw std::invalid_argument("band limit must lie in (0, Nyquist)");
    }
    const Eigen::Index n = grid.size();
    const double df = 1.0 / (static_cast<double>(n) * grid.dt());
    // Bins 0..kmax are populated; Nyquist is excluded by band_limit < Nyquist.
    const auto kmax = static_cast<Eigen::Index>(std::floor(band_limit / df * (1.0 + 1e-12)));
    const double bins = static_cast<double>(kmax + 1);
    const double sigma = stats.delta_e_vac / std::sqrt(bins);
    const double half_n = 0.5 * static_cast<double>(n);

    FieldEnsemble out{grid, EnsembleMatrix(count, n), seed, stats.delta_e_vac};
    parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t r) {
        CounterRng rng(seed, r);
        spectral::Spectrum X = spectral::Spectrum::Zero(n);
        // x_t = a_0 + sum_k a_k cos(2 pi k t/n) + b_k sin(2 pi k t/n)
        X[0] = static_cast<double>(n) * sigma * rng.normal();
        for (Eigen::Index k = 1; k <= kmax; ++k) {
            const double a = sigma * rng.normal();
            const double b = sigma * rng.normal();
            X[k] = half_n * std::complex<double>(a, -b);
            X[n - k] = std::conj(X[k]);
        }
        out.realizations.row(static_cast<Eigen::Index>(r)) = spectral::inverse_real(X).matrix().transpose();
    });
    return out;
}

void write_ensemble_binary(const FieldEnsemble& ensemble, std::ostream& out) {
    out.write(kMagic, sizeof kMagic);
    io::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(ensemble.realizations.rows()));
    io::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(ensemble.realizations.cols()));
    io::put_le<double>(out, ensemble.grid.dt());
    io::put_le<double>(out, ensemble.grid.t0());
    const double* p = ensemble.realizations.data();
    for (Eigen::Index i = 0; i < ensemble.realizations.size(); ++i) io::put_le<double>(out, p[i]);
    if (!out) throw std::runtime_error("failed writing ensemble");
}

FieldEnsemble read_ensemble_binary(std::istream& in) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
        throw std::runtime_error("not a field-ensemble file (bad magic)");
    }
    const auto m = static_cast<Eigen::Index>(io::get_le<std::uint64_t>(in));
    const auto n = static_cast<Eigen::Index>(io::get_le<std::uint64_t>(in));
    const double dt = io::get_le<double>(in);
    const double t0 = io::get_le<double>(in);
    FieldEnsemble e{TimeGrid(t0, dt, n), EnsembleMatrix(m, n), 0, 0.0};
    double* p = e.realizations.data();
    for (Eigen::Index i = 0; i < e.realizations.size(); ++i) p[i] = io::get_le<double>(in);
    return e;
}

void write_ensemble_csv(const FieldEnsemble& ensemble, std::ostream& out) {
    const Eigen::Index m = ensemble.realizations.rows();
    if (m > 64) throw std::invalid_argument("CSV export is limited to 64 realizations; use the binary layout");
    io::write_comment_header(out, {{"seed", std::to_string(ensemble.seed)},
                                   {"target_rms_Vcm", io::fmt12(ensemble.target_rms / units::V_per_cm)}});
    out << "t_fs";
    for (Eigen::Index r = 0; r < m; ++r) out << ",E" << r << "_Vcm";
    out << '\n';
    for (Eigen::Index k = 0; k < ensemble.grid.size(); ++k) {
        out << io::fmt12(ensemble.grid.time(k) / units::fs);
        for (Eigen::Index r = 0; r < m; ++r) {
            out << ',' << io::fmt12(ensemble.realizations(r, k) / units::V_per_cm);
        }
        out << '\n';
    }
}

}  // namespace subcycle
