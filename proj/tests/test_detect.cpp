#include <doctest.h>

#include "subcycle/detect.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace subcycle;

namespace {

constexpr double fs = 1e-15;
constexpr double Vcm = 100.0;

DetectionParams reference_detection() {
    DetectionParams det;
    det.delta_e_sn = 81 * Vcm;
    return det;
}

const VacuumStats kVac = make_reference_vacuum(24 * Vcm);

SqueezingProfile profile_from_rms(const TimeGrid& g, const Series& rms) {
    SqueezingProfile p;
    p.grid = g;
    p.f = (rms / kVac.delta_e_vac).log();
    p.delta_e_rms = rms;
    return p;
}

}  // namespace

TEST_CASE("rdn_exact reference values") {
    const DetectionParams det = reference_detection();
    CHECK(rdn_exact(0.0, kVac, det) == doctest::Approx(-0.04120188729).epsilon(1e-9));
    CHECK(rdn_exact(24 * Vcm, kVac, det) == 0.0);
    CHECK(rdn_exact(26.4 * Vcm, kVac, det) == doctest::Approx(0.008438544287).epsilon(1e-9));
    CHECK(rdn_exact(12 * Vcm, kVac, det) == doctest::Approx(-0.03073720504).epsilon(1e-9));
    CHECK(rdn_exact(48 * Vcm, kVac, det) == doctest::Approx(0.1145037179).epsilon(1e-9));
}

TEST_CASE("rdn_exact properties") {
    const DetectionParams det = reference_detection();
    double prev = -2.0;
    for (double r = 0.0; r < 500 * Vcm; r += 3.3 * Vcm) {
        const double v = rdn_exact(r, kVac, det);
        CHECK(v > -1.0);
        CHECK(v > prev);
        CHECK(v >= rdn_exact(0.0, kVac, det));
        prev = v;
    }
    // works on arrays
    const Eigen::ArrayXd rms = Eigen::ArrayXd::LinSpaced(5, 10 * Vcm, 50 * Vcm);
    const Eigen::ArrayXd arr = rdn_exact(rms, kVac.delta_e_vac, det.delta_e_sn);
    for (Eigen::Index i = 0; i < rms.size(); ++i) CHECK(arr[i] == rdn_exact(rms[i], kVac, det));
}

TEST_CASE("rdn_linearized") {
    const DetectionParams det = reference_detection();
    CHECK(rdn_linearized(24 * Vcm, kVac, det) == 0.0);
    const double lin = rdn_linearized(26.4 * Vcm, kVac, det);
    const double ex = rdn_exact(26.4 * Vcm, kVac, det);
    CHECK(lin == doctest::Approx(0.00877914952).epsilon(1e-9));
    CHECK(std::abs(lin - ex) / std::abs(ex) < 0.05);
    // far from vacuum the linearization visibly breaks
    CHECK(rdn_linearized(48 * Vcm, kVac, det) == doctest::Approx(0.0877914952).epsilon(1e-9));
    CHECK(rdn_exact(48 * Vcm, kVac, det) == doctest::Approx(0.1145).epsilon(1e-3));

    // Near vacuum the two forms differ already at first order by the factor
    // 1 + vac^2/SN^2 (about 8.8% here), so the 10% bound only holds close to vacuum.
    const double slope_ratio = 1.0 + std::pow(kVac.delta_e_vac / det.delta_e_sn, 2);
    for (double x = -0.1; x <= 0.1; x += 0.005) {
        if (std::abs(x) < 1e-12) continue;
        const double r = (1.0 + x) * kVac.delta_e_vac;
        const double e = rdn_exact(r, kVac, det);
        const double rel = std::abs(rdn_linearized(r, kVac, det) - e) / std::abs(e);
        CHECK(rel <= 0.15);
        if (std::abs(x) <= 0.01) CHECK(rel <= 0.1);
    }
    const double tiny = (1.0 + 1e-6) * kVac.delta_e_vac;
    CHECK(rdn_linearized(tiny, kVac, det) / rdn_exact(tiny, kVac, det) ==
          doctest::Approx(slope_ratio).epsilon(1e-5));
}

TEST_CASE("vacuum_fraction") {
    DetectionParams det = reference_detection();
    CHECK(vacuum_fraction(det, kVac) == doctest::Approx(0.04297243262).epsilon(1e-9));
    SqueezingProfile unused;
    VacuumStats none = kVac;
    none.delta_e_vac = 0.0;
    CHECK(vacuum_fraction(det, none) == 0.0);
    det.delta_e_sn = kVac.delta_e_vac;
    CHECK(vacuum_fraction(det, kVac) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-14));
}

TEST_CASE("probe_convolve") {
    const TimeGrid g = make_grid(-100 * fs, 0.25 * fs, 801);
    ProbeParams probe;
    const Series flat = Series::Constant(g.size(), 7.5);
    CHECK(probe_convolve(flat, g, probe, 3.3 * fs) == doctest::Approx(7.5).epsilon(1e-14));
    CHECK(probe_convolve(flat, g, probe, g.t0()) == doctest::Approx(7.5).epsilon(1e-14));

    // Gaussian Fourier factor exp(-(pi nu tau)^2 / (4 ln2)) at 44 THz, 5.8 fs:
    // numpy oracle (discrete weights on this grid) 0.793078396363
    const Series carrier = (2 * std::numbers::pi * 44e12 * g.times()).cos();
    CHECK(probe_convolve(carrier, g, probe, 0.0) == doctest::Approx(0.793078396363).epsilon(1e-9));

    // probe as short as the grid step: on-grid delay of a ramp returns the sample
    ProbeParams sharp = probe;
    sharp.duration = g.dt();
    const Series ramp = g.times();
    CHECK(probe_convolve(ramp, g, sharp, g.time(400)) == doctest::Approx(g.time(400)).epsilon(1e-12));
    Series spike = Series::Zero(g.size());
    spike[400] = 1.0;
    CHECK(probe_convolve(spike, g, sharp, g.time(400)) > 0.88);

    CHECK_THROWS_AS(probe_convolve(flat, g, probe, 150 * fs), std::out_of_range);
    ProbeParams tiny = probe;
    tiny.duration = 0.1 * fs;
    CHECK_THROWS_AS(probe_convolve(flat, g, tiny, 0.0), std::invalid_argument);
}

TEST_CASE("coherent_readout") {
    const TimeGrid g = make_grid(-512 * fs, 1 * fs, 1024);
    const DetectionParams det = reference_detection();
    const auto zero = synthesize_transient(g, 0.0, 0.0, 44e12, 90 * fs, 1e17);
    CHECK(coherent_readout(zero, det).field.abs().maxCoeff() == 0.0);

    const auto a = synthesize_transient(g, 3.5e-9, 0.0, 44e12, 90 * fs, 1e17);
    const auto b = synthesize_transient(g, 3.5e-9, std::numbers::pi, 44e12, 90 * fs, 1e17);
    const CoherentReadout ra = coherent_readout(a, det);
    const CoherentReadout rb = coherent_readout(b, det);
    CHECK((ra.field + rb.field).abs().maxCoeff() == 0.0);
    CHECK(std::abs(spectral_centroid(ra.field, g) - 44e12) < 2e12);

    std::ostringstream os;
    write_readout_csv(ra, os, {{"probe_fs", "5.8"}});
    CHECK(os.str().rfind("# probe_fs = 5.8\nt_D_fs,E_Vcm\n", 0) == 0);
}

TEST_CASE("detected_noise mixing and smearing") {
    const TimeGrid g = make_grid(-64 * fs, 0.5 * fs, 256);
    DetectionParams det = reference_detection();
    det.convolve_noise = false;
    const Series rms = kVac.delta_e_vac * (1.0 + 0.5 * (2 * std::numbers::pi * 44e12 * g.times()).sin());
    const SqueezingProfile p = profile_from_rms(g, rms);
    CHECK((detected_noise(p, kVac, det) - rms).abs().maxCoeff() < 1e-9);
    det.eta = 0.0;
    CHECK((detected_noise(p, kVac, det) - kVac.delta_e_vac).abs().maxCoeff() < 1e-9);
    det.eta = 1.0;
    det.convolve_noise = true;
    const Series smeared = detected_noise(p, kVac, det);
    CHECK(smeared.maxCoeff() < rms.maxCoeff());
    CHECK(smeared.minCoeff() > rms.minCoeff());
}

TEST_CASE("simulate_lockin_rdn null case is centered") {
    const TimeGrid g = make_grid(0.0, 1 * fs, 100);
    DetectionParams det = reference_detection();
    det.samples_per_point = 1000000;
    det.seed = 21;
    const SqueezingProfile p = profile_from_rms(g, Series::Constant(g.size(), kVac.delta_e_vac));
    const RdnTrace t = simulate_lockin_rdn(p, kVac, det);
    CHECK(t.mode == RdnMode::MonteCarlo);
    CHECK((t.rdn_stderr > 0.0).all());
    CHECK((t.rdn.abs() < 4.0 * t.rdn_stderr).count() >= 99);
    CHECK(std::abs(t.rdn.mean()) < 4.0 * t.rdn_stderr.mean() / std::sqrt(100.0));
}

TEST_CASE("simulate_lockin_rdn tracks rdn_exact and stderr scales as 1/sqrt(M)") {
    const TimeGrid g = make_grid(0.0, 1 * fs, 8);
    const SqueezingProfile p = profile_from_rms(g, Series::Constant(g.size(), 0.5 * kVac.delta_e_vac));
    DetectionParams det = reference_detection();
    det.convolve_noise = false;
    det.samples_per_point = 1000000;
    const RdnTrace big = simulate_lockin_rdn(p, kVac, det);
    const double exact = rdn_exact(0.5 * kVac.delta_e_vac, kVac, det);
    CHECK((big.rdn - exact).abs().maxCoeff() < 3.0 * big.rdn_stderr.maxCoeff());

    det.samples_per_point = 10000;
    const RdnTrace small = simulate_lockin_rdn(p, kVac, det);
    const double ratio = small.rdn_stderr.mean() / big.rdn_stderr.mean();
    CHECK(ratio >= 9.0);
    CHECK(ratio <= 11.0);
}

TEST_CASE("simulate_lockin_rdn determinism and preconditions") {
    const TimeGrid g = make_grid(0.0, 1 * fs, 16);
    DetectionParams det = reference_detection();
    det.samples_per_point = 2000;
    const SqueezingProfile p = profile_from_rms(g, Series::LinSpaced(g.size(), 10 * Vcm, 40 * Vcm));
    det.threads = 1;
    const RdnTrace a = simulate_lockin_rdn(p, kVac, det);
    det.threads = 5;
    const RdnTrace b = simulate_lockin_rdn(p, kVac, det);
    CHECK((a.rdn == b.rdn).all());
    CHECK((a.rdn_stderr == b.rdn_stderr).all());
    det.samples_per_point = 50;
    CHECK_THROWS_AS(simulate_lockin_rdn(p, kVac, det), std::invalid_argument);
}

TEST_CASE("rdn traces and CSV") {
    const TimeGrid g = make_grid(0.0, 1 * fs, 16);
    DetectionParams det = reference_detection();
    det.convolve_noise = false;
    const SqueezingProfile p = profile_from_rms(g, Series::LinSpaced(g.size(), 0.0, 40 * Vcm));
    const RdnTrace ex = rdn_trace_analytic(p, kVac, det);
    const RdnTrace lin = rdn_trace_analytic(p, kVac, det, true);
    CHECK(ex.rdn[0] == doctest::Approx(-0.04120188729));
    CHECK(lin.mode == RdnMode::AnalyticLinearized);
    CHECK((ex.rdn > -1.0).all());
    std::ostringstream os;
    write_rdn_csv(ex, os);
    CHECK(os.str().rfind("t_D_fs,RDN,RDN_stderr,mode\n0,-0.0412018872", 0) == 0);
    CHECK(os.str().find(",analytic_exact\n") != std::string::npos);
}
