// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "subcycle/io.hpp"
#include "subcycle/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace subcycle;
namespace fs = std::filesystem;

namespace {

constexpr double fs_ = 1e-15;
constexpr double nJ = 1e-9;
constexpr double Vcm = 100.0;
const double kLn2 = std::numbers::ln2;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

Scenario bundled(const std::string& name) {
    return load_scenario(std::string(SUBCYCLE_SOURCE_DIR) + "/configs/" + name + ".yaml");
}

DetectionParams reference_detection() {
    DetectionParams det;
    det.delta_e_sn = 81 * Vcm;
    return det;
}

SqueezingProfile profile_for(const Scenario& sc, double cep, double energy) {
    TransientTemplate t = sc.make_template();
    t.cep = cep;
    const CoherentTransient tr = t.synthesize(energy, resolve_gain(sc));
    return analytic_noise(squeezing_factor(tr, sc.crystal), sc.vacuum());
}

// Short transient on a 256-sample, 2 fs grid scaled to the requested max|f|.
CoherentTransient small_transient(double fmax, const CrystalParams& crystal,
                                  const TimeGrid& grid = make_grid(-256 * fs_, 2 * fs_, 256)) {
    TransientTemplate t;
    t.grid = grid;
    t.env_fwhm = 40 * fs_;
    const double unit = squeezing_factor(t.synthesize(1.0, 1.0), crystal).max_abs_f;
    return t.synthesize(1.0, fmax / unit);
}

// Cosine/sine modes of every bin up to the band limit: the column second moment
// after linear propagation is the exact output variance.
FieldEnsemble mode_ensemble(const TimeGrid& g, double band_limit) {
    const Eigen::Index n = g.size();
    const double df = 1.0 / (static_cast<double>(n) * g.dt());
    const auto kmax = static_cast<Eigen::Index>(std::floor(band_limit / df));
    FieldEnsemble e{g, EnsembleMatrix::Zero(2 * kmax + 1, n), 0, 1.0};
    for (Eigen::Index j = 0; j < n; ++j) {
        e.realizations(0, j) = 1.0;
        for (Eigen::Index k = 1; k <= kmax; ++k) {
            const double th = 2.0 * std::numbers::pi * static_cast<double>(k * j) / static_cast<double>(n);
            e.realizations(2 * k - 1, j) = std::cos(th);
            e.realizations(2 * k, j) = std::sin(th);
        }
    }
    return e;
}

Series second_moment(const FieldEnsemble& e) { return e.realizations.colwise().squaredNorm().transpose().array(); }

// Column std of the analytically propagated vacuum, accumulated over chunks.
Series chunked_std(const Scenario& sc, const CoherentTransient& tr, long total, std::uint64_t seed0) {
    const long chunk = 12500;
    const Eigen::Index n = sc.grid.size();
    Series sum = Series::Zero(n);
    Series sum2 = Series::Zero(n);
    PropagationConfig cfg;
    cfg.method = PropagationMethod::Analytic;
    for (long c = 0; c * chunk < total; ++c) {
        const FieldEnsemble in = sample_vacuum_ensemble(sc.grid, sc.vacuum(), chunk, seed0 + c, 150e12);
        const FieldEnsemble out = propagate_numeric(tr, sc.crystal, in, cfg);
        sum += out.realizations.colwise().sum().transpose().array();
        sum2 += out.realizations.colwise().squaredNorm().transpose().array();
    }
    const double m = static_cast<double>(total);
    return ((sum2 - sum.square() / m) / (m - 1.0)).sqrt();
}

Outcome c1() {
    const double v = rdn_exact(0.0, make_reference_vacuum(24 * Vcm), reference_detection());
    return {std::abs(v - (-0.0412)) <= 1e-4, fmt("rdn_exact(0) = %.6f (target -0.0412 +- 1e-4)", v)};
}

Outcome c2() {
    const double v = vacuum_fraction(reference_detection(), make_reference_vacuum(24 * Vcm));
    return {std::abs(v - 0.0430) <= 1e-4, fmt("vacuum_fraction = %.6f (target 0.0430 +- 1e-4)", v)};
}

Outcome c3() {
    const Scenario sc = bundled("fig2");
    const double e = sc.transient.pump_energy;
    const SqueezingProfile plus = profile_for(sc, sc.transient.cep, e);
    const SqueezingProfile minus = profile_for(sc, sc.transient.cep + std::numbers::pi, e);
    const double analytic = product_invariant_check(plus, minus, sc.vacuum());

    TransientTemplate t = sc.make_template();
    const double gain = resolve_gain(sc);
    const CoherentTransient tp = t.synthesize(e, gain);
    t.cep += std::numbers::pi;
    const CoherentTransient tm = t.synthesize(e, gain);
    const long m = 100000;
    const Series sp = chunked_std(sc, tp, m, 1000);
    const Series sm = chunked_std(sc, tm, m, 2000);
    const double vac2 = sc.vacuum().delta_e_vac * sc.vacuum().delta_e_vac;
    const double mc = (sp * sm / vac2 - 1.0).abs().maxCoeff();
    return {analytic < 1e-12 && mc < 0.02,
            fmt("analytic rel err %.2e (< 1e-12); Monte Carlo M=1e5 max rel dev %.4f (< 0.02)", analytic, mc)};
}

Outcome c4() {
    const Scenario sc = bundled("fig2");
    const SqueezingProfile p = profile_for(sc, sc.transient.cep, sc.transient.pump_energy);
    const CoherentTransient tr = sc.make_template().synthesize(sc.transient.pump_energy, resolve_gain(sc));
    const Series slope = time_derivative(tr.field, tr.grid);
    Eigen::Index s_min = 0;
    Eigen::Index s_max = 0;
    slope.minCoeff(&s_min);
    slope.maxCoeff(&s_max);
    const NoiseExtrema ex = extrema_of_noise(p);
    // d_eff < 0: excess noise at the most negative slope, squeezing at the most positive
    const auto d_max = std::abs(ex.index_max - s_min);
    const auto d_min = std::abs(ex.index_min - s_max);
    return {d_max <= 1 && d_min <= 1,
            fmt("|argmax dE_rms - argmin dE/dt| = %.0f, |argmin dE_rms - argmax dE/dt| = %.0f samples (<= 1)",
                static_cast<double>(d_max), static_cast<double>(d_min))};
}

Outcome c5() {
    const CrystalParams crystal;
    const CoherentTransient tr = small_transient(kLn2, crystal);
    const Series f = squeezing_factor(tr, crystal).f;
    PropagationConfig cfg;
    cfg.z_steps = 256;

    const FieldEnsemble modes = mode_ensemble(tr.grid, 100e12);
    const Series analytic = (second_moment(propagate_numeric(tr, crystal, modes, cfg)) / second_moment(modes)).sqrt();
    const double oracle_err = (analytic / f.exp() - 1.0).abs().maxCoeff();

    const long m = 100000;
    const FieldEnsemble in = sample_vacuum_ensemble(tr.grid, make_reference_vacuum(24 * Vcm), m, 5, 100e12);
    const Series s = propagate_numeric(tr, crystal, in, cfg).column_std();
    const double se = 1.0 / std::sqrt(2.0 * static_cast<double>(m - 1));
    const Series z = (s / (f.exp() * 24 * Vcm) - 1.0).abs() / se;
    const double within = static_cast<double>((z < 3.0).count()) / static_cast<double>(z.size());

    const FieldEnsemble few = sample_vacuum_ensemble(tr.grid, make_reference_vacuum(1.0), 50, 2, 100e12);
    const EnsembleMatrix exact = few.realizations * f.exp().matrix().asDiagonal();
    std::vector<double> err;
    for (int steps : {8, 16, 32, 64}) {
        PropagationConfig c;
        c.z_steps = steps;
        err.push_back((propagate_numeric(tr, crystal, few, c).realizations - exact).cwiseAbs().maxCoeff());
    }
    double order = 1e9;
    for (std::size_t i = 1; i < err.size(); ++i) order = std::min(order, std::log2(err[i - 1] / err[i]));
    return {oracle_err < 1e-3 && within >= 0.99 && order >= 1.0,
            fmt("oracle rel err %.2e (< 1e-3); MC columns within 3 stderr %.4f (>= 0.99); z-order %.2f (>= 1)",
                oracle_err, within, order)};
}

Outcome c6() {
    const CrystalParams crystal;
    const TimeGrid fine = make_grid(-256 * fs_, 0.5 * fs_, 1024);
    double worst = 0.0;
    for (double fmax : {0.35, 0.7}) {
        const CoherentTransient tr = small_transient(fmax, crystal, fine);
        const FieldEnsemble in = sample_vacuum_ensemble(fine, make_reference_vacuum(24 * Vcm), 100, 8, 100e12);
        for (bool second : {false, true}) {
            PropagationConfig td;
            td.z_steps = 128;
            td.include_second_term = second;
            PropagationConfig sp = td;
            sp.method = PropagationMethod::Spectral;
            const Series a = propagate_numeric(tr, crystal, in, td).column_std();
            const Series b = propagate_numeric(tr, crystal, in, sp).column_std();
            worst = std::max(worst, (b / a - 1.0).abs().maxCoeff());
        }
    }
    return {worst < 5e-3, fmt("max rel std difference %.2e over max|f| in {0.35, 0.7}, second term on/off (< 5e-3)", worst)};
}

Outcome c7() {
    const CrystalParams crystal;
    const TimeGrid g = make_grid(-512 * fs_, 0.5 * fs_, 2048);
    std::vector<CoherentTransient> cases;
    for (double cep : {0.0, 0.9, 2.3, -1.4}) cases.push_back(synthesize_transient(g, 3.5e-9, cep, 44e12, 90 * fs_, 6e17));
    cases.push_back(optical_rectification(g, 12 * fs_, 2e-9, 1e18));
    CoherentTransient mix = cases[1];
    mix.field += 0.3 * synthesize_transient(g, 3.5e-9, 0.4, 30e12, 60 * fs_, 6e17).field;
    cases.push_back(mix);

    double worst = 0.0;
    long sign_mismatch = 0;
    for (const auto& tr : cases) {
        const Series f = squeezing_factor(tr, crystal).f;
        const VelocityProfile v = pockels_velocity(tr, crystal);
        worst = std::max(worst, (v.f_from_velocity - f).abs().maxCoeff() / f.abs().maxCoeff());
        for (Eigen::Index k = 0; k < f.size(); ++k) {
            if (std::abs(f[k]) > 1e-9 * f.abs().maxCoeff() && (f[k] > 0.0) != (v.dv_dt[k] > 0.0)) ++sign_mismatch;
        }
    }
    return {worst < 1e-12 && sign_mismatch == 0,
            fmt("max rel err %.2e (< 1e-12); sign(f) != sign(dv/dt) at %.0f samples", worst,
                static_cast<double>(sign_mismatch))};
}

SweepOutcome& fig4_sweep() {
    static SweepOutcome res = compute_sweep(bundled("fig4"));
    return res;
}

Outcome c8() {
    const SweepOutcome& res = fig4_sweep();
    const double s = res.fit.squeezing_at(3.5 * nJ);

    const VacuumStats vac = make_reference_vacuum(24 * Vcm);
    const DetectionParams det = reference_detection();
    double worst = 0.0;
    for (double ge : {0.2, kLn2, 1.2}) {
        for (double eta : {0.2, 0.33, 0.8, 1.0}) {
            const double g = ge / (3.5 * nJ);
            std::vector<SweepPoint> pts;
            for (double e : {0.8, 1.5, 2.5, 3.5}) {
                const auto [mx, mn] = forward_model(g, eta, e * nJ, vac, det);
                pts.push_back({e * nJ, mx, mn, 0.0, 0.0});
            }
            const FitResult r = fit_sweep(pts, vac, det);
            worst = std::max({worst, std::abs(r.g / g - 1.0), std::abs(r.eta / eta - 1.0)});
        }
    }
    return {s >= 0.45 && s <= 0.55 && worst < 1e-3,
            fmt("fitted squeezing at 3.5 nJ %.2f%% (g = %.4f/nJ, eta = %.3f); self-inversion max rel err %.1e", 100 * s,
                res.fit.g * nJ, res.fit.eta, worst)};
}

Outcome c9() {
    const auto a = asymmetry_series(fig4_sweep().points);
    bool ok = true;
    std::string values;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ok = ok && a[i].value >= 0.0 && (i == 0 || a[i].value > a[i - 1].value);
        values += (i ? ", " : "") + fmt("%.5f", a[i].value);
    }
    const VacuumStats vac = make_reference_vacuum(24 * Vcm);
    const DetectionParams det = reference_detection();
    const double g = 0.05 / nJ;
    const auto [x1, y1] = forward_model(g, 1.0, 1 * nJ, vac, det);
    const auto [x2, y2] = forward_model(g, 1.0, 2 * nJ, vac, det);
    const double ratio = (x2 + y2) / (x1 + y1);
    ok = ok && std::abs(ratio / 4.0 - 1.0) <= 0.15;
    return {ok, "asymmetry over 0.8/1.5/2.5/3.5 nJ = [" + values + "]; doubling ratio at gE = 0.05: " +
                    fmt("%.3f (4 +- 15%%)", ratio)};
}

Outcome c10() {
    const Scenario sc = bundled("fig2");
    const DetectionParams& det = sc.detection;
    const VacuumStats vac = sc.vacuum();
    const SqueezingProfile plus = profile_for(sc, sc.transient.cep, 3.5 * nJ);
    const SqueezingProfile minus = profile_for(sc, sc.transient.cep + std::numbers::pi, 3.5 * nJ);
    const Series sum = rdn_trace_analytic(plus, vac, det).rdn + rdn_trace_analytic(minus, vac, det).rdn;
    const double tol = 1e-12;
    const double dev = sum.abs().maxCoeff();
    const double product = product_invariant_check(plus, minus, vac);
    return {dev > 10 * tol && product < 1e-12,
            fmt("max|RDN+ + RDN-| = %.4f (> 10 x %.0e); product identity rel err %.1e", dev, tol, product)};
}

Outcome c11() {
    const TimeGrid g = make_grid(0.0, 10 * fs_, 100);
    const VacuumStats vac = make_reference_vacuum(24 * Vcm);
    SqueezingProfile p;
    p.grid = g;
    p.f = kLn2 * (2.0 * std::numbers::pi * g.times() / (400 * fs_)).sin();
    p = analytic_noise(p, vac);
    DetectionParams det = reference_detection();
    det.convolve_noise = false;
    const Series exact = rdn_trace_analytic(p, vac, det).rdn;

    std::vector<double> lm;
    std::vector<double> le;
    for (long m : {1000L, 10000L, 100000L, 1000000L}) {
        det.samples_per_point = m;
        det.seed = 11;
        const Series err = simulate_lockin_rdn(p, vac, det).rdn - exact;
        lm.push_back(std::log(static_cast<double>(m)));
        le.push_back(std::log(std::sqrt(err.square().mean())));
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < lm.size(); ++i) {
        mx += lm[i] / lm.size();
        my += le[i] / le.size();
    }
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lm.size(); ++i) {
        sxy += (lm[i] - mx) * (le[i] - my);
        sxx += (lm[i] - mx) * (lm[i] - mx);
    }
    const double slope = sxy / sxx;

    SqueezingProfile null = p;
    null.f.setZero();
    null = analytic_noise(null, vac);
    det.samples_per_point = 100000;
    det.seed = 12;
    const RdnTrace t = simulate_lockin_rdn(null, vac, det);
    const double centered =
        static_cast<double>((t.rdn.abs() <= 4.0 * t.rdn_stderr).count()) / static_cast<double>(t.rdn.size());
    return {std::abs(slope + 0.5) <= 0.1 && centered >= 0.99,
            fmt("error ~ M^%.3f (-0.5 +- 0.1); null trace within 4 stderr at %.0f%% of delays (>= 99%%)", slope,
                100 * centered)};
}

Outcome c12() {
    const fs::path root = fs::temp_directory_path() / "subcycle_acceptance";
    fs::remove_all(root);
    long files = 0;
    std::string bad;
    for (const char* name : {"fig2", "fig3", "fig4"}) {
        std::vector<RunManifest> runs;
        for (unsigned threads : {1u, 3u}) {
            Scenario sc = bundled(name);
            sc.output_dir = (root / (std::string(name) + "_t" + std::to_string(threads))).string();
            sc.threads = threads;
            sc.detection.threads = threads;
            sc.propagation.config.threads = threads;
            runs.push_back(std::string(name) == "fig4" ? run_sweep_and_fit(sc) : run_scenario(sc));
        }
        if (runs[0].files.size() != runs[1].files.size()) bad += std::string(" ") + name + ":file-list";
        for (std::size_t i = 0; i < runs[0].files.size() && i < runs[1].files.size(); ++i) {
            const auto& a = runs[0].files[i];
            const auto& b = runs[1].files[i];
            ++files;
            if (a.path != b.path || sha256_file(runs[0].output_dir / a.path) != sha256_file(runs[1].output_dir / b.path)) {
                bad += " " + std::string(name) + "/" + a.path;
            }
        }
    }
    fs::remove_all(root);
    return {bad.empty() && files > 0,
            fmt("%.0f output files compared across 1 vs 3 threads", static_cast<double>(files)) +
                (bad.empty() ? ", all byte-identical" : "; differing:" + bad)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"full-removal RDN bound", c1},
        {"vacuum fraction", c2},
        {"uncertainty-product identity", c3},
        {"extrema alignment with field slope", c4},
        {"numeric vs analytic propagation", c5},
        {"spectral vs time-domain integrators", c6},
        {"velocity-view identity", c7},
        {"pump-energy sweep calibration", c8},
        {"asymmetry build-up", c9},
        {"CEP-flipped traces are not mirror images", c10},
        {"Monte Carlo convergence and null centering", c11},
        {"determinism across thread counts", c12},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failed;
        std::printf("%s  %2zu  %-44s %s  [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
