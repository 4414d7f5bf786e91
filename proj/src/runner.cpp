#include "subcycle/runner.hpp"

#include "subcycle/constants.hpp"
#include "subcycle/io.hpp"
#include "subcycle/parallel.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace subcycle {

namespace fs = std::filesystem;
using namespace units;
using Provenance = std::vector<std::pair<std::string, std::string>>;

namespace {

struct Emitter {
    fs::path dir;
    std::vector<EmittedFile> files;

    template <typename Fn>
    void file(const std::string& name, Fn&& write) {
        std::ostringstream buf;
        write(buf);
        const std::string bytes = buf.str();
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
        out << bytes;
        files.push_back({name, sha256_hex(bytes), bytes.size()});
    }
};

Provenance base_provenance(const Scenario& sc, const std::string& hash, double gain, const VacuumStats& vac) {
    return {
        {"tool", std::string("subcycle ") + kToolVersion},
        {"scenario", sc.name},
        {"scenario_sha256", hash},
        {"seed", std::to_string(sc.detection.seed)},
        {"c_m_per_s", io::fmt12(kCodata.c)},
        {"hbar_Js", io::fmt12(kCodata.hbar)},
        {"eps0_F_per_m", io::fmt12(kCodata.eps0)},
        {"crystal", sc.crystal.label},
        {"d_eff_pm_per_V", io::fmt12(sc.crystal.d_eff / pm_per_V)},
        {"n", io::fmt12(sc.crystal.n)},
        {"length_um", io::fmt12(sc.crystal.length / um)},
        {"probe_fwhm_fs", io::fmt12(sc.detection.probe.duration / units::fs)},
        {"probe_waist_um", io::fmt12(sc.detection.probe.waist / um)},
        {"probe_dx_n", io::fmt12(sc.detection.probe.dx_n)},
        {"gain_Vcm_per_nJ", io::fmt12(gain / (V_per_cm / nJ))},
        {"delta_e_vac_Vcm", io::fmt12(vac.delta_e_vac / V_per_cm)},
        {"delta_e_sn_Vcm", io::fmt12(sc.detection.delta_e_sn / V_per_cm)},
        {"eta", io::fmt12(sc.detection.eta)},
        {"convolve_noise", sc.detection.convolve_noise ? "true" : "false"},
    };
}

Provenance with(Provenance p, std::initializer_list<std::pair<std::string, std::string>> extra) {
    p.insert(p.end(), extra.begin(), extra.end());
    return p;
}

void write_profile_csv(const CoherentTransient& tr, const SqueezingProfile& prof, const Series& rdn,
                       std::ostream& out, const Provenance& prov) {
    io::write_comment_header(out, prov);
    const Series slope = time_derivative(tr.field, tr.grid);
    out << "t_fs,E_Vcm,dEdt_Vcm_per_fs,f,dErms_Vcm,RDN_analytic\n";
    for (Eigen::Index k = 0; k < tr.grid.size(); ++k) {
        out << io::fmt12(tr.grid.time(k) / units::fs) << ',' << io::fmt12(tr.field[k] / V_per_cm) << ','
            << io::fmt12(slope[k] / V_per_cm * units::fs) << ',' << io::fmt12(prof.f[k]) << ','
            << io::fmt12(prof.delta_e_rms[k] / V_per_cm) << ',' << io::fmt12(rdn[k]) << '\n';
    }
}

RdnTrace trace_for(RdnMode mode, const SqueezingProfile& prof, const VacuumStats& vac, const DetectionParams& det) {
    switch (mode) {
        case RdnMode::MonteCarlo: return simulate_lockin_rdn(prof, vac, det);
        case RdnMode::AnalyticLinearized: return rdn_trace_analytic(prof, vac, det, true);
        case RdnMode::AnalyticExact: break;
    }
    return rdn_trace_analytic(prof, vac, det, false);
}

std::string energy_tag(double e) {
    std::string s = io::fmt12(e / nJ);
    for (char& ch : s) {
        if (ch == '.') ch = 'p';
    }
    return s + "nJ";
}

void finish(RunManifest& m, const Emitter& em, std::chrono::steady_clock::time_point start) {
    m.files = em.files;
    m.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(m, m.output_dir / "manifest.json");
}

RunManifest begin(const std::string& verb, const Scenario& sc, std::string& hash) {
    RunManifest m;
    m.verb = verb;
    m.scenario_name = sc.name;
    m.resolved_scenario = dump_scenario(sc);
    hash = scenario_fingerprint(sc);
    m.scenario_hash = hash;
    m.seed = sc.detection.seed;
    m.output_dir = output_directory(sc);
    fs::create_directories(m.output_dir);
    return m;
}

}  // namespace

const EmittedFile* RunManifest::find(const std::string& path) const {
    for (const auto& f : files) {
        if (f.path == path) return &f;
    }
    return nullptr;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

std::string scenario_fingerprint(const Scenario& sc) {
    Scenario canon = sc;
    canon.threads = 0;
    canon.output_dir.clear();
    return sha256_hex(dump_scenario(canon));
}

fs::path output_directory(const Scenario& sc) {
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return fs::path(env);
    return fs::path(sc.output_dir);
}

void write_manifest(const RunManifest& m, const fs::path& path) {
    nlohmann::ordered_json j;
    j["verb"] = m.verb;
    j["scenario_name"] = m.scenario_name;
    j["scenario_sha256"] = m.scenario_hash;
    j["tool_version"] = m.tool_version;
    j["seed"] = m.seed;
    j["wall_clock_s"] = m.wall_clock_s;
    j["files"] = nlohmann::ordered_json::array();
    for (const auto& f : m.files) j["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    j["resolved_scenario"] = m.resolved_scenario;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

RunManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open manifest");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        RunManifest m;
        m.verb = j.at("verb").get<std::string>();
        m.scenario_name = j.at("scenario_name").get<std::string>();
        m.scenario_hash = j.at("scenario_sha256").get<std::string>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.wall_clock_s = j.at("wall_clock_s").get<double>();
        for (const auto& f : j.at("files")) {
            m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>(),
                               f.at("bytes").get<std::uintmax_t>()});
        }
        m.resolved_scenario = j.at("resolved_scenario").get<std::string>();
        m.output_dir = path.parent_path();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": malformed manifest (" + e.what() + ")");
    }
}

RunManifest run_scenario(const Scenario& sc) {
    const auto start = std::chrono::steady_clock::now();
    std::string hash;
    RunManifest m = begin("run", sc, hash);
    Emitter em{m.output_dir, {}};

    const double gain = resolve_gain(sc);
    const VacuumStats vac = sc.vacuum();
    const Provenance prov = base_provenance(sc, hash, gain, vac);
    const DetectionParams& det = sc.detection;

    const std::pair<const char*, double> ceps[] = {{"cep0", sc.transient.cep},
                                                    {"cep_pi", sc.transient.cep + std::numbers::pi}};
    for (const auto& [label, cep] : ceps) {
        TransientTemplate tmpl = sc.make_template();
        tmpl.cep = cep;
        const CoherentTransient tr = tmpl.synthesize(sc.transient.pump_energy, gain);
        const SqueezingProfile prof = analytic_noise(squeezing_factor(tr, sc.crystal), vac);
        const Provenance p = with(prov, {{"energy_nJ", io::fmt12(sc.transient.pump_energy / nJ)},
                                         {"cep_rad", io::fmt12(cep)},
                                         {"max_abs_f", io::fmt12(prof.max_abs_f)}});
        const std::string tag(label);

        em.file("coherent_" + tag + ".csv", [&](std::ostream& o) { write_readout_csv(coherent_readout(tr, det), o, p); });
        const RdnTrace exact = rdn_trace_analytic(prof, vac, det);
        em.file("profile_" + tag + ".csv", [&](std::ostream& o) { write_profile_csv(tr, prof, exact.rdn, o, p); });
        for (RdnMode mode : sc.rdn_modes) {
            const RdnTrace t = mode == RdnMode::AnalyticExact ? exact : trace_for(mode, prof, vac, det);
            em.file("rdn_" + to_string(mode) + "_" + tag + ".csv", [&](std::ostream& o) {
                write_rdn_csv(t, o, with(p, {{"samples_per_point", std::to_string(det.samples_per_point)}}));
            });
        }

        if (sc.propagation.enabled && tag == "cep0") {
            const FieldEnsemble in = sample_vacuum_ensemble(sc.grid, vac, sc.propagation.ensemble_size, det.seed,
                                                            sc.propagation.band_limit, sc.threads);
            const FieldEnsemble out = propagate_numeric(tr, sc.crystal, in, sc.propagation.config);
            const Series s_in = in.column_std();
            const Series s_out = out.column_std();
            em.file("propagation_" + tag + ".csv", [&](std::ostream& o) {
                io::write_comment_header(o, with(p, {{"ensemble_size", std::to_string(in.count())},
                                                     {"z_steps", std::to_string(sc.propagation.config.z_steps)},
                                                     {"second_term", sc.propagation.config.include_second_term
                                                                         ? "true" : "false"}}));
                o << "t_fs,std_in_Vcm,std_numeric_Vcm,std_analytic_Vcm\n";
                for (Eigen::Index k = 0; k < s_out.size(); ++k) {
                    o << io::fmt12(out.grid.time(k) / units::fs) << ',' << io::fmt12(s_in[k] / V_per_cm) << ','
                      << io::fmt12(s_out[k] / V_per_cm) << ','
                      << io::fmt12(std::exp(prof.f[k]) * s_in[k] / V_per_cm) << '\n';
                }
            });
        }
    }

    if (sc.sweep) {
        for (std::size_t i = 0; i < sc.sweep->energies.size(); ++i) {
            const double e = sc.sweep->energies[i];
            const CoherentTransient tr = sc.make_template().synthesize(e, gain);
            const SqueezingProfile prof = analytic_noise(squeezing_factor(tr, sc.crystal), vac);
            const Provenance p = with(prov, {{"energy_nJ", io::fmt12(e / nJ)},
                                             {"cep_rad", io::fmt12(sc.transient.cep)},
                                             {"max_abs_f", io::fmt12(prof.max_abs_f)}});
            DetectionParams d = det;
            d.seed = det.seed + 1000 * (i + 1);
            for (RdnMode mode : sc.rdn_modes) {
                const RdnTrace t = trace_for(mode, prof, vac, d);
                em.file("rdn_" + to_string(mode) + "_E" + energy_tag(e) + ".csv",
                        [&](std::ostream& o) { write_rdn_csv(t, o, p); });
            }
            em.file("profile_E" + energy_tag(e) + ".csv", [&](std::ostream& o) {
                write_profile_csv(tr, prof, rdn_trace_analytic(prof, vac, det).rdn, o, p);
            });
        }
    }

    finish(m, em, start);
    return m;
}

SweepOutcome compute_sweep(const Scenario& sc) {
    if (!sc.sweep) throw ConfigError("scenario '" + sc.name + "' has no sweep section");
    const double gain = resolve_gain(sc);
    const VacuumStats vac = sc.vacuum();
    const DetectionParams& det = sc.detection;
    const auto& energies = sc.sweep->energies;
    const std::size_t n = energies.size();

    bool monte_carlo = false;
    for (RdnMode mode : sc.rdn_modes) monte_carlo = monte_carlo || mode == RdnMode::MonteCarlo;

    SweepOutcome out;
    out.points.resize(n);
    out.t_max.resize(n);
    out.t_min.resize(n);
    std::vector<double> rms(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const CoherentTransient tr = sc.make_template().synthesize(energies[i], gain);
        const SqueezingProfile prof = analytic_noise(squeezing_factor(tr, sc.crystal), vac);
        const Series detected = detected_noise(prof, vac, det);
        Eigen::Index imax = 0;
        Eigen::Index imin = 0;
        rms[2 * i] = detected.maxCoeff(&imax);
        rms[2 * i + 1] = detected.minCoeff(&imin);
        out.t_max[i] = sc.grid.time(imax);
        out.t_min[i] = sc.grid.time(imin);
        out.points[i].pump_energy = energies[i];
    }

    std::vector<LockinPoint> lp(2 * n);
    if (monte_carlo) {
        parallel_for(2 * n, sc.threads, [&](std::size_t k) {
            lp[k] = lockin_point(rms[k], vac.delta_e_vac, det.delta_e_sn, sc.sweep->extremum_samples, det.seed, k);
        });
    } else {
        for (std::size_t k = 0; k < 2 * n; ++k) lp[k] = {rdn_exact(rms[k], vac, det), 0.0};
    }
    for (std::size_t i = 0; i < n; ++i) {
        out.points[i].rdn_max = lp[2 * i].rdn;
        out.points[i].stderr_max = lp[2 * i].std_error;
        out.points[i].rdn_min = lp[2 * i + 1].rdn;
        out.points[i].stderr_min = lp[2 * i + 1].std_error;
    }
    out.fit = fit_sweep(out.points, vac, det);
    return out;
}

void write_fit_report(const FitResult& fit, const VacuumStats& vac, const DetectionParams& det, std::ostream& out) {
    out << "g_perJ = " << io::fmt12(fit.g) << '\n';
    out << "g_per_nJ = " << io::fmt12(fit.g * nJ) << '\n';
    out << "eta = " << io::fmt12(fit.eta) << '\n';
    out << "sigma_g_perJ = " << io::fmt12(fit.sigma_g) << '\n';
    out << "sigma_eta = " << io::fmt12(fit.sigma_eta) << '\n';
    out << "corr_g_eta = " << io::fmt12(fit.corr_g_eta) << '\n';
    out << "residual_rms = " << io::fmt12(fit.residual_rms) << '\n';
    out << "delta_e_vac_Vcm = " << io::fmt12(vac.delta_e_vac / V_per_cm) << '\n';
    out << "delta_e_sn_Vcm = " << io::fmt12(det.delta_e_sn / V_per_cm) << '\n';
    for (std::size_t i = 0; i < fit.energies.size(); ++i) {
        out << "squeezing_percent_at_" << io::fmt12(fit.energies[i] / nJ) << "nJ = "
            << io::fmt12(100.0 * fit.squeezing_curve[i]) << '\n';
    }
}

RunManifest run_sweep_and_fit(const Scenario& sc) {
    const auto start = std::chrono::steady_clock::now();
    std::string hash;
    RunManifest m = begin("sweep", sc, hash);
    Emitter em{m.output_dir, {}};

    const SweepOutcome res = compute_sweep(sc);
    const VacuumStats vac = sc.vacuum();
    const DetectionParams& det = sc.detection;
    const Provenance prov = with(base_provenance(sc, hash, resolve_gain(sc), vac),
                                 {{"extremum_samples", std::to_string(sc.sweep->extremum_samples)}});

    em.file("sweep.csv", [&](std::ostream& o) { write_sweep_csv(res.points, o, prov); });
    em.file("extrema.csv", [&](std::ostream& o) {
        io::write_comment_header(o, prov);
        o << "E_nJ,t_max_fs,t_min_fs\n";
        for (std::size_t i = 0; i < res.points.size(); ++i) {
            o << io::fmt12(res.points[i].pump_energy / nJ) << ',' << io::fmt12(res.t_max[i] / units::fs) << ','
              << io::fmt12(res.t_min[i] / units::fs) << '\n';
        }
    });
    em.file("fit_report.txt", [&](std::ostream& o) { write_fit_report(res.fit, vac, det, o); });
    em.file("fit_model.csv", [&](std::ostream& o) {
        io::write_comment_header(o, with(prov, {{"g_perJ", io::fmt12(res.fit.g)}, {"eta", io::fmt12(res.fit.eta)}}));
        o << "E_nJ,model_max,model_min,squeezing_percent\n";
        double e_top = 0.0;
        for (const auto& p : res.points) e_top = std::max(e_top, p.pump_energy);
        const int steps = 100;
        for (int k = 0; k <= steps; ++k) {
            const double e = 1.1 * e_top * k / steps;
            const auto [mx, mn] = forward_model(res.fit.g, res.fit.eta, e, vac, det);
            o << io::fmt12(e / nJ) << ',' << io::fmt12(mx) << ',' << io::fmt12(mn) << ','
              << io::fmt12(100.0 * (1.0 - std::exp(-res.fit.g * e))) << '\n';
        }
    });

    finish(m, em, start);
    return m;
}

std::map<std::string, std::string> read_comment_header(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] != '#') continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        std::string key = line.substr(1, eq - 1);
        key.erase(0, key.find_first_not_of(' '));
        out[key] = line.substr(eq + 3);
    }
    return out;
}

CsvFitInput read_fit_input(std::istream& in, double default_vac, double default_sn) {
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    CsvFitInput r;
    r.delta_e_vac = default_vac;
    r.delta_e_sn = default_sn;
    std::istringstream hs(text);
    const auto header = read_comment_header(hs);
    try {
        if (auto it = header.find("delta_e_vac_Vcm"); it != header.end()) r.delta_e_vac = std::stod(it->second) * V_per_cm;
        if (auto it = header.find("delta_e_sn_Vcm"); it != header.end()) r.delta_e_sn = std::stod(it->second) * V_per_cm;
        std::istringstream body(text);
        r.points = read_sweep_csv(body);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("sweep CSV: ") + e.what());
    }
    return r;
}

}  // namespace subcycle
