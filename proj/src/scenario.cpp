#include "subcycle/scenario.hpp"

#include "subcycle/constants.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace subcycle {

namespace {

using namespace units;

std::string where(const std::string& origin, const YAML::Node& node) {
    const YAML::Mark m = node.Mark();
    if (m.is_null()) return origin;
    return origin + ":" + std::to_string(m.line + 1);
}

class Section {
public:
    Section(const YAML::Node& node, std::string path, const std::string& origin,
            std::initializer_list<const char*> allowed)
        : node_(node), path_(std::move(path)), origin_(origin) {
        if (!node_.IsMap()) fail(node_, "'" + path_ + "' must be a mapping");
        const std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!ok.contains(key)) fail(kv.first, "unknown key '" + qualified(key) + "'");
        }
    }

    bool has(const char* key) const { return static_cast<bool>(node_[key]); }
    YAML::Node child(const char* key) const { return node_[key]; }
    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
        throw ConfigError(where(origin_, at) + ": " + what);
    }

    template <typename T>
    T get(const char* key, T fallback) const {
        const YAML::Node v = node_[key];
        if (!v) return fallback;
        try {
            return v.as<T>();
        } catch (const YAML::Exception&) {
            fail(v, "bad value for '" + qualified(key) + "'");
        }
    }

    double positive(const char* key, double fallback) const {
        const double v = get<double>(key, fallback);
        if (!(v > 0.0) || !std::isfinite(v)) fail(at(key), "'" + qualified(key) + "' must be positive");
        return v;
    }

    const YAML::Node& at(const char* key) const {
        scratch_ = node_[key] ? node_[key] : node_;
        return scratch_;
    }

private:
    YAML::Node node_;
    std::string path_;
    const std::string& origin_;
    mutable YAML::Node scratch_;
};

template <typename Fn>
void checked(const Section& s, const YAML::Node& at, Fn&& fn) {
    try {
        fn();
    } catch (const std::invalid_argument& e) {
        s.fail(at, e.what());
    } catch (const std::out_of_range& e) {
        s.fail(at, e.what());
    }
}

RdnMode parse_mode(const Section& s, const YAML::Node& node) {
    const auto v = node.as<std::string>();
    if (v == "analytic_exact") return RdnMode::AnalyticExact;
    if (v == "analytic_linearized") return RdnMode::AnalyticLinearized;
    if (v == "monte_carlo") return RdnMode::MonteCarlo;
    s.fail(node, "unknown rdn mode '" + v + "' (analytic_exact, analytic_linearized, monte_carlo)");
}

const char* kind_name(TransientTemplate::Kind k) {
    return k == TransientTemplate::Kind::Rectification ? "rectification" : "gaussian";
}

const char* method_name(PropagationMethod m) {
    switch (m) {
        case PropagationMethod::Analytic: return "analytic";
        case PropagationMethod::Spectral: return "spectral";
        case PropagationMethod::TimeDomain: break;
    }
    return "time_domain";
}

}  // namespace

TransientTemplate Scenario::make_template() const {
    TransientTemplate t;
    t.grid = grid;
    t.kind = transient.kind;
    t.center_freq = transient.center_freq;
    t.cep = transient.cep;
    t.env_fwhm = transient.env_fwhm;
    return t;
}

VacuumStats Scenario::vacuum() const {
    if (delta_e_vac) return make_reference_vacuum(*delta_e_vac);
    return vacuum_amplitude(detection.probe);
}

double resolve_gain(const Scenario& s) {
    if (s.transient.gain) return *s.transient.gain;
    const CalibrationAnchor& a = *s.transient.calibration;
    return calibrate_gain(a.f_min, a.at_energy, s.make_template(), s.crystal);
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (!root || root.IsNull()) throw ConfigError(origin + ": empty scenario");

    Scenario sc;
    const Section top(root, "", origin,
                      {"name", "threads", "grid", "transient", "crystal", "probe", "detection", "propagation",
                       "sweep", "output"});
    sc.name = top.get<std::string>("name", sc.name);
    const long threads = top.get<long>("threads", 0);
    if (threads < 0) top.fail(top.at("threads"), "'threads' must be >= 0");
    sc.threads = static_cast<unsigned>(threads);

    if (top.has("grid")) {
        const Section g(top.child("grid"), "grid", origin, {"t0_fs", "dt_fs", "samples"});
        const double t0 = g.get<double>("t0_fs", sc.grid.t0() / fs) * fs;
        const double dt = g.positive("dt_fs", sc.grid.dt() / fs) * fs;
        const long n = g.get<long>("samples", static_cast<long>(sc.grid.size()));
        checked(g, top.child("grid"), [&] { sc.grid = make_grid(t0, dt, n); });
    }

    if (!top.has("transient")) top.fail(root, "missing section 'transient'");
    {
        const YAML::Node node = top.child("transient");
        const Section t(node, "transient", origin,
                        {"kind", "center_THz", "env_fwhm_fs", "cep_rad", "energy_nJ", "gain_Vcm_per_nJ",
                         "calibration"});
        TransientSpec& ts = sc.transient;
        const auto kind = t.get<std::string>("kind", "gaussian");
        if (kind == "gaussian") {
            ts.kind = TransientTemplate::Kind::GaussianCarrier;
        } else if (kind == "rectification") {
            ts.kind = TransientTemplate::Kind::Rectification;
        } else {
            t.fail(t.at("kind"), "transient.kind must be 'gaussian' or 'rectification'");
        }
        ts.center_freq = t.positive("center_THz", ts.center_freq / THz) * THz;
        ts.env_fwhm = t.positive("env_fwhm_fs", ts.env_fwhm / fs) * fs;
        ts.cep = t.get<double>("cep_rad", ts.cep);
        ts.pump_energy = t.get<double>("energy_nJ", ts.pump_energy / nJ) * nJ;
        if (!(ts.pump_energy >= 0.0)) t.fail(t.at("energy_nJ"), "'transient.energy_nJ' must be >= 0");
        if (t.has("gain_Vcm_per_nJ") == t.has("calibration")) {
            t.fail(node, "transient needs exactly one of 'gain_Vcm_per_nJ' or 'calibration'");
        }
        if (t.has("gain_Vcm_per_nJ")) ts.gain = t.positive("gain_Vcm_per_nJ", 1.0) * V_per_cm / nJ;
        if (t.has("calibration")) {
            const Section c(t.child("calibration"), "transient.calibration", origin, {"f_min", "at_energy_nJ"});
            CalibrationAnchor a;
            a.f_min = c.get<double>("f_min", a.f_min);
            if (!(a.f_min < 0.0)) c.fail(c.at("f_min"), "'transient.calibration.f_min' must be negative");
            a.at_energy = c.positive("at_energy_nJ", a.at_energy / nJ) * nJ;
            ts.calibration = a;
        }
        checked(t, node, [&] { sc.make_template().synthesize(1.0, 1.0); });
    }

    if (top.has("crystal")) {
        const Section c(top.child("crystal"), "crystal", origin, {"label", "d_eff_pm_per_V", "n", "length_um"});
        sc.crystal.label = c.get<std::string>("label", sc.crystal.label);
        sc.crystal.d_eff = c.get<double>("d_eff_pm_per_V", sc.crystal.d_eff / pm_per_V) * pm_per_V;
        sc.crystal.n = c.get<double>("n", sc.crystal.n);
        sc.crystal.length = c.get<double>("length_um", sc.crystal.length / um) * um;
        checked(c, top.child("crystal"), [&] { sc.crystal.validate(); });
    }

    if (top.has("probe")) {
        const Section p(top.child("probe"), "probe", origin, {"duration_fs", "waist_um", "dx_n"});
        ProbeParams& pr = sc.detection.probe;
        pr.duration = p.get<double>("duration_fs", pr.duration / fs) * fs;
        pr.waist = p.get<double>("waist_um", pr.waist / um) * um;
        pr.dx_n = p.get<double>("dx_n", pr.dx_n);
        checked(p, top.child("probe"), [&] { pr.validate(); });
        if (pr.duration < sc.grid.dt()) p.fail(top.child("probe"), "probe duration is shorter than the grid step");
    }

    if (top.has("detection")) {
        const YAML::Node node = top.child("detection");
        const Section d(node, "detection", origin,
                        {"delta_e_sn_Vcm", "delta_e_vac_Vcm", "samples_per_point", "seed", "eta", "convolve_noise",
                         "modes"});
        DetectionParams& det = sc.detection;
        det.delta_e_sn = d.get<double>("delta_e_sn_Vcm", det.delta_e_sn / V_per_cm) * V_per_cm;
        if (d.has("delta_e_vac_Vcm")) sc.delta_e_vac = d.positive("delta_e_vac_Vcm", 1.0) * V_per_cm;
        det.samples_per_point = d.get<long>("samples_per_point", det.samples_per_point);
        det.seed = d.get<std::uint64_t>("seed", det.seed);
        det.eta = d.get<double>("eta", det.eta);
        det.convolve_noise = d.get<bool>("convolve_noise", det.convolve_noise);
        if (d.has("modes")) {
            const YAML::Node modes = d.child("modes");
            if (!modes.IsSequence() || modes.size() == 0) d.fail(modes, "'detection.modes' must be a non-empty list");
            sc.rdn_modes.clear();
            for (const auto& m : modes) sc.rdn_modes.push_back(parse_mode(d, m));
        }
        checked(d, node, [&] { det.validate(); });
    }
    sc.detection.threads = sc.threads;

    if (top.has("propagation")) {
        const YAML::Node node = top.child("propagation");
        const Section p(node, "propagation", origin,
                        {"enabled", "method", "z_steps", "second_term", "derivative", "ensemble_size",
                         "band_limit_THz"});
        PropagationSpec& ps = sc.propagation;
        ps.enabled = p.get<bool>("enabled", true);
        const auto method = p.get<std::string>("method", method_name(ps.config.method));
        if (method == "analytic") {
            ps.config.method = PropagationMethod::Analytic;
        } else if (method == "time_domain") {
            ps.config.method = PropagationMethod::TimeDomain;
        } else if (method == "spectral") {
            ps.config.method = PropagationMethod::Spectral;
        } else {
            p.fail(p.at("method"), "propagation.method must be analytic, time_domain or spectral");
        }
        ps.config.z_steps = p.get<int>("z_steps", ps.config.z_steps);
        if (ps.config.z_steps < 1) p.fail(p.at("z_steps"), "'propagation.z_steps' must be >= 1");
        ps.config.include_second_term = p.get<bool>("second_term", ps.config.include_second_term);
        const auto deriv = p.get<std::string>("derivative", "spectral");
        if (deriv == "spectral") {
            ps.config.derivative = DerivativeMode::Spectral;
        } else if (deriv == "finite_difference") {
            ps.config.derivative = DerivativeMode::FiniteDifference;
        } else {
            p.fail(p.at("derivative"), "propagation.derivative must be spectral or finite_difference");
        }
        ps.ensemble_size = p.get<long>("ensemble_size", ps.ensemble_size);
        if (ps.ensemble_size < 2) p.fail(p.at("ensemble_size"), "'propagation.ensemble_size' must be >= 2");
        ps.band_limit = p.positive("band_limit_THz", ps.band_limit / THz) * THz;
        if (ps.band_limit >= sc.grid.nyquist()) p.fail(p.at("band_limit_THz"), "band limit must be below Nyquist");
    }
    sc.propagation.config.threads = sc.threads;

    if (top.has("sweep")) {
        const Section s(top.child("sweep"), "sweep", origin, {"energies_nJ", "extremum_samples"});
        SweepSpec sw;
        const YAML::Node e = s.child("energies_nJ");
        if (!e || !e.IsSequence() || e.size() == 0) s.fail(top.child("sweep"), "'sweep.energies_nJ' must be a non-empty list");
        for (const auto& v : e) {
            double x = 0.0;
            try {
                x = v.as<double>();
            } catch (const YAML::Exception&) {
                s.fail(v, "bad value in 'sweep.energies_nJ'");
            }
            if (!(x > 0.0)) s.fail(v, "sweep energies must be positive");
            sw.energies.push_back(x * nJ);
        }
        sw.extremum_samples = s.get<long>("extremum_samples", sw.extremum_samples);
        if (sw.extremum_samples < 100) s.fail(s.at("extremum_samples"), "'sweep.extremum_samples' must be >= 100");
        sc.sweep = sw;
    }

    if (top.has("output")) {
        const Section o(top.child("output"), "output", origin, {"directory"});
        sc.output_dir = o.get<std::string>("directory", sc.output_dir);
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open scenario file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

std::string dump_scenario(const Scenario& sc) {
    YAML::Emitter y;
    y.SetDoublePrecision(17);
    y << YAML::BeginMap;
    y << YAML::Key << "name" << YAML::Value << sc.name;
    y << YAML::Key << "threads" << YAML::Value << sc.threads;

    y << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
    y << YAML::Key << "t0_fs" << YAML::Value << sc.grid.t0() / fs;
    y << YAML::Key << "dt_fs" << YAML::Value << sc.grid.dt() / fs;
    y << YAML::Key << "samples" << YAML::Value << static_cast<long>(sc.grid.size());
    y << YAML::EndMap;

    const TransientSpec& t = sc.transient;
    y << YAML::Key << "transient" << YAML::Value << YAML::BeginMap;
    y << YAML::Key << "kind" << YAML::Value << kind_name(t.kind);
    y << YAML::Key << "center_THz" << YAML::Value << t.center_freq / THz;
    y << YAML::Key << "env_fwhm_fs" << YAML::Value << t.env_fwhm / fs;
    y << YAML::Key << "cep_rad" << YAML::Value << t.cep;
    y << YAML::Key << "energy_nJ" << YAML::Value << t.pump_energy / nJ;
    if (t.gain) y << YAML::Key << "gain_Vcm_per_nJ" << YAML::Value << *t.gain / (V_per_cm / nJ);
    if (t.calibration) {
        y << YAML::Key << "calibration" << YAML::Value << YAML::BeginMap;
        y << YAML::Key << "f_min" << YAML::Value << t.calibration->f_min;
        y << YAML::Key << "at_energy_nJ" << YAML::Value << t.calibration->at_energy / nJ;
        y << YAML::EndMap;
    }
    y << YAML::EndMap;

    y << YAML::Key << "crystal" << YAML::Value << YAML::BeginMap;
    y << YAML::Key << "label" << YAML::Value << sc.crystal.label;
    y << YAML::Key << "d_eff_pm_per_V" << YAML::Value << sc.crystal.d_eff / pm_per_V;
    y << YAML::Key << "n" << YAML::Value << sc.crystal.n;
    y << YAML::Key << "length_um" << YAML::Value << sc.crystal.length / um;
    y << YAML::EndMap;

    const ProbeParams& p = sc.detection.probe;
    y << YAML::Key << "probe" << YAML::Value << YAML::BeginMap;
    y << YAML::Key << "duration_fs" << YAML::Value << p.duration / fs;
    y << YAML::Key << "waist_um" << YAML::Value << p.waist / um;
    y << YAML::Key << "dx_n" << YAML::Value << p.dx_n;
    y << YAML::EndMap;

    const DetectionParams& d = sc.detection;
    y << YAML::Key << "detection" << YAML::Value << YAML::BeginMap;
    y << YAML::Key << "delta_e_sn_Vcm" << YAML::Value << d.delta_e_sn / V_per_cm;
    if (sc.delta_e_vac) y << YAML::Key << "delta_e_vac_Vcm" << YAML::Value << *sc.delta_e_vac / V_per_cm;
    y << YAML::Key << "samples_per_point" << YAML::Value << d.samples_per_point;
    y << YAML::Key << "seed" << YAML::Value << d.seed;
    y << YAML::Key << "eta" << YAML::Value << d.eta;
    y << YAML::Key << "convolve_noise" << YAML::Value << d.convolve_noise;
    y << YAML::Key << "modes" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (RdnMode m : sc.rdn_modes) y << to_string(m);
    y << YAML::EndSeq;
    y << YAML::EndMap;

    const PropagationSpec& ps = sc.propagation;
    y << YAML::Key << "propagation" << YAML::Value << YAML::BeginMap;
    y << YAML::Key << "enabled" << YAML::Value << ps.enabled;
    y << YAML::Key << "method" << YAML::Value << method_name(ps.config.method);
    y << YAML::Key << "z_steps" << YAML::Value << ps.config.z_steps;
    y << YAML::Key << "second_term" << YAML::Value << ps.config.include_second_term;
    y << YAML::Key << "derivative" << YAML::Value
      << (ps.config.derivative == DerivativeMode::Spectral ? "spectral" : "finite_difference");
    y << YAML::Key << "ensemble_size" << YAML::Value << ps.ensemble_size;
    y << YAML::Key << "band_limit_THz" << YAML::Value << ps.band_limit / THz;
    y << YAML::EndMap;

    if (sc.sweep) {
        y << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
        y << YAML::Key << "energies_nJ" << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (double e : sc.sweep->energies) y << e / nJ;
        y << YAML::EndSeq;
        y << YAML::Key << "extremum_samples" << YAML::Value << sc.sweep->extremum_samples;
        y << YAML::EndMap;
    }

    y << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
    y << YAML::Key << "directory" << YAML::Value << sc.output_dir;
    y << YAML::EndMap;
    y << YAML::EndMap;
    return std::string(y.c_str()) + "\n";
}

}  // namespace subcycle
