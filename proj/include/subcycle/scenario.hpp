#pragma once

#include "subcycle/detect.hpp"
#include "subcycle/squeeze.hpp"
#include "subcycle/vacuum.hpp"
#include "subcycle/waveforms.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace subcycle {

/// Scale of the transient: either a fixed gain (V/m per J) or the pump energy
/// at which min f must reach a given value.
struct CalibrationAnchor {
    double f_min = -0.6931471805599453;
    double at_energy = 3.5e-9;  // J
};

struct TransientSpec {
    TransientTemplate::Kind kind = TransientTemplate::Kind::GaussianCarrier;
    double center_freq = 44e12;
    double env_fwhm = 90e-15;
    double cep = 0.0;
    double pump_energy = 3.5e-9;
    std::optional<double> gain;
    std::optional<CalibrationAnchor> calibration;
};

struct PropagationSpec {
    bool enabled = false;
    PropagationConfig config;
    long ensemble_size = 2000;
    double band_limit = 150e12;  // Hz
};

struct SweepSpec {
    std::vector<double> energies;  // J
    long extremum_samples = 1000000;
};

/// One fully resolved, SI-valued scenario. All fields are validated at parse time.
struct Scenario {
    std::string name = "scenario";
    TimeGrid grid = make_grid(-512e-15, 0.5e-15, 2048);
    TransientSpec transient;
    CrystalParams crystal;
    DetectionParams detection;
    std::optional<double> delta_e_vac;  // V/m; derived from the probe segment when absent
    std::vector<RdnMode> rdn_modes{RdnMode::AnalyticExact};
    PropagationSpec propagation;
    std::optional<SweepSpec> sweep;
    std::string output_dir = "out";
    unsigned threads = 0;

    TransientTemplate make_template() const;
    VacuumStats vacuum() const;
};

/// Parses the YAML scenario text; unknown keys and bad values raise ConfigError
/// with the offending line. `origin` is only used in messages.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");
Scenario load_scenario(const std::string& path);

/// Canonical YAML in user units, stable under parse -> dump -> parse.
std::string dump_scenario(const Scenario& scenario);

/// Gain (V/m per J) for the scenario's transient, running calibration if requested.
double resolve_gain(const Scenario& scenario);

}  // namespace subcycle
