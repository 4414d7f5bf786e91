#pragma once

#include "subcycle/fit.hpp"
#include "subcycle/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace subcycle {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "SUBCYCLE_OUTPUT_DIR";

struct EmittedFile {
    std::string path;  // relative to the manifest directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunManifest {
    std::string verb;
    std::string scenario_name;
    std::string scenario_hash;
    std::string tool_version = kToolVersion;
    std::uint64_t seed = 0;
    double wall_clock_s = 0.0;
    std::filesystem::path output_dir;
    std::vector<EmittedFile> files;
    std::string resolved_scenario;

    const EmittedFile* find(const std::string& path) const;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// SHA-256 of the canonical scenario without thread count and output directory,
/// which do not affect any result.
std::string scenario_fingerprint(const Scenario& scenario);

/// The scenario's output directory, unless SUBCYCLE_OUTPUT_DIR is set.
std::filesystem::path output_directory(const Scenario& scenario);

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

/// Coherent readouts, squeezing profiles and RDN traces for the configured CEP
/// and its pi-flipped partner; one RDN panel per sweep energy when a sweep is set.
RunManifest run_scenario(const Scenario& scenario);

struct SweepOutcome {
    std::vector<SweepPoint> points;
    std::vector<double> t_max;  // delay of the anti-squeezing extremum per energy
    std::vector<double> t_min;
    FitResult fit;
};

/// Extremal RDN per sweep energy (Monte Carlo when `monte_carlo` is among the
/// scenario modes, analytic otherwise) followed by the (g, eta) fit.
SweepOutcome compute_sweep(const Scenario& scenario);
RunManifest run_sweep_and_fit(const Scenario& scenario);

/// Fit report for a sweep CSV. Vacuum and shot-noise levels come from the CSV's
/// '#' header when present, otherwise from the arguments.
struct CsvFitInput {
    std::vector<SweepPoint> points;
    double delta_e_vac = 2400.0;
    double delta_e_sn = 8100.0;
};
CsvFitInput read_fit_input(std::istream& in, double default_vac, double default_sn);
void write_fit_report(const FitResult& fit, const VacuumStats& vacuum, const DetectionParams& det,
                      std::ostream& out);

std::map<std::string, std::string> read_comment_header(std::istream& in);

}  // namespace subcycle
