#include "subcycle/constants.hpp"
#include "subcycle/runner.hpp"
#include "subcycle/svg.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace subcycle;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

void report(const RunManifest& m) {
    for (const auto& f : m.files) std::cout << (m.output_dir / f.path).string() << '\n';
    std::cout << (m.output_dir / "manifest.json").string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sub-cycle squeezed vacuum simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    std::string config;
    unsigned threads = 0;
    bool threads_set = false;

    auto* run = app.add_subcommand("run", "Run a scenario: coherent traces, noise profiles, RDN traces");
    run->add_option("config", config, "scenario YAML")->required();
    run->add_option("--threads", threads, "worker threads (0 = hardware)")->each([&](const std::string&) {
        threads_set = true;
    });

    auto* sweep = app.add_subcommand("sweep", "Pump-energy sweep of extremal RDN and (g, eta) fit");
    sweep->add_option("config", config, "scenario YAML")->required();
    sweep->add_option("--threads", threads, "worker threads (0 = hardware)")->each([&](const std::string&) {
        threads_set = true;
    });

    std::string csv;
    double vac_vcm = 24.0;
    double sn_vcm = 81.0;
    auto* fit = app.add_subcommand("fit", "Fit (g, eta) to a sweep CSV and print the report");
    fit->add_option("csv", csv, "sweep CSV (E_nJ, rdn_max, stderr_max, rdn_min, stderr_min)")->required();
    fit->add_option("--vac-Vcm", vac_vcm, "vacuum level if the CSV header has none")->capture_default_str();
    fit->add_option("--sn-Vcm", sn_vcm, "shot-noise level if the CSV header has none")->capture_default_str();

    std::string manifest;
    auto* figures = app.add_subcommand("figures", "Write SVG figures for a finished run");
    figures->add_option("manifest", manifest, "manifest.json of a run or sweep")->required();

    auto* validate = app.add_subcommand("validate", "Parse and validate a scenario, print it resolved");
    validate->add_option("config", config, "scenario YAML")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*validate) {
            std::cout << dump_scenario(load_scenario(config));
        } else if (*run || *sweep) {
            Scenario sc = load_scenario(config);
            if (threads_set) {
                sc.threads = threads;
                sc.detection.threads = threads;
                sc.propagation.config.threads = threads;
            }
            report(*run ? run_scenario(sc) : run_sweep_and_fit(sc));
        } else if (*fit) {
            std::ifstream in(csv);
            if (!in) throw ConfigError(csv + ": cannot open");
            const CsvFitInput input = read_fit_input(in, vac_vcm * units::V_per_cm, sn_vcm * units::V_per_cm);
            const VacuumStats vac = make_reference_vacuum(input.delta_e_vac);
            DetectionParams det;
            det.delta_e_sn = input.delta_e_sn;
            write_fit_report(fit_sweep(input.points, vac, det), vac, det, std::cout);
        } else if (*figures) {
            for (const auto& p : emit_figures(read_manifest(manifest))) std::cout << p.string() << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kConfigError;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kOk;
}
