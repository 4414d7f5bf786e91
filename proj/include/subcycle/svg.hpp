#pragma once

#include "subcycle/runner.hpp"

#include <filesystem>
#include <vector>

namespace subcycle {

/// Writes fig2.svg (coherent field over RDN for both CEPs), fig3.svg (one RDN
/// panel per sweep energy) and fig4.svg (extremal branches, fit and squeezing
/// axis) next to the manifest, for whichever data the run produced.
/// Throws ConfigError for an empty manifest, missing or modified data files,
/// or a run without plottable data. Output bytes depend only on the data.
std::vector<std::filesystem::path> emit_figures(const RunManifest& manifest);

}  // namespace subcycle
