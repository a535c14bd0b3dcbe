#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "carto/config.hpp"

namespace carto {

// File-based pipeline stages. Every stage reads its inputs from disk, writes
// into <out>/<stage>/ and leaves a manifest.json (input and output SHA-256,
// seed, effective configuration) next to a timings.json.

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

inline const std::vector<std::string> kStages = {"ingest",     "project",  "cluster", "profile",
                                                 "conceptnet", "citegeom", "validate"};

/// Directory under the output root that a stage writes to.
std::string stage_directory(const std::string& stage);

/// Runs one stage ("synth", one of kStages, or "all"). `sections` is the raw
/// configuration recorded in the manifests.
void run_stage(const std::string& stage, const PipelineConfig& config, const IniSections& sections);

/// Command-line entry point; returns the process exit status
/// (0 ok, 2 configuration, 3 missing artifact, 4 data validation).
int run_cli(const std::vector<std::string>& args);

}  // namespace carto
