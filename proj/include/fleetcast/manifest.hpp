#pragma once

#include <string>
#include <vector>

#include "fleetcast/backtest.hpp"

namespace fleetcast {

// "fleetcast <version>"; embedded in every manifest.
std::string tool_version();

// Hex-encoded SHA-256 of a file's bytes; throws on IO failure.
std::string sha256_file(const std::string& path);

struct ManifestFile {
    std::string role;  // "observations", "sites", ... or an output name
    std::string path;
    std::string sha256;
};

// Reproducibility record written next to every command's outputs.  Holds
// everything needed to replay the run (config snapshot, seed inside it,
// input digests) plus summary counters and output digests for comparing
// runs.  Deliberately contains no wall-clock information so identical runs
// produce identical manifests.
struct RunManifest {
    std::string version;          // tool_version()
    std::string command;          // "backtest", "synth", "metrics"
    TomlTable config;             // full key/value snapshot
    std::vector<ManifestFile> inputs;
    std::vector<ManifestFile> outputs;

    // Backtest extras (absent for other commands).
    std::string region;
    std::vector<std::string> notes;  // free-form summary lines
    std::map<std::string, std::int64_t> counters;
    std::vector<GammaChoice> gamma_choices;
};

// Counters and gamma selections pulled out of a finished backtest.
void fill_backtest_summary(RunManifest* manifest, const DatasetBundle& data,
                           const BacktestResult& result);

// Digests every file in `names` (relative to `dir`) into manifest.outputs.
void digest_outputs(RunManifest* manifest, const std::string& dir,
                    const std::vector<std::string>& names);

void save_manifest(const RunManifest& manifest, const std::string& path);
RunManifest load_manifest(const std::string& path);

// Rebuilds the protocol config recorded in a backtest manifest.
ProtocolConfig manifest_config(const RunManifest& manifest);

// Compares recorded input digests against the files at `paths`; returns a
// human-readable message per mismatch (empty = clean replay).
std::vector<std::string> verify_input_digests(const RunManifest& manifest,
                                              const BundlePaths& paths);

}  // namespace fleetcast
