// cli.hpp - operator surface: experiment configs, run orchestration across
// analysis stages, artifact persistence and plot-data emission.
#pragma once

#include "magrisk/core.hpp"

#include <string>
#include <vector>

namespace magrisk::cli {

// Exit codes: 0 ok, 1 usage, 2 config parse error, 3 validation failure,
// 4 runtime error.
namespace exit_code {
inline constexpr int Ok = 0;
inline constexpr int Usage = 1;
inline constexpr int ConfigParse = 2;
inline constexpr int Validation = 3;
inline constexpr int Runtime = 4;
} // namespace exit_code

inline constexpr const char* kExperimentSchema = "magrisk-experiment/1";

struct ExperimentConfig {
    Json raw;                 // fully resolved config document
    std::string configDigest; // sha256 of the canonical raw document
    std::string stage = "Simulation";
    core::ScenarioSpec scenario;
    int runs = 10;
    std::uint64_t seedBase = 1;
    int jobs = 1;
    int saveTraces = 100;
    std::string outDir = "out";
    std::vector<Json> metricsRequested; // [{"name": ..., "params": {...}}]
    Json judgeConfig;                   // {"kind", "rulesetFile", "responseWindow"}
    Json sweepAxis;                     // {"label", "param", "values"} or null
    std::vector<std::string> tracesIn;  // ingested external traces (Pilot/Deployment)
};

// Parses and resolves an experiment config; relative paths resolve against
// the config file's directory.
ExperimentConfig loadExperimentConfig(const std::string& path);

// Entry point used by the magrisk binary; returns a process exit code.
int runMain(int argc, char** argv);

} // namespace magrisk::cli
