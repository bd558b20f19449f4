#pragma once

#include "iontometer/config_io.hpp"

// Experiment orchestration behind the iontometer binary: runs the
// configured experiment, emits one CSV per figure panel plus a JSON
// summary (config echo, key outputs, version, seed) and a manifest
// mapping CSV files to figure panels.
namespace iontometer::cli {

inline constexpr const char* version = "0.1.0";

/// Exit codes: 0 success, 2 schema violation, 3 numerical failure.
int main_entry(int argc, const char* const* argv);

/// Run a parsed config; writes artifacts under rc.output_dir.
void run_experiment(const config::RunConfig& rc);

} // namespace iontometer::cli
