#pragma once

#include "iontometer/protocols.hpp"
#include "iontometer/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

// Configuration ingestion. Config files are JSON with Hz / Gauss / volts /
// seconds at the boundary; everything is converted to SI (angular rad/s,
// Tesla) exactly once, here. Validation is strict: missing or mistyped
// fields and unknown keys are reported with their full field path.
namespace iontometer::config {

/// Schema violation; `path` is the dotted field path (e.g. sensor.trap).
struct ConfigError : std::runtime_error {
  std::string path;
  ConfigError(std::string path_, const std::string& what_)
      : std::runtime_error(path_ + ": " + what_), path(std::move(path_)) {}
};

/// Failure of a numeric stage at run time (exit code 3).
struct NumericalError : std::runtime_error {
  std::string stage;
  NumericalError(std::string stage_, const std::string& what_)
      : std::runtime_error(stage_ + ": " + what_), stage(std::move(stage_)) {}
};

struct HahnParams {
  SenseMode mode = SenseMode::ac;
  std::vector<double> taus_s;
  std::uint64_t shots_per_point = 400;
  protocols::CampaignOptions options;
};

struct ShotNoiseParams {
  double tau_s = 0.0;
  SenseMode mode = SenseMode::ac;
  std::uint64_t m_total = 0;
  std::vector<std::uint64_t> subset_sizes;
};

struct SpinLockParams {
  protocols::SpinLockPlan plan;
};

struct T2Params {
  std::vector<double> taus_s;
  std::uint64_t shots_per_point = 400;
  protocols::CampaignOptions options;
};

struct CalibrateAlphaParams {
  double dv_span_v = 0.05;
  std::size_t points = 11;
  std::uint64_t shots = 200;
  double t_probe_s = 5e-3;
};

struct CalibrateGradientParams {
  double b1_tesla = 0.0;
  double b2_tesla = 0.0;
  int n_ions = 2;
};

struct ProjectParams {
  double tau_s = 0.0;
  double t2_s = 0.0;
  double t_m_s = 0.0;
  SenseMode mode = SenseMode::ac;
};

using ExperimentParams =
    std::variant<HahnParams, ShotNoiseParams, SpinLockParams, T2Params,
                 CalibrateAlphaParams, CalibrateGradientParams,
                 ProjectParams>;

struct RunConfig {
  SensorConfig sensor;
  ExperimentParams experiment;
  std::string experiment_type;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  nlohmann::json full_overrides; // applied by --full
  nlohmann::json effective;      // resolved JSON, echoed into the summary
};

/// Parse and validate a config document (after any overrides).
RunConfig parse_run_config(const nlohmann::json& doc);

/// Load a JSON file, apply dotted-path overrides ("a.b.c=value", values
/// parsed as JSON with string fallback), then parse.
RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides,
                          bool full_scale);

/// Apply one dotted-path override to a JSON document.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// The SI view of a sensor config (for the summary echo).
nlohmann::json sensor_si_json(const SensorConfig& cfg);

} // namespace iontometer::config
