#include "iontometer/config_io.hpp"

#include "iontometer/core_physics.hpp"
#include "iontometer/units.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace iontometer::config {

using nlohmann::json;

namespace {

// Strict object reader: every key must be consumed, unknown keys are
// schema violations reported with their dotted path.
class Cursor {
public:
  Cursor(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!j_.contains(key))
      throw ConfigError(join(key), "missing required key");
    consumed_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number())
      throw ConfigError(join(key), "expected a number");
    return v.get<double>();
  }

  double number_or(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  std::uint64_t uinteger(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() &&
                                     v.get<std::int64_t>() >= 0))
      throw ConfigError(join(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::uint64_t uinteger_or(const std::string& key, std::uint64_t fallback) {
    return has(key) ? uinteger(key) : fallback;
  }

  std::string text(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string())
      throw ConfigError(join(key), "expected a string");
    return v.get<std::string>();
  }

  std::string text_or(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : fallback;
  }

  std::vector<double> number_array(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array() || v.empty())
      throw ConfigError(join(key), "expected a non-empty array of numbers");
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number())
        throw ConfigError(join(key), "expected a non-empty array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::uint64_t> uinteger_array(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array() || v.empty())
      throw ConfigError(join(key), "expected a non-empty array of integers");
    std::vector<std::uint64_t> out;
    for (const json& e : v) {
      if (!e.is_number_unsigned() && !(e.is_number_integer() &&
                                       e.get<std::int64_t>() >= 0))
        throw ConfigError(join(key),
                          "expected a non-empty array of integers");
      out.push_back(e.get<std::uint64_t>());
    }
    return out;
  }

  Cursor object(const std::string& key) {
    return Cursor(raw(key), join(key));
  }

  /// Reject any key that was not consumed.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!consumed_.count(it.key()))
        throw ConfigError(join(it.key()), "unknown key");
  }

  std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> consumed_;
};

SenseMode parse_mode(const std::string& text, const std::string& path) {
  if (text == "ac")
    return SenseMode::ac;
  if (text == "dc")
    return SenseMode::dc;
  throw ConfigError(path, "mode must be \"ac\" or \"dc\"");
}

SensorConfig parse_sensor(Cursor& c) {
  SensorConfig cfg;
  cfg.ion = species_by_name(c.text("ion"));

  Cursor trap = c.object("trap");
  cfg.trap.nu_axial = units::hz_to_angular(trap.number("nu_axial_hz"));
  cfg.trap.nu_radial_x =
      units::hz_to_angular(trap.number_or("nu_radial_x_hz", 1.5e6));
  cfg.trap.nu_radial_y =
      units::hz_to_angular(trap.number_or("nu_radial_y_hz", 1.5e6));
  trap.finish();

  Cursor field = c.object("field");
  cfg.gradient.b0_tesla = units::gauss_to_tesla(field.number("b0_gauss"));
  cfg.gradient.dbdz_t_per_m = field.number("gradient_t_per_m");
  field.finish();

  Cursor tr = c.object("transition");
  const std::string order = tr.text("order");
  if (order == "first")
    cfg.transition.order = ZeemanOrder::first;
  else if (order == "second")
    cfg.transition.order = ZeemanOrder::second;
  else
    throw ConfigError("sensor.transition.order",
                      "must be \"first\" or \"second\"");
  cfg.transition.coeff_first_hz_per_gauss =
      tr.number_or("first_order_hz_per_gauss", 1.4e6);
  cfg.transition.coeff_second_hz_per_gauss2 =
      tr.number_or("second_order_hz_per_gauss2", 310.8);
  cfg.transition.omega0 =
      units::hz_to_angular(tr.number_or("omega0_hz", 12.64e9));
  tr.finish();

  cfg.alpha_per_m = c.number("alpha_per_m");

  if (c.has("coupling")) {
    Cursor cpl = c.object("coupling");
    cfg.coupling.capacitance_f = cpl.number("capacitance_f");
    cfg.coupling.resistance_ohm = cpl.number("resistance_ohm");
    cpl.finish();
  }

  cfg.t2_s = c.number("t2_s");

  Cursor tim = c.object("timing");
  cfg.timing.settling_s = tim.number_or("settling_s", 0.0);
  cfg.timing.cooling_detection_s = tim.number_or("cooling_detection_s", 0.0);
  cfg.timing.prep_pulses_s = tim.number_or("prep_pulses_s", 0.0);
  cfg.timing.processing_s = tim.number_or("processing_s", 0.0);
  tim.finish();

  cfg.spam_eta = c.number("spam_eta");
  cfg.background_gamma_per_s = c.number_or("background_gamma_per_s", 0.0);
  if (c.has("gamma_rad_m_per_v"))
    cfg.gamma_override = c.number("gamma_rad_m_per_v");

  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw ConfigError("sensor", e.what());
  }
  return cfg;
}

protocols::CampaignOptions parse_campaign_options(Cursor& c) {
  protocols::CampaignOptions opts;
  opts.points_per_fringe =
      static_cast<std::size_t>(c.uinteger_or("points_per_fringe", 12));
  opts.sweep_periods = c.number_or("sweep_periods", 1.5);
  return opts;
}

ExperimentParams parse_experiment(Cursor& c, const std::string& type) {
  if (type == "hahn_ac" || type == "hahn_dc") {
    HahnParams p;
    p.mode = type == "hahn_ac" ? SenseMode::ac : SenseMode::dc;
    p.taus_s = c.number_array("taus_s");
    p.shots_per_point = c.uinteger_or("shots_per_point", 400);
    p.options = parse_campaign_options(c);
    return p;
  }
  if (type == "shot_noise") {
    ShotNoiseParams p;
    p.tau_s = c.number("tau_s");
    p.mode = parse_mode(c.text_or("mode", "ac"), "experiment.mode");
    p.m_total = c.uinteger("m_total");
    p.subset_sizes = c.uinteger_array("subset_sizes");
    return p;
  }
  if (type == "spin_lock") {
    SpinLockParams p;
    p.plan.lock_rabi = units::hz_to_angular(c.number("lock_rabi_hz"));
    p.plan.noise_center_hz = c.number("noise_center_hz");
    p.plan.noise_bandwidth_hz = c.number("noise_bandwidth_hz");
    p.plan.psd_levels = c.number_array("psd_levels");
    p.plan.durations = c.number_array("durations_s");
    if (c.has("durations_zero_s"))
      p.plan.durations_zero = c.number_array("durations_zero_s");
    if (c.has("durations_per_level_s")) {
      const nlohmann::json& dl = c.raw("durations_per_level_s");
      if (!dl.is_array())
        throw ConfigError("experiment.durations_per_level_s",
                          "expected an array of arrays of numbers");
      for (const auto& row : dl) {
        if (!row.is_array() || row.empty())
          throw ConfigError("experiment.durations_per_level_s",
                            "expected an array of arrays of numbers");
        std::vector<double> durs;
        for (const auto& v : row) {
          if (!v.is_number())
            throw ConfigError("experiment.durations_per_level_s",
                              "expected an array of arrays of numbers");
          durs.push_back(v.get<double>());
        }
        p.plan.durations_per_level.push_back(std::move(durs));
      }
    }
    p.plan.shots_per_duration = c.uinteger_or("shots_per_duration", 500);
    p.plan.synthesis_period_s = c.number_or("synthesis_period_s", 0.0);
    p.plan.grid_oversample = c.number_or("grid_oversample", 6.0);
    return p;
  }
  if (type == "t2") {
    T2Params p;
    p.taus_s = c.number_array("taus_s");
    p.shots_per_point = c.uinteger_or("shots_per_point", 400);
    p.options = parse_campaign_options(c);
    return p;
  }
  if (type == "calibrate_alpha") {
    CalibrateAlphaParams p;
    p.dv_span_v = c.number_or("dv_span_v", 0.05);
    p.points = static_cast<std::size_t>(c.uinteger_or("points", 11));
    p.shots = c.uinteger_or("shots", 200);
    p.t_probe_s = c.number_or("t_probe_s", 5e-3);
    return p;
  }
  if (type == "calibrate_gradient") {
    CalibrateGradientParams p;
    p.b1_tesla = units::gauss_to_tesla(c.number("b1_gauss"));
    p.b2_tesla = units::gauss_to_tesla(c.number("b2_gauss"));
    p.n_ions = static_cast<int>(c.uinteger_or("n_ions", 2));
    return p;
  }
  if (type == "project") {
    ProjectParams p;
    p.tau_s = c.number("tau_s");
    p.t2_s = c.number("t2_s");
    p.t_m_s = c.number_or("t_m_s", 0.0);
    p.mode = parse_mode(c.text_or("mode", "ac"), "experiment.mode");
    return p;
  }
  throw ConfigError("experiment.type",
                    "unknown experiment type \"" + type + "\"");
}

} // namespace

RunConfig parse_run_config(const json& doc) {
  Cursor top(doc, "");
  RunConfig rc;
  rc.effective = doc;

  Cursor sensor = top.object("sensor");
  try {
    rc.sensor = parse_sensor(sensor);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("sensor", e.what());
  }
  sensor.finish();

  Cursor exp = top.object("experiment");
  rc.experiment_type = exp.text("type");
  rc.experiment = parse_experiment(exp, rc.experiment_type);
  exp.finish();

  rc.seed = top.uinteger_or("seed", 0);
  rc.output_dir = top.text_or("output_dir", "out");
  if (top.has("full_overrides")) {
    const json& fo = top.raw("full_overrides");
    if (!fo.is_object())
      throw ConfigError("full_overrides", "expected an object");
    rc.full_overrides = fo;
  }
  top.finish();
  return rc;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set", "expected key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  json* node = &doc;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty())
      throw ConfigError("--set", "empty path component in " + path);
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i)
    node = &(*node)[parts[i]];
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded())
    parsed = value; // fall back to a raw string
  (*node)[parts.back()] = parsed;
}

RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides,
                          bool full_scale) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("config", "cannot open " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded())
    throw ConfigError("config", "invalid JSON in " + path);

  for (const std::string& ov : overrides)
    apply_override(doc, ov);

  if (full_scale && doc.contains("full_overrides")) {
    const json fo = doc.at("full_overrides");
    if (!fo.is_object())
      throw ConfigError("full_overrides", "expected an object");
    for (auto it = fo.begin(); it != fo.end(); ++it) {
      json* node = &doc;
      std::stringstream ss(it.key());
      std::string part;
      std::vector<std::string> parts;
      while (std::getline(ss, part, '.'))
        parts.push_back(part);
      for (std::size_t i = 0; i + 1 < parts.size(); ++i)
        node = &(*node)[parts[i]];
      (*node)[parts.back()] = it.value();
    }
  }
  return parse_run_config(doc);
}

json sensor_si_json(const SensorConfig& cfg) {
  json j;
  j["ion"] = cfg.ion.name;
  j["mass_kg"] = cfg.ion.mass_kg;
  j["charge_c"] = cfg.ion.charge_c;
  j["nu_axial_rad_s"] = cfg.trap.nu_axial;
  j["b0_tesla"] = cfg.gradient.b0_tesla;
  j["gradient_t_per_m"] = cfg.gradient.dbdz_t_per_m;
  j["transition_order"] =
      cfg.transition.order == ZeemanOrder::first ? "first" : "second";
  j["alpha_per_m"] = cfg.alpha_per_m;
  j["t2_s"] = cfg.t2_s;
  j["t_m_s"] = cfg.timing.t_m();
  j["spam_eta"] = cfg.spam_eta;
  j["readout_c"] = cfg.readout_c();
  j["gamma_rad_m_per_v"] = cfg.gamma();
  j["gamma_forward_chain"] = core::transduction_gamma(cfg).gamma;
  j["background_gamma_per_s"] = cfg.background_gamma_per_s;
  return j;
}

} // namespace iontometer::config
