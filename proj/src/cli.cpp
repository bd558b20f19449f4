#include "iontometer/cli.hpp"

#include "iontometer/analysis.hpp"
#include "iontometer/constants.hpp"
#include "iontometer/core_physics.hpp"
#include "iontometer/protocols.hpp"
#include "iontometer/units.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace iontometer::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

const char* mode_name(SenseMode mode) {
  return mode == SenseMode::ac ? "ac" : "dc";
}

class ArtifactWriter {
public:
  ArtifactWriter(const config::RunConfig& rc) : rc_(rc) {
    fs::create_directories(rc.output_dir);
    summary_["version"] = version;
    summary_["seed"] = rc.seed;
    summary_["experiment"] = rc.experiment_type;
    summary_["config_echo"] = rc.effective;
    summary_["sensor_si"] = config::sensor_si_json(rc.sensor);
  }

  std::ofstream csv(const std::string& name, const std::string& figure,
                    const std::string& header) {
    manifest_.push_back({{"figure", figure}, {"file", name}});
    std::ofstream os(fs::path(rc_.output_dir) / name);
    os << header << "\n";
    return os;
  }

  json& outputs() { return summary_["outputs"]; }

  void finalize() {
    {
      std::ofstream os(fs::path(rc_.output_dir) / "summary.json");
      os << summary_.dump(2) << "\n";
    }
    {
      json m;
      m["figures"] = manifest_;
      std::ofstream os(fs::path(rc_.output_dir) / "manifest.json");
      os << m.dump(2) << "\n";
    }
  }

private:
  const config::RunConfig& rc_;
  json summary_;
  json manifest_ = json::array();
};

void write_fringe_csv(std::ofstream os, const spin::ExperimentResult& r) {
  for (const spin::ExperimentPoint& p : r.points)
    os << p.setting_index << "," << fmt(p.amplitude_v_per_m) << ","
       << p.shots << "," << p.up_count << "," << p.seed << "\n";
}

void run_hahn(const config::RunConfig& rc, const config::HahnParams& p,
              ArtifactWriter& w) {
  const auto reports = protocols::run_sensitivity_campaign(
      rc.sensor, p.mode, p.taus_s, p.shots_per_point, rc.seed, p.options);

  const std::string mode = mode_name(p.mode);
  auto os = w.csv("fig2_sensitivity_" + mode + ".csv", "fig2b",
                  "tau_s,mode,A,A_err,kappa_V_per_m,E_min,S,S_err");
  std::size_t fitted = 0;
  const protocols::SensitivityReport* best = nullptr;
  for (std::size_t j = 0; j < reports.size(); ++j) {
    const auto& r = reports[j];
    os << fmt(r.tau) << "," << mode << "," << fmt(r.fringe_a) << ","
       << fmt(r.fringe_a_err) << "," << fmt(r.kappa) << "," << fmt(r.e_min)
       << "," << fmt(r.sensitivity) << "," << fmt(r.sensitivity_err) << "\n";
    if (r.fit_ok) {
      ++fitted;
      if (best == nullptr || r.sensitivity < best->sensitivity)
        best = &r;
    }
    char name[64];
    std::snprintf(name, sizeof(name), "fringe_%s_%02zu.csv", mode.c_str(),
                  j);
    write_fringe_csv(w.csv(name, "fig2b_inset",
                           "setting_index,amplitude_V_per_m,shots,up_count,"
                           "seed"),
                     r.raw);
  }
  if (best == nullptr)
    throw config::NumericalError("campaign",
                                 "every fringe fit failed to converge");

  const analysis::OptimalTau opt = analysis::optimal_tau(
      rc.sensor.t2_s, rc.sensor.timing.t_m(), rc.sensor.gamma(),
      rc.sensor.readout_c(), p.mode);
  json& out = w.outputs();
  out["fits_converged"] = fitted;
  out["best_tau_s"] = best->tau;
  out["best_sensitivity"] = best->sensitivity;
  out["best_sensitivity_err"] = best->sensitivity_err;
  out["theory_tau_opt_s"] = opt.tau;
  out["theory_s_min"] = opt.sensitivity;
}

void run_shot_noise(const config::RunConfig& rc,
                    const config::ShotNoiseParams& p, ArtifactWriter& w) {
  const double slope =
      protocols::model_fringe_slope(rc.sensor, p.tau_s, p.mode);
  const auto scaling = protocols::run_shot_noise_scaling(
      rc.sensor, p.tau_s, p.m_total, p.subset_sizes, slope, rc.seed);

  auto os = w.csv("fig3_scaling.csv", "fig3",
                  "t_exp_s,E_min_V_per_m,E_min_err");
  for (const auto& pt : scaling.points)
    os << fmt(pt.t_exp) << "," << fmt(pt.e_min) << "," << fmt(pt.e_min_err)
       << "\n";

  json& out = w.outputs();
  out["slope_model"] = slope;
  out["loglog_slope"] = scaling.loglog_slope;
  out["loglog_slope_err"] = scaling.loglog_slope_err;
  out["e_min_1s"] = scaling.e_min_1s;
  out["e_min_1s_err"] = scaling.e_min_1s_err;
  out["point_charge_distance_m"] =
      core::point_charge_distance(scaling.e_min_1s);
}

void run_spin_lock(const config::RunConfig& rc,
                   const config::SpinLockParams& p, ArtifactWriter& w) {
  const auto result = protocols::run_spin_locking(rc.sensor, p.plan, rc.seed);

  // rows ordered by increasing PSD
  std::vector<const protocols::SpinLockLevel*> ordered;
  for (const auto& level : result.levels)
    ordered.push_back(&level);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) {
              return a->psd_two_sided < b->psd_two_sided;
            });

  auto os = w.csv("fig4c_decay_rates.csv", "fig4c",
                  "psd_two_sided,gamma_per_s,gamma_err");
  for (const auto* level : ordered)
    os << fmt(level->psd_two_sided) << "," << fmt(level->gamma_fit) << ","
       << fmt(level->gamma_err) << "\n";

  for (std::size_t i = 0; i < ordered.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "fig4c_decay_curve_%02zu.csv", i);
    auto dc = w.csv(name, "fig4c_inset", "tau_s,p_up");
    for (std::size_t j = 0; j < ordered[i]->durations.size(); ++j)
      dc << fmt(ordered[i]->durations[j]) << "," << fmt(ordered[i]->p_up[j])
         << "\n";
  }

  json& out = w.outputs();
  out["gamma0_per_s"] = result.gamma0;
  out["gamma0_err"] = result.gamma0_err;
  out["s_e_min"] = result.s_e_min;
  json levels = json::array();
  for (const auto* level : ordered)
    levels.push_back({{"psd_two_sided", level->psd_two_sided},
                      {"gamma_per_s", level->gamma_fit},
                      {"gamma_err", level->gamma_err},
                      {"s_e_inferred", level->s_e_inferred},
                      {"upper_bound", level->upper_bound}});
  out["levels"] = levels;
}

void run_t2(const config::RunConfig& rc, const config::T2Params& p,
            ArtifactWriter& w) {
  // fringe contrasts from echo campaigns double as coherence data
  const auto reports = protocols::run_sensitivity_campaign(
      rc.sensor, SenseMode::ac, p.taus_s, p.shots_per_point, rc.seed,
      p.options);
  std::vector<double> taus, contrast, err;
  auto os = w.csv("fig9_contrast.csv", "fig9", "tau_s,A,A_err");
  for (const auto& r : reports) {
    if (!r.fit_ok)
      continue;
    taus.push_back(r.tau);
    contrast.push_back(r.fringe_a);
    err.push_back(r.fringe_a_err);
    os << fmt(r.tau) << "," << fmt(r.fringe_a) << "," << fmt(r.fringe_a_err)
       << "\n";
  }
  protocols::T2Estimate est;
  try {
    est = protocols::measure_t2(taus, contrast, err);
  } catch (const std::exception& e) {
    throw config::NumericalError("t2_fit", e.what());
  }
  json& out = w.outputs();
  out["t2_s"] = est.t2;
  out["t2_err"] = est.t2_err;
  out["a0"] = est.a0;
  // the fitted contrast includes the SPAM contraction (1 - 2 eta)
  out["a0_expected"] = 1.0 - 2.0 * rc.sensor.spam_eta;
}

void run_calibrate_alpha(const config::RunConfig& rc,
                         const config::CalibrateAlphaParams& p,
                         ArtifactWriter& w) {
  std::vector<double> dv(p.points);
  for (std::size_t i = 0; i < p.points; ++i)
    dv[i] = -p.dv_span_v +
            2.0 * p.dv_span_v * static_cast<double>(i) /
                static_cast<double>(p.points - 1);
  protocols::AlphaCalibration cal;
  try {
    cal = protocols::calibrate_geometric_factor(rc.sensor, dv, p.shots,
                                                rc.seed, p.t_probe_s);
  } catch (const std::exception& e) {
    throw config::NumericalError("calibrate_alpha", e.what());
  }
  auto os = w.csv("fig7_alpha.csv", "fig7", "dv_v,omega_shift_rad_per_s");
  for (std::size_t i = 0; i < cal.dv_volts.size(); ++i)
    os << fmt(cal.dv_volts[i]) << "," << fmt(cal.omega_shift[i]) << "\n";

  json& out = w.outputs();
  out["alpha_per_m"] = cal.alpha;
  out["alpha_err"] = cal.alpha_err;
  out["d_omega_dv_rad_per_v"] = cal.d_omega_dv;
  out["d_omega_dv_err"] = cal.d_omega_dv_err;
  out["gamma_implied"] = cal.gamma_implied;
}

void run_calibrate_gradient(const config::RunConfig& rc,
                            const config::CalibrateGradientParams& p,
                            ArtifactWriter& w) {
  const double separation = core::two_ion_separation(
      rc.sensor.ion, rc.sensor.trap.nu_axial, p.n_ions);
  const double gradient =
      core::gradient_from_two_ion(p.b1_tesla, p.b2_tesla, separation);
  auto os = w.csv("fig6_gradient.csv", "fig6",
                  "b1_gauss,b2_gauss,separation_m,gradient_t_per_m");
  os << fmt(units::tesla_to_gauss(p.b1_tesla)) << ","
     << fmt(units::tesla_to_gauss(p.b2_tesla)) << "," << fmt(separation)
     << "," << fmt(gradient) << "\n";

  json& out = w.outputs();
  out["separation_m"] = separation;
  out["gradient_t_per_m"] = gradient;
}

void run_project(const config::RunConfig& rc,
                 const config::ProjectParams& p, ArtifactWriter& w) {
  const double s = protocols::project_sensitivity(rc.sensor, p.tau_s,
                                                  p.t2_s, p.t_m_s, p.mode);
  auto os = w.csv("projection.csv", "fig5",
                  "tau_s,t2_s,t_m_s,mode,sensitivity");
  os << fmt(p.tau_s) << "," << fmt(p.t2_s) << "," << fmt(p.t_m_s) << ","
     << mode_name(p.mode) << "," << fmt(s) << "\n";
  w.outputs()["sensitivity"] = s;
  w.outputs()["gamma_rad_m_per_v"] = rc.sensor.gamma();
}

} // namespace

void run_experiment(const config::RunConfig& rc) {
  ArtifactWriter writer(rc);
  std::visit(
      [&](const auto& params) {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, config::HahnParams>)
          run_hahn(rc, params, writer);
        else if constexpr (std::is_same_v<T, config::ShotNoiseParams>)
          run_shot_noise(rc, params, writer);
        else if constexpr (std::is_same_v<T, config::SpinLockParams>)
          run_spin_lock(rc, params, writer);
        else if constexpr (std::is_same_v<T, config::T2Params>)
          run_t2(rc, params, writer);
        else if constexpr (std::is_same_v<T, config::CalibrateAlphaParams>)
          run_calibrate_alpha(rc, params, writer);
        else if constexpr (std::is_same_v<T,
                                          config::CalibrateGradientParams>)
          run_calibrate_gradient(rc, params, writer);
        else if constexpr (std::is_same_v<T, config::ProjectParams>)
          run_project(rc, params, writer);
      },
      rc.experiment);
  writer.finalize();
}

int main_entry(int argc, const char* const* argv) {
  CLI::App app{"iontometer: trapped-ion electrometry simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool full_scale = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (JSON)")
        ->required();
    sub->add_option("--set", overrides,
                    "override a config key (dotted.path=value)");
    sub->add_option("--out", out_dir, "output directory override");
    sub->add_option("--seed", seed, "seed override")
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_flag("--full", full_scale, "paper-scale statistics");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run an experiment");
  add_common(run_cmd);
  CLI::App* project_cmd =
      app.add_subcommand("project", "hypothetical-sensor projection");
  add_common(project_cmd);
  CLI::App* validate_cmd =
      app.add_subcommand("validate", "schema-check a config file");
  add_common(validate_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (seed_given)
      overrides.push_back("seed=" + std::to_string(seed));
    if (!out_dir.empty())
      overrides.push_back("output_dir=\"" + out_dir + "\"");
    config::RunConfig rc =
        config::load_run_config(config_path, overrides, full_scale);

    if (app.got_subcommand(validate_cmd)) {
      std::cout << "ok: " << config_path << " (experiment "
                << rc.experiment_type << ")\n";
      return 0;
    }
    if (app.got_subcommand(project_cmd) &&
        rc.experiment_type != "project") {
      throw config::ConfigError("experiment.type",
                                "project subcommand needs a project config");
    }
    run_experiment(rc);
    std::cout << "wrote " << rc.output_dir << "/summary.json\n";
    return 0;
  } catch (const config::ConfigError& e) {
    std::cerr << "config error at " << e.path << ": " << e.what() << "\n";
    return 2;
  } catch (const config::NumericalError& e) {
    std::cerr << "numerical failure in stage " << e.stage << ": " << e.what()
              << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

} // namespace iontometer::cli
